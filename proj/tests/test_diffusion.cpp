#include "topogen/diffusion.hpp"
#include "topogen/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace topogen;
using ad::Tensor;

namespace {

Tensor points_tensor(std::span<const Vec3> pts) {
    std::vector<double> v;
    for (const auto& p : pts) v.insert(v.end(), p.begin(), p.end());
    return Tensor::from({pts.size(), 3}, v);
}

double cloud_std(const std::vector<Vec3>& pts) {
    double mu[3] = {0, 0, 0}, ss = 0;
    for (const auto& p : pts)
        for (int c = 0; c < 3; ++c) mu[c] += p[c] / static_cast<double>(pts.size());
    for (const auto& p : pts)
        for (int c = 0; c < 3; ++c) ss += (p[c] - mu[c]) * (p[c] - mu[c]);
    return std::sqrt(ss / (3.0 * static_cast<double>(pts.size())));
}

ModelConfig toy_config() {
    ModelConfig cfg;
    cfg.V = 16;
    cfg.p = 4;
    cfg.d = 32;
    cfg.n_heads = 4;
    cfg.dit_depth = 2;
    cfg.resampler_depth = 2;
    cfg.pi_n = 4;
    cfg.size_preset = SizePreset::Custom;
    return cfg;
}

} // namespace

TEST(Schedule, Examples) {
    const auto one = linear_schedule(1, 0.01, 0.01);
    EXPECT_NEAR(one.alpha_bar[1], 0.99, 1e-15);
    const auto flat = linear_schedule(2, 0.01, 0.01);
    EXPECT_NEAR(flat.alpha_bar[2], 0.9801, 1e-15);
    const auto s = linear_schedule();
    EXPECT_EQ(s.T, 1000);
    EXPECT_DOUBLE_EQ(s.beta[1], 1e-4);
    EXPECT_DOUBLE_EQ(s.beta[1000], 0.02);
    EXPECT_LT(s.alpha_bar[1000], 1e-4);
    EXPECT_THROW(linear_schedule(0), InputError);
    EXPECT_THROW(linear_schedule(10, 0.0, 0.02), InputError);
    EXPECT_THROW(linear_schedule(10, 0.03, 0.02), InputError);
    EXPECT_THROW(linear_schedule(10, 0.01, 1.0), InputError);
}

TEST(Schedule, Monotone) {
    const auto s = linear_schedule();
    EXPECT_EQ(s.alpha_bar[0], 1.0);
    for (int t = 1; t <= s.T; ++t) {
        EXPECT_LT(s.alpha_bar[t], s.alpha_bar[t - 1]);
        if (t > 1) EXPECT_GT(s.beta[t], s.beta[t - 1]);
        EXPECT_NEAR(std::sqrt(s.alpha_bar[t]) * std::sqrt(s.alpha_bar[t]) + (1 - s.alpha_bar[t]), 1.0, 1e-15);
    }
}

TEST(Schedule, RespacingKeepsAlphaBar) {
    const auto s = linear_schedule();
    const auto r = respace(s, 50);
    EXPECT_EQ(r.schedule.T, 50);
    EXPECT_EQ(r.timesteps[1], 1);
    EXPECT_EQ(r.timesteps[50], 1000);
    for (int i = 1; i <= 50; ++i) EXPECT_NEAR(r.schedule.alpha_bar[i], s.alpha_bar[r.timesteps[i]], 1e-14);
    const auto full = respace(s, 1000);
    for (int t = 1; t <= 1000; ++t) EXPECT_NEAR(full.schedule.beta[t], s.beta[t], 1e-14);
    EXPECT_THROW(respace(s, 0), InputError);
    EXPECT_THROW(respace(s, 1001), InputError);
}

TEST(QSample, Examples) {
    const auto s = linear_schedule();
    const std::vector<Vec3> x0{{1, -2, 3}, {0.5, 0, -1}};
    const std::vector<Vec3> zero(2, Vec3{0, 0, 0});
    const std::vector<Vec3> eps{{0.3, 0.1, -0.7}, {1, 2, 3}};
    const int t = 400;
    const auto a = q_sample(x0, t, zero, s);
    const auto b = q_sample(zero, t, eps, s);
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 3; ++c) {
            EXPECT_DOUBLE_EQ(a[i][c], std::sqrt(s.alpha_bar[t]) * x0[i][c]);
            EXPECT_DOUBLE_EQ(b[i][c], std::sqrt(1 - s.alpha_bar[t]) * eps[i][c]);
        }
    EXPECT_THROW(q_sample(x0, 0, eps, s), InputError);
    EXPECT_THROW(q_sample(x0, 1001, eps, s), InputError);
}

TEST(QSample, JointlyLinear) {
    const auto s = linear_schedule();
    Rng rng(1);
    const auto x1 = standard_normal_points(20, rng), x2 = standard_normal_points(20, rng);
    const auto e1 = standard_normal_points(20, rng), e2 = standard_normal_points(20, rng);
    const double a = 0.7, b = -1.3;
    std::vector<Vec3> xc(20), ec(20);
    for (int i = 0; i < 20; ++i)
        for (int c = 0; c < 3; ++c) {
            xc[i][c] = a * x1[i][c] + b * x2[i][c];
            ec[i][c] = a * e1[i][c] + b * e2[i][c];
        }
    const auto y1 = q_sample(x1, 321, e1, s), y2 = q_sample(x2, 321, e2, s), yc = q_sample(xc, 321, ec, s);
    for (int i = 0; i < 20; ++i)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(yc[i][c], a * y1[i][c] + b * y2[i][c], 1e-12);
}

TEST(QSample, MonteCarloVariance) {
    const auto s = linear_schedule();
    Rng rng(2);
    const std::size_t n = 100000 / 3 + 1;
    // x0 uniform on [-1, 1]: variance 1/3.
    std::vector<Vec3> x0(n);
    for (auto& p : x0)
        for (auto& v : p) v = 2 * rng.uniform() - 1;
    for (int t : {10, 250, 700}) {
        const auto eps = standard_normal_points(n, rng);
        const auto xt = q_sample(x0, t, eps, s);
        double m = 0, ss = 0;
        for (const auto& p : xt)
            for (double v : p) m += v;
        m /= 3.0 * n;
        for (const auto& p : xt)
            for (double v : p) ss += (v - m) * (v - m);
        const double var = ss / (3.0 * n - 1);
        const double expect = s.alpha_bar[t] / 3.0 + (1 - s.alpha_bar[t]);
        EXPECT_NEAR(var / expect, 1.0, 0.02) << "t=" << t;
    }
}

TEST(PSample, FinalStepIsDeterministicMean) {
    const auto s = linear_schedule();
    const std::vector<Vec3> x{{0.2, -0.4, 1.0}};
    const std::vector<Vec3> e{{0.1, 0.3, -0.2}};
    Rng r1(1), r2(99);
    const auto a = p_sample_step(x, 1, e, s, SigmaMode::Beta, r1);
    const auto b = p_sample_step(x, 1, e, s, SigmaMode::Posterior, r2);
    for (int c = 0; c < 3; ++c) {
        const double mu = (x[0][c] - s.beta[1] / std::sqrt(1 - s.alpha_bar[1]) * e[0][c]) / std::sqrt(s.alpha[1]);
        EXPECT_DOUBLE_EQ(a[0][c], mu);
        EXPECT_DOUBLE_EQ(b[0][c], mu);
    }
}

TEST(PSample, SingleStepInvertsForwardProcess) {
    const auto s = linear_schedule(1, 0.3, 0.3);
    Rng rng(3);
    const auto x0 = standard_normal_points(50, rng);
    const auto eps = standard_normal_points(50, rng);
    const auto xt = q_sample(x0, 1, eps, s);
    const auto back = p_sample_step(xt, 1, eps, s, SigmaMode::Beta, rng);
    for (std::size_t i = 0; i < x0.size(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[i][c], x0[i][c], 1e-10);
}

TEST(PSample, ClippedMeanMatchesEpsilonFormWhenInside) {
    const auto s = linear_schedule();
    Rng rng(4);
    const auto x0 = standard_normal_points(30, rng);
    const auto eps = standard_normal_points(30, rng);
    const auto xt = q_sample(x0, 500, eps, s);
    Rng a(5), b(5);
    const auto plain = p_sample_step(xt, 500, eps, s, SigmaMode::Posterior, a);
    const auto clipped = p_sample_step(xt, 500, eps, s, SigmaMode::Posterior, b, 100.0);
    for (std::size_t i = 0; i < xt.size(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(plain[i][c], clipped[i][c], 1e-10);
}

TEST(PSample, SigmaModesDiffer) {
    const auto s = linear_schedule();
    EXPECT_NE(sigma_squared(s, 10, SigmaMode::Beta), sigma_squared(s, 10, SigmaMode::Posterior));
    EXPECT_LT(sigma_squared(s, 10, SigmaMode::Posterior), sigma_squared(s, 10, SigmaMode::Beta));
    const std::vector<Vec3> x{{0.5, 0.5, 0.5}}, e{{0, 0, 0}};
    Rng a(6), b(6);
    const auto pa = p_sample_step(x, 10, e, s, SigmaMode::Beta, a);
    const auto pb = p_sample_step(x, 10, e, s, SigmaMode::Posterior, b);
    EXPECT_NE(pa[0][0], pb[0][0]);
    EXPECT_EQ(parse_sigma_mode("posterior"), SigmaMode::Posterior);
    EXPECT_THROW(parse_sigma_mode("ddim"), InputError);
}

TEST(Loss, OracleAndZeroModels) {
    const auto s = linear_schedule();
    Rng data(7);
    const auto x0 = standard_normal_points(400, data);
    // The oracle recovers the noise from x_t and the known x0.
    Denoiser oracle = [&](std::span<const Vec3> xt, int t) {
        std::vector<Vec3> e(xt.size());
        for (std::size_t i = 0; i < xt.size(); ++i)
            for (int c = 0; c < 3; ++c)
                e[i][c] = (xt[i][c] - std::sqrt(s.alpha_bar[t]) * x0[i][c]) / std::sqrt(1 - s.alpha_bar[t]);
        return points_tensor(e);
    };
    Rng rng(8);
    EXPECT_LT(training_loss(oracle, x0, s, rng).item(), 1e-20);

    Denoiser zero = [](std::span<const Vec3> xt, int) { return Tensor::zeros({xt.size(), 3}); };
    double acc = 0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) acc += training_loss(zero, x0, s, rng).item();
    EXPECT_NEAR(acc / reps, 1.0, 0.02);
}

TEST(Loss, ModelLossFiniteWithGradients) {
    const auto cfg = toy_config();
    TopoDiT model(cfg, 9);
    const auto s = linear_schedule();
    Rng rng(9);
    const auto x0 = standard_normal_points(64, rng);
    const auto pi = Tensor::full({16}, 0.1);
    auto loss = training_loss(model, x0, pi, pi, s, rng);
    EXPECT_TRUE(std::isfinite(loss.item()));
    EXPECT_GT(loss.item(), 0.0);
    model.params().zero_grad();
    loss.backward();
    double norm = 0;
    for (double g : model.param("embed.weight").grad()) norm += g * g;
    EXPECT_GT(norm, 0.0);
}

TEST(Sample, DeterministicFiniteAndBounded) {
    const auto cfg = toy_config();
    TopoDiT model(cfg, 10);
    const auto s = linear_schedule();
    const auto pi = Tensor::full({16}, 0.05);
    SampleOptions opts;
    opts.seed = 4;
    opts.steps = 100;
    const auto a = sample(model, s, pi, pi, 128, opts);
    const auto b = sample(model, s, pi, pi, 128, opts);
    ASSERT_EQ(a.size(), 128u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.points[i], b.points[i]);
        for (double v : a.points[i]) EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_THROW(sample(model, s, Tensor(), pi, 8, opts), InputError);
}

TEST(Sample, UntrainedModelDoesNotDiverge) {
    const auto cfg = toy_config();
    TopoDiT model(cfg, 11);
    const auto s = linear_schedule();
    const auto pi = Tensor::full({16}, 0.05);
    SampleOptions opts;
    opts.seed = 11;
    const double sd = cloud_std(sample(model, s, pi, pi, 256, opts).points);
    EXPECT_GE(sd, 0.5);
    EXPECT_LE(sd, 2.0);
}
