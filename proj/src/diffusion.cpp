#include "topogen/diffusion.hpp"

#include "topogen/error.hpp"

#include <algorithm>
#include <cmath>

namespace topogen {

using ad::Tensor;

void NoiseSchedule::require_step(int t) const {
    if (t < 1 || t > T) throw InputError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(T) + "]");
}

namespace {

NoiseSchedule from_betas(std::vector<double> beta) {
    NoiseSchedule s;
    s.T = static_cast<int>(beta.size()) - 1;
    s.beta = std::move(beta);
    s.alpha.assign(s.beta.size(), 1.0);
    s.alpha_bar.assign(s.beta.size(), 1.0);
    for (int t = 1; t <= s.T; ++t) {
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }
    return s;
}

} // namespace

NoiseSchedule linear_schedule(int T, double beta_1, double beta_T) {
    if (T < 1) throw InputError("schedule needs T >= 1");
    if (!(beta_1 > 0.0) || !(beta_T < 1.0) || beta_1 > beta_T)
        throw InputError("schedule endpoints must satisfy 0 < beta_1 <= beta_T < 1");
    std::vector<double> beta(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t)
        beta[t] = T == 1 ? beta_1 : beta_1 + (beta_T - beta_1) * static_cast<double>(t - 1) / (T - 1);
    return from_betas(std::move(beta));
}

Respaced respace(const NoiseSchedule& base, int steps) {
    if (steps < 1 || steps > base.T)
        throw InputError("sampling steps must lie in [1, " + std::to_string(base.T) + "], got " + std::to_string(steps));
    Respaced r;
    r.timesteps.assign(static_cast<std::size_t>(steps) + 1, 0);
    for (int i = 1; i <= steps; ++i)
        r.timesteps[i] = steps == 1 ? base.T
                                    : 1 + static_cast<int>(std::lround(static_cast<double>(i - 1) * (base.T - 1) / (steps - 1)));
    std::vector<double> beta(static_cast<std::size_t>(steps) + 1, 0.0);
    double prev = 1.0;
    for (int i = 1; i <= steps; ++i) {
        const double ab = base.alpha_bar[r.timesteps[i]];
        beta[i] = 1.0 - ab / prev;
        prev = ab;
    }
    r.schedule = from_betas(std::move(beta));
    return r;
}

std::vector<Vec3> q_sample(std::span<const Vec3> x0, int t, std::span<const Vec3> eps, const NoiseSchedule& sched) {
    sched.require_step(t);
    if (x0.size() != eps.size()) throw ShapeError("q_sample: x0 and noise differ in length");
    const double a = std::sqrt(sched.alpha_bar[t]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    std::vector<Vec3> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i)
        for (int c = 0; c < 3; ++c) out[i][c] = a * x0[i][c] + b * eps[i][c];
    return out;
}

std::vector<Vec3> standard_normal_points(std::size_t n, Rng& rng) {
    std::vector<Vec3> out(n);
    for (auto& p : out)
        for (auto& v : p) v = rng.normal();
    return out;
}

SigmaMode parse_sigma_mode(const std::string& name) {
    if (name == "beta") return SigmaMode::Beta;
    if (name == "posterior") return SigmaMode::Posterior;
    throw InputError("unknown sigma mode '" + name + "' (expected beta or posterior)");
}

std::string sigma_mode_name(SigmaMode mode) { return mode == SigmaMode::Beta ? "beta" : "posterior"; }

double sigma_squared(const NoiseSchedule& sched, int t, SigmaMode mode) {
    sched.require_step(t);
    if (mode == SigmaMode::Beta) return sched.beta[t];
    return (1.0 - sched.alpha_bar[t - 1]) / (1.0 - sched.alpha_bar[t]) * sched.beta[t];
}

std::vector<Vec3> p_sample_step(std::span<const Vec3> x_t, int t, std::span<const Vec3> eps_hat,
                                const NoiseSchedule& sched, SigmaMode mode, Rng& rng, std::optional<double> clip_x0) {
    sched.require_step(t);
    if (x_t.size() != eps_hat.size()) throw ShapeError("p_sample_step: state and noise estimate differ in length");
    const double ab = sched.alpha_bar[t], ab_prev = sched.alpha_bar[t - 1];
    const double beta = sched.beta[t], alpha = sched.alpha[t];
    const double sigma = t > 1 ? std::sqrt(sigma_squared(sched, t, mode)) : 0.0;
    const double eps_coef = beta / std::sqrt(1.0 - ab);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    // Posterior mean coefficients on (x0, x_t).
    const double c0 = beta * std::sqrt(ab_prev) / (1.0 - ab);
    const double ct = (1.0 - ab_prev) * std::sqrt(alpha) / (1.0 - ab);
    std::vector<Vec3> out(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            double mu;
            if (clip_x0) {
                const double x0 = (x_t[i][c] - std::sqrt(1.0 - ab) * eps_hat[i][c]) / std::sqrt(ab);
                mu = c0 * std::clamp(x0, -*clip_x0, *clip_x0) + ct * x_t[i][c];
            } else {
                mu = inv_sqrt_alpha * (x_t[i][c] - eps_coef * eps_hat[i][c]);
            }
            out[i][c] = t > 1 ? mu + sigma * rng.normal() : mu;
        }
    return out;
}

LossDraw draw_loss_noise(std::size_t n, const NoiseSchedule& sched, Rng& rng) {
    LossDraw d;
    d.t = static_cast<int>(rng.uniform_int(1, sched.T));
    d.eps = standard_normal_points(n, rng);
    return d;
}

namespace {

Tensor points_tensor(std::span<const Vec3> pts) {
    std::vector<double> v;
    v.reserve(pts.size() * 3);
    for (const auto& p : pts) v.insert(v.end(), p.begin(), p.end());
    return Tensor::from({pts.size(), 3}, std::move(v));
}

std::vector<Vec3> tensor_points(const Tensor& t) {
    if (t.rank() != 2 || t.dim(1) != 3) throw ShapeError("denoiser output must be [N, 3], got " + ad::shape_str(t.shape()));
    std::vector<Vec3> out(t.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) out[i][c] = t.at(i * 3 + c);
    return out;
}

} // namespace

Tensor noise_mse(const Denoiser& f, std::span<const Vec3> x0, const LossDraw& draw, const NoiseSchedule& sched) {
    const auto x_t = q_sample(x0, draw.t, draw.eps, sched);
    const Tensor pred = f(x_t, draw.t);
    if (pred.shape() != ad::Shape{x0.size(), 3})
        throw ShapeError("denoiser output " + ad::shape_str(pred.shape()) + " for " + std::to_string(x0.size()) + " points");
    return ad::mean(ad::square(ad::sub(pred, points_tensor(draw.eps))));
}

Tensor training_loss(const Denoiser& f, std::span<const Vec3> x0, const NoiseSchedule& sched, Rng& rng) {
    return noise_mse(f, x0, draw_loss_noise(x0.size(), sched, rng), sched);
}

Tensor training_loss(const TopoDiT& model, std::span<const Vec3> x0, const Tensor& pi1, const Tensor& pi2,
                     const NoiseSchedule& sched, Rng& rng) {
    return training_loss([&](std::span<const Vec3> x, int t) { return model.forward(x, t, pi1, pi2); }, x0, sched, rng);
}

std::vector<Vec3> sample(const Denoiser& f, const NoiseSchedule& sched, std::size_t n, const SampleOptions& opts) {
    const Respaced r = respace(sched, opts.steps == 0 ? sched.T : opts.steps);
    const Rng root(opts.seed);
    Rng init = root.split("sample.init");
    std::vector<Vec3> x = standard_normal_points(n, init);
    ad::NoGradGuard no_grad;
    for (int i = r.schedule.T; i >= 1; --i) {
        const auto eps = tensor_points(f(x, r.timesteps[i]));
        if (eps.size() != n) throw ShapeError("denoiser changed the point count");
        Rng step = root.split("sample.step", static_cast<std::uint64_t>(i));
        x = p_sample_step(x, i, eps, r.schedule, opts.mode, step, opts.clip_x0);
    }
    return x;
}

PointCloud sample(const TopoDiT& model, const NoiseSchedule& sched, const Tensor& pi1, const Tensor& pi2,
                  std::size_t n, const SampleOptions& opts) {
    if (model.config().use_topology && (!pi1.defined() || !pi2.defined()))
        throw InputError("sampling needs a persistence-image pair for the topology tokens");
    if (sched.T > model.config().timesteps)
        throw InputError("schedule has more steps than the model was configured for");
    PointCloud out;
    out.points = sample([&](std::span<const Vec3> x, int t) { return model.forward(x, t, pi1, pi2); }, sched, n, opts);
    return out;
}

} // namespace topogen
