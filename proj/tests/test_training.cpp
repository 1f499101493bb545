#include "topogen/error.hpp"
#include "topogen/synthetic.hpp"
#include "topogen/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace topogen;
using ad::Tensor;

TEST(Subsample, KeepsOrderedSubset) {
    Rng gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(gen.uniform_int(0, 200));
        const std::size_t k = static_cast<std::size_t>(gen.uniform_int(1, static_cast<std::int64_t>(n)));
        PointCloud c;
        c.id = "c";
        for (std::size_t i = 0; i < n; ++i) c.points.push_back({double(i), 0.0, 0.0});
        Rng r(trial);
        const PointCloud s = subsample(c, k, r);
        ASSERT_EQ(s.size(), k);
        EXPECT_EQ(s.id, "c");
        for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s.points[i - 1][0], s.points[i][0]);
        Rng again(trial);
        EXPECT_EQ(subsample(c, k, again).points, s.points);
    }
}

TEST(Subsample, ZeroOrLargeKeepsAll) {
    PointCloud c;
    c.points = {{1, 2, 3}, {4, 5, 6}};
    Rng r(0);
    EXPECT_EQ(subsample(c, 0, r).points, c.points);
    EXPECT_EQ(subsample(c, 9, r).points, c.points);
}

TEST(Subsample, IsRoughlyUniform) {
    PointCloud c;
    for (int i = 0; i < 10; ++i) c.points.push_back({double(i), 0, 0});
    std::vector<int> hits(10, 0);
    Rng r(5);
    for (int t = 0; t < 5000; ++t)
        for (const auto& p : subsample(c, 3, r).points) ++hits[static_cast<int>(p[0])];
    for (int h : hits) EXPECT_NEAR(h, 1500, 150);
}

TEST(MovingAverage, Examples) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(moving_average(v, 4, 2), 4.5);
    EXPECT_DOUBLE_EQ(moving_average(v, 4, 5), 3.0);
    EXPECT_DOUBLE_EQ(moving_average(v, 1, 10), 1.5); // window clipped at the start
    EXPECT_DOUBLE_EQ(moving_average(v, 0, 1), 1.0);
}

namespace {

ModelConfig micro() {
    ModelConfig cfg;
    cfg.V = 16;
    cfg.p = 8;
    cfg.d = 12;
    cfg.n_heads = 2;
    cfg.dit_depth = 1;
    cfg.resampler_depth = 1;
    cfg.M_down = 4;
    cfg.pi_n = 4;
    cfg.timesteps = 50;
    cfg.size_preset = SizePreset::Custom;
    return cfg;
}

} // namespace

TEST(TrainDiffusion, ReturnsOneLossPerStepAndIsDeterministic) {
    const auto clouds = synthetic::mixed_dataset(3, 64, 0.0, 1, false);
    std::vector<PiPair> pis(3, PiPair{Tensor::full({16}, 0.01), Tensor::full({16}, 0.02)});
    const NoiseSchedule sched = linear_schedule(50);
    DiffusionTrainOptions opts;
    opts.steps = 5;
    opts.batch = 2;
    opts.lr = 1e-3;
    opts.points = 32;
    std::size_t calls = 0;
    TopoDiT a(micro(), 1), b(micro(), 1);
    const auto la = train_diffusion(a, clouds, pis, sched, opts, [&](std::size_t, double) { ++calls; });
    const auto lb = train_diffusion(b, clouds, pis, sched, opts);
    EXPECT_EQ(la.size(), 5u);
    EXPECT_EQ(calls, 5u);
    EXPECT_EQ(la, lb);
    for (double l : la) EXPECT_TRUE(std::isfinite(l));
    EXPECT_NE(a.param("final.proj.weight").at(0), TopoDiT(micro(), 1).param("final.proj.weight").at(0));
}

TEST(TrainDiffusion, RejectsBadInputs) {
    const auto clouds = synthetic::mixed_dataset(2, 32, 0.0, 1, false);
    std::vector<PiPair> one(1, PiPair{Tensor::zeros({16}), Tensor::zeros({16})});
    const NoiseSchedule sched = linear_schedule(50);
    TopoDiT m(micro(), 0);
    EXPECT_THROW(train_diffusion(m, clouds, one, sched, {}), InputError);
    DiffusionTrainOptions zero_batch;
    zero_batch.batch = 0;
    std::vector<PiPair> two(2, one[0]);
    EXPECT_THROW(train_diffusion(m, clouds, two, sched, zero_batch), InputError);
}

TEST(TrainVae, StepCount) {
    VaeConfig cfg;
    cfg.pi_n = 3;
    cfg.latent_dim = 2;
    cfg.hidden = {8};
    PiVae vae(cfg, 0);
    Rng r(1);
    std::vector<double> data(5 * 18);
    for (double& v : data) v = r.uniform();
    VaeTrainOptions opts;
    opts.steps = 7;
    opts.batch = 2;
    const auto losses = train_vae(vae, Tensor::from({5, 18}, data), opts);
    EXPECT_EQ(losses.size(), 7u);
}
