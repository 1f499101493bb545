#pragma once

#include "topogen/diffusion.hpp"
#include "topogen/model.hpp"
#include "topogen/vae.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace topogen {

/// PI-1 / PI-2 pixel tensors for one training cloud.
struct PiPair {
    ad::Tensor pi1;
    ad::Tensor pi2;
};

struct DiffusionTrainOptions {
    std::size_t steps = 1000;
    std::size_t batch = 8;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    /// Points drawn (without replacement) from each cloud per step; 0 keeps all.
    std::size_t points = 0;
};

/// Called after every optimizer step with (step index, batch-mean loss).
using StepCallback = std::function<void(std::size_t, double)>;

/// Adam on the batch-mean denoising loss. Returns the loss of every step.
std::vector<double> train_diffusion(TopoDiT& model, std::span<const PointCloud> clouds, std::span<const PiPair> pis,
                                    const NoiseSchedule& sched, const DiffusionTrainOptions& opts,
                                    const StepCallback& on_step = {});

struct VaeTrainOptions {
    std::size_t steps = 1000;
    std::size_t batch = 64;
    double lr = 5e-3;
    std::uint64_t seed = 0;
};

/// `rows` is [count, 2 n^2]. Returns the total loss of every step.
std::vector<double> train_vae(PiVae& vae, const ad::Tensor& rows, const VaeTrainOptions& opts,
                              const StepCallback& on_step = {});

/// Random subset of `k` points (all of them when k is 0 or >= N), order kept.
PointCloud subsample(const PointCloud& cloud, std::size_t k, Rng& rng);

/// Mean of the `window` values ending at index `end` (inclusive).
double moving_average(std::span<const double> values, std::size_t end, std::size_t window);

} // namespace topogen
