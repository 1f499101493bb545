#pragma once

#include "topogen/geometry.hpp"
#include "topogen/model.hpp"
#include "topogen/rng.hpp"
#include "topogen/tensor.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topogen {

/// Index t runs 1..T; slot 0 holds the t = 0 convention alpha_bar = 1.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    void require_step(int t) const;
};

NoiseSchedule linear_schedule(int T = 1000, double beta_1 = 1e-4, double beta_T = 0.02);

/// A schedule over `steps` evenly spaced timesteps of `base`, with betas
/// recomputed so the retained alpha_bar values are unchanged. `timesteps[i]`
/// is the original step represented by respaced step i (1-based; slot 0 unused).
struct Respaced {
    NoiseSchedule schedule;
    std::vector<int> timesteps;
};

Respaced respace(const NoiseSchedule& base, int steps);

std::vector<Vec3> q_sample(std::span<const Vec3> x0, int t, std::span<const Vec3> eps, const NoiseSchedule& sched);
std::vector<Vec3> standard_normal_points(std::size_t n, Rng& rng);

enum class SigmaMode { Beta, Posterior };
SigmaMode parse_sigma_mode(const std::string& name);
std::string sigma_mode_name(SigmaMode mode);
double sigma_squared(const NoiseSchedule& sched, int t, SigmaMode mode);

/// One ancestral step. With `clip_x0`, the implied clean sample is clamped to
/// [-clip, clip] and the posterior mean is formed from it; without it the
/// classic epsilon-parameterized mean is used.
std::vector<Vec3> p_sample_step(std::span<const Vec3> x_t, int t, std::span<const Vec3> eps_hat,
                                const NoiseSchedule& sched, SigmaMode mode, Rng& rng,
                                std::optional<double> clip_x0 = std::nullopt);

/// Maps (x_t, t) to predicted noise [N, 3].
using Denoiser = std::function<ad::Tensor(std::span<const Vec3>, int)>;

struct LossDraw {
    int t = 0;
    std::vector<Vec3> eps;
};

LossDraw draw_loss_noise(std::size_t n, const NoiseSchedule& sched, Rng& rng);
/// Mean over all scalars of (eps_theta(x_t, t) - eps)^2.
ad::Tensor noise_mse(const Denoiser& f, std::span<const Vec3> x0, const LossDraw& draw, const NoiseSchedule& sched);
ad::Tensor training_loss(const Denoiser& f, std::span<const Vec3> x0, const NoiseSchedule& sched, Rng& rng);
ad::Tensor training_loss(const TopoDiT& model, std::span<const Vec3> x0, const ad::Tensor& pi1,
                         const ad::Tensor& pi2, const NoiseSchedule& sched, Rng& rng);

/// Bound on the implied clean sample during sampling. Globally normalized
/// data sits well inside it; without a bound an untrained denoiser lets the
/// chain grow by 1/sqrt(alpha_bar_T).
inline constexpr double kDefaultClipX0 = 2.0;

struct SampleOptions {
    int steps = 0; // 0 keeps the full schedule
    SigmaMode mode = SigmaMode::Beta;
    std::uint64_t seed = 0;
    std::optional<double> clip_x0 = kDefaultClipX0;
};

std::vector<Vec3> sample(const Denoiser& f, const NoiseSchedule& sched, std::size_t n, const SampleOptions& opts);
/// Throws InputError when the model consumes topology and a PI is missing.
PointCloud sample(const TopoDiT& model, const NoiseSchedule& sched, const ad::Tensor& pi1, const ad::Tensor& pi2,
                  std::size_t n, const SampleOptions& opts);

} // namespace topogen
