#pragma once

#include "topogen/pimage.hpp"
#include "topogen/rng.hpp"
#include "topogen/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace topogen {

struct VaeConfig {
    int pi_n = kDefaultImageSide;
    std::size_t latent_dim = 32;
    std::vector<std::size_t> hidden{256, 64};
    double kl_weight = 1.0;
    /// Pixels are divided by this before encoding and decoder outputs are
    /// multiplied by it; set from the training set so targets are O(1).
    double pixel_scale = 1.0;

    [[nodiscard]] std::size_t input_dim() const { return 2 * static_cast<std::size_t>(pi_n) * pi_n; }
    void validate() const;
};

inline constexpr double kLogvarMin = -30.0;
inline constexpr double kLogvarMax = 20.0;

struct VaeLoss {
    ad::Tensor total;
    double reconstruction = 0.0;
    double kl = 0.0;
};

/// MLP VAE over concatenated (PI-1, PI-2) pairs. Rows of a batch are
/// independent samples.
class PiVae {
public:
    PiVae(VaeConfig cfg, std::uint64_t seed);

    [[nodiscard]] const VaeConfig& config() const { return cfg_; }
    ad::ParamStore& params() { return params_; }
    [[nodiscard]] const ad::ParamStore& params() const { return params_; }

    /// [B, 2n^2] -> (mu, logvar), each [B, latent]; logvar clamped.
    std::pair<ad::Tensor, ad::Tensor> encode(const ad::Tensor& x) const;
    /// [B, latent] -> [B, 2n^2] in pixel units, nonnegative.
    ad::Tensor decode(const ad::Tensor& z) const;
    /// Reconstruction MSE is measured in scaled units.
    VaeLoss loss(const ad::Tensor& x, Rng& rng) const;
    /// One decoded pair per row, split into PI-1 / PI-2 pixel tensors [n^2].
    std::pair<ad::Tensor, ad::Tensor> sample_prior(Rng& rng) const;

private:
    ad::Tensor decode_scaled(const ad::Tensor& z) const;

    VaeConfig cfg_;
    ad::ParamStore params_;
    std::vector<std::string> encoder_, decoder_;
};

ad::Tensor reparameterize(const ad::Tensor& mu, const ad::Tensor& logvar, Rng& rng);
/// 1/2 sum(mu^2 + e^logvar - 1 - logvar), averaged over batch rows.
ad::Tensor kl_divergence(const ad::Tensor& mu, const ad::Tensor& logvar);
/// Concatenates flattened pixels of a PI pair into one [1, 2n^2] row.
ad::Tensor pair_row(const PersistenceImage& pi1, const PersistenceImage& pi2);
/// Largest pixel over all rows, or 1 when every pixel is zero.
double pixel_scale_for(const ad::Tensor& rows);

/// "key = value" sidecar stored next to a VAE checkpoint. `hidden` is a
/// comma-separated width list.
VaeConfig parse_vae_config(std::istream& is);
void write_vae_config(std::ostream& os, const VaeConfig& cfg);

} // namespace topogen
