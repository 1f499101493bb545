#pragma once

#include "topogen/geometry.hpp"
#include "topogen/pimage.hpp"
#include "topogen/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace topogen {

enum class SizePreset { S, B, L, XL, Custom };

struct PresetShape {
    std::size_t d;
    std::size_t dit_depth;
    std::size_t n_heads;
};

PresetShape preset_shape(SizePreset preset);
SizePreset parse_preset(const std::string& name);
std::string preset_name(SizePreset preset);

struct ModelConfig {
    int V = 32;
    int p = 4;
    std::size_t d = 384;
    std::size_t n_heads = 6;
    std::size_t dit_depth = 12;
    std::size_t resampler_depth = 6;
    std::size_t M_down = 96;
    int pi_n = kDefaultImageSide;
    int timesteps = 1000;
    SizePreset size_preset = SizePreset::S;
    // Ablation switches.
    bool use_topology = true;
    bool up_posembed = true;
    bool gating = true;

    [[nodiscard]] std::size_t L() const { return token_count(V, p); }
    [[nodiscard]] std::size_t payload() const { return 3 * static_cast<std::size_t>(p) * p * p; }
    [[nodiscard]] std::size_t head_dim() const { return d / n_heads; }

    void apply_preset(SizePreset preset);
    /// Throws InputError describing the first violated constraint.
    void validate() const;
};

/// `key = value` lines; '#' starts a comment. Unknown keys are rejected.
ModelConfig parse_model_config(std::istream& is);
void write_model_config(std::ostream& os, const ModelConfig& cfg);

/// Per-axis sin/cos features of the (i, j, k) patch lattice, row-major like
/// the patch tokens. floor(d/6) frequencies per axis; leftover columns are 0.
ad::Tensor sincos_posembed_3d(int grid_side, std::size_t d);

/// Sinusoidal features of an integer timestep (half sin, half cos).
std::vector<double> timestep_frequencies(int t, std::size_t d);

struct TokenLedger {
    std::size_t patch_tokens = 0;
    std::size_t kv_tokens = 0;
    std::size_t trunk_tokens = 0;
    std::size_t up_tokens = 0;
};

/// The denoiser. Parameters live in a ParamStore keyed by dotted names.
class TopoDiT {
public:
    TopoDiT(ModelConfig cfg, std::uint64_t seed);

    [[nodiscard]] const ModelConfig& config() const { return cfg_; }
    ad::ParamStore& params() { return params_; }
    [[nodiscard]] const ad::ParamStore& params() const { return params_; }
    /// Mutable handle to a parameter (tensors share storage).
    [[nodiscard]] ad::Tensor param(const std::string& name) const { return params_.get(name); }

    /// Two tokens [2, d], one per image; inputs hold pi_n^2 pixels each.
    ad::Tensor topology_tokens(const ad::Tensor& pi1, const ad::Tensor& pi2) const;
    ad::Tensor timestep_embedding(int t) const;

    /// Multi-head attention; queries from `q`, keys and values from `kv`.
    ad::Tensor attention(const ad::Tensor& q, const ad::Tensor& kv, const std::string& prefix) const;
    ad::Tensor perceiver_resampler(const ad::Tensor& queries, const ad::Tensor& kv, const std::string& prefix) const;
    /// `topo` may be undefined, in which case only patch tokens are attended.
    ad::Tensor downsample(const ad::Tensor& patch_tokens, const ad::Tensor& topo) const;
    ad::Tensor upsample(const ad::Tensor& latents) const;
    ad::Tensor dit_block(const ad::Tensor& tokens, const ad::Tensor& t_cond, std::size_t index) const;
    ad::Tensor final_layer(const ad::Tensor& tokens, const ad::Tensor& t_cond) const;

    /// Voxelized, patchified input as an [L, 3p^3] constant.
    ad::Tensor input_tokens(std::span<const Vec3> x_t) const;
    ad::Tensor embed_patches(const ad::Tensor& raw_tokens) const;
    /// Trilinear read-back of an [L, 3p^3] payload at `positions`, as [N, 3].
    ad::Tensor devoxelize_tokens(const ad::Tensor& payload, std::span<const Vec3> positions) const;

    /// Predicted noise [N, 3] for the state `x_t` at step t.
    ad::Tensor forward(std::span<const Vec3> x_t, int t, const ad::Tensor& pi1, const ad::Tensor& pi2,
                       TokenLedger* ledger = nullptr) const;

private:
    void add_linear(const std::string& name, std::size_t in, std::size_t out, bool zero = false);
    void add_attention(const std::string& prefix);
    void add_ffn(const std::string& prefix);
    ad::Tensor lin(const ad::Tensor& x, const std::string& name) const;
    ad::Tensor ffn(const ad::Tensor& x, const std::string& prefix) const;

    ModelConfig cfg_;
    std::uint64_t seed_;
    ad::ParamStore params_;
    ad::Tensor posembed_;
    std::vector<std::size_t> payload_of_coord_; // coords flat index -> payload flat index
};

ad::Tensor image_tensor(const PersistenceImage& image);

} // namespace topogen
