#include "topogen/model.hpp"

#include "topogen/error.hpp"
#include "topogen/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace topogen {

using ad::Tensor;

PresetShape preset_shape(SizePreset preset) {
    switch (preset) {
    case SizePreset::S: return {384, 12, 6};
    case SizePreset::B: return {768, 12, 12};
    case SizePreset::L: return {1024, 24, 16};
    case SizePreset::XL: return {1152, 28, 16};
    case SizePreset::Custom: break;
    }
    throw InputError("custom size has no preset shape");
}

SizePreset parse_preset(const std::string& name) {
    if (name == "S") return SizePreset::S;
    if (name == "B") return SizePreset::B;
    if (name == "L") return SizePreset::L;
    if (name == "XL") return SizePreset::XL;
    if (name == "custom") return SizePreset::Custom;
    throw InputError("unknown model size '" + name + "' (expected S, B, L, XL)");
}

std::string preset_name(SizePreset preset) {
    switch (preset) {
    case SizePreset::S: return "S";
    case SizePreset::B: return "B";
    case SizePreset::L: return "L";
    case SizePreset::XL: return "XL";
    case SizePreset::Custom: break;
    }
    return "custom";
}

void ModelConfig::apply_preset(SizePreset preset) {
    size_preset = preset;
    if (preset == SizePreset::Custom) return;
    const auto s = preset_shape(preset);
    d = s.d;
    dit_depth = s.dit_depth;
    n_heads = s.n_heads;
}

void ModelConfig::validate() const {
    require_valid_resolution(V);
    if (p != 2 && p != 4 && p != 8) throw InputError("patch size must be 2, 4 or 8, got " + std::to_string(p));
    require_patch_divides(V, p);
    if (d == 0 || n_heads == 0 || d % n_heads != 0)
        throw InputError("hidden width " + std::to_string(d) + " is not divisible by " + std::to_string(n_heads) +
                         " heads");
    if (d < 6) throw InputError("hidden width must be at least 6");
    if (resampler_depth == 0) throw InputError("resampler depth must be at least 1");
    if (M_down == 0) throw InputError("downsampling query count must be positive");
    if (pi_n < 1) throw InputError("persistence image side must be positive");
    if (timesteps < 1) throw InputError("timesteps must be positive");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out{};
    if (!(is >> out) || !is.eof()) throw InputError("config key '" + key + "': bad value '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw InputError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const auto v = parse_number<long long>(key, value);
    if (v < 0) throw InputError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

} // namespace

ModelConfig parse_model_config(std::istream& is) {
    ModelConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "size") cfg.apply_preset(parse_preset(value));
        else if (key == "V") cfg.V = parse_number<int>(key, value);
        else if (key == "p") cfg.p = parse_number<int>(key, value);
        else if (key == "d") { cfg.d = parse_count(key, value); cfg.size_preset = SizePreset::Custom; }
        else if (key == "n_heads") { cfg.n_heads = parse_count(key, value); cfg.size_preset = SizePreset::Custom; }
        else if (key == "dit_depth") { cfg.dit_depth = parse_count(key, value); cfg.size_preset = SizePreset::Custom; }
        else if (key == "resampler_depth") cfg.resampler_depth = parse_count(key, value);
        else if (key == "M_down") cfg.M_down = parse_count(key, value);
        else if (key == "pi_n") cfg.pi_n = parse_number<int>(key, value);
        else if (key == "timesteps") cfg.timesteps = parse_number<int>(key, value);
        else if (key == "use_topology") cfg.use_topology = parse_bool(key, value);
        else if (key == "up_posembed") cfg.up_posembed = parse_bool(key, value);
        else if (key == "gating") cfg.gating = parse_bool(key, value);
        else throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void write_model_config(std::ostream& os, const ModelConfig& cfg) {
    os << "V = " << cfg.V << "\np = " << cfg.p << "\nd = " << cfg.d << "\nn_heads = " << cfg.n_heads
       << "\ndit_depth = " << cfg.dit_depth << "\nresampler_depth = " << cfg.resampler_depth
       << "\nM_down = " << cfg.M_down << "\npi_n = " << cfg.pi_n << "\ntimesteps = " << cfg.timesteps
       << "\nuse_topology = " << (cfg.use_topology ? "true" : "false")
       << "\nup_posembed = " << (cfg.up_posembed ? "true" : "false")
       << "\ngating = " << (cfg.gating ? "true" : "false") << "\n";
}

Tensor sincos_posembed_3d(int grid_side, std::size_t d) {
    const std::size_t g = static_cast<std::size_t>(grid_side);
    const std::size_t f = d / 6;
    std::vector<double> table(g * g * g * d, 0.0);
    std::size_t row = 0;
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j)
            for (std::size_t k = 0; k < g; ++k, ++row) {
                const double coord[3] = {double(i), double(j), double(k)};
                double* out = table.data() + row * d;
                for (std::size_t a = 0; a < 3; ++a)
                    for (std::size_t m = 0; m < f; ++m) {
                        const double omega = std::pow(10000.0, -static_cast<double>(m) / static_cast<double>(f));
                        out[a * 2 * f + m] = std::sin(coord[a] * omega);
                        out[a * 2 * f + f + m] = std::cos(coord[a] * omega);
                    }
            }
    return Tensor::from({g * g * g, d}, std::move(table));
}

std::vector<double> timestep_frequencies(int t, std::size_t d) {
    const std::size_t half = d / 2;
    std::vector<double> out(d, 0.0);
    for (std::size_t m = 0; m < half; ++m) {
        const double omega = std::exp(-std::log(10000.0) * static_cast<double>(m) / static_cast<double>(half));
        out[m] = std::cos(t * omega);
        out[half + m] = std::sin(t * omega);
    }
    return out;
}

ad::Tensor image_tensor(const PersistenceImage& image) {
    const std::size_t n = static_cast<std::size_t>(image.spec.n);
    return Tensor::from({n * n}, image.pixels);
}

TopoDiT::TopoDiT(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    cfg_.validate();
    const std::size_t d = cfg_.d, n2 = static_cast<std::size_t>(cfg_.pi_n) * cfg_.pi_n;
    Rng root(seed_);
    auto normal = [&](const std::string& name, ad::Shape shape, double std) {
        Rng r = root.split(name);
        std::vector<double> v(ad::numel(shape));
        for (auto& x : v) x = std * r.normal();
        params_.add(name, Tensor::from(std::move(shape), std::move(v)));
    };

    for (int slot = 0; slot < 2; ++slot) {
        const std::string pre = "topo." + std::to_string(slot);
        params_.add(pre + ".ln.gain", Tensor::full({n2}, 1.0));
        params_.add(pre + ".ln.bias", Tensor::zeros({n2}));
        add_linear(pre + ".fc1", n2, d);
        add_linear(pre + ".fc2", d, d);
    }
    add_linear("embed", cfg_.payload(), d);
    add_linear("t_embed.fc1", d, d);
    add_linear("t_embed.fc2", d, d);

    normal("down.queries", {cfg_.M_down, d}, 0.02);
    normal("up.queries", {cfg_.L(), d}, 0.02);
    for (const char* side : {"down", "up"})
        for (std::size_t j = 0; j < cfg_.resampler_depth; ++j) {
            const std::string pre = std::string(side) + ".layer" + std::to_string(j);
            add_attention(pre + ".attn");
            add_ffn(pre + ".ffn");
        }
    for (std::size_t i = 0; i < cfg_.dit_depth; ++i) {
        const std::string pre = "blocks." + std::to_string(i);
        add_linear(pre + ".adaln", d, 6 * d, true);
        add_attention(pre + ".attn");
        add_ffn(pre + ".ffn");
    }
    add_linear("final.adaln", d, 2 * d, true);
    add_linear("final.proj", d, cfg_.payload());

    posembed_ = sincos_posembed_3d(cfg_.V / cfg_.p, d);
    const auto gather = patch_gather_index(cfg_.V, cfg_.p);
    payload_of_coord_.assign(gather.size(), 0);
    for (std::size_t e = 0; e < gather.size(); ++e) payload_of_coord_[gather[e]] = e;
}

void TopoDiT::add_linear(const std::string& name, std::size_t in, std::size_t out, bool zero) {
    std::vector<double> w(in * out, 0.0);
    if (!zero) {
        Rng r = Rng(seed_).split(name + ".weight");
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        for (auto& x : w) x = a * (2.0 * r.uniform() - 1.0);
    }
    params_.add(name + ".weight", Tensor::from({in, out}, std::move(w)));
    params_.add(name + ".bias", Tensor::zeros({out}));
}

void TopoDiT::add_attention(const std::string& prefix) {
    for (const char* part : {".q", ".k", ".v", ".o"}) add_linear(prefix + part, cfg_.d, cfg_.d);
}

void TopoDiT::add_ffn(const std::string& prefix) {
    add_linear(prefix + ".fc1", cfg_.d, 4 * cfg_.d);
    add_linear(prefix + ".fc2", 4 * cfg_.d, cfg_.d);
}

Tensor TopoDiT::lin(const Tensor& x, const std::string& name) const {
    return ad::linear(x, params_.get(name + ".weight"), params_.get(name + ".bias"));
}

Tensor TopoDiT::ffn(const Tensor& x, const std::string& prefix) const {
    return lin(ad::gelu(lin(x, prefix + ".fc1")), prefix + ".fc2");
}

Tensor TopoDiT::topology_tokens(const Tensor& pi1, const Tensor& pi2) const {
    const std::size_t n2 = static_cast<std::size_t>(cfg_.pi_n) * cfg_.pi_n;
    std::vector<Tensor> tokens;
    int slot = 0;
    for (const Tensor* pi : {&pi1, &pi2}) {
        if (!pi->defined() || pi->numel() != n2)
            throw ShapeError("topology tokens: persistence image " + std::to_string(slot + 1) + " has " +
                             std::to_string(pi->defined() ? pi->numel() : 0) + " pixels, model expects " +
                             std::to_string(cfg_.pi_n) + "x" + std::to_string(cfg_.pi_n));
        const std::string pre = "topo." + std::to_string(slot);
        Tensor x = ad::reshape(*pi, {1, n2});
        x = ad::layer_norm(x, params_.get(pre + ".ln.gain"), params_.get(pre + ".ln.bias"));
        tokens.push_back(lin(ad::gelu(lin(x, pre + ".fc1")), pre + ".fc2"));
        ++slot;
    }
    return ad::concat(tokens, 0);
}

Tensor TopoDiT::timestep_embedding(int t) const {
    if (t < 1 || t > cfg_.timesteps)
        throw InputError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(cfg_.timesteps) + "]");
    Tensor f = Tensor::from({1, cfg_.d}, timestep_frequencies(t, cfg_.d));
    return lin(ad::silu(lin(f, "t_embed.fc1")), "t_embed.fc2");
}

Tensor TopoDiT::attention(const Tensor& q_in, const Tensor& kv_in, const std::string& prefix) const {
    const std::size_t h = cfg_.n_heads, dh = cfg_.head_dim();
    if (q_in.rank() != 2 || kv_in.rank() != 2 || q_in.dim(1) != cfg_.d || kv_in.dim(1) != cfg_.d)
        throw ShapeError(prefix + ": attention inputs " + ad::shape_str(q_in.shape()) + ", " +
                         ad::shape_str(kv_in.shape()) + " need width " + std::to_string(cfg_.d));
    const std::vector<std::size_t> sizes(h, dh);
    auto qs = ad::split(lin(q_in, prefix + ".q"), 1, sizes);
    auto ks = ad::split(lin(kv_in, prefix + ".k"), 1, sizes);
    auto vs = ad::split(lin(kv_in, prefix + ".v"), 1, sizes);
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> heads;
    heads.reserve(h);
    for (std::size_t i = 0; i < h; ++i) {
        Tensor w = ad::softmax(ad::scale(ad::matmul(qs[i], ad::transpose(ks[i])), inv), 1);
        heads.push_back(ad::matmul(w, vs[i]));
    }
    return lin(ad::concat(heads, 1), prefix + ".o");
}

Tensor TopoDiT::perceiver_resampler(const Tensor& queries, const Tensor& kv, const std::string& prefix) const {
    Tensor q = queries;
    for (std::size_t j = 0; j < cfg_.resampler_depth; ++j) {
        const std::string pre = prefix + ".layer" + std::to_string(j);
        Tensor l = ad::add(attention(q, kv, pre + ".attn"), q);
        q = ad::add(ffn(l, pre + ".ffn"), l);
    }
    return q;
}

Tensor TopoDiT::downsample(const Tensor& patch_tokens, const Tensor& topo) const {
    if (!topo.defined()) return perceiver_resampler(params_.get("down.queries"), patch_tokens, "down");
    const Tensor parts[] = {patch_tokens, topo};
    return perceiver_resampler(params_.get("down.queries"), ad::concat(parts, 0), "down");
}

Tensor TopoDiT::upsample(const Tensor& latents) const {
    Tensor q = params_.get("up.queries");
    if (cfg_.up_posembed) q = ad::add(q, posembed_);
    return perceiver_resampler(q, latents, "up");
}

namespace {

// x * (1 + scale) + shift, with [d] modulation broadcast over rows.
Tensor modulate(const Tensor& x, const Tensor& shift, const Tensor& scale) {
    return ad::add(ad::mul(x, ad::add_scalar(scale, 1.0)), shift);
}

} // namespace

Tensor TopoDiT::dit_block(const Tensor& tokens, const Tensor& t_cond, std::size_t index) const {
    const std::string pre = "blocks." + std::to_string(index);
    const std::size_t d = cfg_.d;
    const std::vector<std::size_t> sizes(6, d);
    auto mod = ad::split(ad::reshape(lin(ad::silu(t_cond), pre + ".adaln"), {6 * d}), 0, sizes);
    // shift/scale/gate for attention, then for the MLP.
    Tensor h = modulate(ad::layer_norm(tokens, Tensor(), Tensor(), 1e-6), mod[0], mod[1]);
    Tensor a = attention(h, h, pre + ".attn");
    Tensor x = ad::add(tokens, cfg_.gating ? ad::mul(a, mod[2]) : a);
    h = modulate(ad::layer_norm(x, Tensor(), Tensor(), 1e-6), mod[3], mod[4]);
    Tensor m = ffn(h, pre + ".ffn");
    return ad::add(x, cfg_.gating ? ad::mul(m, mod[5]) : m);
}

Tensor TopoDiT::final_layer(const Tensor& tokens, const Tensor& t_cond) const {
    const std::size_t d = cfg_.d;
    const std::vector<std::size_t> sizes(2, d);
    auto mod = ad::split(ad::reshape(lin(ad::silu(t_cond), "final.adaln"), {2 * d}), 0, sizes);
    return lin(modulate(ad::layer_norm(tokens, Tensor(), Tensor(), 1e-6), mod[0], mod[1]), "final.proj");
}

Tensor TopoDiT::input_tokens(std::span<const Vec3> x_t) const {
    PointCloud cloud;
    cloud.points.assign(x_t.begin(), x_t.end());
    const PatchTokens tokens = patchify(voxelize(cloud, cfg_.V), cfg_.p);
    return Tensor::from({tokens.L, tokens.width}, tokens.data);
}

Tensor TopoDiT::embed_patches(const Tensor& raw_tokens) const {
    return ad::add(lin(raw_tokens, "embed"), posembed_);
}

Tensor TopoDiT::devoxelize_tokens(const Tensor& payload, std::span<const Vec3> positions) const {
    auto map = std::make_shared<ad::SparseMap>();
    map->in_size = cfg_.L() * cfg_.payload();
    map->row_ptr.reserve(positions.size() * 3 + 1);
    map->row_ptr.push_back(0);
    for (const auto& pos : positions) {
        const Stencil s = trilinear_stencil(pos, cfg_.V);
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t e = 0; e < 8; ++e) {
                if (s.weight[e] == 0.0) continue;
                map->col.push_back(payload_of_coord_[s.node[e] * 3 + c]);
                map->weight.push_back(s.weight[e]);
            }
            map->row_ptr.push_back(map->col.size());
        }
    }
    return ad::apply_sparse(payload, std::move(map), {positions.size(), 3});
}

namespace {

template <typename F>
Tensor stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const ShapeError& e) {
        throw ShapeError(std::string(name) + ": " + e.what());
    }
}

} // namespace

Tensor TopoDiT::forward(std::span<const Vec3> x_t, int t, const Tensor& pi1, const Tensor& pi2,
                        TokenLedger* ledger) const {
    if (x_t.empty()) throw InputError("forward: empty point state");
    TokenLedger led;
    Tensor tokens = stage("patchify", [&] { return embed_patches(input_tokens(x_t)); });
    led.patch_tokens = tokens.dim(0);
    Tensor topo;
    if (cfg_.use_topology) topo = stage("topology", [&] { return topology_tokens(pi1, pi2); });
    led.kv_tokens = led.patch_tokens + (topo.defined() ? topo.dim(0) : 0);
    Tensor c = stage("timestep", [&] { return timestep_embedding(t); });
    Tensor z = stage("downsample", [&] { return downsample(tokens, topo); });
    led.trunk_tokens = z.dim(0);
    for (std::size_t i = 0; i < cfg_.dit_depth; ++i) z = stage("dit", [&] { return dit_block(z, c, i); });
    Tensor up = stage("upsample", [&] { return upsample(z); });
    led.up_tokens = up.dim(0);
    Tensor payload = stage("final", [&] { return final_layer(up, c); });
    Tensor out = stage("devoxelize", [&] { return devoxelize_tokens(payload, x_t); });

    const std::size_t L = cfg_.L();
    if (led.patch_tokens != L || led.kv_tokens != L + (cfg_.use_topology ? 2 : 0) || led.trunk_tokens != cfg_.M_down ||
        led.up_tokens != L)
        throw InvariantError("token ledger mismatch: " + std::to_string(led.patch_tokens) + " -> " +
                             std::to_string(led.kv_tokens) + " -> " + std::to_string(led.trunk_tokens) + " -> " +
                             std::to_string(led.up_tokens));
    if (ledger) *ledger = led;
    return out;
}

} // namespace topogen
