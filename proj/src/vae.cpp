#include "topogen/vae.hpp"

#include "topogen/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace topogen {

using ad::Tensor;

void VaeConfig::validate() const {
    if (pi_n < 1) throw InputError("VAE image side must be positive");
    if (latent_dim < 1) throw InputError("VAE latent dimension must be at least 1");
    for (auto h : hidden)
        if (h == 0) throw InputError("VAE hidden widths must be positive");
    if (!(kl_weight >= 0.0)) throw InputError("VAE kl weight must be non-negative");
    if (!(pixel_scale > 0.0) || !std::isfinite(pixel_scale)) throw InputError("VAE pixel scale must be positive");
}

PiVae::PiVae(VaeConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const Rng root(seed);
    auto add_linear = [&](const std::string& name, std::size_t in, std::size_t out) {
        Rng r = root.split(name);
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> w(in * out);
        for (auto& x : w) x = a * (2.0 * r.uniform() - 1.0);
        params_.add(name + ".weight", Tensor::from({in, out}, std::move(w)));
        params_.add(name + ".bias", Tensor::zeros({out}));
    };
    std::size_t width = cfg_.input_dim();
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
        encoder_.push_back("enc." + std::to_string(i));
        add_linear(encoder_.back(), width, cfg_.hidden[i]);
        width = cfg_.hidden[i];
    }
    add_linear("enc.mu", width, cfg_.latent_dim);
    add_linear("enc.logvar", width, cfg_.latent_dim);
    width = cfg_.latent_dim;
    for (std::size_t i = cfg_.hidden.size(); i-- > 0;) {
        decoder_.push_back("dec." + std::to_string(decoder_.size()));
        add_linear(decoder_.back(), width, cfg_.hidden[i]);
        width = cfg_.hidden[i];
    }
    add_linear("dec.out", width, cfg_.input_dim());
}

namespace {

Tensor lin(const ad::ParamStore& ps, const Tensor& x, const std::string& name) {
    return ad::linear(x, ps.get(name + ".weight"), ps.get(name + ".bias"));
}

} // namespace

std::pair<Tensor, Tensor> PiVae::encode(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != cfg_.input_dim())
        throw ShapeError("VAE encode: input " + ad::shape_str(x.shape()) + ", expected [B, " +
                         std::to_string(cfg_.input_dim()) + "]");
    Tensor h = cfg_.pixel_scale == 1.0 ? x : ad::scale(x, 1.0 / cfg_.pixel_scale);
    for (const auto& name : encoder_) h = ad::gelu(lin(params_, h, name));
    return {lin(params_, h, "enc.mu"), ad::clamp(lin(params_, h, "enc.logvar"), kLogvarMin, kLogvarMax)};
}

Tensor PiVae::decode(const Tensor& z) const {
    const Tensor out = decode_scaled(z);
    return cfg_.pixel_scale == 1.0 ? out : ad::scale(out, cfg_.pixel_scale);
}

Tensor PiVae::decode_scaled(const Tensor& z) const {
    if (z.rank() != 2 || z.dim(1) != cfg_.latent_dim)
        throw ShapeError("VAE decode: latent " + ad::shape_str(z.shape()) + ", expected [B, " +
                         std::to_string(cfg_.latent_dim) + "]");
    Tensor h = z;
    for (const auto& name : decoder_) h = ad::gelu(lin(params_, h, name));
    return ad::softplus(lin(params_, h, "dec.out"));
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, Rng& rng) {
    if (mu.shape() != logvar.shape()) throw ShapeError("reparameterize: mu and logvar shapes differ");
    std::vector<double> eta(mu.numel());
    for (auto& v : eta) v = rng.normal();
    const Tensor std = ad::exp(ad::scale(ad::clamp(logvar, kLogvarMin, kLogvarMax), 0.5));
    return ad::add(mu, ad::mul(std, Tensor::from(mu.shape(), std::move(eta))));
}

Tensor kl_divergence(const Tensor& mu, const Tensor& logvar) {
    const double rows = mu.rank() == 2 ? static_cast<double>(mu.dim(0)) : 1.0;
    Tensor terms = ad::sub(ad::add(ad::square(mu), ad::exp(logvar)), ad::add_scalar(logvar, 1.0));
    return ad::scale(ad::sum(terms), 0.5 / rows);
}

VaeLoss PiVae::loss(const Tensor& x, Rng& rng) const {
    auto [mu, logvar] = encode(x);
    const Tensor recon = decode_scaled(reparameterize(mu, logvar, rng));
    const Tensor target = cfg_.pixel_scale == 1.0 ? x : ad::scale(x, 1.0 / cfg_.pixel_scale);
    const Tensor mse = ad::mean(ad::square(ad::sub(recon, target)));
    const Tensor kl = kl_divergence(mu, logvar);
    VaeLoss out;
    out.total = ad::add(mse, ad::scale(kl, cfg_.kl_weight));
    out.reconstruction = mse.item();
    out.kl = kl.item();
    return out;
}

std::pair<Tensor, Tensor> PiVae::sample_prior(Rng& rng) const {
    std::vector<double> z(cfg_.latent_dim);
    for (auto& v : z) v = rng.normal();
    const Tensor out = decode(Tensor::from({1, cfg_.latent_dim}, std::move(z)));
    const std::size_t n2 = static_cast<std::size_t>(cfg_.pi_n) * cfg_.pi_n;
    const std::size_t sizes[] = {n2, n2};
    auto parts = ad::split(ad::reshape(out, {2 * n2}), 0, sizes);
    return {parts[0].detach(), parts[1].detach()};
}

Tensor pair_row(const PersistenceImage& pi1, const PersistenceImage& pi2) {
    if (pi1.spec.n != pi2.spec.n) throw ShapeError("persistence image pair has mismatched resolutions");
    std::vector<double> v(pi1.pixels);
    v.insert(v.end(), pi2.pixels.begin(), pi2.pixels.end());
    const std::size_t width = v.size();
    return Tensor::from({1, width}, std::move(v));
}

} // namespace topogen

namespace topogen {

double pixel_scale_for(const Tensor& rows) {
    double m = 0.0;
    for (double v : rows.data()) m = std::max(m, v);
    return m > 0.0 ? m : 1.0;
}

} // namespace topogen

namespace topogen {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw InputError("vae config: bad value for " + key + ": '" + value + "'");
    return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (v < 1 || v != std::floor(v)) throw InputError("vae config: " + key + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

} // namespace

VaeConfig parse_vae_config(std::istream& is) {
    VaeConfig cfg;
    std::string line;
    while (std::getline(is, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("vae config: expected key = value, got '" + line + "'");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key == "pi_n") cfg.pi_n = static_cast<int>(to_count(key, value));
        else if (key == "latent_dim") cfg.latent_dim = to_count(key, value);
        else if (key == "kl_weight") cfg.kl_weight = to_double(key, value);
        else if (key == "pixel_scale") cfg.pixel_scale = to_double(key, value);
        else if (key == "hidden") {
            cfg.hidden.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) cfg.hidden.push_back(to_count(key, strip(item)));
        } else
            throw InputError("vae config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void write_vae_config(std::ostream& os, const VaeConfig& cfg) {
    os << "pi_n = " << cfg.pi_n << "\nlatent_dim = " << cfg.latent_dim << "\nhidden = ";
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) os << (i ? "," : "") << cfg.hidden[i];
    const auto old = os.precision(17);
    os << "\nkl_weight = " << cfg.kl_weight << "\npixel_scale = " << cfg.pixel_scale << "\n";
    os.precision(old);
}

} // namespace topogen
