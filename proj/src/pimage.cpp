#include "topogen/pimage.hpp"

#include "topogen/error.hpp"
#include "topogen/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace topogen {

void GridSpec::validate() const {
    if (n < 1 || n > 65535) throw InputError("grid spec: n must be in [1, 65535]");
    if (!(birth_hi > birth_lo) || !(pers_hi > pers_lo)) throw InputError("grid spec: degenerate range");
    if (!(sigma > 0.0)) throw InputError("grid spec: sigma must be > 0");
    if (!(b_max > 0.0)) throw InputError("grid spec: b_max must be > 0");
}

double PersistenceImage::sum() const { return std::accumulate(pixels.begin(), pixels.end(), 0.0); }

std::vector<BirthPersistence> transform_diagram(const PersistenceDiagram& pd) {
    std::vector<BirthPersistence> out;
    out.reserve(pd.pairs.size());
    for (const auto& p : pd.pairs) out.push_back({p.birth, p.death - p.birth});
    return out;
}

double weight(const BirthPersistence& u, double b_max) { return u.persistence / b_max; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

/// Gaussian mass in each of the n bands between lo and hi, centered at mu.
void band_masses(double lo, double hi, int n, double mu, double sigma, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(n));
    double prev = normal_cdf((lo - mu) / sigma);
    for (int j = 0; j < n; ++j) {
        const double edge = j + 1 == n ? hi : lo + (hi - lo) * (j + 1) / n;
        const double cur = normal_cdf((edge - mu) / sigma);
        out[static_cast<std::size_t>(j)] = cur - prev;
        prev = cur;
    }
}

} // namespace

PersistenceImage rasterize(const PersistenceDiagram& pd, const GridSpec& spec) {
    spec.validate();
    PersistenceImage img;
    img.spec = spec;
    img.dim_tag = pd.dimension;
    const auto n = static_cast<std::size_t>(spec.n);
    img.pixels.assign(n * n, 0.0);
    std::vector<double> bx, py;
    for (const auto& u : transform_diagram(pd)) {
        const double f = weight(u, spec.b_max);
        if (f == 0.0) continue;
        band_masses(spec.birth_lo, spec.birth_hi, spec.n, u.birth, spec.sigma, bx);
        band_masses(spec.pers_lo, spec.pers_hi, spec.n, u.persistence, spec.sigma, py);
        for (std::size_t i = 0; i < n; ++i) {
            const double row = f * py[i];
            if (row == 0.0) continue;
            double* out = img.pixels.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) out[j] += row * bx[j];
        }
    }
    return img;
}

DatasetSpec dataset_spec(std::span<const PersistenceDiagram> diagrams, int n, SigmaPolicy sigma_policy) {
    DatasetSpec out;
    out.spec.n = n;
    out.spec.sigma = sigma_policy.sigma;
    double b_lo = std::numeric_limits<double>::infinity(), b_hi = -b_lo;
    double p_lo = b_lo, p_hi = -b_lo;
    bool any = false;
    for (const auto& pd : diagrams)
        for (const auto& u : transform_diagram(pd)) {
            any = true;
            b_lo = std::min(b_lo, u.birth);
            b_hi = std::max(b_hi, u.birth);
            p_lo = std::min(p_lo, u.persistence);
            p_hi = std::max(p_hi, u.persistence);
        }
    if (!any || !(p_hi > 0.0)) {
        out.fallback = true;
        out.spec.validate();
        return out;
    }
    const double pad = 3.0 * sigma_policy.sigma;
    out.spec.birth_lo = b_lo - pad;
    out.spec.birth_hi = b_hi + pad;
    out.spec.pers_lo = p_lo - pad;
    out.spec.pers_hi = p_hi + pad;
    out.spec.b_max = p_hi;
    out.spec.validate();
    return out;
}

void write_tpi(std::ostream& os, const PersistenceImage& image) {
    const auto& s = image.spec;
    os.write("TPI1", 4);
    io::write_u16(os, static_cast<std::uint16_t>(s.n));
    io::write_u8(os, static_cast<std::uint8_t>(image.dim_tag));
    io::write_f64(os, s.sigma);
    io::write_f64(os, s.b_max);
    io::write_f64(os, s.birth_lo);
    io::write_f64(os, s.birth_hi);
    io::write_f64(os, s.pers_lo);
    io::write_f64(os, s.pers_hi);
    for (double v : image.pixels) io::write_f64(os, v);
}

PersistenceImage read_tpi(std::istream& is) {
    io::expect_magic(is, "TPI1", "persistence image");
    PersistenceImage img;
    auto& s = img.spec;
    s.n = io::read_u16(is);
    img.dim_tag = io::read_u8(is);
    s.sigma = io::read_f64(is);
    s.b_max = io::read_f64(is);
    s.birth_lo = io::read_f64(is);
    s.birth_hi = io::read_f64(is);
    s.pers_lo = io::read_f64(is);
    s.pers_hi = io::read_f64(is);
    s.validate();
    img.pixels.resize(static_cast<std::size_t>(s.n) * s.n);
    for (auto& v : img.pixels) {
        v = io::read_f64(is);
        if (!std::isfinite(v) || v < 0.0) throw InputError("persistence image: invalid pixel value");
    }
    return img;
}

} // namespace topogen
