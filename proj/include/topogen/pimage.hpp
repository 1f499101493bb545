#pragma once

#include "topogen/homology.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace topogen {

inline constexpr double kDefaultSigma = 0.05;
inline constexpr double kUnitSigma = 1.0;
inline constexpr int kDefaultImageSide = 16;

/// Pixel lattice in (birth, persistence) coordinates plus the Gaussian width
/// and the dataset-wide persistence normalizer.
struct GridSpec {
    int n = kDefaultImageSide;
    double birth_lo = 0.0, birth_hi = 1.0;
    double pers_lo = 0.0, pers_hi = 1.0;
    double sigma = kDefaultSigma;
    double b_max = 1.0;

    void validate() const;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// n x n pixels, row-major. Row i is the i-th persistence band from the
/// bottom, column j the j-th birth band from the left.
struct PersistenceImage {
    GridSpec spec;
    int dim_tag = 1;
    std::vector<double> pixels;

    [[nodiscard]] double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * spec.n + col]; }
    [[nodiscard]] double sum() const;
};

struct BirthPersistence {
    double birth = 0.0;
    double persistence = 0.0;
};

/// (birth, death) -> (birth, death - birth). Essential classes are ignored.
std::vector<BirthPersistence> transform_diagram(const PersistenceDiagram& pd);

/// Linear ramp persistence / b_max; vanishes on the diagonal.
double weight(const BirthPersistence& u, double b_max);

/// Standard normal CDF.
double normal_cdf(double z);

/// Each pixel is the exact integral of the weighted Gaussian surface over the
/// pixel rectangle, evaluated with separable CDF differences.
PersistenceImage rasterize(const PersistenceDiagram& pd, const GridSpec& spec);

struct SigmaPolicy {
    double sigma = kDefaultSigma;
    static SigmaPolicy fixed(double s) { return {s}; }
    static SigmaPolicy unit() { return {kUnitSigma}; }
};

struct DatasetSpec {
    GridSpec spec;
    /// Set when every diagram was empty and the unit box was substituted.
    bool fallback = false;
};

/// Ranges span the observed (birth, persistence) extremes padded by 3 sigma;
/// b_max is the largest persistence in the collection.
DatasetSpec dataset_spec(std::span<const PersistenceDiagram> diagrams, int n, SigmaPolicy sigma_policy = {});

/// "TPI1", u16 n, u8 dim_tag, f64 sigma, f64 b_max, f64 birth_lo, birth_hi,
/// pers_lo, pers_hi, then n^2 little-endian f64 pixels.
void write_tpi(std::ostream& os, const PersistenceImage& image);
PersistenceImage read_tpi(std::istream& is);

} // namespace topogen
