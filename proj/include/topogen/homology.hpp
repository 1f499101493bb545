#pragma once

#include "topogen/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace topogen {

inline constexpr int kMaxSimplexDim = 3;
inline constexpr std::size_t kDefaultSimplexCap = 5'000'000;

/// Up to four strictly increasing vertex indices; `dim + 1` of them are used.
struct Simplex {
    std::array<std::uint32_t, 4> vertices{};
    std::uint8_t dim = 0;
    double value = 0.0;

    [[nodiscard]] std::span<const std::uint32_t> verts() const { return {vertices.data(), dim + 1u}; }
    /// Codimension-1 faces in vertex-removal order.
    [[nodiscard]] std::vector<Simplex> faces() const;
};

/// Key ordering: (value, dim, lexicographic vertices).
bool filtration_less(const Simplex& a, const Simplex& b);

class Filtration {
public:
    Filtration() = default;

    /// Adopts `simplices` in the given order. Throws InvariantError unless
    /// every face appears earlier than its cofaces with value <= theirs.
    static Filtration from_ordered(std::vector<Simplex> simplices, std::size_t n_points, int max_dim,
                                   double r_max);

    [[nodiscard]] const std::vector<Simplex>& simplices() const { return simplices_; }
    [[nodiscard]] std::size_t size() const { return simplices_.size(); }
    [[nodiscard]] const Simplex& operator[](std::size_t i) const { return simplices_[i]; }
    [[nodiscard]] std::size_t n_points() const { return n_points_; }
    [[nodiscard]] int max_dim() const { return max_dim_; }
    [[nodiscard]] double r_max() const { return r_max_; }

    /// Position of a simplex given its sorted vertices, if present.
    [[nodiscard]] std::optional<std::size_t> position(std::span<const std::uint32_t> vertices) const;

private:
    std::vector<Simplex> simplices_;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> index_; // sorted by key
    std::size_t n_points_ = 0;
    int max_dim_ = 0;
    double r_max_ = 0.0;
};

struct VrOptions {
    int max_dim = kMaxSimplexDim;
    /// Truncation radius; defaults to the point-set diameter.
    std::optional<double> r_max;
    std::size_t simplex_cap = kDefaultSimplexCap;
};

double diameter(const PointCloud& cloud);

/// Clique (Vietoris-Rips) filtration: an edge enters at its Euclidean length,
/// a higher simplex at the longest of its edges.
Filtration build_vr_filtration(const PointCloud& cloud, const VrOptions& options = {});

/// Sparse Z/2 columns; column j holds the sorted filtration positions of the
/// codimension-1 faces of simplex j.
struct BoundaryMatrix {
    std::vector<std::vector<std::uint32_t>> columns;
};

BoundaryMatrix boundary_matrix(const Filtration& filt);

/// Symmetric difference of two sorted index sets (column addition over Z/2).
std::vector<std::uint32_t> add_mod2(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// True when the boundary of every column's boundary vanishes.
bool boundary_squares_to_zero(const BoundaryMatrix& m);

struct Pairing {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs; // (creator, destroyer) positions
    std::vector<std::uint32_t> essential;                       // unpaired creators
};

struct ReduceOptions {
    /// Process dimensions top-down and skip columns already known to be
    /// pivots. Produces the same pairing as the plain reduction.
    bool clearing = false;
};

/// Left-to-right column reduction over Z/2.
Pairing reduce(BoundaryMatrix matrix, const Filtration& filt, const ReduceOptions& options = {});

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
    [[nodiscard]] double persistence() const { return death - birth; }
    friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
    int dimension = 0;
    std::vector<PersistencePair> pairs;
    std::vector<double> essential;
};

/// Diagrams for dimensions 0 .. max_dim - 1. Zero-persistence pairs are dropped.
std::vector<PersistenceDiagram> persistence_diagrams(const Filtration& filt, const ReduceOptions& options = {});
std::vector<PersistenceDiagram> diagrams_from_pairing(const Filtration& filt, const Pairing& pairing);

/// Ranks of homology of the subcomplex {value <= r}, computed by independent
/// dense Gaussian elimination. Entry k is beta_k for k < max_dim.
std::vector<std::size_t> betti_numbers(const Filtration& filt, double r);

/// beta_k(r) read off diagrams: finite pairs alive at r plus essentials born by r.
std::vector<std::size_t> betti_from_diagrams(std::span<const PersistenceDiagram> diagrams, double r);

/// CSV "dim,birth,death" with `inf` deaths for essential classes, preceded by
/// the line "# topogen-pd v1 n_points=<N> r_max=<r>".
void write_diagram_csv(std::ostream& os, std::span<const PersistenceDiagram> diagrams,
                       std::size_t n_points, double r_max);

struct DiagramFile {
    std::size_t n_points = 0;
    double r_max = 0.0;
    std::vector<PersistenceDiagram> diagrams; // one per dimension present, ascending
};

DiagramFile read_diagram_csv(std::istream& is);

} // namespace topogen
