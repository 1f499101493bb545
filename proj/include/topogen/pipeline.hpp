#pragma once

#include "topogen/geometry.hpp"
#include "topogen/homology.hpp"
#include "topogen/pimage.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace topogen {

inline constexpr std::size_t kDefaultPdPoints = 64;

struct ExtractOptions {
    std::size_t n_pd = kDefaultPdPoints;
    int max_dim = 3;
    std::uint64_t fps_seed = 0;
    std::size_t simplex_cap = kDefaultSimplexCap;
};

struct Extraction {
    std::vector<PersistenceDiagram> diagrams; // dimensions 0 .. max_dim - 1
    std::size_t n_points = 0;                 // landmarks actually used
    double r_max = 0.0;
};

/// FPS down to n_pd landmarks, Vietoris-Rips, persistence. n_pd is capped at
/// the cloud size.
Extraction extract_diagrams(const PointCloud& cloud, const ExtractOptions& opts);

/// Runs `job(i)` for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any job is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

std::vector<Extraction> extract_all(std::span<const PointCloud> clouds,
                                    const ExtractOptions& opts, std::size_t threads = 1);

/// PI-1 / PI-2 for each cloud on per-dimension dataset grids.
struct ImageSet {
    GridSpec spec1, spec2;
    std::vector<PersistenceImage> pi1, pi2;
};

/// Diagram of dimension `dim` from a per-cloud list, or an empty one.
PersistenceDiagram diagram_of(std::span<const PersistenceDiagram> diagrams, int dim);

ImageSet rasterize_all(std::span<const std::vector<PersistenceDiagram>> diagrams, int n,
                       SigmaPolicy sigma = {});
ImageSet rasterize_all(std::span<const Extraction> extractions, int n, SigmaPolicy sigma = {});

} // namespace topogen
