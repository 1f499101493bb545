#pragma once

#include "topogen/geometry.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace topogen {

inline constexpr std::size_t kEmdMaxPoints = 1024;

/// Mean squared nearest-neighbour distance, summed over both directions.
double chamfer(const PointCloud& x, const PointCloud& y);

/// Minimum-cost perfect matching (Euclidean costs), returned as the mean
/// matched distance. Solved exactly by shortest augmenting paths.
double emd(const PointCloud& x, const PointCloud& y);

/// Optimal assignment for a square cost matrix (row-major n x n): entry i is
/// the column assigned to row i.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

enum class Distance { CD, EMD };
std::string distance_name(Distance d);
double cloud_distance(Distance d, const PointCloud& x, const PointCloud& y);

using CloudDistance = std::function<double(const PointCloud&, const PointCloud&)>;

/// Row-major |a| x |b| matrix of distances, filled on up to `threads` workers.
std::vector<double> distance_matrix(std::span<const PointCloud> a, std::span<const PointCloud> b,
                                    const CloudDistance& dist, std::size_t threads = 1);

/// Leave-one-out 1-NN accuracy over the pooled sets, in percent. Pool order is
/// gen then ref; ties go to the lower pool index.
double one_nna(std::span<const PointCloud> gen, std::span<const PointCloud> ref, const CloudDistance& dist,
               std::size_t threads = 1);
/// Percentage of references that are the nearest reference of some generated cloud.
double coverage(std::span<const PointCloud> gen, std::span<const PointCloud> ref, const CloudDistance& dist,
                std::size_t threads = 1);

} // namespace topogen
