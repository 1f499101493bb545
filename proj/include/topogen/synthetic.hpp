#pragma once

#include "topogen/geometry.hpp"
#include "topogen/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace topogen::synthetic {

/// Uniform on the sphere surface, plus isotropic Gaussian jitter of std `noise`.
PointCloud sphere(std::size_t n, double radius, double noise, Rng& rng);

/// Area-uniform on a torus around the z axis (tube radius `tube`).
PointCloud torus(std::size_t n, double major, double tube, double noise, Rng& rng);

/// Two tori side by side along x, fused where their outer rims meet.
PointCloud two_hole_torus(std::size_t n, double major, double tube, double noise, Rng& rng);

enum class Shape { Sphere, Torus, TwoHoleTorus };

std::string shape_name(Shape s);

/// Cycles sphere / torus / two-hole torus with mildly randomized sizes.
std::vector<PointCloud> mixed_dataset(std::size_t count, std::size_t points, double noise,
                                      std::uint64_t seed, bool include_two_hole = true);

} // namespace topogen::synthetic
