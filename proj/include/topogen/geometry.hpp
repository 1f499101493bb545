#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace topogen {

using Vec3 = std::array<double, 3>;

struct PointCloud {
    std::vector<Vec3> points;
    std::string id;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Dataset-wide affine normalization: per-axis mean, one scalar scale.
struct NormStats {
    Vec3 mean{0.0, 0.0, 0.0};
    double scale = 1.0;

    [[nodiscard]] Vec3 apply(const Vec3& p) const;
    [[nodiscard]] Vec3 invert(const Vec3& p) const;
};

struct Normalized {
    std::vector<PointCloud> clouds;
    NormStats stats;
};

/// Subtracts the global mean and divides by the global standard deviation of
/// all centered coordinates, pooled over every cloud.
Normalized normalize(std::span<const PointCloud> clouds);
NormStats compute_norm_stats(std::span<const PointCloud> clouds);

/// Greedy max-min landmark selection. Starts at `seed % N`; ties go to the
/// lowest index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::uint64_t seed);

PointCloud select(const PointCloud& cloud, std::span<const std::size_t> indices);

inline constexpr double kOccupancyEps = 1e-8;

/// Node-centered grid over the clamp domain [-1, 1]^3: node i sits at
/// -1 + 2 i / (V - 1). Flat node index is (i * V + j) * V + k with i along x.
struct VoxelGrid {
    int V = 0;
    std::vector<double> coords;    // V^3 * 3
    std::vector<double> occupancy; // V^3

    static VoxelGrid zeros(int V);
    [[nodiscard]] std::size_t nodes() const { return occupancy.size(); }
    [[nodiscard]] std::size_t node_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * V + j) * V + k;
    }
};

bool is_valid_resolution(int V);
void require_valid_resolution(int V);

/// The 8 (node, weight) pairs of a trilinear stencil for one position.
struct Stencil {
    std::array<std::size_t, 8> node{};
    std::array<double, 8> weight{};
};

Stencil trilinear_stencil(const Vec3& position, int V);
Vec3 clamp_to_domain(const Vec3& p);
Vec3 node_position(int V, int i, int j, int k);

VoxelGrid voxelize(const PointCloud& cloud, int V);
std::vector<Vec3> devoxelize(const VoxelGrid& grid, const PointCloud& positions);

/// Row-major over the (V/p)^3 patch lattice. Each token holds its p^3 nodes
/// row-major, three channels per node (channel fastest).
struct PatchTokens {
    int V = 0;
    int p = 0;
    std::size_t L = 0;
    std::size_t width = 0; // 3 p^3
    std::vector<double> data;
};

std::size_t token_count(int V, int p);
void require_patch_divides(int V, int p);

/// For every element of the flattened L x 3p^3 token matrix, the index of the
/// flattened coords field it reads.
std::vector<std::size_t> patch_gather_index(int V, int p);

PatchTokens patchify(const VoxelGrid& grid, int p);
/// Occupancy of the result is 1 at every node: token payloads carry no
/// occupancy, and the field is defined everywhere.
VoxelGrid unpatchify(const PatchTokens& tokens);

} // namespace topogen
