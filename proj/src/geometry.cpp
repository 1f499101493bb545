#include "topogen/geometry.hpp"

#include "topogen/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace topogen {

Vec3 NormStats::apply(const Vec3& p) const {
    return {(p[0] - mean[0]) / scale, (p[1] - mean[1]) / scale, (p[2] - mean[2]) / scale};
}

Vec3 NormStats::invert(const Vec3& p) const {
    return {p[0] * scale + mean[0], p[1] * scale + mean[1], p[2] * scale + mean[2]};
}

NormStats compute_norm_stats(std::span<const PointCloud> clouds) {
    if (clouds.empty()) throw InputError("normalize: empty collection");
    std::size_t count = 0;
    Vec3 sum{0, 0, 0};
    for (const auto& c : clouds) {
        if (c.points.empty()) throw InputError("normalize: cloud '" + c.id + "' is empty");
        for (const auto& p : c.points) {
            for (int a = 0; a < 3; ++a) {
                if (!std::isfinite(p[a]))
                    throw InputError("normalize: non-finite coordinate in cloud '" + c.id + "'");
                sum[a] += p[a];
            }
            ++count;
        }
    }
    NormStats s;
    for (int a = 0; a < 3; ++a) s.mean[a] = sum[a] / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& c : clouds)
        for (const auto& p : c.points)
            for (int a = 0; a < 3; ++a) sq += (p[a] - s.mean[a]) * (p[a] - s.mean[a]);
    const double sd = std::sqrt(sq / static_cast<double>(3 * count));
    s.scale = sd > 0.0 ? sd : 1.0;
    return s;
}

Normalized normalize(std::span<const PointCloud> clouds) {
    Normalized out;
    out.stats = compute_norm_stats(clouds);
    out.clouds.reserve(clouds.size());
    for (const auto& c : clouds) {
        PointCloud n{.points = {}, .id = c.id};
        n.points.reserve(c.points.size());
        for (const auto& p : c.points) n.points.push_back(out.stats.apply(p));
        out.clouds.push_back(std::move(n));
    }
    return out;
}

namespace {

double dist2(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

} // namespace

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::uint64_t seed) {
    const std::size_t n = cloud.size();
    if (n == 0) throw InputError("farthest_point_sample: empty cloud");
    if (k < 1 || k > n)
        throw InputError("farthest_point_sample: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
    std::vector<std::size_t> picked;
    picked.reserve(k);
    std::vector<double> mind(n, std::numeric_limits<double>::infinity());
    std::size_t cur = static_cast<std::size_t>(seed % n);
    for (std::size_t s = 0; s < k; ++s) {
        picked.push_back(cur);
        mind[cur] = -1.0;
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mind[i] < 0.0) continue;
            mind[i] = std::min(mind[i], dist2(cloud.points[i], cloud.points[cur]));
            if (mind[i] > best_d) {
                best_d = mind[i];
                best = i;
            }
        }
        cur = best;
    }
    return picked;
}

PointCloud select(const PointCloud& cloud, std::span<const std::size_t> indices) {
    PointCloud out{.points = {}, .id = cloud.id};
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(cloud.points.at(i));
    return out;
}

VoxelGrid VoxelGrid::zeros(int V) {
    VoxelGrid g;
    g.V = V;
    const auto n = static_cast<std::size_t>(V) * V * V;
    g.coords.assign(n * 3, 0.0);
    g.occupancy.assign(n, 0.0);
    return g;
}

bool is_valid_resolution(int V) { return V == 16 || V == 32 || V == 64; }

void require_valid_resolution(int V) {
    if (!is_valid_resolution(V))
        throw InputError("voxel resolution " + std::to_string(V) + " not in {16, 32, 64}");
}

Vec3 clamp_to_domain(const Vec3& p) {
    return {std::clamp(p[0], -1.0, 1.0), std::clamp(p[1], -1.0, 1.0), std::clamp(p[2], -1.0, 1.0)};
}

Vec3 node_position(int V, int i, int j, int k) {
    const double h = 2.0 / (V - 1);
    return {-1.0 + h * i, -1.0 + h * j, -1.0 + h * k};
}

Stencil trilinear_stencil(const Vec3& position, int V) {
    const Vec3 p = clamp_to_domain(position);
    std::array<int, 3> lo{};
    std::array<double, 3> frac{};
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] + 1.0) * 0.5 * (V - 1);
        int i = static_cast<int>(std::floor(u));
        i = std::clamp(i, 0, V - 2);
        lo[a] = i;
        frac[a] = u - i;
    }
    Stencil s;
    int c = 0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk, ++c) {
                const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                                 (dk ? frac[2] : 1.0 - frac[2]);
                s.node[c] = (static_cast<std::size_t>(lo[0] + di) * V + (lo[1] + dj)) * V + (lo[2] + dk);
                s.weight[c] = w;
            }
    return s;
}

VoxelGrid voxelize(const PointCloud& cloud, int V) {
    require_valid_resolution(V);
    VoxelGrid g = VoxelGrid::zeros(V);
    for (const auto& raw : cloud.points) {
        const Vec3 p = clamp_to_domain(raw);
        const Stencil s = trilinear_stencil(p, V);
        for (int c = 0; c < 8; ++c) {
            if (s.weight[c] == 0.0) continue;
            g.occupancy[s.node[c]] += s.weight[c];
            for (int a = 0; a < 3; ++a) g.coords[s.node[c] * 3 + a] += s.weight[c] * p[a];
        }
    }
    for (std::size_t n = 0; n < g.nodes(); ++n) {
        if (g.occupancy[n] > kOccupancyEps) {
            for (int a = 0; a < 3; ++a) g.coords[n * 3 + a] /= g.occupancy[n];
        } else {
            for (int a = 0; a < 3; ++a) g.coords[n * 3 + a] = 0.0;
        }
    }
    return g;
}

std::vector<Vec3> devoxelize(const VoxelGrid& grid, const PointCloud& positions) {
    std::vector<Vec3> out;
    out.reserve(positions.size());
    for (const auto& p : positions.points) {
        const Stencil s = trilinear_stencil(p, grid.V);
        Vec3 v{0, 0, 0};
        for (int c = 0; c < 8; ++c)
            for (int a = 0; a < 3; ++a) v[a] += s.weight[c] * grid.coords[s.node[c] * 3 + a];
        out.push_back(v);
    }
    return out;
}

void require_patch_divides(int V, int p) {
    if (p <= 0 || V % p != 0)
        throw InputError("patch edge " + std::to_string(p) + " does not divide V=" + std::to_string(V));
}

std::size_t token_count(int V, int p) {
    require_patch_divides(V, p);
    const auto g = static_cast<std::size_t>(V / p);
    return g * g * g;
}

std::vector<std::size_t> patch_gather_index(int V, int p) {
    require_patch_divides(V, p);
    const int G = V / p;
    const std::size_t width = 3 * static_cast<std::size_t>(p) * p * p;
    std::vector<std::size_t> idx(token_count(V, p) * width);
    std::size_t t = 0;
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b)
            for (int c = 0; c < G; ++c, ++t) {
                std::size_t e = t * width;
                for (int di = 0; di < p; ++di)
                    for (int dj = 0; dj < p; ++dj)
                        for (int dk = 0; dk < p; ++dk) {
                            const std::size_t node =
                                (static_cast<std::size_t>(a * p + di) * V + (b * p + dj)) * V + (c * p + dk);
                            for (int ch = 0; ch < 3; ++ch) idx[e++] = node * 3 + ch;
                        }
            }
    return idx;
}

PatchTokens patchify(const VoxelGrid& grid, int p) {
    const auto idx = patch_gather_index(grid.V, p);
    PatchTokens t;
    t.V = grid.V;
    t.p = p;
    t.L = token_count(grid.V, p);
    t.width = 3 * static_cast<std::size_t>(p) * p * p;
    t.data.resize(idx.size());
    for (std::size_t e = 0; e < idx.size(); ++e) t.data[e] = grid.coords[idx[e]];
    return t;
}

VoxelGrid unpatchify(const PatchTokens& tokens) {
    const auto idx = patch_gather_index(tokens.V, tokens.p);
    if (tokens.data.size() != idx.size())
        throw ShapeError("unpatchify: token payload has " + std::to_string(tokens.data.size()) +
                         " values, expected " + std::to_string(idx.size()));
    VoxelGrid g = VoxelGrid::zeros(tokens.V);
    for (std::size_t e = 0; e < idx.size(); ++e) g.coords[idx[e]] = tokens.data[e];
    std::fill(g.occupancy.begin(), g.occupancy.end(), 1.0);
    return g;
}

} // namespace topogen
