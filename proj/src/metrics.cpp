#include "topogen/metrics.hpp"

#include "topogen/error.hpp"
#include "topogen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace topogen {

namespace {

double sq_dist(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

double directed_chamfer(const PointCloud& x, const PointCloud& y) {
    double acc = 0.0;
    for (const auto& p : x.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : y.points) best = std::min(best, sq_dist(p, q));
        acc += best;
    }
    return acc / static_cast<double>(x.size());
}

} // namespace

double chamfer(const PointCloud& x, const PointCloud& y) {
    if (x.size() == 0 || y.size() == 0) throw InputError("chamfer distance of an empty cloud");
    return directed_chamfer(x, y) + directed_chamfer(y, x);
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw ShapeError("assignment cost matrix is not n x n");
    // Potentials u (rows), v (columns); p[j] is the row matched to column j,
    // with column 0 as a virtual source. Indices are 1-based internally.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::size_t> assign(n);
    for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
    return assign;
}

double emd(const PointCloud& x, const PointCloud& y) {
    if (x.size() == 0 || y.size() == 0) throw InputError("EMD of an empty cloud");
    if (x.size() != y.size())
        throw InputError("EMD needs equal sizes, got " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    const std::size_t n = x.size();
    if (n > kEmdMaxPoints)
        throw ResourceError("EMD limited to " + std::to_string(kEmdMaxPoints) + " points, got " + std::to_string(n));
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::sqrt(sq_dist(x.points[i], y.points[j]));
    const auto assign = solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assign[i]];
    return total / static_cast<double>(n);
}

std::string distance_name(Distance d) { return d == Distance::CD ? "CD" : "EMD"; }

double cloud_distance(Distance d, const PointCloud& x, const PointCloud& y) {
    return d == Distance::CD ? chamfer(x, y) : emd(x, y);
}

std::vector<double> distance_matrix(std::span<const PointCloud> a, std::span<const PointCloud> b,
                                    const CloudDistance& dist, std::size_t threads) {
    std::vector<double> out(a.size() * b.size());
    parallel_for(out.size(), threads, [&](std::size_t k) { out[k] = dist(a[k / b.size()], b[k % b.size()]); });
    return out;
}

double one_nna(std::span<const PointCloud> gen, std::span<const PointCloud> ref, const CloudDistance& dist,
               std::size_t threads) {
    if (gen.empty() || ref.empty()) throw InputError("1-NNA needs non-empty generated and reference sets");
    std::vector<PointCloud> pool(gen.begin(), gen.end());
    pool.insert(pool.end(), ref.begin(), ref.end());
    const std::size_t n = pool.size();
    if (n < 2) throw InputError("1-NNA needs at least two clouds");
    // Symmetric: fill the upper triangle only.
    std::vector<double> d(n * n, 0.0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        d[i * n + j] = d[j * n + i] = dist(pool[i], pool[j]);
    });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && (best == n || d[i * n + j] < d[i * n + best])) best = j;
        if ((i < gen.size()) == (best < gen.size())) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

double coverage(std::span<const PointCloud> gen, std::span<const PointCloud> ref, const CloudDistance& dist,
                std::size_t threads) {
    if (gen.empty() || ref.empty()) throw InputError("COV needs non-empty generated and reference sets");
    const auto d = distance_matrix(gen, ref, dist, threads);
    std::set<std::size_t> matched;
    for (std::size_t g = 0; g < gen.size(); ++g) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < ref.size(); ++r)
            if (d[g * ref.size() + r] < d[g * ref.size() + best]) best = r;
        matched.insert(best);
    }
    return 100.0 * static_cast<double>(matched.size()) / static_cast<double>(ref.size());
}

} // namespace topogen
