#include "topogen/error.hpp"
#include "topogen/metrics.hpp"
#include "topogen/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace topogen;

namespace {

PointCloud random_cloud(std::size_t n, Rng& rng, double spread = 1.0) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({spread * rng.normal(), spread * rng.normal(), spread * rng.normal()});
    return c;
}

PointCloud single(double x) { return PointCloud{{{x, 0.0, 0.0}}, ""}; }

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    auto one_way = [](const PointCloud& p, const PointCloud& q) {
        double acc = 0;
        for (const auto& x : p.points) {
            std::vector<double> d;
            for (const auto& y : q.points)
                d.push_back((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2]));
            acc += *std::min_element(d.begin(), d.end());
        }
        return acc / static_cast<double>(p.size());
    };
    return one_way(a, b) + one_way(b, a);
}

double brute_emd(const PointCloud& a, const PointCloud& b) {
    const std::size_t n = a.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = a.points[i];
            const auto& y = b.points[perm[i]];
            s += std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2]));
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

double brute_nna(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref, const CloudDistance& d) {
    std::vector<std::pair<const PointCloud*, int>> pool;
    for (const auto& c : gen) pool.emplace_back(&c, 0);
    for (const auto& c : ref) pool.emplace_back(&c, 1);
    int correct = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double best = INFINITY;
        int label = -1;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (i == j) continue;
            const double v = d(*pool[i].first, *pool[j].first);
            if (v < best) {
                best = v;
                label = pool[j].second;
            }
        }
        correct += label == pool[i].second;
    }
    return 100.0 * correct / static_cast<double>(pool.size());
}

double brute_cov(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref, const CloudDistance& d) {
    std::set<std::size_t> hit;
    for (const auto& g : gen) {
        std::vector<double> row;
        for (const auto& r : ref) row.push_back(d(g, r));
        hit.insert(static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin()));
    }
    return 100.0 * static_cast<double>(hit.size()) / static_cast<double>(ref.size());
}

const CloudDistance kCd = [](const PointCloud& a, const PointCloud& b) { return chamfer(a, b); };
const CloudDistance kEmd = [](const PointCloud& a, const PointCloud& b) { return emd(a, b); };

PointCloud rigid(const PointCloud& c, double angle, Vec3 shift) {
    PointCloud out;
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (const auto& p : c.points)
        out.points.push_back({cs * p[0] - sn * p[1] + shift[0], sn * p[0] + cs * p[1] + shift[1], p[2] + shift[2]});
    return out;
}

} // namespace

TEST(Chamfer, Examples) {
    Rng rng(1);
    const auto x = random_cloud(30, rng);
    EXPECT_EQ(chamfer(x, x), 0.0);
    EXPECT_DOUBLE_EQ(chamfer(single(0.0), single(1.5)), 2 * 1.5 * 1.5);
    EXPECT_THROW(chamfer(PointCloud{}, x), InputError);
}

TEST(Chamfer, MatchesBruteForce) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_cloud(static_cast<std::size_t>(rng.uniform_int(1, 64)), rng);
        const auto b = random_cloud(static_cast<std::size_t>(rng.uniform_int(1, 64)), rng);
        EXPECT_EQ(chamfer(a, b), brute_chamfer(a, b));
    }
}

TEST(Emd, Examples) {
    Rng rng(3);
    const auto x = random_cloud(20, rng);
    EXPECT_EQ(emd(x, x), 0.0);
    const PointCloud ab{{{0, 0, 0}, {1, 2, 3}}, ""};
    const PointCloud ba{{{1, 2, 3}, {0, 0, 0}}, ""};
    EXPECT_EQ(emd(ab, ba), 0.0);
    EXPECT_THROW(emd(x, random_cloud(19, rng)), InputError);
    const auto big = random_cloud(kEmdMaxPoints + 1, rng);
    EXPECT_THROW(emd(big, big), ResourceError);
}

TEST(Emd, MatchesPermutationSearch) {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 7));
        const auto a = random_cloud(n, rng), b = random_cloud(n, rng);
        EXPECT_NEAR(emd(a, b), brute_emd(a, b), 1e-12) << "n=" << n;
    }
}

TEST(Emd, Bounds) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_cloud(12, rng), b = random_cloud(12, rng);
        const double e = emd(a, b);
        double identity = 0, min_pair = INFINITY;
        for (std::size_t i = 0; i < 12; ++i) {
            identity += std::sqrt(std::pow(a.points[i][0] - b.points[i][0], 2) + std::pow(a.points[i][1] - b.points[i][1], 2) +
                                  std::pow(a.points[i][2] - b.points[i][2], 2));
            for (std::size_t j = 0; j < 12; ++j)
                min_pair = std::min(min_pair, std::sqrt(std::pow(a.points[i][0] - b.points[j][0], 2) +
                                                        std::pow(a.points[i][1] - b.points[j][1], 2) +
                                                        std::pow(a.points[i][2] - b.points[j][2], 2)));
        }
        EXPECT_LE(e, identity / 12 + 1e-12);
        EXPECT_GE(e, min_pair - 1e-12);
    }
}

TEST(Assignment, LargerInstanceBeatsGreedyAndIsPermutation) {
    Rng rng(6);
    const std::size_t n = 200;
    std::vector<double> cost(n * n);
    for (auto& c : cost) c = rng.uniform();
    const auto a = solve_assignment(cost, n);
    std::vector<std::size_t> sorted(a);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(sorted[i], i);
    double total = 0, diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += cost[i * n + a[i]];
        diag += cost[i * n + i];
    }
    EXPECT_LT(total, diag);
    // A pairwise swap never improves an optimal assignment.
    for (int k = 0; k < 2000; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        EXPECT_GE(cost[i * n + a[j]] + cost[j * n + a[i]] + 1e-12, cost[i * n + a[i]] + cost[j * n + a[j]]);
    }
}

TEST(OneNna, Examples) {
    Rng rng(7);
    std::vector<PointCloud> ref, gen;
    for (int i = 0; i < 4; ++i) {
        ref.push_back(random_cloud(10, rng));
        gen.push_back(rigid(ref.back(), 0.0, {1000, 0, 0}));
    }
    EXPECT_DOUBLE_EQ(one_nna(gen, ref, kCd), 100.0);

    // Each sample sits next to one from the other set.
    const std::vector<PointCloud> g{single(0), single(10)};
    const std::vector<PointCloud> r{single(1), single(11)};
    EXPECT_DOUBLE_EQ(one_nna(g, r, kCd), 0.0);

    const double a = one_nna(ref, ref, kCd);
    EXPECT_EQ(a, one_nna(ref, ref, kCd));
    EXPECT_THROW(one_nna({}, ref, kCd), InputError);
}

TEST(Coverage, Examples) {
    Rng rng(8);
    std::vector<PointCloud> ref;
    for (int i = 0; i < 5; ++i) ref.push_back(random_cloud(8, rng));
    EXPECT_DOUBLE_EQ(coverage(ref, ref, kCd), 100.0);
    const std::vector<PointCloud> near_first(3, ref[0]);
    EXPECT_DOUBLE_EQ(coverage(near_first, ref, kCd), 100.0 / 5);
}

TEST(Metrics, SetMetricsMatchBruteForce) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PointCloud> gen, ref;
        const auto ng = rng.uniform_int(1, 5), nr = rng.uniform_int(1, 5);
        for (int i = 0; i < ng; ++i) gen.push_back(random_cloud(6, rng));
        for (int i = 0; i < nr; ++i) ref.push_back(random_cloud(6, rng));
        for (const auto* d : {&kCd, &kEmd}) {
            EXPECT_EQ(one_nna(gen, ref, *d), brute_nna(gen, ref, *d));
            EXPECT_EQ(coverage(gen, ref, *d), brute_cov(gen, ref, *d));
            const double v = one_nna(gen, ref, *d);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 100.0);
            EXPECT_GT(coverage(gen, ref, *d), 0.0);
        }
    }
}

TEST(Metrics, RigidMotionInvariance) {
    Rng rng(10);
    std::vector<PointCloud> gen, ref, gen2, ref2;
    for (int i = 0; i < 4; ++i) {
        gen.push_back(random_cloud(12, rng));
        ref.push_back(random_cloud(12, rng));
        gen2.push_back(rigid(gen.back(), 0.7, {3, -1, 2}));
        ref2.push_back(rigid(ref.back(), 0.7, {3, -1, 2}));
    }
    EXPECT_NEAR(chamfer(gen[0], ref[0]), chamfer(gen2[0], ref2[0]), 1e-9);
    EXPECT_NEAR(emd(gen[0], ref[0]), emd(gen2[0], ref2[0]), 1e-9);
    for (const auto* d : {&kCd, &kEmd}) {
        EXPECT_EQ(one_nna(gen, ref, *d), one_nna(gen2, ref2, *d));
        EXPECT_EQ(coverage(gen, ref, *d), coverage(gen2, ref2, *d));
    }
}

TEST(Metrics, ThreadedMatchesSerial) {
    Rng rng(11);
    std::vector<PointCloud> gen, ref;
    for (int i = 0; i < 6; ++i) {
        gen.push_back(random_cloud(16, rng));
        ref.push_back(random_cloud(16, rng));
    }
    EXPECT_EQ(one_nna(gen, ref, kEmd, 1), one_nna(gen, ref, kEmd, 4));
    EXPECT_EQ(coverage(gen, ref, kEmd, 1), coverage(gen, ref, kEmd, 3));
}
