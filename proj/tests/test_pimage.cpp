#include "topogen/error.hpp"
#include "topogen/pimage.hpp"
#include "topogen/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <sstream>

using namespace topogen;

namespace {

PersistenceDiagram random_diagram(Rng& rng, int count, int dim = 1) {
    PersistenceDiagram pd{.dimension = dim, .pairs = {}, .essential = {}};
    for (int i = 0; i < count; ++i) {
        const double b = 0.5 * rng.uniform();
        pd.pairs.push_back({b, b + 0.05 + 0.4 * rng.uniform()});
    }
    return pd;
}

} // namespace

TEST(TransformDiagram, Examples) {
    PersistenceDiagram pd{.dimension = 1, .pairs = {{0, 1}, {1, std::sqrt(2.0)}}, .essential = {0.0}};
    auto t = transform_diagram(pd);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].birth, 0.0);
    EXPECT_EQ(t[0].persistence, 1.0);
    EXPECT_EQ(t[1].persistence, std::sqrt(2.0) - 1.0);
    EXPECT_TRUE(transform_diagram(PersistenceDiagram{}).empty());
}

TEST(Weight, Ramp) {
    EXPECT_EQ(weight({0.0, 0.5}, 0.5), 1.0);
    EXPECT_EQ(weight({0.3, 0.0}, 0.5), 0.0);
    EXPECT_EQ(weight({0.0, 0.25}, 0.5), 0.5);
}

TEST(Rasterize, EmptyDiagramIsZero) {
    auto img = rasterize(PersistenceDiagram{}, GridSpec{});
    EXPECT_EQ(img.pixels.size(), 256u);
    for (double v : img.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Rasterize, SinglePairMassWithinThreeSigma) {
    const double s = kDefaultSigma;
    for (int n : {1, 3, 16, 40}) {
        GridSpec g{.n = n, .birth_lo = -3 * s, .birth_hi = 3 * s, .pers_lo = 1 - 3 * s, .pers_hi = 1 + 3 * s, .sigma = s, .b_max = 1.0};
        const double total = rasterize(PersistenceDiagram{.dimension = 1, .pairs = {{0, 1}}, .essential = {}}, g).sum();
        // Oracle: (Phi(3) - Phi(-3))^2.
        const double mass = std::pow(std::erf(3 / std::sqrt(2.0)), 2);
        EXPECT_NEAR(total, mass, 1e-12);
        EXPECT_GE(total, 0.994);
        EXPECT_LE(total, 1.0);
    }
}

TEST(Rasterize, UnionIsSum) {
    Rng rng(1);
    GridSpec g{.n = 12, .birth_lo = -0.2, .birth_hi = 0.7, .pers_lo = -0.1, .pers_hi = 0.6, .sigma = 0.05, .b_max = 0.45};
    for (int t = 0; t < 10; ++t) {
        auto a = random_diagram(rng, 5), b = random_diagram(rng, 7);
        PersistenceDiagram u = a;
        u.pairs.insert(u.pairs.end(), b.pairs.begin(), b.pairs.end());
        auto ia = rasterize(a, g), ib = rasterize(b, g), iu = rasterize(u, g);
        for (std::size_t k = 0; k < iu.pixels.size(); ++k) EXPECT_NEAR(iu.pixels[k], ia.pixels[k] + ib.pixels[k], 1e-12);
    }
}

TEST(Rasterize, AddingPairNeverDecreasesPixels) {
    Rng rng(2);
    GridSpec g{.n = 10, .birth_lo = -0.2, .birth_hi = 0.7, .pers_lo = -0.1, .pers_hi = 0.6, .sigma = 0.08, .b_max = 0.45};
    for (int t = 0; t < 20; ++t) {
        auto a = random_diagram(rng, 4);
        auto bigger = a;
        bigger.pairs.push_back(random_diagram(rng, 1).pairs[0]);
        auto ia = rasterize(a, g), ib = rasterize(bigger, g);
        for (std::size_t k = 0; k < ia.pixels.size(); ++k) EXPECT_GE(ib.pixels[k], ia.pixels[k]);
    }
}

TEST(Rasterize, RefinementBlockSumsMatchCoarse) {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        auto pd = random_diagram(rng, 6);
        GridSpec coarse{.n = 8, .birth_lo = -0.2, .birth_hi = 0.7, .pers_lo = -0.1, .pers_hi = 0.6, .sigma = 0.05, .b_max = 0.45};
        GridSpec fine = coarse;
        fine.n = 16;
        auto c = rasterize(pd, coarse), f = rasterize(pd, fine);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const double block = f.at(2 * i, 2 * j) + f.at(2 * i + 1, 2 * j) + f.at(2 * i, 2 * j + 1) + f.at(2 * i + 1, 2 * j + 1);
                EXPECT_NEAR(block, c.at(i, j), 1e-12);
            }
    }
}

TEST(Rasterize, MassEqualsWeightSumOnPaddedGrid) {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        std::vector<PersistenceDiagram> pds{random_diagram(rng, 1 + t % 9)};
        auto ds = dataset_spec(pds, 16);
        double fsum = 0.0;
        for (const auto& u : transform_diagram(pds[0])) fsum += weight(u, ds.spec.b_max);
        const double total = rasterize(pds[0], ds.spec).sum();
        EXPECT_LE(total, fsum * (1 + 1e-12));
        EXPECT_GE(total, fsum * (1 - 0.006));
    }
}

TEST(Rasterize, StabilityConstantIsFinite) {
    Rng rng(5);
    GridSpec g{.n = 16, .birth_lo = -0.2, .birth_hi = 0.8, .pers_lo = -0.2, .pers_hi = 0.8, .sigma = 0.05, .b_max = 0.5};
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        auto pd = random_diagram(rng, 6);
        const double delta = 1e-3 * (1 + rng.uniform());
        auto moved = pd;
        for (auto& p : moved.pairs) {
            p.birth += delta * (2 * rng.uniform() - 1);
            p.death += delta * (2 * rng.uniform() - 1);
        }
        auto a = rasterize(pd, g), b = rasterize(moved, g);
        double l1 = 0.0;
        for (std::size_t k = 0; k < a.pixels.size(); ++k) l1 += std::abs(a.pixels[k] - b.pixels[k]);
        worst = std::max(worst, l1 / delta);
    }
    std::cout << "fitted stability constant C = " << worst << '\n';
    EXPECT_TRUE(std::isfinite(worst));
    EXPECT_GT(worst, 0.0);
}

TEST(DatasetSpec, RangesAndFallback) {
    std::vector<PersistenceDiagram> pds{{.dimension = 1, .pairs = {{0.1, 0.4}}, .essential = {}},
                                        {.dimension = 1, .pairs = {{0.2, 0.9}}, .essential = {}}};
    EXPECT_DOUBLE_EQ(dataset_spec(pds, 16).spec.b_max, 0.7);

    std::vector<PersistenceDiagram> one{{.dimension = 1, .pairs = {{0, 1}}, .essential = {}}};
    auto s = dataset_spec(one, 16, SigmaPolicy::fixed(0.05)).spec;
    EXPECT_NEAR(s.birth_lo, -0.15, 1e-15);
    EXPECT_NEAR(s.birth_hi, 0.15, 1e-15);
    EXPECT_NEAR(s.pers_lo, 0.85, 1e-15);

    std::vector<PersistenceDiagram> empty{{}, {}};
    auto fb = dataset_spec(empty, 16);
    EXPECT_TRUE(fb.fallback);
    EXPECT_EQ(fb.spec.b_max, 1.0);
    EXPECT_EQ(dataset_spec(one, 16, SigmaPolicy::unit()).spec.sigma, 1.0);
}

TEST(TpiFile, RoundTripAndLayout) {
    Rng rng(6);
    auto pd = random_diagram(rng, 5, 2);
    std::vector<PersistenceDiagram> pds{pd};
    auto img = rasterize(pd, dataset_spec(pds, 7).spec);
    std::stringstream ss;
    write_tpi(ss, img);
    EXPECT_EQ(ss.str().size(), 4u + 2 + 1 + 6 * 8 + 49 * 8);
    auto back = read_tpi(ss);
    EXPECT_EQ(back.dim_tag, 2);
    EXPECT_EQ(back.spec, img.spec);
    EXPECT_EQ(back.pixels, img.pixels);
    const GridSpec degenerate{.n = 4, .birth_lo = 0, .birth_hi = 0};
    EXPECT_THROW(degenerate.validate(), InputError);
}
