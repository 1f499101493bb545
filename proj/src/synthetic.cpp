#include "topogen/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace topogen::synthetic {

namespace {

void jitter(Vec3& p, double noise, Rng& rng) {
    if (noise <= 0.0) return;
    for (auto& v : p) v += noise * rng.normal();
}

Vec3 torus_point(double major, double tube, Rng& rng) {
    // Rejection on the tube angle gives area-uniform samples.
    constexpr double two_pi = 2.0 * std::numbers::pi;
    while (true) {
        const double theta = two_pi * rng.uniform();
        const double phi = two_pi * rng.uniform();
        const double ring = major + tube * std::cos(theta);
        if (rng.uniform() * (major + tube) > ring) continue;
        return {ring * std::cos(phi), ring * std::sin(phi), tube * std::sin(theta)};
    }
}

} // namespace

PointCloud sphere(std::size_t n, double radius, double noise, Rng& rng) {
    PointCloud c;
    c.points.reserve(n);
    while (c.points.size() < n) {
        Vec3 g{rng.normal(), rng.normal(), rng.normal()};
        const double len = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        if (len < 1e-12) continue;
        Vec3 p{radius * g[0] / len, radius * g[1] / len, radius * g[2] / len};
        jitter(p, noise, rng);
        c.points.push_back(p);
    }
    return c;
}

PointCloud torus(std::size_t n, double major, double tube, double noise, Rng& rng) {
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 p = torus_point(major, tube, rng);
        jitter(p, noise, rng);
        c.points.push_back(p);
    }
    return c;
}

PointCloud two_hole_torus(std::size_t n, double major, double tube, double noise, Rng& rng) {
    PointCloud c;
    c.points.reserve(n);
    while (c.points.size() < n) {
        Vec3 p = torus_point(major, tube, rng);
        const bool left = rng.uniform() < 0.5;
        p[0] += left ? -major : major;
        // Drop the overlap so the two rims fuse at x = 0.
        if (left ? p[0] > 0.0 : p[0] < 0.0) continue;
        jitter(p, noise, rng);
        c.points.push_back(p);
    }
    return c;
}

std::string shape_name(Shape s) {
    switch (s) {
    case Shape::Sphere: return "sphere";
    case Shape::Torus: return "torus";
    case Shape::TwoHoleTorus: return "twohole";
    }
    return "unknown";
}

std::vector<PointCloud> mixed_dataset(std::size_t count, std::size_t points, double noise, std::uint64_t seed,
                                      bool include_two_hole) {
    const Rng root(seed);
    const int kinds = include_two_hole ? 3 : 2;
    std::vector<PointCloud> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = root.split("synthetic", i);
        const auto shape = static_cast<Shape>(static_cast<int>(i % kinds));
        const double scale = 0.9 + 0.2 * rng.uniform();
        PointCloud c;
        switch (shape) {
        case Shape::Sphere: c = sphere(points, scale, noise, rng); break;
        case Shape::Torus: c = torus(points, scale, 0.35 * scale, noise, rng); break;
        case Shape::TwoHoleTorus: c = two_hole_torus(points, 0.6 * scale, 0.2 * scale, noise, rng); break;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%03zu", shape_name(shape).c_str(), i);
        c.id = buf;
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace topogen::synthetic
