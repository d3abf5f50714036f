#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the projection or coverage code it is used to check.

#include <clippers/geometry.hpp>

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace clippers::oracle {

struct BruteNearest {
    double distance = INFINITY;
    Vec2 point;
    double arc = 0.0;
};

// Walks every segment in fixed steps (endpoints included) and keeps the
// closest sample.
inline BruteNearest dense_nearest(const std::vector<Vec2>& vertices, Vec2 p, double step) {
    BruteNearest best;
    double arc0 = 0.0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const Vec2 a = vertices[i];
        const Vec2 b = vertices[i + 1];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const auto n = static_cast<long>(std::ceil(len / step));
        for (long k = 0; k <= n; ++k) {
            const double t = std::min(1.0, static_cast<double>(k) / static_cast<double>(n));
            const Vec2 q{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
            const double d = std::hypot(p.x - q.x, p.y - q.y);
            if (d < best.distance) {
                best.distance = d;
                best.point = q;
                best.arc = arc0 + len * t;
            }
        }
        arc0 += len;
    }
    return best;
}

inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
    t = t < 0 ? 0 : (t > 1 ? 1 : t);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline double polyline_distance(const std::vector<Vec2>& vertices, Vec2 p) {
    double d = INFINITY;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        d = std::min(d, segment_distance(p, vertices[i], vertices[i + 1]));
    }
    return d;
}

// Fraction of uniformly drawn points in the disc that lie on ink.
inline double monte_carlo_coverage(const std::vector<Vec2>& vertices, double half_width, Vec2 c, double r,
                                   int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int inside = 0;
    int drawn = 0;
    while (drawn < samples) {
        const double x = u(rng);
        const double y = u(rng);
        if (x * x + y * y > 1.0) continue;
        ++drawn;
        if (polyline_distance(vertices, {c.x + r * x, c.y + r * y}) <= half_width) ++inside;
    }
    return static_cast<double>(inside) / samples;
}

// 2 to 7 vertices in a 160 mm box, consecutive vertices at least 1 mm apart.
inline std::vector<Vec2> random_polyline(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(2, 7);
    std::uniform_real_distribution<double> coord(-80.0, 80.0);
    std::vector<Vec2> v;
    const int n = count(rng);
    while (static_cast<int>(v.size()) < n) {
        Vec2 p{coord(rng), coord(rng)};
        if (!v.empty() && (p - v.back()).norm() < 1.0) continue;
        v.push_back(p);
    }
    return v;
}

} // namespace clippers::oracle
