#pragma once

// Planar path model and ground-truth deviation between a scissors pose and
// the printed line. Units: millimetres in sheet coordinates, degrees
// counter-clockwise from +x, milliseconds since session start.

#include <clippers/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace clippers {

using Millis = std::int64_t;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2&) const = default;

    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    // z component of the 3D cross product; positive when o is counter-clockwise of *this
    constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr Vec2 left_normal() const { return {-y, x}; }
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Wraps an angle into (-180, 180].
inline double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

// Wraps an angle into [0, 360).
inline double normalize_heading(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r -= 360.0;
    return r;
}

inline Vec2 heading_vector(double heading_deg) {
    const double a = deg_to_rad(heading_deg);
    return {std::cos(a), std::sin(a)};
}

struct ScissorsPose {
    Vec2 position;
    double heading = 0.0; ///< degrees in [0, 360)
    Millis timestamp = 0;
};

struct DeviationMeasure {
    double lateral_offset = 0.0;    ///< signed mm, positive = left of travel
    double heading_deviation = 0.0; ///< signed degrees in (-180, 180]
    double arc_position = 0.0;      ///< mm along the path
    std::size_t nearest_segment = 0;
    Vec2 nearest_point;
};

// The printed cutting line: a polyline with uniform ink width.
class LinePath {
public:
    // Line sensors cannot resolve narrower lines; narrower paths are rejected.
    static constexpr double kMinInkWidth = 7.0;

    LinePath(std::vector<Vec2> vertices, double ink_width, double capture_radius)
        : vertices_(std::move(vertices)), ink_width_(ink_width), capture_radius_(capture_radius) {
        if (vertices_.size() < 2) {
            throw ConfigError("path needs at least 2 vertices, got " + std::to_string(vertices_.size()));
        }
        if (!std::isfinite(ink_width_) || ink_width_ < kMinInkWidth) {
            throw ConfigError("ink_width_mm " + std::to_string(ink_width_) +
                              " is below the detectable minimum of 7.0 mm");
        }
        if (!std::isfinite(capture_radius_) || capture_radius_ <= 0.0) {
            throw ConfigError("capture_radius_mm must be positive");
        }
        cumulative_.reserve(vertices_.size());
        cumulative_.push_back(0.0);
        for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
            const Vec2 a = vertices_[i];
            const Vec2 b = vertices_[i + 1];
            if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) {
                throw ConfigError("vertex " + std::to_string(i) + " is not finite");
            }
            const double len = (b - a).norm();
            if (!(len > 0.0)) {
                throw ConfigError("vertices " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                  " coincide");
            }
            lengths_.push_back(len);
            directions_.push_back((b - a) * (1.0 / len));
            headings_.push_back(rad_to_deg(std::atan2(b.y - a.y, b.x - a.x)));
            cumulative_.push_back(cumulative_.back() + len);
        }
    }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    double ink_width() const { return ink_width_; }
    double half_width() const { return 0.5 * ink_width_; }
    double capture_radius() const { return capture_radius_; }
    double total_length() const { return cumulative_.back(); }
    std::size_t segment_count() const { return lengths_.size(); }
    // End lands back on the start (within the capture radius).
    bool closed() const { return (vertices_.back() - vertices_.front()).norm() <= capture_radius_; }

    Vec2 segment_start(std::size_t i) const { return vertices_[i]; }
    Vec2 segment_end(std::size_t i) const { return vertices_[i + 1]; }
    double segment_length(std::size_t i) const { return lengths_[i]; }
    Vec2 segment_direction(std::size_t i) const { return directions_[i]; }
    double segment_heading(std::size_t i) const { return headings_[i]; }
    double arc_at_vertex(std::size_t i) const { return cumulative_[i]; }

    // Segment containing the given arc position; vertices belong to the segment they start.
    std::size_t segment_at(double arc) const {
        std::size_t i = 0;
        while (i + 1 < lengths_.size() && arc >= cumulative_[i + 1]) ++i;
        return i;
    }

    Vec2 point_at(double arc) const {
        const std::size_t i = segment_at(arc);
        double local = arc - cumulative_[i];
        if (local < 0.0) local = 0.0;
        if (local > lengths_[i]) local = lengths_[i];
        return vertices_[i] + directions_[i] * local;
    }

private:
    std::vector<Vec2> vertices_;
    double ink_width_;
    double capture_radius_;
    std::vector<double> lengths_;
    std::vector<Vec2> directions_;
    std::vector<double> headings_;
    std::vector<double> cumulative_;
};

// Globally nearest point of the polyline; equal distances resolve to the
// lowest segment index so replays are stable on self-near paths.
inline DeviationMeasure nearest_point(const ScissorsPose& pose, const LinePath& path) {
    const Vec2 p = pose.position;
    std::size_t best = 0;
    double best_d2 = INFINITY;
    double best_t = 0.0;
    for (std::size_t i = 0; i < path.segment_count(); ++i) {
        const Vec2 a = path.segment_start(i);
        const Vec2 u = path.segment_direction(i);
        double t = (p - a).dot(u);
        // Clamped projections land exactly on the shared vertex so that
        // corner ties compare equal and resolve to the lower index.
        Vec2 q;
        if (t <= 0.0) {
            t = 0.0;
            q = a;
        } else if (t >= path.segment_length(i)) {
            t = path.segment_length(i);
            q = path.segment_end(i);
        } else {
            q = a + u * t;
        }
        const Vec2 d = p - q;
        const double d2 = d.dot(d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
            best_t = t;
        }
    }

    DeviationMeasure m;
    m.nearest_segment = best;
    m.nearest_point = best_t >= path.segment_length(best) ? path.segment_end(best)
                      : path.segment_start(best) + path.segment_direction(best) * best_t;
    const double side = path.segment_direction(best).cross(p - m.nearest_point);
    const double dist = std::sqrt(best_d2);
    m.lateral_offset = side < 0.0 ? -dist : dist;
    m.heading_deviation = wrap_degrees(pose.heading - path.segment_heading(best));
    m.arc_position = std::min(path.arc_at_vertex(best) + best_t, path.total_length());
    return m;
}

inline double progress(const DeviationMeasure& m, const LinePath& path) {
    const double f = m.arc_position / path.total_length();
    return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
}

// The cut reached the end: within capture_radius of the end along the path and across it.
inline bool is_complete(const DeviationMeasure& m, const LinePath& path) {
    const double eps = path.capture_radius() / path.total_length();
    return progress(m, path) >= 1.0 - eps && std::abs(m.lateral_offset) <= path.capture_radius();
}

// Pose sitting `offset` mm left of the path at arc position `arc`, heading
// along the local tangent plus `heading_offset` degrees.
inline ScissorsPose pose_along(const LinePath& path, double arc, double offset, double heading_offset,
                               Millis t) {
    const std::size_t seg = path.segment_at(arc);
    const Vec2 normal = path.segment_direction(seg).left_normal();
    return {path.point_at(arc) + normal * offset,
            normalize_heading(path.segment_heading(seg) + heading_offset), t};
}

} // namespace clippers
