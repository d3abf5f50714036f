#pragma once

// Two-sensor mount simulation over the inked line, fault injection, and
// severity estimation from binary readings (plus the pose-space oracle the
// estimator is checked against).

#include <clippers/errors.hpp>
#include <clippers/geometry.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clippers {

struct SensorMountConfig {
    double sensor_spacing = 24.0;      ///< mm, centre-to-centre across the cut line
    double sensor_spot_diameter = 3.0; ///< mm
    double forward_offset = 15.0;      ///< mm ahead of the blade pivot along heading
    double sample_rate = 50.0;         ///< Hz

    void validate() const {
        if (!(sensor_spacing > 0.0)) throw ConfigError("mount.sensor_spacing_mm must be positive");
        if (!(sensor_spot_diameter > 0.0)) throw ConfigError("mount.sensor_spot_diameter_mm must be positive");
        if (!std::isfinite(forward_offset)) throw ConfigError("mount.forward_offset_mm must be finite");
        if (!(sample_rate > 0.0)) throw ConfigError("mount.sample_rate_hz must be positive");
    }

    // The sensors must straddle a centred line.
    void validate_for(const LinePath& path) const {
        validate();
        if (!(sensor_spacing > path.ink_width())) {
            throw ConfigError("mount.sensor_spacing_mm must exceed the path ink width");
        }
    }
};

struct SensorReading {
    Millis timestamp = 0;
    bool left_on_ink = false;
    bool right_on_ink = false;
    bool left_fault = false;
    bool right_fault = false;

    bool operator==(const SensorReading&) const = default;
};

enum class Level : std::uint8_t { OnTrack, Moderate, Severe };
enum class Side : std::uint8_t { None, Left, Right };

struct Severity {
    Level level = Level::OnTrack;
    Side side = Side::None;

    bool operator==(const Severity&) const = default;
};

constexpr std::string_view to_string(Level l) {
    switch (l) {
    case Level::OnTrack: return "OnTrack";
    case Level::Moderate: return "Moderate";
    case Level::Severe: return "Severe";
    }
    return "?";
}

constexpr std::string_view to_string(Side s) {
    switch (s) {
    case Side::None: return "None";
    case Side::Left: return "Left";
    case Side::Right: return "Right";
    }
    return "?";
}

inline Level parse_level(std::string_view s) {
    if (s == "OnTrack") return Level::OnTrack;
    if (s == "Moderate") return Level::Moderate;
    if (s == "Severe") return Level::Severe;
    throw FormatError("unknown severity level '" + std::string(s) + "'");
}

inline Side parse_side(std::string_view s) {
    if (s == "None") return Side::None;
    if (s == "Left") return Side::Left;
    if (s == "Right") return Side::Right;
    throw FormatError("unknown side '" + std::string(s) + "'");
}

constexpr Side opposite(Side s) {
    return s == Side::Left ? Side::Right : (s == Side::Right ? Side::Left : Side::None);
}

// ---------------------------------------------------------------------------
// Ink coverage of a circular sensor spot.

namespace detail {

// Area of the part of a radius-r disc (centred at 0) lying at u <= a.
inline double disc_area_below(double a, double r) {
    if (a <= -r) return 0.0;
    if (a >= r) return std::numbers::pi * r * r;
    return r * r * (std::numbers::pi - std::acos(a / r)) + a * std::sqrt(r * r - a * a);
}

struct Interval {
    double lo;
    double hi;
};

inline void widen(std::optional<Interval>& acc, double lo, double hi) {
    if (lo > hi) return;
    if (!acc) {
        acc = Interval{lo, hi};
    } else {
        acc->lo = std::min(acc->lo, lo);
        acc->hi = std::max(acc->hi, hi);
    }
}

// Intersection of the vertical line x = x0 with the capsule of half-width h
// around segment a-b. The capsule is convex, so the union of its rectangle
// and end-disc pieces is one interval.
inline std::optional<Interval> capsule_slice(Vec2 a, Vec2 b, double h, double x0) {
    std::optional<Interval> out;
    for (Vec2 c : {a, b}) {
        const double dx = x0 - c.x;
        if (std::abs(dx) <= h) {
            const double half = std::sqrt(h * h - dx * dx);
            widen(out, c.y - half, c.y + half);
        }
    }
    const Vec2 d = b - a;
    const double len = d.norm();
    const Vec2 u = d * (1.0 / len);
    const Vec2 n = u.left_normal();
    // constraints lo <= alpha + beta*y <= hi for the along and across coordinates
    double ylo = -INFINITY;
    double yhi = INFINITY;
    auto clip = [&](double alpha, double beta, double lo, double hi) {
        if (beta == 0.0) {
            if (alpha < lo || alpha > hi) ylo = INFINITY;
            return;
        }
        double y1 = (lo - alpha) / beta;
        double y2 = (hi - alpha) / beta;
        if (y1 > y2) std::swap(y1, y2);
        ylo = std::max(ylo, y1);
        yhi = std::min(yhi, y2);
    };
    clip((x0 - a.x) * u.x - a.y * u.y, u.y, 0.0, len);
    clip((x0 - a.x) * n.x - a.y * n.y, n.y, -h, h);
    if (ylo <= yhi) widen(out, ylo, yhi);
    return out;
}

inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    double t = (p - a).dot(d) / d.dot(d);
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + d * t)).norm();
}

} // namespace detail

// Fraction of a disc covered by the inked stripe (the polyline dilated by
// half the ink width). Exact when a single segment interior is in reach,
// otherwise integrated slice-by-slice with exact per-slice chord lengths.
inline double ink_coverage(Vec2 center, double radius, const LinePath& path) {
    const double h = path.half_width();
    std::vector<std::size_t> near;
    for (std::size_t i = 0; i < path.segment_count(); ++i) {
        if (detail::segment_distance(center, path.segment_start(i), path.segment_end(i)) < h + radius) {
            near.push_back(i);
        }
    }
    if (near.empty()) return 0.0;

    if (near.size() == 1) {
        const std::size_t i = near.front();
        const Vec2 a = path.segment_start(i);
        const Vec2 u = path.segment_direction(i);
        const double along = (center - a).dot(u);
        if (along - radius >= 0.0 && along + radius <= path.segment_length(i)) {
            const double across = u.cross(center - a);
            const double covered =
                detail::disc_area_below(h - across, radius) - detail::disc_area_below(-h - across, radius);
            return covered / (std::numbers::pi * radius * radius);
        }
    }

    constexpr int kSlices = 512;
    double area = 0.0;
    std::vector<detail::Interval> pieces;
    for (int k = 0; k < kSlices; ++k) {
        // x = cx + r sin(theta), dx = r cos(theta) dtheta; midpoint rule in theta
        const double theta = -std::numbers::pi / 2 + (k + 0.5) * std::numbers::pi / kSlices;
        const double x0 = center.x + radius * std::sin(theta);
        const double half_chord = radius * std::cos(theta);
        const double clo = center.y - half_chord;
        const double chi = center.y + half_chord;
        pieces.clear();
        for (std::size_t i : near) {
            if (auto s = detail::capsule_slice(path.segment_start(i), path.segment_end(i), h, x0)) {
                const double lo = std::max(s->lo, clo);
                const double hi = std::min(s->hi, chi);
                if (lo < hi) pieces.push_back({lo, hi});
            }
        }
        std::sort(pieces.begin(), pieces.end(), [](auto& l, auto& r) { return l.lo < r.lo; });
        double covered = 0.0;
        double cur_lo = 0.0;
        double cur_hi = -INFINITY;
        for (const auto& p : pieces) {
            if (p.lo > cur_hi) {
                if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
                cur_lo = p.lo;
                cur_hi = p.hi;
            } else {
                cur_hi = std::max(cur_hi, p.hi);
            }
        }
        if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
        area += covered * radius * std::cos(theta);
    }
    area *= std::numbers::pi / kSlices;
    return area / (std::numbers::pi * radius * radius);
}

struct SensorPositions {
    Vec2 left;
    Vec2 right;
};

inline SensorPositions sensor_positions(const ScissorsPose& pose, const SensorMountConfig& mount) {
    const Vec2 fwd = heading_vector(pose.heading);
    const Vec2 center = pose.position + fwd * mount.forward_offset;
    const Vec2 lateral = fwd.left_normal() * (0.5 * mount.sensor_spacing);
    return {center + lateral, center - lateral};
}

// A spot reads ink once at least half of it is covered. The comparison
// carries a 1e-9 allowance so a spot centred exactly on the ink edge (exactly
// half covered) fires regardless of rounding.
inline constexpr double kOnInkCoverage = 0.5;

inline bool spot_on_ink(Vec2 center, const SensorMountConfig& mount, const LinePath& path) {
    return ink_coverage(center, 0.5 * mount.sensor_spot_diameter, path) >= kOnInkCoverage - 1e-9;
}

inline SensorReading sample_sensors(const ScissorsPose& pose, const LinePath& path,
                                    const SensorMountConfig& mount) {
    const auto pos = sensor_positions(pose, mount);
    SensorReading r;
    r.timestamp = pose.timestamp;
    r.left_on_ink = spot_on_ink(pos.left, mount, path);
    r.right_on_ink = spot_on_ink(pos.right, mount, path);
    return r;
}

// ---------------------------------------------------------------------------
// Fault injection.

struct FaultModel {
    double left_probability = 0.0;  ///< per-sample chance a fault starts
    double right_probability = 0.0;
    Millis stuck_dwell_ms = 0;      ///< a started fault persists this long

    void validate() const {
        auto check = [](double p, const char* field) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ConfigError(std::string(field) + " must be a probability in [0, 1]");
            }
        };
        check(left_probability, "faults.left_probability");
        check(right_probability, "faults.right_probability");
        if (stuck_dwell_ms < 0) throw ConfigError("faults.stuck_dwell_ms must be non-negative");
    }
};

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw. The
// standard distributions are implementation-defined; this one is not.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Seeded fault wrapper. Output is a deterministic function of the input
// stream and the seed.
class FaultInjector {
public:
    FaultInjector(FaultModel model, std::uint64_t seed) : model_(model), rng_(seed) { model_.validate(); }

    SensorReading operator()(SensorReading in) {
        in.left_fault = in.left_fault || channel(left_until_, model_.left_probability, in.timestamp);
        in.right_fault = in.right_fault || channel(right_until_, model_.right_probability, in.timestamp);
        return in;
    }

    const FaultModel& model() const { return model_; }

private:
    bool channel(std::optional<Millis>& until, double p, Millis t) {
        if (until && t <= *until) return true;
        until.reset();
        // a draw is consumed per channel per sample so the stream stays aligned
        const double u = unit_uniform(rng_);
        if (u < p) {
            until = t + model_.stuck_dwell_ms;
            return true;
        }
        return false;
    }

    FaultModel model_;
    std::mt19937_64 rng_;
    std::optional<Millis> left_until_;
    std::optional<Millis> right_until_;
};

inline SensorReading inject_faults(const SensorReading& reading, FaultInjector& injector) {
    return injector(reading);
}

// ---------------------------------------------------------------------------
// Severity from readings.

struct EstimatorConfig {
    Millis escalation_dwell_ms = 400; ///< one sensor continuously on ink this long escalates

    void validate() const {
        if (escalation_dwell_ms <= 0) throw ConfigError("estimator.escalation_dwell_ms must be positive");
    }
};

struct SeverityEstimate {
    Severity severity;
    bool left_fault = false;
    bool right_fault = false;
};

// Incremental form of estimate_severity. Tracks, per sensor, the start of the
// current on-ink run and whether that run began with the line outside the
// sensor span; and whether the line is presumed to have escaped past one
// sensor.
//
// Escape inference: a run that started with the line between the sensors and
// lasted at least the escalation dwell is presumed to end with the line
// leaving outward. A run that started with the line outside ends with it back
// between the sensors. Faulted samples reset that channel's run without
// inferring anything.
class SeverityEstimator {
public:
    explicit SeverityEstimator(EstimatorConfig config = {}) : config_(config) { config_.validate(); }

    SeverityEstimate update(const SensorReading& r) {
        if (last_ && r.timestamp < *last_) {
            throw ClockError("sensor history out of order at t=" + std::to_string(r.timestamp));
        }
        last_ = r.timestamp;
        track(channels_[0], r.left_fault, r.left_on_ink && !r.left_fault, r.timestamp, Side::Left);
        track(channels_[1], r.right_fault, r.right_on_ink && !r.right_fault, r.timestamp, Side::Right);

        SeverityEstimate out;
        out.left_fault = r.left_fault;
        out.right_fault = r.right_fault;
        const auto& left = channels_[0];
        const auto& right = channels_[1];
        if (left.run_start && right.run_start) {
            // Line lying across both spots: only possible at a large angle.
            const Side first = *left.run_start <= *right.run_start ? Side::Left : Side::Right;
            out.severity = {Level::Severe, opposite(first)};
        } else if (left.run_start || right.run_start) {
            const bool is_left = left.run_start.has_value();
            const Millis start = is_left ? *left.run_start : *right.run_start;
            const Level level = r.timestamp - start >= config_.escalation_dwell_ms ? Level::Severe : Level::Moderate;
            out.severity = {level, opposite(is_left ? Side::Left : Side::Right)};
        } else if (escaped_ != Side::None) {
            out.severity = {Level::Severe, opposite(escaped_)};
        }
        return out;
    }

    const EstimatorConfig& config() const { return config_; }
    Side escaped_past() const { return escaped_; }

private:
    struct Channel {
        std::optional<Millis> run_start;
        Millis last_on = 0;
        bool from_outside = false;
    };

    void track(Channel& ch, bool fault, bool on, Millis t, Side sensor) {
        if (fault) {
            ch.run_start.reset();
            return;
        }
        if (on) {
            if (!ch.run_start) {
                ch.run_start = t;
                ch.from_outside = escaped_ == sensor;
                if (escaped_ != Side::None) escaped_ = Side::None;
            }
            ch.last_on = t;
            return;
        }
        if (ch.run_start) {
            if (!ch.from_outside && ch.last_on - *ch.run_start >= config_.escalation_dwell_ms) {
                escaped_ = sensor;
            }
            ch.run_start.reset();
        }
    }

    EstimatorConfig config_;
    std::array<Channel, 2> channels_{};
    Side escaped_ = Side::None;
    std::optional<Millis> last_;
};

// Classification over a reading history (oldest first). Pure: folds a fresh
// SeverityEstimator over the whole span and reports the final estimate.
inline SeverityEstimate estimate_severity(std::span<const SensorReading> history, EstimatorConfig config = {}) {
    if (history.empty()) throw std::invalid_argument("estimate_severity: empty history");
    SeverityEstimator est(config);
    SeverityEstimate out;
    for (const auto& r : history) out = est.update(r);
    return out;
}

// ---------------------------------------------------------------------------
// Pose-space ground truth.

struct SeverityThresholds {
    double moderate_offset = 6.0; ///< mm
    double severe_offset = 14.0;  ///< mm
    double moderate_angle = 10.0; ///< degrees
    double severe_angle = 25.0;   ///< degrees

    void validate() const {
        if (!(moderate_offset > 0.0 && moderate_offset < severe_offset)) {
            throw ConfigError("thresholds: need 0 < moderate_offset_mm < severe_offset_mm");
        }
        if (!(moderate_angle > 0.0 && moderate_angle < severe_angle)) {
            throw ConfigError("thresholds: need 0 < moderate_angle_deg < severe_angle_deg");
        }
    }
};

inline Severity oracle_severity(const DeviationMeasure& m, const SeverityThresholds& th) {
    th.validate();
    const double off = std::abs(m.lateral_offset);
    const double ang = std::abs(m.heading_deviation);
    Level off_level = off >= th.severe_offset ? Level::Severe : (off >= th.moderate_offset ? Level::Moderate : Level::OnTrack);
    Level ang_level = ang >= th.severe_angle ? Level::Severe : (ang >= th.moderate_angle ? Level::Moderate : Level::OnTrack);
    const Level level = std::max(off_level, ang_level);
    if (level == Level::OnTrack) return {};
    // Angle-only deviations take their side from the heading.
    const bool from_offset = off_level != Level::OnTrack;
    const double sign = from_offset ? m.lateral_offset : m.heading_deviation;
    return {level, sign > 0.0 ? Side::Left : Side::Right};
}

} // namespace clippers
