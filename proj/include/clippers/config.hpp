#pragma once

// Session configuration and the JSON documents that carry it: path files,
// config files. Every parse or validation error names the offending field as
// a dotted key, e.g. "mount.sensor_spacing_mm".

#include <clippers/errors.hpp>
#include <clippers/feedback.hpp>
#include <clippers/geometry.hpp>
#include <clippers/sensing.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace clippers {

using Json = nlohmann::json;

// Which severity source drives the feedback machine.
enum class Mode : std::uint8_t { Sensor, Oracle };

// Which feedback channels the simulated learner reacts to.
enum class Responds : std::uint8_t { Both, VisualOnly, AudioOnly };

constexpr std::string_view to_string(Mode m) { return m == Mode::Sensor ? "sensor" : "oracle"; }

constexpr std::string_view to_string(Responds r) {
    switch (r) {
    case Responds::Both: return "both";
    case Responds::VisualOnly: return "visual";
    case Responds::AudioOnly: return "audio";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "sensor") return Mode::Sensor;
    if (s == "oracle") return Mode::Oracle;
    throw ConfigError("mode: expected \"sensor\" or \"oracle\", got \"" + std::string(s) + "\"");
}

inline Responds parse_responds(std::string_view s) {
    if (s == "both") return Responds::Both;
    if (s == "visual") return Responds::VisualOnly;
    if (s == "audio") return Responds::AudioOnly;
    throw ConfigError("behavior.responds_to: expected \"both\", \"visual\" or \"audio\", got \"" + std::string(s) +
                      "\"");
}

// Kinematic stand-in for a learner: advances along the line at a steady
// speed, slips sideways at drift_rate, wobbles with a sinusoidal tremor, and
// steers back toward the line once it perceives corrective feedback.
struct BehaviorModel {
    double advance_speed = 20.0;   ///< mm/s along the path
    double drift_rate = 0.0;       ///< mm/s, positive drifts left of travel
    double tremor_amplitude = 0.0; ///< mm
    double tremor_frequency = 0.0; ///< Hz
    double correction_gain = 2.0;  ///< 1/s
    Millis reaction_delay_visual = 300;
    Millis reaction_delay_audio = 600;
    Millis correction_ramp = 200; ///< time for steering to reach full strength
    Responds responds_to = Responds::Both;
    Millis max_duration = 120000;

    void validate() const {
        auto non_negative = [](double v, const char* field) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(field) + " must be finite and >= 0");
        };
        non_negative(advance_speed, "behavior.advance_speed_mm_s");
        if (!std::isfinite(drift_rate)) throw ConfigError("behavior.drift_rate_mm_s must be finite");
        non_negative(tremor_amplitude, "behavior.tremor_amplitude_mm");
        non_negative(tremor_frequency, "behavior.tremor_frequency_hz");
        non_negative(correction_gain, "behavior.correction_gain_per_s");
        if (reaction_delay_visual < 0) throw ConfigError("behavior.reaction_delay_visual_ms must be >= 0");
        if (reaction_delay_audio < 0) throw ConfigError("behavior.reaction_delay_audio_ms must be >= 0");
        if (correction_ramp < 0) throw ConfigError("behavior.correction_ramp_ms must be >= 0");
        if (max_duration <= 0) throw ConfigError("behavior.max_duration_ms must be positive");
    }
};

struct SessionConfig {
    SensorMountConfig mount;
    SeverityThresholds thresholds;
    EstimatorConfig estimator;
    FeedbackConfig feedback;
    FaultModel faults;
    BehaviorModel behavior;
    Mode mode = Mode::Sensor;

    void validate() const {
        mount.validate();
        thresholds.validate();
        estimator.validate();
        feedback.validate();
        faults.validate();
        behavior.validate();
    }

    void validate_for(const LinePath& path) const {
        validate();
        mount.validate_for(path);
    }
};

namespace detail {

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be reported as unknown fields.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    double number(const std::string& key, double fallback) {
        const Json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(name(key) + ": expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const Json* v = find(key);
        if (!v) return fallback;
        if (v->is_number_integer()) return v->get<std::int64_t>();
        if (v->is_number_float()) {
            const double d = v->get<double>();
            if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
        }
        throw ConfigError(name(key) + ": expected an integer");
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const Json* v = find(key);
        if (!v) return fallback;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
        throw ConfigError(name(key) + ": expected a non-negative integer");
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const Json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(name(key) + ": expected a string");
        return v->get<std::string>();
    }

    const Json* child(const std::string& key) { return find(key); }

    const Json& required(const std::string& key) {
        const Json* v = find(key);
        if (!v) throw ConfigError(name(key) + ": missing");
        return *v;
    }

    std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) throw ConfigError(name(key) + ": unknown field");
        }
    }

private:
    const Json* find(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string where() const { return prefix_.empty() ? "document" : prefix_; }

    const Json& j_;
    std::string prefix_;
    std::set<std::string> used_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Path documents: {"vertices": [[x, y], ...], "ink_width_mm": w, "capture_radius_mm": r}

inline Json path_to_json(const LinePath& path) {
    Json verts = Json::array();
    for (auto v : path.vertices()) verts.push_back({v.x, v.y});
    return {{"vertices", verts}, {"ink_width_mm", path.ink_width()}, {"capture_radius_mm", path.capture_radius()}};
}

inline LinePath path_from_json(const Json& j, const std::string& prefix = "path") {
    detail::ObjectReader r(j, prefix);
    const Json& verts = r.required("vertices");
    if (!verts.is_array()) throw ConfigError(r.name("vertices") + ": expected an array of [x, y] pairs");
    std::vector<Vec2> points;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Json& p = verts[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ConfigError(r.name("vertices") + "[" + std::to_string(i) + "]: expected [x, y]");
        }
        points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    const double width = r.number("ink_width_mm", NAN);
    if (std::isnan(width)) throw ConfigError(r.name("ink_width_mm") + ": missing");
    const double capture = r.number("capture_radius_mm", 5.0);
    r.string("name", "");
    r.finish();
    try {
        return LinePath(std::move(points), width, capture);
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Config documents. Every section and field is optional; omitted values
// take the defaults above.

inline Json config_to_json(const SessionConfig& c) {
    return {
        {"mode", to_string(c.mode)},
        {"mount",
         {{"sensor_spacing_mm", c.mount.sensor_spacing},
          {"sensor_spot_diameter_mm", c.mount.sensor_spot_diameter},
          {"forward_offset_mm", c.mount.forward_offset},
          {"sample_rate_hz", c.mount.sample_rate}}},
        {"thresholds",
         {{"moderate_offset_mm", c.thresholds.moderate_offset},
          {"severe_offset_mm", c.thresholds.severe_offset},
          {"moderate_angle_deg", c.thresholds.moderate_angle},
          {"severe_angle_deg", c.thresholds.severe_angle}}},
        {"estimator", {{"escalation_dwell_ms", c.estimator.escalation_dwell_ms}}},
        {"feedback",
         {{"positive_cue_interval_ms", c.feedback.positive_cue_interval},
          {"min_display_moderate_ms", c.feedback.min_display_moderate},
          {"min_display_severe_ms", c.feedback.min_display_severe},
          {"de_escalation_hold_ms", c.feedback.de_escalation_hold}}},
        {"faults",
         {{"left_probability", c.faults.left_probability},
          {"right_probability", c.faults.right_probability},
          {"stuck_dwell_ms", c.faults.stuck_dwell_ms}}},
        {"behavior",
         {{"advance_speed_mm_s", c.behavior.advance_speed},
          {"drift_rate_mm_s", c.behavior.drift_rate},
          {"tremor_amplitude_mm", c.behavior.tremor_amplitude},
          {"tremor_frequency_hz", c.behavior.tremor_frequency},
          {"correction_gain_per_s", c.behavior.correction_gain},
          {"reaction_delay_visual_ms", c.behavior.reaction_delay_visual},
          {"reaction_delay_audio_ms", c.behavior.reaction_delay_audio},
          {"correction_ramp_ms", c.behavior.correction_ramp},
          {"responds_to", to_string(c.behavior.responds_to)},
          {"max_duration_ms", c.behavior.max_duration}}},
    };
}

inline SessionConfig config_from_json(const Json& j) {
    SessionConfig c;
    detail::ObjectReader top(j, "");
    c.mode = parse_mode(top.string("mode", std::string(to_string(c.mode))));
    if (const Json* s = top.child("mount")) {
        detail::ObjectReader r(*s, "mount");
        c.mount.sensor_spacing = r.number("sensor_spacing_mm", c.mount.sensor_spacing);
        c.mount.sensor_spot_diameter = r.number("sensor_spot_diameter_mm", c.mount.sensor_spot_diameter);
        c.mount.forward_offset = r.number("forward_offset_mm", c.mount.forward_offset);
        c.mount.sample_rate = r.number("sample_rate_hz", c.mount.sample_rate);
        r.finish();
    }
    if (const Json* s = top.child("thresholds")) {
        detail::ObjectReader r(*s, "thresholds");
        c.thresholds.moderate_offset = r.number("moderate_offset_mm", c.thresholds.moderate_offset);
        c.thresholds.severe_offset = r.number("severe_offset_mm", c.thresholds.severe_offset);
        c.thresholds.moderate_angle = r.number("moderate_angle_deg", c.thresholds.moderate_angle);
        c.thresholds.severe_angle = r.number("severe_angle_deg", c.thresholds.severe_angle);
        r.finish();
    }
    if (const Json* s = top.child("estimator")) {
        detail::ObjectReader r(*s, "estimator");
        c.estimator.escalation_dwell_ms = r.integer("escalation_dwell_ms", c.estimator.escalation_dwell_ms);
        r.finish();
    }
    if (const Json* s = top.child("feedback")) {
        detail::ObjectReader r(*s, "feedback");
        c.feedback.positive_cue_interval = r.integer("positive_cue_interval_ms", c.feedback.positive_cue_interval);
        c.feedback.min_display_moderate = r.integer("min_display_moderate_ms", c.feedback.min_display_moderate);
        c.feedback.min_display_severe = r.integer("min_display_severe_ms", c.feedback.min_display_severe);
        c.feedback.de_escalation_hold = r.integer("de_escalation_hold_ms", c.feedback.de_escalation_hold);
        r.finish();
    }
    if (const Json* s = top.child("faults")) {
        detail::ObjectReader r(*s, "faults");
        c.faults.left_probability = r.number("left_probability", c.faults.left_probability);
        c.faults.right_probability = r.number("right_probability", c.faults.right_probability);
        c.faults.stuck_dwell_ms = r.integer("stuck_dwell_ms", c.faults.stuck_dwell_ms);
        r.finish();
    }
    if (const Json* s = top.child("behavior")) {
        detail::ObjectReader r(*s, "behavior");
        auto& b = c.behavior;
        b.advance_speed = r.number("advance_speed_mm_s", b.advance_speed);
        b.drift_rate = r.number("drift_rate_mm_s", b.drift_rate);
        b.tremor_amplitude = r.number("tremor_amplitude_mm", b.tremor_amplitude);
        b.tremor_frequency = r.number("tremor_frequency_hz", b.tremor_frequency);
        b.correction_gain = r.number("correction_gain_per_s", b.correction_gain);
        b.reaction_delay_visual = r.integer("reaction_delay_visual_ms", b.reaction_delay_visual);
        b.reaction_delay_audio = r.integer("reaction_delay_audio_ms", b.reaction_delay_audio);
        b.correction_ramp = r.integer("correction_ramp_ms", b.correction_ramp);
        b.responds_to = parse_responds(r.string("responds_to", std::string(to_string(b.responds_to))));
        b.max_duration = r.integer("max_duration_ms", b.max_duration);
        r.finish();
    }
    top.finish();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Files.

inline Json read_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file + ": cannot open");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(file + ": " + e.what());
    }
}

inline LinePath load_path(const std::string& file) {
    const Json j = read_json_file(file);
    try {
        return path_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(file + ": " + e.what());
    }
}

inline SessionConfig load_config(const std::string& file) {
    const Json j = read_json_file(file);
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(file + ": " + e.what());
    }
}

} // namespace clippers
