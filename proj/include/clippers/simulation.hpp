#pragma once

// Headless sessions: the per-tick sensing/feedback pipeline, a kinematic
// learner that closes the loop, newline-delimited trace files, golden
// replay, and session metrics.

#include <clippers/config.hpp>
#include <clippers/errors.hpp>
#include <clippers/feedback.hpp>
#include <clippers/geometry.hpp>
#include <clippers/sensing.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace clippers {

inline constexpr Millis kTickMs = 20;
inline constexpr int kTraceVersion = 1;
inline constexpr std::string_view kTraceFormat = "clippers-trace";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct TraceRecord {
    Millis t = 0;
    ScissorsPose pose;
    SensorReading reading;
    Severity estimate; ///< from the two sensors
    Severity oracle;   ///< from the pose
    Severity severity; ///< whichever of the two drives feedback
    double lateral_offset = 0.0;
    double progress = 0.0;
    bool completed = false;
    FeedbackState state;
    VisualFrame frame;
    std::vector<Cue> cues;
};

// Sensing plus feedback for one session, one pose at a time.
class SessionPipeline {
public:
    SessionPipeline(const LinePath& path, const SessionConfig& config, std::uint64_t seed)
        : path_(path), config_(config), faults_(config.faults, splitmix64(seed ^ 0xFA17ull)),
          estimator_(config.estimator) {
        config_.validate_for(path_);
    }

    TraceRecord advance(const ScissorsPose& pose) {
        const auto reading = faults_(sample_sensors(pose, path_, config_.mount));
        return advance_with(pose, reading);
    }

    // Pose for geometry and the oracle; reading supplied by a real or
    // simulated device.
    TraceRecord advance_with(const ScissorsPose& pose, const SensorReading& reading) {
        if (last_t_ && pose.timestamp <= *last_t_) {
            throw ClockError("timestamps must strictly increase (offending t=" + std::to_string(pose.timestamp) +
                             ")");
        }
        last_t_ = pose.timestamp;
        TraceRecord r;
        r.t = pose.timestamp;
        r.pose = pose;
        r.reading = reading;
        r.reading.timestamp = pose.timestamp;
        r.estimate = estimator_.update(r.reading).severity;
        const auto m = nearest_point(pose, path_);
        r.oracle = oracle_severity(m, config_.thresholds);
        r.severity = config_.mode == Mode::Sensor ? r.estimate : r.oracle;
        r.lateral_offset = m.lateral_offset;
        r.progress = progress(m, path_);
        r.completed = is_complete(m, path_);
        if (path_.closed()) {
            // Nearest-point search cannot tell "just started" from "almost
            // done" around a loop. A jump of more than half the loop from
            // the furthest point reached is read as crossing the seam.
            if (r.progress - furthest_ > 0.5) {
                r.progress = 0.0;
                r.completed = false;
            } else if (furthest_ - r.progress > 0.5) {
                r.progress = 1.0;
                r.completed = (pose.position - path_.vertices().back()).norm() <= path_.capture_radius();
            }
            furthest_ = std::max(furthest_, r.progress);
        }
        if (!state_) state_ = FeedbackState::initial(r.t);
        auto out = step(*state_, {r.severity, r.completed, r.t, pose.heading}, config_.feedback);
        state_ = out.state;
        r.state = out.state;
        r.frame = out.frame;
        r.cues = std::move(out.cues);
        return r;
    }

    const FeedbackState* state() const { return state_ ? &*state_ : nullptr; }
    const LinePath& path() const { return path_; }
    const SessionConfig& config() const { return config_; }

private:
    LinePath path_;
    SessionConfig config_;
    FaultInjector faults_;
    SeverityEstimator estimator_;
    std::optional<FeedbackState> state_;
    std::optional<Millis> last_t_;
    double furthest_ = 0.0;
};

enum class TraceSource : std::uint8_t { Behavior, Scripted };

constexpr std::string_view to_string(TraceSource s) { return s == TraceSource::Behavior ? "behavior" : "scripted"; }

struct SessionTrace {
    LinePath path;
    SessionConfig config;
    std::uint64_t seed = 0;
    TraceSource source = TraceSource::Behavior;
    bool truncated = false;
    std::vector<TraceRecord> records;
};

// ---------------------------------------------------------------------------
// Closed-loop learner.

namespace detail {

// What the simulated learner has noticed so far. Frames are seen after the
// visual delay, cues heard after the audio delay.
class Perception {
public:
    explicit Perception(const BehaviorModel& m) : model_(m) {}

    // Engagement in [0, 1] at `now`, given every record emitted so far.
    double engagement(const std::vector<TraceRecord>& records, Millis now) {
        const bool see = model_.responds_to != Responds::AudioOnly;
        const bool hear = model_.responds_to != Responds::VisualOnly;
        while (seen_ < records.size() && records[seen_].t + model_.reaction_delay_visual <= now) {
            visual_alarm_ = records[seen_].frame.chameleon_color != Color::Green;
            ++seen_;
        }
        while (heard_ < records.size() && records[heard_].t + model_.reaction_delay_audio <= now) {
            for (Cue c : records[heard_].cues) {
                if (is_corrective(c)) audio_alarm_ = true;
                if (c == Cue::StayOnTrack || c == Cue::KeepGoing || c == Cue::Fanfare) audio_alarm_ = false;
            }
            ++heard_;
        }
        const bool urge = (see && visual_alarm_) || (hear && audio_alarm_);
        if (!urge) {
            urge_since_.reset();
            return 0.0;
        }
        if (!urge_since_) urge_since_ = now;
        if (model_.correction_ramp == 0) return 1.0;
        return std::min(1.0, static_cast<double>(now - *urge_since_) / static_cast<double>(model_.correction_ramp));
    }

private:
    const BehaviorModel& model_;
    std::size_t seen_ = 0;
    std::size_t heard_ = 0;
    bool visual_alarm_ = false;
    bool audio_alarm_ = false;
    std::optional<Millis> urge_since_;
};

} // namespace detail

// Runs until the Fanfare tick or behavior.max_duration, whichever first.
//
// Kinematics per 20 ms tick: arc position advances at advance_speed (held at
// the path end); the slow lateral offset e follows e' = drift - k * gain * e,
// where k ramps 0 to 1 once feedback is perceived; a sinusoidal tremor with a
// seeded phase rides on top of e. Heading stays on the local tangent: drift,
// tremor and correction slide the hand without turning the blade.
inline SessionTrace run_behavior(const LinePath& path, const SessionConfig& config, std::uint64_t seed) {
    config.validate_for(path);
    const auto& m = config.behavior;
    SessionTrace trace{path, config, seed, TraceSource::Behavior, false, {}};
    SessionPipeline pipe(path, config, seed);
    detail::Perception perceive(m);

    std::mt19937_64 rng(splitmix64(seed));
    const double phase = 2.0 * std::numbers::pi * unit_uniform(rng);
    const double omega = 2.0 * std::numbers::pi * m.tremor_frequency;
    const double dt = static_cast<double>(kTickMs) / 1000.0;

    double s = 0.0;
    double e = 0.0;
    for (Millis t = 0;; t += kTickMs) {
        if (t > m.max_duration) {
            trace.truncated = true;
            break;
        }
        const double secs = static_cast<double>(t) / 1000.0;
        const double tremor = m.tremor_amplitude * std::sin(omega * secs + phase);
        trace.records.push_back(pipe.advance(pose_along(path, s, e + tremor, 0.0, t)));
        if (trace.records.back().state.phase == Phase::Completed) break;

        const double k = perceive.engagement(trace.records, t);
        e += dt * (m.drift_rate - k * m.correction_gain * e);
        s = std::min(path.total_length(), s + m.advance_speed * dt);
    }
    return trace;
}

// Recomputes sensing and feedback from the recorded poses only.
inline SessionTrace recompute_from_poses(const LinePath& path, const SessionConfig& config, std::uint64_t seed,
                                         const std::vector<ScissorsPose>& poses) {
    SessionTrace trace{path, config, seed, TraceSource::Scripted, false, {}};
    SessionPipeline pipe(path, config, seed);
    for (const auto& p : poses) trace.records.push_back(pipe.advance(p));
    return trace;
}

// ---------------------------------------------------------------------------
// Trace files: one JSON header line, then one JSON record per tick.

inline Json severity_json(const Severity& s) { return {{"level", to_string(s.level)}, {"side", to_string(s.side)}}; }

inline Json record_to_json(const TraceRecord& r) {
    Json cues = Json::array();
    for (Cue c : r.cues) cues.push_back(to_string(c));
    return {
        {"t", r.t},
        {"pose", {{"x", r.pose.position.x}, {"y", r.pose.position.y}, {"heading", r.pose.heading}}},
        {"reading",
         {{"left", r.reading.left_on_ink},
          {"right", r.reading.right_on_ink},
          {"left_fault", r.reading.left_fault},
          {"right_fault", r.reading.right_fault}}},
        {"estimate", severity_json(r.estimate)},
        {"oracle", severity_json(r.oracle)},
        {"severity", severity_json(r.severity)},
        {"lateral_offset", r.lateral_offset},
        {"progress", r.progress},
        {"completed", r.completed},
        {"state",
         {{"phase", to_string(r.state.phase)},
          {"side", to_string(r.state.side)},
          {"phase_entered_at", r.state.phase_entered_at},
          {"last_positive_cue_at", r.state.last_positive_cue_at},
          {"calm_since", r.state.calm_since ? Json(*r.state.calm_since) : Json(nullptr)},
          {"updated_at", r.state.updated_at}}},
        {"frame",
         {{"color", to_string(r.frame.chameleon_color)},
          {"heading", r.frame.chameleon_heading},
          {"tint", to_string(r.frame.side_tint)},
          {"dashed_line", r.frame.dashed_line_visible},
          {"end_screen", r.frame.end_screen}}},
        {"cues", cues},
    };
}

// Fields that pin down what a trace was computed from.
inline Json hashed_inputs(const SessionTrace& tr) {
    return {{"path", path_to_json(tr.path)},
            {"config", config_to_json(tr.config)},
            {"seed", tr.seed},
            {"source", to_string(tr.source)}};
}

inline std::string config_hash(const Json& inputs) { return hex64(fnv1a64(inputs.dump())); }

inline Json header_to_json(const SessionTrace& tr) {
    Json h = hashed_inputs(tr);
    h["format"] = kTraceFormat;
    h["version"] = kTraceVersion;
    h["config_hash"] = config_hash(hashed_inputs(tr));
    h["truncated"] = tr.truncated;
    h["records"] = tr.records.size();
    // logical clock: the last tick's timestamp, never wall time
    h["clock_end_ms"] = tr.records.empty() ? 0 : tr.records.back().t;
    return h;
}

inline std::string write_trace(const SessionTrace& tr) {
    std::string out = header_to_json(tr).dump();
    out += '\n';
    for (const auto& r : tr.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

struct ParsedTrace {
    Json header;
    std::vector<Json> records;
    SessionTrace inputs; ///< path, config, seed and source; records left empty
};

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(where + ": missing field \"" + key + "\"");
    return *it;
}

inline ScissorsPose pose_from_record(const Json& r, std::size_t line) {
    const std::string where = "line " + std::to_string(line);
    if (!r.is_object()) throw FormatError(where + ": record is not an object");
    const Json& t = field(r, "t", where);
    const Json& p = field(r, "pose", where);
    if (!t.is_number_integer()) throw FormatError(where + ": t must be an integer");
    if (!p.is_object()) throw FormatError(where + ": pose must be an object");
    auto num = [&](const char* k) {
        const Json& v = field(p, k, where + ": pose");
        if (!v.is_number()) throw FormatError(where + ": pose." + k + " must be a number");
        return v.get<double>();
    };
    return {{num("x"), num("y")}, num("heading"), t.get<Millis>()};
}

inline TraceRecord record_from_json(const Json& j, std::size_t line) {
    const std::string where = "line " + std::to_string(line);
    TraceRecord r;
    try {
        r.pose = pose_from_record(j, line);
        r.t = r.pose.timestamp;
        const Json& rd = field(j, "reading", where);
        r.reading = {r.t, rd.at("left").get<bool>(), rd.at("right").get<bool>(), rd.at("left_fault").get<bool>(),
                     rd.at("right_fault").get<bool>()};
        auto sev = [&](const char* key) {
            const Json& s = field(j, key, where);
            return Severity{parse_level(s.at("level").get<std::string>()), parse_side(s.at("side").get<std::string>())};
        };
        r.estimate = sev("estimate");
        r.oracle = sev("oracle");
        r.severity = sev("severity");
        r.lateral_offset = field(j, "lateral_offset", where).get<double>();
        r.progress = field(j, "progress", where).get<double>();
        r.completed = field(j, "completed", where).get<bool>();
        const Json& st = field(j, "state", where);
        r.state.phase = parse_phase(st.at("phase").get<std::string>());
        r.state.side = parse_side(st.at("side").get<std::string>());
        r.state.phase_entered_at = st.at("phase_entered_at").get<Millis>();
        r.state.last_positive_cue_at = st.at("last_positive_cue_at").get<Millis>();
        if (!st.at("calm_since").is_null()) r.state.calm_since = st.at("calm_since").get<Millis>();
        r.state.updated_at = st.at("updated_at").get<Millis>();
        const Json& fr = field(j, "frame", where);
        r.frame = {parse_color(fr.at("color").get<std::string>()), fr.at("heading").get<double>(),
                   parse_side(fr.at("tint").get<std::string>()), fr.at("dashed_line").get<bool>(),
                   fr.at("end_screen").get<bool>()};
        for (const auto& c : field(j, "cues", where)) r.cues.push_back(parse_cue(c.get<std::string>()));
    } catch (const Json::exception& e) {
        throw FormatError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(where + ": " + e.what());
    }
    return r;
}

} // namespace detail

// Parses a trace and refuses unsupported versions and hash mismatches before
// looking at any record.
inline ParsedTrace read_trace(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ParsedTrace out{Json(), {}, {LinePath({{0, 0}, {1, 0}}, LinePath::kMinInkWidth, 1.0), {}, 0, {}, false, {}}};
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw FormatError("line " + std::to_string(n) + ": " + e.what());
        }
        if (out.header.is_null()) {
            out.header = std::move(j);
        } else {
            out.records.push_back(std::move(j));
        }
    }
    const Json& h = out.header;
    if (!h.is_object()) throw FormatError("trace has no header line");
    if (h.value("format", "") != kTraceFormat) throw FormatError("not a clippers trace (format field)");
    const Json& version = detail::field(h, "version", "header");
    if (!version.is_number_integer() || version.get<int>() != kTraceVersion) {
        throw ReplayError("unsupported trace version " + version.dump() + " (this build reads version " +
                          std::to_string(kTraceVersion) + ")");
    }
    const Json inputs = {{"path", detail::field(h, "path", "header")},
                         {"config", detail::field(h, "config", "header")},
                         {"seed", detail::field(h, "seed", "header")},
                         {"source", detail::field(h, "source", "header")}};
    const std::string recorded = h.value("config_hash", "");
    const std::string actual = config_hash(inputs);
    if (recorded != actual) {
        throw ReplayError("config hash mismatch: header says \"" + recorded + "\" but its path/config/seed hash to \"" +
                          actual + "\"");
    }
    try {
        out.inputs.path = path_from_json(inputs["path"]);
        out.inputs.config = config_from_json(inputs["config"]);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("header: ") + e.what());
    }
    if (!inputs["seed"].is_number_unsigned()) throw FormatError("header: seed must be a non-negative integer");
    out.inputs.seed = inputs["seed"].get<std::uint64_t>();
    const std::string source = inputs["source"].is_string() ? inputs["source"].get<std::string>() : "";
    if (source == "behavior") {
        out.inputs.source = TraceSource::Behavior;
    } else if (source == "scripted") {
        out.inputs.source = TraceSource::Scripted;
    } else {
        throw FormatError("header: source must be \"behavior\" or \"scripted\"");
    }
    out.inputs.truncated = h.value("truncated", false);
    return out;
}

// The trace as recorded, without recomputing anything.
inline SessionTrace recorded_trace(const ParsedTrace& parsed) {
    SessionTrace tr = parsed.inputs;
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
        tr.records.push_back(detail::record_from_json(parsed.records[i], i + 2));
    }
    return tr;
}

struct ReplayResult {
    SessionTrace recomputed;
    std::vector<std::string> mismatches;
    bool ok() const { return mismatches.empty(); }
};

// Golden replay. Scripted traces are recomputed from their recorded poses.
// Behavior traces are regenerated from the seed, which also pins the poses.
inline ReplayResult replay(const ParsedTrace& parsed) {
    ReplayResult out{parsed.inputs, {}};
    if (parsed.inputs.source == TraceSource::Behavior) {
        out.recomputed = run_behavior(parsed.inputs.path, parsed.inputs.config, parsed.inputs.seed);
    } else {
        std::vector<ScissorsPose> poses;
        for (std::size_t i = 0; i < parsed.records.size(); ++i) {
            poses.push_back(detail::pose_from_record(parsed.records[i], i + 2));
        }
        try {
            out.recomputed = recompute_from_poses(parsed.inputs.path, parsed.inputs.config, parsed.inputs.seed, poses);
        } catch (const ClockError& e) {
            out.mismatches.push_back(e.what());
            return out;
        }
    }
    const Json header = header_to_json(out.recomputed);
    for (const char* key : {"truncated", "records", "clock_end_ms"}) {
        if (parsed.header.value(key, Json()) != header[key]) {
            out.mismatches.push_back(std::string("header field ") + key + ": recorded " +
                                     parsed.header.value(key, Json()).dump() + ", recomputed " + header[key].dump());
        }
    }
    const std::size_t n = std::min(parsed.records.size(), out.recomputed.records.size());
    for (std::size_t i = 0; i < n; ++i) {
        const Json want = record_to_json(out.recomputed.records[i]);
        const Json& got = parsed.records[i];
        if (got == want) continue;
        std::string what = "line " + std::to_string(i + 2) + " (t=" + std::to_string(out.recomputed.records[i].t) + ")";
        if (got.is_object()) {
            for (const auto& [key, value] : want.items()) {
                if (!got.contains(key) || got[key] != value) {
                    what += ": " + key + " recorded " + (got.contains(key) ? got[key].dump() : "<missing>") +
                            ", recomputed " + value.dump();
                    break;
                }
            }
            if (got.size() != want.size()) what += " (record has extra fields)";
        }
        out.mismatches.push_back(what);
    }
    if (parsed.records.size() != out.recomputed.records.size()) {
        out.mismatches.push_back("record count: recorded " + std::to_string(parsed.records.size()) + ", recomputed " +
                                 std::to_string(out.recomputed.records.size()));
    }
    return out;
}

inline ReplayResult replay(const std::string& text) { return replay(read_trace(text)); }

// ---------------------------------------------------------------------------
// Metrics.

struct MetricsReport {
    std::size_t ticks = 0;
    double on_track_fraction = 0.0;
    std::map<Cue, std::size_t> cue_counts;
    std::vector<Millis> correction_latencies; ///< corrective cue to first strictly milder tick
    std::optional<double> mean_latency;
    std::optional<double> median_latency;
    std::size_t unanswered_cues = 0;
    std::optional<Millis> completion_time;
    std::size_t escalation_count = 0;
    bool truncated = false;

    bool operator==(const MetricsReport&) const = default;
};

inline void fill_latency_stats(MetricsReport& m) {
    if (m.correction_latencies.empty()) return;
    auto sorted = m.correction_latencies;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (auto v : sorted) sum += static_cast<double>(v);
    const std::size_t n = sorted.size();
    m.mean_latency = sum / static_cast<double>(n);
    m.median_latency =
        n % 2 ? static_cast<double>(sorted[n / 2]) : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
}

inline MetricsReport metrics(const SessionTrace& trace) {
    const auto& rs = trace.records;
    if (rs.empty()) throw std::invalid_argument("metrics: empty trace");
    MetricsReport m;
    m.ticks = rs.size();
    m.truncated = trace.truncated;
    for (Cue c : kAllCues) m.cue_counts[c] = 0;
    std::size_t on_track = 0;
    int prev_rank = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const auto& r = rs[i];
        if (r.severity.level == Level::OnTrack) ++on_track;
        const int rank = phase_rank(r.state.phase);
        if (rank > prev_rank) ++m.escalation_count;
        prev_rank = rank;
        for (Cue c : r.cues) {
            ++m.cue_counts[c];
            if (c == Cue::Fanfare) m.completion_time = r.t;
            if (!is_corrective(c)) continue;
            std::optional<Millis> answered;
            for (std::size_t j = i + 1; j < rs.size(); ++j) {
                if (rs[j].severity.level < r.severity.level) {
                    answered = rs[j].t - r.t;
                    break;
                }
            }
            if (answered) {
                m.correction_latencies.push_back(*answered);
            } else {
                ++m.unanswered_cues;
            }
        }
    }
    m.on_track_fraction = static_cast<double>(on_track) / static_cast<double>(rs.size());
    fill_latency_stats(m);
    return m;
}

// Pools several sessions: tick-weighted on-track fraction, summed counts,
// latencies concatenated. Completion time is kept only if all completed, as
// the slowest.
inline MetricsReport combine_metrics(const std::vector<MetricsReport>& parts) {
    if (parts.empty()) throw std::invalid_argument("combine_metrics: nothing to combine");
    MetricsReport all;
    for (Cue c : kAllCues) all.cue_counts[c] = 0;
    double on_track = 0.0;
    bool all_completed = true;
    Millis slowest = 0;
    for (const auto& m : parts) {
        all.ticks += m.ticks;
        on_track += m.on_track_fraction * static_cast<double>(m.ticks);
        for (const auto& [c, n] : m.cue_counts) all.cue_counts[c] += n;
        all.correction_latencies.insert(all.correction_latencies.end(), m.correction_latencies.begin(),
                                        m.correction_latencies.end());
        all.unanswered_cues += m.unanswered_cues;
        all.escalation_count += m.escalation_count;
        all.truncated = all.truncated || m.truncated;
        if (m.completion_time) {
            slowest = std::max(slowest, *m.completion_time);
        } else {
            all_completed = false;
        }
    }
    all.on_track_fraction = on_track / static_cast<double>(all.ticks);
    if (all_completed) all.completion_time = slowest;
    fill_latency_stats(all);
    return all;
}

inline Json metrics_to_json(const MetricsReport& m) {
    Json counts = Json::object();
    for (const auto& [c, n] : m.cue_counts) counts[std::string(to_string(c))] = n;
    auto opt = [](const auto& v) { return v ? Json(*v) : Json(nullptr); };
    return {{"ticks", m.ticks},
            {"on_track_fraction", m.on_track_fraction},
            {"cue_counts", counts},
            {"correction_latencies_ms", m.correction_latencies},
            {"mean_correction_latency_ms", opt(m.mean_latency)},
            {"median_correction_latency_ms", opt(m.median_latency)},
            {"unanswered_cues", m.unanswered_cues},
            {"completion_time_ms", opt(m.completion_time)},
            {"escalation_count", m.escalation_count},
            {"truncated", m.truncated}};
}

// Fixed-width table, one row per named report.
inline std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-28s %6s %8s %5s %5s %5s %5s %5s %5s %6s %9s %9s %9s\n", "trace", "ticks",
                  "on_track", "keep", "uhoh", "woah", "bettr", "stay", "fanf", "escal", "mean_lat", "unanswrd",
                  "complete");
    out += buf;
    auto fmt_opt = [](const auto& v) {
        if (!v) return std::string("-");
        char b[32];
        std::snprintf(b, sizeof b, "%.0f", static_cast<double>(*v));
        return std::string(b);
    };
    for (const auto& [name, m] : rows) {
        std::snprintf(buf, sizeof buf, "%-28s %6zu %8.3f %5zu %5zu %5zu %5zu %5zu %5zu %6zu %9s %9zu %9s\n",
                      name.c_str(), m.ticks, m.on_track_fraction, m.cue_counts.at(Cue::KeepGoing),
                      m.cue_counts.at(Cue::UhOh), m.cue_counts.at(Cue::WoahThere),
                      m.cue_counts.at(Cue::GettingBetter), m.cue_counts.at(Cue::StayOnTrack),
                      m.cue_counts.at(Cue::Fanfare), m.escalation_count, fmt_opt(m.mean_latency).c_str(),
                      m.unanswered_cues, m.truncated ? "trunc" : fmt_opt(m.completion_time).c_str());
        out += buf;
    }
    return out;
}

} // namespace clippers
