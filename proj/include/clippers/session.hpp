#pragma once

// Host/UI session protocol.
//
// Each message is a 4-byte big-endian length followed by that many bytes of
// UTF-8 JSON: {"v": 1, "kind": <kind>, "body": {...}}.
//
// Client to server:
//   StartSession  {path?, config?, mode?, seed?}   must come first
//   PoseUpdate    {t, x, y, heading}
//   SensorUpdate  {t, left_on_ink, right_on_ink, left_fault?, right_fault?}
//   EndSession    {reason?}
// Server to client:
//   StartSession   {path, config, seed}            effective settings
//   FeedbackUpdate {t, frame, cues, phase, severity, progress}
//   DeviceHealth   {t, left_fault, right_fault}    when the flags change
//   EndSession     {reason, error?, metrics?}      terminal

#include <clippers/config.hpp>
#include <clippers/errors.hpp>
#include <clippers/simulation.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clippers::session {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxMessageBytes = 1u << 20;

enum class Kind : std::uint8_t { StartSession, PoseUpdate, SensorUpdate, FeedbackUpdate, EndSession, DeviceHealth };

constexpr std::string_view to_string(Kind k) {
    switch (k) {
    case Kind::StartSession: return "StartSession";
    case Kind::PoseUpdate: return "PoseUpdate";
    case Kind::SensorUpdate: return "SensorUpdate";
    case Kind::FeedbackUpdate: return "FeedbackUpdate";
    case Kind::EndSession: return "EndSession";
    case Kind::DeviceHealth: return "DeviceHealth";
    }
    return "?";
}

inline std::optional<Kind> parse_kind(std::string_view s) {
    for (Kind k : {Kind::StartSession, Kind::PoseUpdate, Kind::SensorUpdate, Kind::FeedbackUpdate, Kind::EndSession,
                   Kind::DeviceHealth}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct Message {
    Kind kind;
    Json body = Json::object();
};

inline Json to_json(const Message& m) {
    return {{"v", kProtocolVersion}, {"kind", to_string(m.kind)}, {"body", m.body.is_null() ? Json::object() : m.body}};
}

inline Message from_json(const Json& j) {
    if (!j.is_object()) throw FormatError("message is not an object");
    auto v = j.find("v");
    if (v == j.end() || !v->is_number_integer()) throw FormatError("message.v: missing or not an integer");
    if (v->get<int>() != kProtocolVersion) {
        throw FormatError("message.v: unsupported version " + v->dump() + " (expected " +
                          std::to_string(kProtocolVersion) + ")");
    }
    auto k = j.find("kind");
    if (k == j.end() || !k->is_string()) throw FormatError("message.kind: missing or not a string");
    const auto kind = parse_kind(k->get<std::string>());
    if (!kind) throw FormatError("message.kind: unknown kind \"" + k->get<std::string>() + "\"");
    Message m{*kind};
    if (auto b = j.find("body"); b != j.end()) {
        if (!b->is_object()) throw FormatError("message.body: expected an object");
        m.body = *b;
    }
    return m;
}

inline std::string encode(const Message& m) {
    const std::string payload = to_json(m).dump();
    std::string out;
    out.reserve(payload.size() + 4);
    const auto n = static_cast<std::uint32_t>(payload.size());
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xFF));
    out += payload;
    return out;
}

// Incremental splitter for the length-prefixed stream.
class MessageReader {
public:
    // Throws FormatError on an oversized frame or unparseable JSON. The
    // stream cannot be resynchronized after that.
    std::vector<Message> feed(std::string_view bytes) {
        buf_.append(bytes);
        std::vector<Message> out;
        std::size_t pos = 0;
        while (buf_.size() - pos >= 4) {
            std::uint32_t n = 0;
            for (int i = 0; i < 4; ++i) n = n << 8 | static_cast<unsigned char>(buf_[pos + i]);
            if (n > kMaxMessageBytes) throw FormatError("message length " + std::to_string(n) + " exceeds limit");
            if (buf_.size() - pos - 4 < n) break;
            Json j;
            try {
                j = Json::parse(buf_.substr(pos + 4, n));
            } catch (const Json::parse_error& e) {
                throw FormatError(std::string("message is not valid JSON: ") + e.what());
            }
            out.push_back(from_json(j));
            pos += 4 + n;
        }
        buf_.erase(0, pos);
        return out;
    }

private:
    std::string buf_;
};

inline Message end_session(const std::string& reason, const std::string& error = "") {
    Message m{Kind::EndSession, {{"reason", reason}}};
    if (!error.empty()) m.body["error"] = error;
    return m;
}

// One UI session. Not thread-safe; each connection owns its own instance.
class SessionService {
public:
    SessionService(LinePath default_path, SessionConfig default_config)
        : default_path_(std::move(default_path)), default_config_(std::move(default_config)) {}

    bool ended() const { return ended_; }
    bool started() const { return pipeline_.has_value(); }

    // Replies to one inbound message. Protocol violations end the session
    // with an EndSession carrying the error.
    std::vector<Message> handle(const Message& in) {
        if (ended_) return {};
        const Json body = in.body.is_null() ? Json::object() : in.body;
        try {
            switch (in.kind) {
            case Kind::StartSession: return start(body);
            case Kind::PoseUpdate: return pose(body);
            case Kind::SensorUpdate: return sensor(body);
            case Kind::EndSession: return finish("client");
            default: return fail(std::string(to_string(in.kind)) + " is server-to-client only");
            }
        } catch (const ConfigError& e) {
            return fail(e.what());
        } catch (const FormatError& e) {
            return fail(e.what());
        } catch (const ClockError& e) {
            return fail(e.what());
        } catch (const Json::exception& e) {
            return fail(std::string("malformed body: ") + e.what());
        }
    }

    // The inbound stream could not be parsed at all.
    std::vector<Message> reject(const std::string& error) { return fail(error); }

    const SessionTrace* trace() const { return trace_ ? &*trace_ : nullptr; }

private:
    std::vector<Message> start(const Json& body) {
        if (pipeline_) return fail("StartSession received twice");
        detail::ObjectReader r(body, "StartSession");
        LinePath path = default_path_;
        SessionConfig config = default_config_;
        if (const Json* p = r.child("path")) path = path_from_json(*p, "StartSession.path");
        if (const Json* c = r.child("config")) config = config_from_json(*c);
        if (const Json* m = r.child("mode")) {
            if (!m->is_string()) throw ConfigError("StartSession.mode: expected a string");
            config.mode = parse_mode(m->get<std::string>());
        }
        const std::uint64_t seed = r.unsigned_integer("seed", 0);
        r.finish();
        config.validate_for(path);
        pipeline_.emplace(path, config, seed);
        trace_ = SessionTrace{path, config, seed, TraceSource::Scripted, false, {}};
        return {Message{Kind::StartSession,
                        {{"path", path_to_json(path)}, {"config", config_to_json(config)}, {"seed", seed}}}};
    }

    std::vector<Message> pose(const Json& body) {
        if (!pipeline_) return fail("PoseUpdate before StartSession");
        detail::ObjectReader r(body, "PoseUpdate");
        const ScissorsPose p{{r.number("x", NAN), r.number("y", NAN)}, normalize_heading(r.number("heading", 0.0)),
                             r.integer("t", -1)};
        r.finish();
        if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y)) {
            throw ConfigError("PoseUpdate.x/y: missing or not finite");
        }
        if (p.timestamp < 0) throw ConfigError("PoseUpdate.t: missing or negative");
        last_pose_ = p;
        return emit(pipeline_->advance(p));
    }

    std::vector<Message> sensor(const Json& body) {
        if (!pipeline_) return fail("SensorUpdate before StartSession");
        detail::ObjectReader r(body, "SensorUpdate");
        auto flag = [&](const char* key, bool required) {
            const Json* v = r.child(key);
            if (!v) {
                if (required) throw ConfigError(r.name(key) + ": missing");
                return false;
            }
            if (!v->is_boolean()) throw ConfigError(r.name(key) + ": expected true or false");
            return v->get<bool>();
        };
        SensorReading reading;
        reading.timestamp = r.integer("t", -1);
        reading.left_on_ink = flag("left_on_ink", true);
        reading.right_on_ink = flag("right_on_ink", true);
        reading.left_fault = flag("left_fault", false);
        reading.right_fault = flag("right_fault", false);
        r.finish();
        if (reading.timestamp < 0) throw ConfigError("SensorUpdate.t: missing or negative");
        // geometry comes from the latest pose, or the path start if none yet
        ScissorsPose p = last_pose_ ? *last_pose_ : pose_along(pipeline_->path(), 0.0, 0.0, 0.0, 0);
        p.timestamp = reading.timestamp;
        last_pose_ = p;
        return emit(pipeline_->advance_with(p, reading));
    }

    std::vector<Message> emit(TraceRecord rec) {
        std::vector<Message> out;
        const bool lf = rec.reading.left_fault;
        const bool rf = rec.reading.right_fault;
        if (!health_ || health_->first != lf || health_->second != rf) {
            if (health_ || lf || rf) {
                out.push_back({Kind::DeviceHealth, {{"t", rec.t}, {"left_fault", lf}, {"right_fault", rf}}});
            }
            health_ = {lf, rf};
        }
        const Json r = record_to_json(rec);
        Json cues = Json::array();
        for (Cue c : rec.cues) cues.push_back({{"cue", to_string(c)}, {"text", cue_text(c)}});
        out.push_back({Kind::FeedbackUpdate,
                       {{"t", rec.t},
                        {"frame", r["frame"]},
                        {"cues", cues},
                        {"phase", to_string(rec.state.phase)},
                        {"severity", r["severity"]},
                        {"progress", rec.progress}}});
        const bool done = rec.state.phase == Phase::Completed;
        trace_->records.push_back(std::move(rec));
        if (done) {
            auto end = finish("completed");
            out.insert(out.end(), end.begin(), end.end());
        }
        return out;
    }

    std::vector<Message> finish(const std::string& reason) {
        ended_ = true;
        auto m = end_session(reason);
        if (trace_ && !trace_->records.empty()) m.body["metrics"] = metrics_to_json(metrics(*trace_));
        return {m};
    }

    std::vector<Message> fail(const std::string& error) {
        ended_ = true;
        return {end_session("error", error)};
    }

    LinePath default_path_;
    SessionConfig default_config_;
    std::optional<SessionPipeline> pipeline_;
    std::optional<SessionTrace> trace_;
    std::optional<ScissorsPose> last_pose_;
    std::optional<std::pair<bool, bool>> health_;
    bool ended_ = false;
};

} // namespace clippers::session
