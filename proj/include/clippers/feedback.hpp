#pragma once

// Chameleon feedback state machine: severity stream in, visual frames and
// spoken cues out. The clock is always supplied by the caller.

#include <clippers/errors.hpp>
#include <clippers/geometry.hpp>
#include <clippers/sensing.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clippers {

struct FeedbackConfig {
    Millis positive_cue_interval = 5000;
    Millis min_display_moderate = 800;
    Millis min_display_severe = 1500;
    Millis de_escalation_hold = 300;

    void validate() const {
        if (positive_cue_interval <= 0) throw ConfigError("feedback.positive_cue_interval_ms must be positive");
        if (min_display_moderate <= 0) throw ConfigError("feedback.min_display_moderate_ms must be positive");
        if (min_display_severe <= 0) throw ConfigError("feedback.min_display_severe_ms must be positive");
        if (de_escalation_hold <= 0) throw ConfigError("feedback.de_escalation_hold_ms must be positive");
        // Red is shown at least as long as orange.
        if (min_display_severe < min_display_moderate) {
            throw ConfigError("feedback.min_display_severe_ms must be >= feedback.min_display_moderate_ms");
        }
    }
};

enum class Phase : std::uint8_t { OnTrack, Moderate, Severe, Recovering, Completed };
enum class Color : std::uint8_t { Green, Orange, Red };
enum class Cue : std::uint8_t { KeepGoing, UhOh, WoahThere, GettingBetter, StayOnTrack, Fanfare };

inline constexpr std::array<Cue, 6> kAllCues = {Cue::KeepGoing,     Cue::UhOh,        Cue::WoahThere,
                                                Cue::GettingBetter, Cue::StayOnTrack, Cue::Fanfare};

constexpr std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::OnTrack: return "OnTrack";
    case Phase::Moderate: return "Moderate";
    case Phase::Severe: return "Severe";
    case Phase::Recovering: return "Recovering";
    case Phase::Completed: return "Completed";
    }
    return "?";
}

constexpr std::string_view to_string(Color c) {
    switch (c) {
    case Color::Green: return "Green";
    case Color::Orange: return "Orange";
    case Color::Red: return "Red";
    }
    return "?";
}

constexpr std::string_view to_string(Cue c) {
    switch (c) {
    case Cue::KeepGoing: return "KeepGoing";
    case Cue::UhOh: return "UhOh";
    case Cue::WoahThere: return "WoahThere";
    case Cue::GettingBetter: return "GettingBetter";
    case Cue::StayOnTrack: return "StayOnTrack";
    case Cue::Fanfare: return "Fanfare";
    }
    return "?";
}

// Spoken phrase for each cue (UTF-8; the dashes are U+2013).
constexpr std::string_view cue_text(Cue c) {
    switch (c) {
    case Cue::KeepGoing: return "Good job \xE2\x80\x93 keep going!";
    case Cue::UhOh: return "Uh-oh!";
    case Cue::WoahThere: return "Woah there!";
    case Cue::GettingBetter: return "Getting better \xE2\x80\x93 keep going!";
    case Cue::StayOnTrack: return "Good job \xE2\x80\x93 now stay on track!";
    case Cue::Fanfare: return "";
    }
    return "";
}

inline Phase parse_phase(std::string_view s) {
    for (Phase p : {Phase::OnTrack, Phase::Moderate, Phase::Severe, Phase::Recovering, Phase::Completed}) {
        if (to_string(p) == s) return p;
    }
    throw FormatError("unknown phase '" + std::string(s) + "'");
}

inline Color parse_color(std::string_view s) {
    for (Color c : {Color::Green, Color::Orange, Color::Red}) {
        if (to_string(c) == s) return c;
    }
    throw FormatError("unknown color '" + std::string(s) + "'");
}

inline Cue parse_cue(std::string_view s) {
    for (Cue c : kAllCues) {
        if (to_string(c) == s) return c;
    }
    throw FormatError("unknown cue '" + std::string(s) + "'");
}

constexpr bool is_corrective(Cue c) { return c == Cue::UhOh || c == Cue::WoahThere; }

constexpr Color phase_color(Phase p) {
    switch (p) {
    case Phase::Moderate:
    case Phase::Recovering: return Color::Orange;
    case Phase::Severe: return Color::Red;
    default: return Color::Green;
    }
}

// Ordering used for "escalation": higher is more alarming.
constexpr int phase_rank(Phase p) {
    switch (p) {
    case Phase::Moderate:
    case Phase::Recovering: return 1;
    case Phase::Severe: return 2;
    default: return 0;
    }
}

struct FeedbackState {
    Phase phase = Phase::OnTrack;
    Side side = Side::None;
    Millis phase_entered_at = 0;
    Millis last_positive_cue_at = 0;
    // Start of the current uninterrupted run of on-track readings while a
    // corrective phase is displayed.
    std::optional<Millis> calm_since;
    Millis updated_at = 0;

    static FeedbackState initial(Millis start = 0) {
        FeedbackState s;
        s.phase_entered_at = start;
        s.last_positive_cue_at = start;
        s.updated_at = start;
        return s;
    }

    bool operator==(const FeedbackState&) const = default;
};

struct VisualFrame {
    Color chameleon_color = Color::Green;
    double chameleon_heading = 0.0;
    Side side_tint = Side::None;
    bool dashed_line_visible = true;
    bool end_screen = false;

    bool operator==(const VisualFrame&) const = default;
};

struct StepInput {
    Severity severity;
    bool completed = false;
    Millis now = 0;
    double heading = 0.0; ///< scissors heading, mirrored by the on-screen chameleon
};

struct StepResult {
    FeedbackState state;
    VisualFrame frame;
    std::vector<Cue> cues;

    bool operator==(const StepResult&) const = default;
};

inline VisualFrame render_frame(const FeedbackState& s, double heading) {
    VisualFrame f;
    f.chameleon_color = phase_color(s.phase);
    f.chameleon_heading = heading;
    f.side_tint = f.chameleon_color == Color::Green ? Side::None : s.side;
    f.end_screen = s.phase == Phase::Completed;
    f.dashed_line_visible = !f.end_screen;
    return f;
}

// One transition of the feedback machine.
//
// Escalations happen on the step that observes them. De-escalations wait for
// the displayed phase's minimum display time; a return to OnTrack also needs
// the readings to have stayed on track for de_escalation_hold. Until then a
// milder reading leaves the display unchanged. Side changes at an unchanged
// level re-tint the display without a cue.
inline StepResult step(const FeedbackState& state, const StepInput& in, const FeedbackConfig& config) {
    if (in.now < state.updated_at) {
        throw ClockError("feedback clock went backwards: " + std::to_string(in.now) + " < " +
                         std::to_string(state.updated_at));
    }
    if ((in.severity.level == Level::OnTrack) != (in.severity.side == Side::None)) {
        throw std::invalid_argument("severity side must be None exactly when on track");
    }

    StepResult out;
    FeedbackState& s = out.state;
    s = state;
    s.updated_at = in.now;

    auto enter = [&](Phase phase, Side side, Cue cue) {
        s.phase = phase;
        s.side = side;
        s.phase_entered_at = in.now;
        s.calm_since.reset();
        if (cue == Cue::StayOnTrack) s.last_positive_cue_at = in.now;
        out.cues.push_back(cue);
    };

    if (s.phase == Phase::Completed) {
        out.frame = render_frame(s, in.heading);
        return out;
    }
    if (in.completed) {
        enter(Phase::Completed, Side::None, Cue::Fanfare);
        out.frame = render_frame(s, in.heading);
        return out;
    }

    const Level level = in.severity.level;
    const Millis shown = in.now - s.phase_entered_at;

    if (s.phase == Phase::OnTrack) {
        if (level == Level::Moderate) {
            enter(Phase::Moderate, in.severity.side, Cue::UhOh);
        } else if (level == Level::Severe) {
            enter(Phase::Severe, in.severity.side, Cue::WoahThere);
        } else if (in.now - s.last_positive_cue_at >= config.positive_cue_interval) {
            s.last_positive_cue_at = in.now;
            out.cues.push_back(Cue::KeepGoing);
        }
        out.frame = render_frame(s, in.heading);
        return out;
    }

    if (level == Level::OnTrack) {
        if (!s.calm_since) s.calm_since = in.now;
    } else {
        s.calm_since.reset();
    }
    const bool held = s.calm_since && in.now - *s.calm_since >= config.de_escalation_hold;

    switch (s.phase) {
    case Phase::Moderate:
    case Phase::Recovering:
        if (level == Level::Severe) {
            enter(Phase::Severe, in.severity.side, Cue::WoahThere);
        } else if (level == Level::Moderate) {
            s.side = in.severity.side;
        } else if (shown >= config.min_display_moderate && held) {
            enter(Phase::OnTrack, Side::None, Cue::StayOnTrack);
        }
        break;
    case Phase::Severe:
        if (level == Level::Severe) {
            s.side = in.severity.side;
        } else if (shown >= config.min_display_severe) {
            if (level == Level::Moderate) {
                enter(Phase::Recovering, in.severity.side, Cue::GettingBetter);
            } else if (held) {
                // Straight back on the line: skip the intermediate cue.
                enter(Phase::OnTrack, Side::None, Cue::StayOnTrack);
            }
        }
        break;
    default:
        break;
    }
    out.frame = render_frame(s, in.heading);
    return out;
}

// Left fold of step over a stream with strictly increasing timestamps.
inline std::vector<StepResult> run_session(std::span<const StepInput> stream, const FeedbackConfig& config,
                                           FeedbackState state = FeedbackState::initial()) {
    config.validate();
    std::vector<StepResult> out;
    out.reserve(stream.size());
    std::optional<Millis> prev;
    for (const auto& in : stream) {
        if (prev && in.now <= *prev) {
            throw ClockError("severity stream timestamps must strictly increase (offending t=" +
                             std::to_string(in.now) + ")");
        }
        prev = in.now;
        try {
            out.push_back(step(state, in, config));
        } catch (const ClockError& e) {
            throw ClockError("t=" + std::to_string(in.now) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("t=" + std::to_string(in.now) + ": " + e.what());
        }
        state = out.back().state;
    }
    return out;
}

} // namespace clippers
