#pragma once

// Trace-level invariants of the feedback machine plus a seeded generator of
// severity streams. Shared by the unit and acceptance suites.

#include <clippers/feedback.hpp>

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace clippers::props {

// Piecewise-constant severity stream on a 20 ms tick; the last tick (and a
// few after it) report completion.
inline std::vector<StepInput> random_stream(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ticks(10, 300);
    std::uniform_int_distribution<int> dwell(1, 120);
    std::uniform_int_distribution<int> pick(0, 4);
    const std::array<Severity, 5> levels = {Severity{Level::OnTrack, Side::None},
                                            Severity{Level::Moderate, Side::Left},
                                            Severity{Level::Moderate, Side::Right},
                                            Severity{Level::Severe, Side::Left},
                                            Severity{Level::Severe, Side::Right}};
    const int total = ticks(rng) * 10;
    std::vector<StepInput> out;
    Severity current = levels[0];
    int left = 0;
    for (int i = 0; i < total; ++i) {
        if (left-- <= 0) {
            current = levels[pick(rng)];
            left = dwell(rng);
        }
        out.push_back({current, i >= total - 3, static_cast<Millis>(i) * 20, 0.0});
    }
    return out;
}

// Returns human-readable violations; empty means every invariant held.
inline std::vector<std::string> check_trace(std::span<const StepInput> in, std::span<const StepResult> out,
                                            const FeedbackConfig& cfg) {
    std::vector<std::string> bad;
    auto fail = [&](Millis t, const std::string& what) {
        bad.push_back("t=" + std::to_string(t) + ": " + what);
    };
    FeedbackState prev = FeedbackState::initial(in.empty() ? 0 : in.front().now);
    std::optional<Millis> last_keep_going;
    int fanfares = 0;
    Millis entered = prev.phase_entered_at;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Millis t = in[i].now;
        const auto& r = out[i];
        const Phase from = prev.phase;
        const Phase to = r.state.phase;
        auto has = [&](Cue c) { return std::find(r.cues.begin(), r.cues.end(), c) != r.cues.end(); };

        if (has(Cue::UhOh) != (from == Phase::OnTrack && to == Phase::Moderate)) fail(t, "UhOh off its edge");
        if (has(Cue::WoahThere) != (to == Phase::Severe && from != Phase::Severe)) fail(t, "WoahThere off its edge");
        if (has(Cue::GettingBetter) != (from == Phase::Severe && to == Phase::Recovering)) {
            fail(t, "GettingBetter off its edge");
        }
        if (has(Cue::StayOnTrack) != (to == Phase::OnTrack && from != Phase::OnTrack)) {
            fail(t, "StayOnTrack off its edge");
        }
        if (has(Cue::Fanfare) != (to == Phase::Completed && from != Phase::Completed)) fail(t, "Fanfare off its edge");
        if (has(Cue::Fanfare)) ++fanfares;
        if (has(Cue::KeepGoing)) {
            if (from != Phase::OnTrack || to != Phase::OnTrack) fail(t, "KeepGoing outside OnTrack");
            if (last_keep_going && t - *last_keep_going < cfg.positive_cue_interval) fail(t, "KeepGoing too soon");
            last_keep_going = t;
        }
        if (from == Phase::Completed && to != Phase::Completed) fail(t, "left Completed");
        if (r.frame.chameleon_color != phase_color(to)) fail(t, "color is not a function of phase");
        const Side tint = r.frame.chameleon_color == Color::Green ? Side::None : r.state.side;
        if (r.frame.side_tint != tint) fail(t, "tint does not follow state side");
        if ((to == Phase::OnTrack || to == Phase::Completed) != (r.state.side == Side::None)) {
            fail(t, "side/phase invariant broken");
        }
        if (r.frame.end_screen != (to == Phase::Completed)) fail(t, "end screen mismatch");

        // Minimum display: de-escalations out of a corrective phase.
        if (from != to && to != Phase::Completed && phase_rank(to) < phase_rank(from)) {
            const Millis need = from == Phase::Severe ? cfg.min_display_severe : cfg.min_display_moderate;
            if (t - entered < need) fail(t, std::string(to_string(from)) + " shown too briefly");
        }
        if (from != to) entered = t;
        prev = r.state;
    }
    if (!in.empty() && in.back().completed && fanfares != 1) {
        bad.push_back("expected exactly one Fanfare, got " + std::to_string(fanfares));
    }
    return bad;
}

} // namespace clippers::props
