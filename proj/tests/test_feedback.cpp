#include <clippers/feedback.hpp>

#include "feedback_properties.hpp"
#include "transition_oracle.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace clippers;

namespace {

const FeedbackConfig kDefaults;

StepInput at(Millis t, Level level, Side side = Side::None, bool completed = false) {
    if (level == Level::OnTrack) side = Side::None;
    return {{level, side}, completed, t, 0.0};
}

std::vector<Cue> all_cues(const std::vector<StepResult>& results) {
    std::vector<Cue> cues;
    for (const auto& r : results) cues.insert(cues.end(), r.cues.begin(), r.cues.end());
    return cues;
}

} // namespace

TEST(CueTextTest, PhrasesAreByteExact) {
    EXPECT_EQ(cue_text(Cue::KeepGoing), "Good job \xE2\x80\x93 keep going!");
    EXPECT_EQ(cue_text(Cue::UhOh), "Uh-oh!");
    EXPECT_EQ(cue_text(Cue::WoahThere), "Woah there!");
    EXPECT_EQ(cue_text(Cue::GettingBetter), "Getting better \xE2\x80\x93 keep going!");
    EXPECT_EQ(cue_text(Cue::StayOnTrack), "Good job \xE2\x80\x93 now stay on track!");
    for (Cue c : kAllCues) EXPECT_EQ(parse_cue(to_string(c)), c);
}

TEST(FeedbackConfigTest, SevereDisplayMayNotBeShorter) {
    FeedbackConfig cfg;
    cfg.min_display_severe = 700;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.de_escalation_hold = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_NO_THROW(kDefaults.validate());
}

TEST(StepTest, ModerateDeviationSaysUhOh) {
    const auto r = step(FeedbackState::initial(), at(1000, Level::Moderate, Side::Left), kDefaults);
    EXPECT_EQ(r.state.phase, Phase::Moderate);
    EXPECT_EQ(r.cues, std::vector<Cue>{Cue::UhOh});
    EXPECT_EQ(r.frame.chameleon_color, Color::Orange);
    EXPECT_EQ(r.frame.side_tint, Side::Left);
    EXPECT_EQ(r.state.phase_entered_at, 1000);
}

TEST(StepTest, SevereEscalationIsImmediate) {
    auto s = step(FeedbackState::initial(), at(1000, Level::Moderate, Side::Left), kDefaults).state;
    const auto r = step(s, at(1020, Level::Severe, Side::Left), kDefaults);
    EXPECT_EQ(r.state.phase, Phase::Severe);
    EXPECT_EQ(r.cues, std::vector<Cue>{Cue::WoahThere});
    EXPECT_EQ(r.frame.chameleon_color, Color::Red);
}

TEST(StepTest, SevereToRecoveringAfterDisplayTime) {
    FeedbackState s = FeedbackState::initial();
    s.phase = Phase::Severe;
    s.side = Side::Left;
    const auto r = step(s, at(1600, Level::Moderate, Side::Left), kDefaults);
    EXPECT_EQ(r.state.phase, Phase::Recovering);
    EXPECT_EQ(r.cues, std::vector<Cue>{Cue::GettingBetter});
    EXPECT_EQ(r.frame.chameleon_color, Color::Orange);

    const auto early = step(s, at(1499, Level::Moderate, Side::Left), kDefaults);
    EXPECT_EQ(early.state.phase, Phase::Severe);
    EXPECT_TRUE(early.cues.empty());
}

TEST(StepTest, CompletedIsAbsorbing) {
    FeedbackState s = FeedbackState::initial();
    s.phase = Phase::Completed;
    for (auto level : {Level::OnTrack, Level::Moderate, Level::Severe}) {
        const auto r = step(s, at(9000, level, Side::Right, level == Level::Severe), kDefaults);
        EXPECT_EQ(r.state.phase, Phase::Completed);
        EXPECT_TRUE(r.cues.empty());
        EXPECT_TRUE(r.frame.end_screen);
        EXPECT_FALSE(r.frame.dashed_line_visible);
    }
}

TEST(StepTest, KeepGoingIntervalIsInclusive) {
    const auto s = FeedbackState::initial();
    EXPECT_EQ(step(s, at(5000, Level::OnTrack), kDefaults).cues, std::vector<Cue>{Cue::KeepGoing});
    EXPECT_TRUE(step(s, at(4999, Level::OnTrack), kDefaults).cues.empty());
}

TEST(StepTest, ClockRegressionIsAnError) {
    auto s = step(FeedbackState::initial(), at(1000, Level::OnTrack), kDefaults).state;
    EXPECT_THROW(step(s, at(999, Level::OnTrack), kDefaults), ClockError);
    EXPECT_NO_THROW(step(s, at(1000, Level::OnTrack), kDefaults));
}

TEST(StepTest, MalformedSeverityRejected) {
    EXPECT_THROW(step(FeedbackState::initial(), {{Level::Moderate, Side::None}, false, 0, 0.0}, kDefaults),
                 std::invalid_argument);
}

TEST(StepTest, ChameleonMirrorsHeading) {
    const auto r = step(FeedbackState::initial(), {{}, false, 20, 123.5}, kDefaults);
    EXPECT_DOUBLE_EQ(r.frame.chameleon_heading, 123.5);
    EXPECT_EQ(r.frame.chameleon_color, Color::Green);
    EXPECT_EQ(r.frame.side_tint, Side::None);
}

TEST(StepTest, SideSwitchRetintsWithoutCue) {
    auto s = step(FeedbackState::initial(), at(100, Level::Moderate, Side::Left), kDefaults).state;
    const auto r = step(s, at(120, Level::Moderate, Side::Right), kDefaults);
    EXPECT_EQ(r.state.phase, Phase::Moderate);
    EXPECT_EQ(r.frame.side_tint, Side::Right);
    EXPECT_TRUE(r.cues.empty());
    EXPECT_EQ(r.state.phase_entered_at, 100);
}

TEST(RunSessionTest, EmptyStream) {
    EXPECT_TRUE(run_session({}, kDefaults).empty());
}

TEST(RunSessionTest, PerfectFollowerTwentySeconds) {
    std::vector<StepInput> stream;
    for (Millis t = 0; t <= 20000; t += 20) stream.push_back(at(t, Level::OnTrack, Side::None, t == 20000));
    const auto out = run_session(stream, kDefaults);
    std::vector<std::pair<Millis, Cue>> got;
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (Cue c : out[i].cues) got.emplace_back(stream[i].now, c);
    }
    const std::vector<std::pair<Millis, Cue>> want = {
        {5000, Cue::KeepGoing}, {10000, Cue::KeepGoing}, {15000, Cue::KeepGoing}, {20000, Cue::Fanfare}};
    EXPECT_EQ(got, want);
}

TEST(RunSessionTest, ExcursionCueOrder) {
    std::vector<StepInput> stream;
    Millis t = 0;
    auto hold = [&](Level level, Side side, Millis ms) {
        for (Millis end = t + ms; t < end; t += 20) stream.push_back(at(t, level, side));
    };
    hold(Level::OnTrack, Side::None, 1000);
    hold(Level::Moderate, Side::Left, 2000);
    hold(Level::Severe, Side::Left, 3000);
    hold(Level::Moderate, Side::Left, 2000);
    hold(Level::OnTrack, Side::None, 2000);
    EXPECT_EQ(all_cues(run_session(stream, kDefaults)),
              (std::vector<Cue>{Cue::UhOh, Cue::WoahThere, Cue::GettingBetter, Cue::StayOnTrack}));
}

TEST(RunSessionTest, DirectReturnFromSevereOnlySaysStayOnTrack) {
    std::vector<StepInput> stream;
    for (Millis t = 0; t < 400; t += 20) stream.push_back(at(t, Level::Severe, Side::Right));
    for (Millis t = 400; t < 3000; t += 20) stream.push_back(at(t, Level::OnTrack));
    const auto out = run_session(stream, kDefaults);
    EXPECT_EQ(all_cues(out), (std::vector<Cue>{Cue::WoahThere, Cue::StayOnTrack}));
    // Red stays up for its full display time even though the cut recovered.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (stream[i].now < 1500) {
            EXPECT_EQ(out[i].frame.chameleon_color, Color::Red) << stream[i].now;
        }
    }
}

TEST(RunSessionTest, NonIncreasingTimestampsRejectedWithOffender) {
    std::vector<StepInput> stream = {at(0, Level::OnTrack), at(20, Level::OnTrack), at(20, Level::OnTrack)};
    try {
        run_session(stream, kDefaults);
        FAIL() << "expected ClockError";
    } catch (const ClockError& e) {
        EXPECT_NE(std::string(e.what()).find("t=20"), std::string::npos);
    }
}

TEST(RunSessionTest, FoldIsDeterministic) {
    const auto stream = props::random_stream(77);
    EXPECT_EQ(run_session(stream, kDefaults), run_session(stream, kDefaults));
}

TEST(TransitionTableTest, ExhaustiveAgreementWithHandTable) {
    const auto outcomes = oracle::check_transition_table(kDefaults);
    EXPECT_LT(outcomes.size(), 200u);
    EXPECT_EQ(outcomes.size(), 168u);
    for (const auto& o : outcomes) {
        EXPECT_TRUE(o.ok) << to_string(o.input.phase) << "/" << to_string(o.input.side) << " + "
                          << to_string(o.input.reading.level) << "/" << to_string(o.input.reading.side)
                          << (o.input.completed ? " completed" : "") << " [" << oracle::bucket_name(o.input.bucket)
                          << "]: " << o.detail;
    }
}

TEST(TransitionTableTest, AgreementHoldsForOtherTimings) {
    FeedbackConfig cfg;
    cfg.positive_cue_interval = 1234;
    cfg.min_display_moderate = 250;
    cfg.min_display_severe = 2500;
    cfg.de_escalation_hold = 40;
    for (const auto& o : oracle::check_transition_table(cfg)) EXPECT_TRUE(o.ok) << o.detail;
}

TEST(FeedbackProperties, RandomStreamsKeepCueInvariants) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto stream = props::random_stream(seed);
        const auto out = run_session(stream, kDefaults);
        const auto bad = props::check_trace(stream, out, kDefaults);
        ASSERT_TRUE(bad.empty()) << "seed " << seed << ": " << bad.front();
    }
}
