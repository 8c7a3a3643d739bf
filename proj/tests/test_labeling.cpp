#include "egospeak/error.hpp"
#include "egospeak/labeling.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace egospeak;

namespace {

std::vector<int> codes(const LabelTrack &t) {
    std::vector<int> out;
    for (auto c : t.labels) out.push_back(class_index(c));
    return out;
}

Segment target(double a, double b) { return {SpeakerRole::Target, "", a, b}; }
Segment other(double a, double b) { return {SpeakerRole::Other, "b", a, b}; }

} // namespace

TEST_CASE("segments_to_labels worked examples") {
    const FrameClock clock(5);
    CHECK(codes(segments_to_labels({target(0.0, 0.4)}, 1.0, clock).track) ==
          std::vector<int>{1, 1, 0, 0, 0});
    CHECK(codes(segments_to_labels({}, 0.6, clock).track) == std::vector<int>{0, 0, 0});
    CHECK(codes(segments_to_labels({target(0.0, 1.0), other(0.0, 1.0)}, 1.0, clock).track) ==
          std::vector<int>{1, 1, 1, 1, 1});
}

TEST_CASE("segments past the clip end are clipped and counted") {
    const auto r = segments_to_labels({other(0.6, 3.0)}, 1.0, FrameClock(5));
    CHECK(r.clipped_segments == 1);
    CHECK(codes(r.track) == std::vector<int>{0, 0, 0, 2, 2});
}

TEST_CASE("invalid segments and durations are rejected") {
    CHECK_THROWS_AS(segments_to_labels({target(0.5, 0.2)}, 1.0, FrameClock(5)), DomainError);
    CHECK_THROWS_AS(segments_to_labels({}, 0.0, FrameClock(5)), DomainError);
}

TEST_CASE("labels_to_segments worked examples") {
    auto s = labels_to_segments(make_track({1, 1, 0, 0, 0}));
    REQUIRE(s.size() == 1);
    CHECK(s[0].role == SpeakerRole::Target);
    CHECK(s[0].start_s == 0.0);
    CHECK(s[0].end_s == doctest::Approx(0.4));

    CHECK(labels_to_segments(make_track({0, 0, 0})).empty());

    s = labels_to_segments(make_track({1, 2, 1}));
    REQUIRE(s.size() == 3);
    CHECK(s[0].role == SpeakerRole::Target);
    CHECK(s[1].role == SpeakerRole::Other);
    CHECK(s[2].role == SpeakerRole::Target);
    CHECK(s[1].start_s == doctest::Approx(0.2));
    CHECK(s[1].end_s == doctest::Approx(0.4));
    CHECK(s[2].end_s == doctest::Approx(0.6));
}

TEST_CASE("smooth_segments worked examples") {
    CHECK(smooth_segments({{0.0, 1.0}, {1.1, 2.0}}) == std::vector<SpeechSegment>{{0.0, 2.0}});
    CHECK(smooth_segments({{0.0, 0.15}}).empty());
    const std::vector<SpeechSegment> spaced{{0.0, 1.0}, {1.5, 2.5}};
    CHECK(smooth_segments(spaced) == spaced);
}

TEST_CASE("smooth_segments merges before dropping") {
    // Two 0.1 s bursts 0.05 s apart survive as one 0.25 s segment.
    CHECK(smooth_segments({{0.0, 0.1}, {0.15, 0.25}}) == std::vector<SpeechSegment>{{0.0, 0.25}});
}

TEST_CASE("smooth_segments rejects unsorted or overlapping input") {
    CHECK_THROWS_AS(smooth_segments({{1.0, 2.0}, {0.0, 0.5}}), DomainError);
    CHECK_THROWS_AS(smooth_segments({{0.0, 1.0}, {0.5, 1.5}}), DomainError);
}

TEST_CASE("smooth_segments is idempotent and never adds segments") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> gap(0.0, 0.5), len(0.01, 0.8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<SpeechSegment> segs;
        double t = gap(rng);
        const int n = static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            const double a = t;
            const double b = a + len(rng);
            segs.push_back({a, b});
            t = b + gap(rng) + 1e-6;
        }
        const auto once = smooth_segments(segs);
        CHECK(smooth_segments(once) == once);
        CHECK(once.size() <= segs.size());
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(once[i].duration() >= kMinSpeechDurationS);
            if (i > 0) CHECK(once[i].start_s - once[i - 1].end_s >= kMinSpeechDurationS);
        }
    }
}

TEST_CASE("vad labels are binary other/background") {
    const auto track = vad_to_labels({{0.2, 0.6}}, 1.0, FrameClock(5));
    CHECK(codes(track) == std::vector<int>{0, 2, 2, 0, 0});
}

TEST_CASE("anticipation_targets") {
    const auto track = make_track({0, 0, 1, 1, 1});
    auto a = anticipation_targets(track, 1, 3);
    CHECK(a.targets == std::vector<ClassId>{ClassId::TargetSpeaker, ClassId::TargetSpeaker,
                                            ClassId::TargetSpeaker});
    a = anticipation_targets(track, 3, 3);
    CHECK(a.targets == std::vector<ClassId>{ClassId::TargetSpeaker});
    CHECK(anticipation_targets(track, 0, 0).targets.empty());
    CHECK(anticipation_targets(track, 4, 3).targets.empty());
    CHECK_THROWS_AS(anticipation_targets(track, 5, 3), DomainError);
}

TEST_CASE("transcript and vad files") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "egospeak_transcript.jsonl";
    const std::vector<Segment> segs{{SpeakerRole::Target, "me", 0.0, 1.2},
                                    {SpeakerRole::Other, "alice", 1.0, 2.5}};
    write_transcript(segs, path);
    CHECK(read_transcript(path) == segs);

    const auto vad = dir / "egospeak_vad.jsonl";
    {
        std::ofstream out(vad);
        out << R"({"start": 0.0, "end": 1.0})" << "\n\n" << R"({"start": 1.1, "end": 2.0})" << "\n";
    }
    CHECK(read_vad(vad) == std::vector<SpeechSegment>{{0.0, 1.0}, {1.1, 2.0}});
    {
        std::ofstream out(vad);
        out << R"({"start": 0.0})" << "\n";
    }
    CHECK_THROWS_AS(read_vad(vad), FileFormatError);
    std::filesystem::remove(path);
    std::filesystem::remove(vad);
}

TEST_CASE("segment round trip keeps every boundary within one frame") {
    std::mt19937_64 rng(3);
    const FrameClock clock(5);
    const double frame = clock.frame_duration_s();
    for (int trial = 0; trial < 200; ++trial) {
        double duration = 0.0;
        const auto segs = gen::random_segments(rng, frame, &duration);
        const auto rebuilt = labels_to_segments(segments_to_labels(segs, duration, clock).track);
        REQUIRE(rebuilt.size() == segs.size());
        for (std::size_t i = 0; i < segs.size(); ++i) {
            CHECK(rebuilt[i].role == segs[i].role);
            CHECK(std::abs(rebuilt[i].start_s - segs[i].start_s) <= frame);
            CHECK(std::abs(rebuilt[i].end_s - segs[i].end_s) <= frame);
        }
    }
}
