#pragma once

#include "egospeak/timebase.hpp"

#include <filesystem>
#include <vector>

namespace egospeak {

struct LabelingResult {
    LabelTrack track;
    std::size_t clipped_segments = 0; // segments that ran past the clip end
};

// Frame i takes the class of the segment containing its midpoint. Target
// speech wins over other speech where both are present.
LabelingResult segments_to_labels(const std::vector<Segment> &segments, double duration_s,
                                  const FrameClock &clock);

// Maximal non-background runs, one segment per run.
std::vector<Segment> labels_to_segments(const LabelTrack &track);

// ─── Binary speech segments (VAD) ────────────────────────────────────────────

struct SpeechSegment {
    double start_s = 0.0;
    double end_s = 0.0;

    double duration() const { return end_s - start_s; }
    friend bool operator==(const SpeechSegment &, const SpeechSegment &) = default;
};

inline constexpr double kMinSpeechDurationS = 0.2;

// Merges gaps shorter than min_dur_s, then drops segments shorter than
// min_dur_s. Input must be sorted and non-overlapping.
std::vector<SpeechSegment> smooth_segments(const std::vector<SpeechSegment> &segments,
                                           double min_dur_s = kMinSpeechDurationS);

// Speech maps to OtherSpeaker and silence to Background.
LabelTrack vad_to_labels(const std::vector<SpeechSegment> &speech, double duration_s,
                         const FrameClock &clock);

// ─── Anticipation targets ────────────────────────────────────────────────────

struct AnticipationTargets {
    std::size_t origin_frame = 0;
    std::size_t horizon = 0;
    std::vector<ClassId> targets; // targets[j] is the label at origin + 1 + j
};

AnticipationTargets anticipation_targets(const LabelTrack &track, std::size_t t,
                                         std::size_t horizon);

// ─── Line-delimited JSON inputs ──────────────────────────────────────────────

// {"speaker": "...", "is_target": bool, "start": s, "end": s} per line.
std::vector<Segment> read_transcript(const std::filesystem::path &path);
void write_transcript(const std::vector<Segment> &segments, const std::filesystem::path &path);

// {"start": s, "end": s} per line.
std::vector<SpeechSegment> read_vad(const std::filesystem::path &path);

} // namespace egospeak
