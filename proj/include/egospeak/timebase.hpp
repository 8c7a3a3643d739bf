#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace egospeak {

// ─── Class Vocabulary ────────────────────────────────────────────────────────

// Codes are serialized; never renumber.
enum class ClassId : std::uint8_t {
    Background = 0,
    TargetSpeaker = 1,
    OtherSpeaker = 2,
};

inline constexpr int kNumClasses = 3;

constexpr int class_index(ClassId c) { return static_cast<int>(c); }
ClassId class_from_index(int code); // throws DomainError outside {0,1,2}
std::string_view class_name(ClassId c);

// ─── Frame Clock ─────────────────────────────────────────────────────────────

// Integer frame rate; the frame duration is the exact rational 1/fps.
// Frame i covers [i/fps, (i+1)/fps), so a boundary belongs to the later frame.
class FrameClock {
public:
    explicit FrameClock(std::uint32_t fps = 5);

    std::uint32_t fps() const noexcept { return fps_; }
    double frame_duration_s() const noexcept { return 1.0 / fps_; }

    // Number of whole frames in a clip of the given duration.
    std::size_t frames_in(double duration_s) const;

    friend bool operator==(const FrameClock &, const FrameClock &) = default;

private:
    std::uint32_t fps_;
};

std::size_t time_to_frame(double t_s, const FrameClock &clock);
double frame_midpoint(std::size_t i, const FrameClock &clock);

// ─── Segments and Tracks ─────────────────────────────────────────────────────

enum class SpeakerRole : std::uint8_t { Target, Other };

struct Segment {
    SpeakerRole role = SpeakerRole::Other;
    std::string speaker_id; // empty for the target
    double start_s = 0.0;
    double end_s = 0.0;

    friend bool operator==(const Segment &, const Segment &) = default;
};

void validate_segment(const Segment &s); // throws DomainError

struct LabelTrack {
    FrameClock clock;
    std::vector<ClassId> labels;

    std::size_t size() const noexcept { return labels.size(); }
    ClassId operator[](std::size_t i) const { return labels[i]; }

    friend bool operator==(const LabelTrack &, const LabelTrack &) = default;
};

LabelTrack make_track(std::initializer_list<int> codes, FrameClock clock = FrameClock{});

// CSV with header `frame,class`, one row per frame.
void write_label_csv(const LabelTrack &track, const std::filesystem::path &path);
LabelTrack read_label_csv(const std::filesystem::path &path, FrameClock clock = FrameClock{});

} // namespace egospeak
