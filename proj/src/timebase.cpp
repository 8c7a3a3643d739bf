#include "egospeak/timebase.hpp"

#include "egospeak/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace egospeak {

std::string_view to_string(FileErrc code) {
    switch (code) {
    case FileErrc::Io: return "io";
    case FileErrc::BadMagic: return "bad-magic";
    case FileErrc::VersionMismatch: return "version-mismatch";
    case FileErrc::BadHeader: return "bad-header";
    case FileErrc::Truncated: return "truncated";
    case FileErrc::TrailingData: return "trailing-data";
    case FileErrc::NonFinite: return "non-finite";
    }
    return "unknown";
}

ClassId class_from_index(int code) {
    if (code < 0 || code >= kNumClasses) {
        throw DomainError("class code out of range: " + std::to_string(code));
    }
    return static_cast<ClassId>(code);
}

std::string_view class_name(ClassId c) {
    switch (c) {
    case ClassId::Background: return "background";
    case ClassId::TargetSpeaker: return "target";
    case ClassId::OtherSpeaker: return "other";
    }
    return "?";
}

FrameClock::FrameClock(std::uint32_t fps) : fps_(fps) {
    if (fps == 0) {
        throw DomainError("frame rate must be positive");
    }
}

namespace {

// floor(x), except values within rounding noise of an integer snap to it, so
// that e.g. 1.4 s at 5 FPS lands on frame 7 rather than 6.
std::size_t snapped_floor(double x) {
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::floor(x));
}

} // namespace

std::size_t FrameClock::frames_in(double duration_s) const {
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
        throw DomainError("duration must be finite and non-negative");
    }
    return snapped_floor(duration_s * fps_);
}

std::size_t time_to_frame(double t_s, const FrameClock &clock) {
    if (!(t_s >= 0.0) || !std::isfinite(t_s)) {
        throw DomainError("time must be finite and non-negative");
    }
    return snapped_floor(t_s * clock.fps());
}

double frame_midpoint(std::size_t i, const FrameClock &clock) {
    return (static_cast<double>(i) + 0.5) / clock.fps();
}

void validate_segment(const Segment &s) {
    if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s) || s.start_s < 0.0 ||
        !(s.start_s < s.end_s)) {
        throw DomainError("segment must satisfy 0 <= start < end, got [" +
                          std::to_string(s.start_s) + ", " + std::to_string(s.end_s) + ")");
    }
}

LabelTrack make_track(std::initializer_list<int> codes, FrameClock clock) {
    LabelTrack track{clock, {}};
    track.labels.reserve(codes.size());
    for (int c : codes) {
        track.labels.push_back(class_from_index(c));
    }
    return track;
}

void write_label_csv(const LabelTrack &track, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    out << "frame,class\n";
    for (std::size_t i = 0; i < track.size(); ++i) {
        out << i << ',' << class_index(track[i]) << '\n';
    }
    if (!out) {
        throw FileFormatError(FileErrc::Io, "write failed: " + path.string());
    }
}

LabelTrack read_label_csv(const std::filesystem::path &path, FrameClock clock) {
    std::ifstream in(path);
    if (!in) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("frame,class", 0) != 0) {
        throw FileFormatError(FileErrc::BadHeader, path.string() + ": expected header frame,class");
    }
    LabelTrack track{clock, {}};
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        std::size_t frame = 0;
        int code = -1;
        const char *first = line.data();
        const char *last = line.data() + line.size();
        const bool ok = comma != std::string::npos &&
                        std::from_chars(first, first + comma, frame).ec == std::errc{} &&
                        std::from_chars(first + comma + 1, last, code).ec == std::errc{};
        if (!ok || frame != row || code < 0 || code >= kNumClasses) {
            throw FileFormatError(FileErrc::BadHeader,
                                  path.string() + ": malformed row " + std::to_string(row));
        }
        track.labels.push_back(static_cast<ClassId>(code));
        ++row;
    }
    return track;
}

} // namespace egospeak
