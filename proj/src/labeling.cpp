#include "egospeak/labeling.hpp"

#include "egospeak/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace egospeak {

LabelingResult segments_to_labels(const std::vector<Segment> &segments, double duration_s,
                                  const FrameClock &clock) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw DomainError("clip duration must be positive");
    }
    LabelingResult result;
    result.track.clock = clock;
    const std::size_t num_frames = clock.frames_in(duration_s);
    result.track.labels.assign(num_frames, ClassId::Background);

    std::vector<bool> target(num_frames, false);
    std::vector<bool> other(num_frames, false);
    for (const auto &seg : segments) {
        validate_segment(seg);
        const double end = std::min(seg.end_s, duration_s);
        if (seg.end_s > duration_s) ++result.clipped_segments;
        if (seg.start_s >= end) continue;

        auto &mask = seg.role == SpeakerRole::Target ? target : other;
        // First frame whose midpoint is >= start; midpoints are (i + 0.5) / fps.
        const double first = std::ceil(seg.start_s * clock.fps() - 0.5);
        for (std::size_t i = static_cast<std::size_t>(std::max(first, 0.0)); i < num_frames; ++i) {
            const double mid = frame_midpoint(i, clock);
            if (mid >= end) break;
            if (mid >= seg.start_s) mask[i] = true;
        }
    }
    for (std::size_t i = 0; i < num_frames; ++i) {
        if (target[i]) {
            result.track.labels[i] = ClassId::TargetSpeaker;
        } else if (other[i]) {
            result.track.labels[i] = ClassId::OtherSpeaker;
        }
    }
    return result;
}

std::vector<Segment> labels_to_segments(const LabelTrack &track) {
    std::vector<Segment> out;
    const double fps = track.clock.fps();
    std::size_t i = 0;
    while (i < track.size()) {
        const ClassId c = track[i];
        std::size_t j = i + 1;
        while (j < track.size() && track[j] == c) ++j;
        if (c != ClassId::Background) {
            Segment s;
            s.role = c == ClassId::TargetSpeaker ? SpeakerRole::Target : SpeakerRole::Other;
            s.start_s = static_cast<double>(i) / fps;
            s.end_s = static_cast<double>(j) / fps;
            out.push_back(std::move(s));
        }
        i = j;
    }
    return out;
}

std::vector<SpeechSegment> smooth_segments(const std::vector<SpeechSegment> &segments,
                                           double min_dur_s) {
    if (!(min_dur_s >= 0.0)) {
        throw DomainError("min_dur_s must be non-negative");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto &s = segments[i];
        if (!(s.start_s >= 0.0) || !(s.start_s < s.end_s) || !std::isfinite(s.end_s)) {
            throw DomainError("invalid speech segment at index " + std::to_string(i));
        }
        if (i > 0 && s.start_s < segments[i - 1].end_s) {
            throw DomainError("speech segments unsorted or overlapping at index " +
                              std::to_string(i));
        }
    }

    std::vector<SpeechSegment> merged;
    for (const auto &s : segments) {
        if (!merged.empty() && s.start_s - merged.back().end_s < min_dur_s) {
            merged.back().end_s = s.end_s;
        } else {
            merged.push_back(s);
        }
    }
    std::vector<SpeechSegment> out;
    for (const auto &s : merged) {
        if (s.duration() >= min_dur_s) out.push_back(s);
    }
    return out;
}

LabelTrack vad_to_labels(const std::vector<SpeechSegment> &speech, double duration_s,
                         const FrameClock &clock) {
    std::vector<Segment> segs;
    segs.reserve(speech.size());
    for (const auto &s : speech) {
        segs.push_back(Segment{SpeakerRole::Other, "speech", s.start_s, s.end_s});
    }
    return segments_to_labels(segs, duration_s, clock).track;
}

AnticipationTargets anticipation_targets(const LabelTrack &track, std::size_t t,
                                         std::size_t horizon) {
    if (t >= track.size()) {
        throw DomainError("origin frame " + std::to_string(t) + " outside track of length " +
                          std::to_string(track.size()));
    }
    AnticipationTargets out{t, horizon, {}};
    const std::size_t last = std::min(track.size(), t + 1 + horizon);
    for (std::size_t f = t + 1; f < last; ++f) {
        out.targets.push_back(track[f]);
    }
    return out;
}

namespace {

template <typename Fn>
void for_each_json_line(const std::filesystem::path &path, Fn &&fn) {
    std::ifstream in(path);
    if (!in) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception &e) {
            throw FileFormatError(FileErrc::BadHeader, path.string() + ":" +
                                                           std::to_string(lineno) + ": " +
                                                           e.what());
        }
    }
}

} // namespace

std::vector<Segment> read_transcript(const std::filesystem::path &path) {
    std::vector<Segment> out;
    for_each_json_line(path, [&](const nlohmann::json &j) {
        Segment s;
        s.role = j.at("is_target").get<bool>() ? SpeakerRole::Target : SpeakerRole::Other;
        s.speaker_id = j.at("speaker").get<std::string>();
        s.start_s = j.at("start").get<double>();
        s.end_s = j.at("end").get<double>();
        validate_segment(s);
        out.push_back(std::move(s));
    });
    return out;
}

void write_transcript(const std::vector<Segment> &segments, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    for (const auto &s : segments) {
        nlohmann::json j{{"speaker", s.role == SpeakerRole::Target && s.speaker_id.empty()
                                         ? std::string("target")
                                         : s.speaker_id},
                         {"is_target", s.role == SpeakerRole::Target},
                         {"start", s.start_s},
                         {"end", s.end_s}};
        out << j.dump() << '\n';
    }
}

std::vector<SpeechSegment> read_vad(const std::filesystem::path &path) {
    std::vector<SpeechSegment> out;
    for_each_json_line(path, [&](const nlohmann::json &j) {
        out.push_back(SpeechSegment{j.at("start").get<double>(), j.at("end").get<double>()});
    });
    return out;
}

} // namespace egospeak
