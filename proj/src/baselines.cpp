#include "egospeak/baselines.hpp"

#include "egospeak/error.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace egospeak {

ScoreSequence random_baseline_scores(std::size_t num_frames, std::size_t horizon,
                                     std::uint64_t seed) {
    if (num_frames == 0) throw DomainError("random baseline needs at least one frame");
    ScoreSequence out(num_frames, horizon);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, kNumClasses - 1);
    for (std::size_t t = 0; t < num_frames; ++t) {
        for (std::size_t j = 0; j < horizon; ++j) {
            out.at(t, j, pick(rng)) = 1.0;
        }
    }
    return out;
}

std::vector<TriggerEvent> silence_triggers(const LabelTrack &track, int silence_ms) {
    const long long scaled = static_cast<long long>(silence_ms) * track.clock.fps();
    if (silence_ms <= 0 || scaled % 1000 != 0) {
        throw DomainError("silence interval of " + std::to_string(silence_ms) +
                          " ms is not a positive whole number of frames");
    }
    const auto n = static_cast<std::size_t>(scaled / 1000);

    std::vector<TriggerEvent> out;
    std::size_t silent_run = 0; // background frames since the last other-speaker frame
    bool armed = false;
    for (std::size_t t = 0; t < track.size(); ++t) {
        if (armed && silent_run == n) {
            out.push_back({t});
            armed = false;
        }
        switch (track[t]) {
        case ClassId::OtherSpeaker:
            armed = true;
            silent_run = 0;
            break;
        case ClassId::Background:
            ++silent_run;
            break;
        case ClassId::TargetSpeaker:
            armed = false;
            break;
        }
    }
    return out;
}

std::vector<double> generous_score_track(const std::vector<TriggerEvent> &triggers,
                                         const LabelTrack &gt, std::size_t grace_frames) {
    const std::size_t T = gt.size();
    std::vector<double> scores(T, 0.0);
    for (std::size_t i = 0; i < triggers.size(); ++i) {
        if (triggers[i].frame >= T) {
            throw DomainError("trigger at frame " + std::to_string(triggers[i].frame) +
                              " outside track of length " + std::to_string(T));
        }
        if (i > 0 && triggers[i].frame < triggers[i - 1].frame) {
            throw DomainError("triggers must be sorted");
        }
    }
    auto fill_segment = [&](std::size_t inside) {
        std::size_t a = inside;
        while (a > 0 && gt[a - 1] == ClassId::TargetSpeaker) --a;
        std::size_t b = inside;
        while (b < T && gt[b] == ClassId::TargetSpeaker) ++b;
        std::fill(scores.begin() + static_cast<std::ptrdiff_t>(a),
                  scores.begin() + static_cast<std::ptrdiff_t>(b), 1.0);
    };
    for (const auto &trig : triggers) {
        const std::size_t t = trig.frame;
        if (gt[t] == ClassId::TargetSpeaker) {
            fill_segment(t);
            continue;
        }
        bool matched = false;
        for (std::size_t s = t + 1; s <= t + grace_frames && s < T; ++s) {
            if (gt[s] == ClassId::TargetSpeaker) { // first target frame after t starts a segment
                fill_segment(s);
                matched = true;
                break;
            }
        }
        if (!matched) scores[t] = 1.0;
    }
    return scores;
}

ScoreSequence target_track_scores(const std::vector<double> &target_scores, std::size_t horizon) {
    ScoreSequence out(target_scores.size(), horizon);
    for (std::size_t t = 0; t < target_scores.size(); ++t) {
        for (std::size_t j = 0; j < horizon; ++j) {
            out.at(t, j, class_index(ClassId::TargetSpeaker)) = target_scores[t];
        }
    }
    return out;
}

void write_triggers_csv(const std::vector<TriggerEvent> &triggers,
                        const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    out << "frame\n";
    for (const auto &t : triggers) out << t.frame << '\n';
}

} // namespace egospeak
