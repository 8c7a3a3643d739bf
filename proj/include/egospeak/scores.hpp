#pragma once

#include "egospeak/timebase.hpp"

#include <span>
#include <vector>

namespace egospeak {

// [horizon x K] probabilities for one frame, row-major; row j is offset j+1.
struct AnticipationScores {
    std::size_t horizon = 0;
    std::vector<double> probs;

    double at(std::size_t j, int k) const { return probs[j * kNumClasses + k]; }
    std::span<const double> row(std::size_t j) const {
        return {probs.data() + j * kNumClasses, static_cast<std::size_t>(kNumClasses)};
    }
};

// Per-frame anticipation scores for a whole stream: frames x horizon x K.
class ScoreSequence {
public:
    ScoreSequence() = default;
    ScoreSequence(std::size_t frames, std::size_t horizon)
        : frames_(frames), horizon_(horizon), values_(frames * horizon * kNumClasses, 0.0) {}

    std::size_t num_frames() const noexcept { return frames_; }
    std::size_t horizon() const noexcept { return horizon_; }

    double at(std::size_t t, std::size_t j, int k) const { return values_[index(t, j, k)]; }
    double &at(std::size_t t, std::size_t j, int k) { return values_[index(t, j, k)]; }

    std::span<const double> frame(std::size_t t) const {
        return {values_.data() + t * horizon_ * kNumClasses, horizon_ * kNumClasses};
    }
    std::span<double> frame(std::size_t t) {
        return {values_.data() + t * horizon_ * kNumClasses, horizon_ * kNumClasses};
    }

    AnticipationScores frame_scores(std::size_t t) const {
        auto f = frame(t);
        return {horizon_, std::vector<double>(f.begin(), f.end())};
    }

    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const ScoreSequence &, const ScoreSequence &) = default;

private:
    std::size_t index(std::size_t t, std::size_t j, int k) const {
        return (t * horizon_ + j) * kNumClasses + static_cast<std::size_t>(k);
    }

    std::size_t frames_ = 0;
    std::size_t horizon_ = 0;
    std::vector<double> values_;
};

} // namespace egospeak
