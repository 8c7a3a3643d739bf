#pragma once

#include "egospeak/scores.hpp"
#include "egospeak/timebase.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace egospeak {

enum class ApVariant {
    // Mean of precision at the rank of each positive (non-interpolated AP).
    PositivesRank,
    // Mean of precision at every rank of the sorted list.
    AllThresholds,
};

std::string_view to_string(ApVariant v);
ApVariant ap_variant_from_string(std::string_view name); // throws DomainError

// Items are ranked by descending score, ties broken by ascending index.
// Returns nullopt when there are no positives.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> positives,
                                        ApVariant variant = ApVariant::PositivesRank);

struct EvalReport {
    std::size_t horizon = 0;
    std::uint32_t fps = 5;
    ApVariant variant = ApVariant::PositivesRank;
    // ap[j][k]: offset j + 1, class k; absent when the class has no positives
    // among the evaluable frames.
    std::vector<std::array<std::optional<double>, kNumClasses>> ap;
    std::vector<std::optional<double>> map_per_offset; // mean over present classes
    std::optional<double> avg_map;                     // mean over present offsets
    std::array<std::optional<double>, kNumClasses> per_class_avg{}; // mean over offsets
    std::size_t absent_cells = 0;

    std::optional<double> class_ap(std::size_t offset, ClassId c) const {
        return ap[offset - 1][class_index(c)];
    }
};

// For offset j and class k, pairs scores[t][j-1][k] with [gt[t+j] == k] over
// every t with t + j < T.
EvalReport evaluate_stream(const ScoreSequence &pred, const LabelTrack &gt,
                           ApVariant variant = ApVariant::PositivesRank);

// Fills the aggregate fields from report.ap.
void summarize(EvalReport &report);

// Writes <dir>/report.txt (offset-by-class table with an Avg column) and
// <dir>/report.csv (`offset_s,class,ap`, absent values left empty).
void write_report(const EvalReport &report, const std::filesystem::path &dir);

// Rebuilds a report from report.csv.
EvalReport read_report(const std::filesystem::path &dir);

// Column headers "0.20s" ... for each offset.
std::vector<std::string> offset_headers(std::size_t horizon, std::uint32_t fps);

} // namespace egospeak
