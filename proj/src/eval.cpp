#include "egospeak/eval.hpp"

#include "egospeak/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace egospeak {

std::string_view to_string(ApVariant v) {
    return v == ApVariant::PositivesRank ? "positives-rank" : "all-thresholds";
}

ApVariant ap_variant_from_string(std::string_view name) {
    if (name == "positives-rank") return ApVariant::PositivesRank;
    if (name == "all-thresholds") return ApVariant::AllThresholds;
    throw DomainError("unknown AP variant: " + std::string(name));
}

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> positives,
                                        ApVariant variant) {
    if (scores.size() != positives.size()) {
        throw DomainError("average_precision: scores and labels differ in length");
    }
    if (scores.empty()) throw DomainError("average_precision: empty input");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t num_pos = 0;
    for (auto p : positives) num_pos += p ? 1 : 0;
    if (num_pos == 0) return std::nullopt;

    double sum = 0.0;
    std::size_t tp = 0;
    for (std::size_t rank = 1; rank <= n; ++rank) {
        const bool pos = positives[order[rank - 1]] != 0;
        if (pos) ++tp;
        const double precision = static_cast<double>(tp) / static_cast<double>(rank);
        if (variant == ApVariant::AllThresholds || pos) sum += precision;
    }
    const double denom = variant == ApVariant::PositivesRank ? static_cast<double>(num_pos)
                                                             : static_cast<double>(n);
    return sum / denom;
}

void summarize(EvalReport &report) {
    report.map_per_offset.assign(report.horizon, std::nullopt);
    report.per_class_avg = {};
    report.absent_cells = 0;
    for (std::size_t j = 0; j < report.horizon; ++j) {
        double sum = 0.0;
        int present = 0;
        for (int k = 0; k < kNumClasses; ++k) {
            if (report.ap[j][k]) {
                sum += *report.ap[j][k];
                ++present;
            } else {
                ++report.absent_cells;
            }
        }
        if (present > 0) report.map_per_offset[j] = sum / present;
    }
    double sum = 0.0;
    int present = 0;
    for (const auto &m : report.map_per_offset) {
        if (m) {
            sum += *m;
            ++present;
        }
    }
    report.avg_map = present > 0 ? std::optional<double>(sum / present) : std::nullopt;
    for (int k = 0; k < kNumClasses; ++k) {
        double s = 0.0;
        int n = 0;
        for (std::size_t j = 0; j < report.horizon; ++j) {
            if (report.ap[j][k]) {
                s += *report.ap[j][k];
                ++n;
            }
        }
        if (n > 0) report.per_class_avg[k] = s / n;
    }
}

EvalReport evaluate_stream(const ScoreSequence &pred, const LabelTrack &gt, ApVariant variant) {
    if (pred.num_frames() != gt.size()) {
        throw DomainError("prediction covers " + std::to_string(pred.num_frames()) +
                          " frames but ground truth has " + std::to_string(gt.size()));
    }
    if (pred.horizon() == 0) throw DomainError("evaluation needs a horizon >= 1");

    EvalReport report;
    report.horizon = pred.horizon();
    report.fps = gt.clock.fps();
    report.variant = variant;
    report.ap.resize(report.horizon);

    const std::size_t T = gt.size();
    std::vector<double> scores;
    std::vector<std::uint8_t> positives;
    for (std::size_t j = 1; j <= report.horizon; ++j) {
        const std::size_t n = T > j ? T - j : 0;
        for (int k = 0; k < kNumClasses; ++k) {
            scores.resize(n);
            positives.resize(n);
            for (std::size_t t = 0; t < n; ++t) {
                scores[t] = pred.at(t, j - 1, k);
                positives[t] = class_index(gt[t + j]) == k ? 1 : 0;
            }
            report.ap[j - 1][k] = n > 0 ? average_precision(scores, positives, variant)
                                        : std::nullopt;
        }
    }
    summarize(report);
    return report;
}

std::vector<std::string> offset_headers(std::size_t horizon, std::uint32_t fps) {
    std::vector<std::string> out;
    for (std::size_t j = 1; j <= horizon; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2fs", static_cast<double>(j) / fps);
        out.emplace_back(buf);
    }
    return out;
}

namespace {

std::string cell(const std::optional<double> &v, const char *fmt) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

} // namespace

void write_report(const EvalReport &report, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    const auto headers = offset_headers(report.horizon, report.fps);
    {
        std::ofstream txt(dir / "report.txt");
        if (!txt) throw FileFormatError(FileErrc::Io, "cannot write " + (dir / "report.txt").string());
        txt << "# per-frame average precision (" << to_string(report.variant) << "), "
            << report.absent_cells << " absent cells excluded from means\n";
        txt << "class";
        for (const auto &h : headers) txt << '\t' << h;
        txt << "\tAvg\n";
        for (int k = 0; k < kNumClasses; ++k) {
            txt << class_name(static_cast<ClassId>(k));
            for (std::size_t j = 0; j < report.horizon; ++j) txt << '\t' << cell(report.ap[j][k], "%.4f");
            txt << '\t' << cell(report.per_class_avg[k], "%.4f") << '\n';
        }
        txt << "mAP";
        for (const auto &m : report.map_per_offset) txt << '\t' << cell(m, "%.4f");
        txt << '\t' << cell(report.avg_map, "%.4f") << '\n';
    }
    std::ofstream csv(dir / "report.csv");
    if (!csv) throw FileFormatError(FileErrc::Io, "cannot write " + (dir / "report.csv").string());
    csv << "offset_s,class,ap\n";
    for (std::size_t j = 0; j < report.horizon; ++j) {
        for (int k = 0; k < kNumClasses; ++k) {
            char off[32];
            std::snprintf(off, sizeof off, "%.2f", static_cast<double>(j + 1) / report.fps);
            csv << off << ',' << k << ',' << cell(report.ap[j][k], "%.12f") << '\n';
        }
    }
}

EvalReport read_report(const std::filesystem::path &dir) {
    std::ifstream in(dir / "report.csv");
    if (!in) throw FileFormatError(FileErrc::Io, "cannot open " + (dir / "report.csv").string());
    std::string line;
    if (!std::getline(in, line) || line != "offset_s,class,ap") {
        throw FileFormatError(FileErrc::BadHeader, "report.csv: unexpected header");
    }
    struct Row {
        double offset;
        int cls;
        std::optional<double> ap;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string off, cls, ap;
        std::getline(ss, off, ',');
        std::getline(ss, cls, ',');
        std::getline(ss, ap);
        try {
            rows.push_back({std::stod(off), std::stoi(cls),
                            ap.empty() ? std::nullopt : std::optional<double>(std::stod(ap))});
        } catch (const std::exception &) {
            throw FileFormatError(FileErrc::BadHeader, "report.csv: malformed row: " + line);
        }
    }
    if (rows.empty() || rows.size() % kNumClasses != 0) {
        throw FileFormatError(FileErrc::Truncated, "report.csv: incomplete table");
    }
    EvalReport report;
    report.horizon = rows.size() / kNumClasses;
    report.fps = static_cast<std::uint32_t>(std::lround(1.0 / rows.front().offset));
    report.ap.resize(report.horizon);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto &r = rows[i];
        if (r.cls != static_cast<int>(i % kNumClasses)) {
            throw FileFormatError(FileErrc::BadHeader, "report.csv: rows out of order");
        }
        report.ap[i / kNumClasses][r.cls] = r.ap;
    }
    summarize(report);
    return report;
}

} // namespace egospeak
