#include "egospeak/stream.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace egospeak {

bool speak_trigger(const AnticipationScores &scores, double threshold) {
    return scores.at(0, class_index(ClassId::TargetSpeaker)) > threshold;
}

std::string format_stream_record(std::size_t frame, const AnticipationScores &scores, bool trigger) {
    nlohmann::json j;
    j["frame"] = frame;
    j["probs"] = scores.probs;
    j["trigger"] = trigger;
    return j.dump();
}

namespace {

void emit(std::size_t frame, const AnticipationScores &scores, double threshold,
          std::ostream &out, StreamStats &stats) {
    const bool trig = speak_trigger(scores, threshold);
    stats.triggers += trig ? 1 : 0;
    out << format_stream_record(frame, scores, trig) << '\n';
    out.flush();
}

// Parses one row; false if any token is not a finite real.
bool parse_row(const std::string &line, std::vector<float> &row) {
    row.clear();
    const char *p = line.data();
    const char *end = line.data() + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) ++p;
        if (p == end) break;
        float v = 0.0f;
        const auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || !std::isfinite(v)) return false;
        if (next < end && *next != ' ' && *next != '\t' && *next != '\r' && *next != ',') return false;
        row.push_back(v);
        p = next;
    }
    return true;
}

} // namespace

StreamStats stream_text(const GruParams &params, double threshold, std::istream &in,
                        std::ostream &out, std::ostream &diag) {
    OnlineGru<float> online(params);
    StreamStats stats;
    std::string line;
    std::vector<float> row;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!parse_row(line, row)) {
            ++stats.skipped_rows;
            diag << "warning: skipping malformed frame on input line " << lineno << '\n';
            continue;
        }
        if (row.size() != params.cfg.d_in) {
            throw DimensionMismatch("input line " + std::to_string(lineno) + " has " +
                                    std::to_string(row.size()) + " values, model expects " +
                                    std::to_string(params.cfg.d_in));
        }
        emit(stats.frames++, online.push(row), threshold, out, stats);
    }
    return stats;
}

StreamStats stream_features(const GruParams &params, double threshold,
                            const FeatureStream &features, std::ostream &out) {
    if (features.dim() != params.cfg.d_in) {
        throw DimensionMismatch("feature file has dimension " + std::to_string(features.dim()) +
                                ", model expects " + std::to_string(params.cfg.d_in));
    }
    OnlineGru<float> online(params);
    StreamStats stats;
    for (std::size_t t = 0; t < features.num_frames(); ++t) {
        emit(stats.frames++, online.push(features.frame(t)), threshold, out, stats);
    }
    return stats;
}

} // namespace egospeak
