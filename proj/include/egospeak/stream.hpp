#pragma once

#include "egospeak/features.hpp"
#include "egospeak/model.hpp"

#include <iosfwd>
#include <stdexcept>

namespace egospeak {

// Raised when an input frame has the wrong number of values.
class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StreamStats {
    std::size_t frames = 0;
    std::size_t skipped_rows = 0;
    std::size_t triggers = 0;
};

// A trigger fires when the 0.2 s-ahead target probability exceeds threshold.
bool speak_trigger(const AnticipationScores &scores, double threshold);

// One JSON record per frame: {"frame": i, "probs": [horizon*K], "trigger": b}.
std::string format_stream_record(std::size_t frame, const AnticipationScores &scores, bool trigger);

// Reads whitespace-separated rows of d_in reals. Malformed rows are skipped
// with a warning on diag; a row with the wrong value count throws
// DimensionMismatch. Each record is flushed as soon as it is computed.
StreamStats stream_text(const GruParams &params, double threshold, std::istream &in,
                        std::ostream &out, std::ostream &diag);

StreamStats stream_features(const GruParams &params, double threshold,
                            const FeatureStream &features, std::ostream &out);

} // namespace egospeak
