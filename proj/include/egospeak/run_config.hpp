#pragma once

#include "egospeak/eval.hpp"
#include "egospeak/features.hpp"
#include "egospeak/model.hpp"
#include "egospeak/training.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace egospeak {

// Everything a CLI run can be configured with. `d_in`, `fps` and `seed` are
// shared by the model, trainer and synthesizer.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SynthConfig synth;
    std::size_t num_frames = 50000; // synthesized clip length
    double trigger_threshold = 0.5;
    int silence_ms = 600;
    std::size_t grace_frames = 3;
    ApVariant ap_variant = ApVariant::PositivesRank;
    std::uint32_t fps = 5;
    std::uint64_t seed = 0;

    std::filesystem::path features;
    std::filesystem::path labels;
    std::filesystem::path checkpoint;
    std::filesystem::path out_dir = ".";
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string &what)
        : std::runtime_error(key.empty() ? what : "config key '" + key + "': " + what),
          key_(std::move(key)) {}

    const std::string &key() const noexcept { return key_; }

private:
    std::string key_;
};

// Names of every accepted key.
std::vector<std::string> config_keys();

// Defaults, then `key = value` lines from the file, then overrides in order.
// Throws ConfigError naming the offending key.
RunConfig parse_config(const std::optional<std::filesystem::path> &file,
                       const std::vector<std::pair<std::string, std::string>> &overrides = {});

// Fully resolved `key = value` listing, parseable by parse_config.
std::string format_config(const RunConfig &cfg);

} // namespace egospeak
