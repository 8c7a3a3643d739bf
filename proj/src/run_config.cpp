#include "egospeak/run_config.hpp"

#include "egospeak/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace egospeak {

namespace {

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    std::string out(s.substr(a, b - a + 1));
    if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

template <typename T>
T parse_number(const std::string &key, const std::string &value) {
    T out{};
    const char *first = value.data();
    const char *last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    return out;
}

template <typename T>
std::string show(T v) {
    // Shortest text that parses back to the same value.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Key {
    std::function<void(RunConfig &, const std::string &key, const std::string &)> set;
    std::function<std::string(const RunConfig &)> get;
};

template <typename T>
Key number_key(T RunConfig::*field) {
    return {[field](RunConfig &c, const std::string &k, const std::string &v) {
                c.*field = parse_number<T>(k, v);
            },
            [field](const RunConfig &c) { return show(c.*field); }};
}

template <typename Member, typename T>
Key nested_key(Member RunConfig::*outer, T Member::*field) {
    return {[outer, field](RunConfig &c, const std::string &k, const std::string &v) {
                c.*outer.*field = parse_number<T>(k, v);
            },
            [outer, field](const RunConfig &c) { return show(c.*outer.*field); }};
}

Key path_key(std::filesystem::path RunConfig::*field) {
    return {[field](RunConfig &c, const std::string &, const std::string &v) { c.*field = v; },
            [field](const RunConfig &c) { return (c.*field).string(); }};
}

Key dwell_key(int cls) {
    return {[cls](RunConfig &c, const std::string &k, const std::string &v) {
                c.synth.dwell_mean_frames[cls] = parse_number<double>(k, v);
            },
            [cls](const RunConfig &c) { return show(c.synth.dwell_mean_frames[cls]); }};
}

// "a,b,c;d,e,f;g,h,i" row-major.
Key transitions_key() {
    return {[](RunConfig &c, const std::string &k, const std::string &v) {
                std::stringstream rows(v);
                std::string row;
                int r = 0;
                while (std::getline(rows, row, ';')) {
                    if (r >= kNumClasses) throw ConfigError(k, "expected 3 rows");
                    std::stringstream cols(row);
                    std::string cell;
                    int col = 0;
                    while (std::getline(cols, cell, ',')) {
                        if (col >= kNumClasses) throw ConfigError(k, "expected 3 columns");
                        c.synth.transition_weights[r][col++] = parse_number<double>(k, trim(cell));
                    }
                    if (col != kNumClasses) throw ConfigError(k, "expected 3 columns");
                    ++r;
                }
                if (r != kNumClasses) throw ConfigError(k, "expected 3 rows");
            },
            [](const RunConfig &c) {
                std::string out;
                for (int r = 0; r < kNumClasses; ++r) {
                    for (int k = 0; k < kNumClasses; ++k) {
                        out += show(c.synth.transition_weights[r][k]);
                        if (k + 1 < kNumClasses) out += ',';
                    }
                    if (r + 1 < kNumClasses) out += ';';
                }
                return out;
            }};
}

const std::map<std::string, Key> &key_table() {
    static const std::map<std::string, Key> table = {
        {"fps", number_key(&RunConfig::fps)},
        {"seed", number_key(&RunConfig::seed)},
        {"d_in", nested_key(&RunConfig::model, &ModelConfig::d_in)},
        {"d_embed", nested_key(&RunConfig::model, &ModelConfig::d_embed)},
        {"d_hidden", nested_key(&RunConfig::model, &ModelConfig::d_hidden)},
        {"horizon", nested_key(&RunConfig::model, &ModelConfig::horizon)},
        {"window_len", nested_key(&RunConfig::train, &TrainConfig::window_len)},
        {"peak_lr", nested_key(&RunConfig::train, &TrainConfig::peak_lr)},
        {"weight_decay", nested_key(&RunConfig::train, &TrainConfig::weight_decay)},
        {"warmup_fraction", nested_key(&RunConfig::train, &TrainConfig::warmup_fraction)},
        {"epochs", nested_key(&RunConfig::train, &TrainConfig::epochs)},
        {"batch_size", nested_key(&RunConfig::train, &TrainConfig::batch_size)},
        {"windows_per_epoch", nested_key(&RunConfig::train, &TrainConfig::windows_per_epoch)},
        {"dwell_background", dwell_key(0)},
        {"dwell_target", dwell_key(1)},
        {"dwell_other", dwell_key(2)},
        {"transitions", transitions_key()},
        {"class_separation", nested_key(&RunConfig::synth, &SynthConfig::class_mean_separation)},
        {"noise_sigma", nested_key(&RunConfig::synth, &SynthConfig::noise_sigma)},
        {"cue_lead", nested_key(&RunConfig::synth, &SynthConfig::cue_lead_frames)},
        {"num_frames", number_key(&RunConfig::num_frames)},
        {"trigger_threshold", number_key(&RunConfig::trigger_threshold)},
        {"silence_ms", number_key(&RunConfig::silence_ms)},
        {"grace_frames", number_key(&RunConfig::grace_frames)},
        {"ap_variant",
         {[](RunConfig &c, const std::string &k, const std::string &v) {
              try {
                  c.ap_variant = ap_variant_from_string(v);
              } catch (const DomainError &e) {
                  throw ConfigError(k, e.what());
              }
          },
          [](const RunConfig &c) { return std::string(to_string(c.ap_variant)); }}},
        {"features", path_key(&RunConfig::features)},
        {"labels", path_key(&RunConfig::labels)},
        {"checkpoint", path_key(&RunConfig::checkpoint)},
        {"out_dir", path_key(&RunConfig::out_dir)},
    };
    return table;
}

void apply(RunConfig &cfg, const std::string &key, const std::string &value) {
    const auto &table = key_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown key");
    it->second.set(cfg, key, value);
}

// Pushes shared keys into the component configs and checks every invariant.
void finalize(RunConfig &cfg) {
    cfg.synth.dim = cfg.model.d_in;
    cfg.synth.fps = cfg.fps;
    cfg.synth.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    auto check = [](const char *key, auto &&fn) {
        try {
            fn();
        } catch (const DomainError &e) {
            throw ConfigError(key, e.what());
        }
    };
    auto require = [](bool ok, const char *key, const char *what) {
        if (!ok) throw ConfigError(key, what);
    };
    require(cfg.fps > 0, "fps", "must be positive");
    require(cfg.model.d_in >= 3, "d_in", "must be >= 3 (synthetic class means need one axis per class)");
    require(cfg.model.d_embed >= 1, "d_embed", "must be >= 1");
    require(cfg.model.d_hidden >= 1, "d_hidden", "must be >= 1");
    require(cfg.model.horizon >= 1, "horizon", "must be >= 1");
    require(cfg.train.window_len >= 1, "window_len", "must be >= 1");
    require(cfg.train.peak_lr > 0.0, "peak_lr", "must be positive");
    require(cfg.train.weight_decay >= 0.0, "weight_decay", "must be >= 0");
    require(cfg.train.warmup_fraction > 0.0 && cfg.train.warmup_fraction < 1.0, "warmup_fraction",
            "must lie in (0, 1)");
    require(cfg.train.batch_size >= 1, "batch_size", "must be >= 1");
    require(cfg.synth.dwell_mean_frames[0] >= 1.0, "dwell_background", "must be >= 1 frame");
    require(cfg.synth.dwell_mean_frames[1] >= 1.0, "dwell_target", "must be >= 1 frame");
    require(cfg.synth.dwell_mean_frames[2] >= 1.0, "dwell_other", "must be >= 1 frame");
    require(cfg.synth.class_mean_separation >= 0.0, "class_separation", "must be >= 0");
    require(cfg.synth.noise_sigma > 0.0, "noise_sigma", "must be positive");
    // Anything left (the transition matrix) is caught by the component checks.
    check("fps", [&] { FrameClock{cfg.fps}; });
    check("d_in", [&] { validate(cfg.model); });
    check("window_len", [&] { validate(cfg.train); });
    check("transitions", [&] { validate(cfg.synth); });
    if (!(cfg.trigger_threshold >= 0.0 && cfg.trigger_threshold <= 1.0)) {
        throw ConfigError("trigger_threshold", "must lie in [0, 1]");
    }
    if (cfg.num_frames == 0) throw ConfigError("num_frames", "must be >= 1");
}

} // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto &[k, _] : key_table()) out.push_back(k);
    return out;
}

RunConfig parse_config(const std::optional<std::filesystem::path> &file,
                       const std::vector<std::pair<std::string, std::string>> &overrides) {
    RunConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("", "cannot open config file " + file->string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(trim(line), "line " + std::to_string(lineno) +
                                                  " is not of the form key = value");
            }
            apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }
    for (const auto &[k, v] : overrides) apply(cfg, k, trim(v));
    finalize(cfg);
    return cfg;
}

std::string format_config(const RunConfig &cfg) {
    std::string out;
    for (const auto &[k, key] : key_table()) {
        out += k + " = " + key.get(cfg) + "\n";
    }
    return out;
}

} // namespace egospeak
