#include "egospeak/baselines.hpp"
#include "egospeak/bench.hpp"
#include "egospeak/error.hpp"
#include "egospeak/eval.hpp"
#include "egospeak/features.hpp"
#include "egospeak/labeling.hpp"
#include "egospeak/model.hpp"
#include "egospeak/run_config.hpp"
#include "egospeak/stream.hpp"
#include "egospeak/training.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace egospeak;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Held-out synthetic data uses a seed disjoint from the training stream.
constexpr std::uint64_t kHeldOutSeedOffset = 1'000'003;

struct Options {
    std::optional<fs::path> config_file;
    std::map<std::string, std::string> overrides;
};

RunConfig resolve(const Options &opts) {
    std::vector<std::pair<std::string, std::string>> ov(opts.overrides.begin(), opts.overrides.end());
    return parse_config(opts.config_file, ov);
}

// The resolved config goes to stderr and, for commands with artifacts, to
// <out_dir>/<command>.log.
void log_config(const RunConfig &cfg, const std::string &command, bool to_file) {
    const std::string text = format_config(cfg);
    std::cerr << "# egospeak " << command << "\n" << text;
    if (to_file) {
        fs::create_directories(cfg.out_dir);
        std::ofstream(cfg.out_dir / (command + ".log")) << "# egospeak " << command << "\n" << text;
    }
}

fs::path or_default(const fs::path &p, const fs::path &dir, const char *name) {
    return p.empty() ? dir / name : p;
}

// Features and labels from files when configured, otherwise a synthetic
// conversation of num_frames.
Clip load_clip(const RunConfig &cfg, bool held_out) {
    if (!cfg.features.empty() || !cfg.labels.empty()) {
        if (cfg.features.empty() || cfg.labels.empty()) {
            throw ConfigError("features", "features and labels must be given together");
        }
        FeatureStream f = read_feature_file(cfg.features);
        LabelTrack l = read_label_csv(cfg.labels, FrameClock(cfg.fps));
        if (f.clock().fps() != cfg.fps) {
            throw DomainError("feature file is at " + std::to_string(f.clock().fps()) +
                              " fps, config says " + std::to_string(cfg.fps));
        }
        if (f.num_frames() != l.size()) {
            throw DomainError("features have " + std::to_string(f.num_frames()) + " frames, labels " +
                              std::to_string(l.size()));
        }
        return {std::move(f), std::move(l)};
    }
    SynthConfig sc = cfg.synth;
    if (held_out) sc.seed += kHeldOutSeedOffset;
    auto clip = synth_conversation(sc, cfg.num_frames);
    return {std::move(clip.features), std::move(clip.labels)};
}

GruParams load_model(const RunConfig &cfg) {
    if (cfg.checkpoint.empty()) throw ConfigError("checkpoint", "a checkpoint is required");
    return read_checkpoint(cfg.checkpoint);
}

void print_summary(const EvalReport &r) {
    std::printf("avg mAP %.4f", r.avg_map.value_or(std::nan("")));
    for (int k = 0; k < kNumClasses; ++k) {
        std::printf("  %s AP %.4f", std::string(class_name(class_from_index(k))).c_str(),
                    r.per_class_avg[k].value_or(std::nan("")));
    }
    std::printf("  (%zu absent cells)\n", r.absent_cells);
}

// ─── Subcommands ─────────────────────────────────────────────────────────────

int run_synth(const RunConfig &cfg) {
    const auto clip = synth_conversation(cfg.synth, cfg.num_frames);
    const fs::path f = or_default(cfg.features, cfg.out_dir, "features.egf");
    const fs::path l = or_default(cfg.labels, cfg.out_dir, "labels.csv");
    write_feature_file(clip.features, f);
    write_label_csv(clip.labels, l);
    std::printf("wrote %zu frames to %s and %s\n", clip.features.num_frames(), f.c_str(), l.c_str());
    return 0;
}

struct LabelArgs {
    fs::path transcript;
    fs::path vad;
    double duration = 0.0;
    bool smooth = false;
};

int run_label(const RunConfig &cfg, const LabelArgs &a) {
    const FrameClock clock(cfg.fps);
    const fs::path out = or_default(cfg.labels, cfg.out_dir, "labels.csv");
    if (a.transcript.empty() == a.vad.empty()) {
        throw ConfigError("", "label needs exactly one of --transcript or --vad");
    }
    if (!a.transcript.empty()) {
        if (a.smooth) {
            throw ConfigError("", "--smooth applies to voice activity input only");
        }
        const auto r = segments_to_labels(read_transcript(a.transcript), a.duration, clock);
        write_label_csv(r.track, out);
        if (r.clipped_segments) {
            std::cerr << "warning: " << r.clipped_segments << " segment(s) clipped at the clip end\n";
        }
        std::printf("wrote %zu frames to %s\n", r.track.size(), out.c_str());
        return 0;
    }
    auto speech = read_vad(a.vad);
    if (a.smooth) speech = smooth_segments(speech);
    const auto track = vad_to_labels(speech, a.duration, clock);
    write_label_csv(track, out);
    std::printf("wrote %zu frames to %s\n", track.size(), out.c_str());
    return 0;
}

int run_train(const RunConfig &cfg, bool save_epochs) {
    const std::vector<Clip> clips{load_clip(cfg, false)};
    TrainOptions opts;
    if (save_epochs) opts.checkpoint_dir = cfg.out_dir / "epochs";
    opts.on_epoch = [](std::size_t epoch, double loss) {
        std::fprintf(stderr, "epoch %zu mean loss %.6f\n", epoch, loss);
    };
    const auto result = train_model(cfg.model, cfg.train, clips, opts);
    for (auto c : result.skipped_clips) std::cerr << "warning: clip " << c << " is shorter than the window\n";
    const fs::path ckpt = or_default(cfg.checkpoint, cfg.out_dir, "model.egck");
    write_checkpoint(result.params, ckpt);
    write_loss_log(result.log, cfg.out_dir / "loss.csv");
    if (result.diverged) {
        std::cerr << "error: training diverged after " << result.completed_epochs
                  << " epoch(s); wrote the last good parameters to " << ckpt << "\n";
        return kExitRuntime;
    }
    std::printf("trained %zu epochs, wrote %s\n", result.completed_epochs, ckpt.c_str());
    return 0;
}

ScoreSequence baseline_scores(const RunConfig &cfg, const std::string &kind, const LabelTrack &gt) {
    if (kind == "random") return random_baseline_scores(gt.size(), cfg.model.horizon, cfg.seed);
    if (kind == "silence") {
        const auto triggers = silence_triggers(gt, cfg.silence_ms);
        write_triggers_csv(triggers, cfg.out_dir / "triggers.csv");
        return target_track_scores(generous_score_track(triggers, gt, cfg.grace_frames),
                                   cfg.model.horizon);
    }
    throw ConfigError("baseline", "unknown baseline '" + kind + "' (random or silence)");
}

int report_on(const RunConfig &cfg, const ScoreSequence &scores, const LabelTrack &gt) {
    auto report = evaluate_stream(scores, gt, cfg.ap_variant);
    report.fps = cfg.fps;
    write_report(report, cfg.out_dir);
    print_summary(report);
    return 0;
}

int run_eval(const RunConfig &cfg, const std::string &baseline) {
    const Clip clip = load_clip(cfg, true);
    if (!baseline.empty()) return report_on(cfg, baseline_scores(cfg, baseline, clip.labels), clip.labels);
    return report_on(cfg, stream_forward(load_model(cfg), clip.features), clip.labels);
}

int run_baseline(const RunConfig &cfg, const std::string &kind) {
    const Clip clip = load_clip(cfg, true);
    return report_on(cfg, baseline_scores(cfg, kind, clip.labels), clip.labels);
}

int run_bench(const RunConfig &cfg, std::size_t frames, std::size_t repeats, bool full) {
    std::vector<BenchResult> results;
    results.push_back(measure_throughput(init_params(cfg.model, cfg.seed), frames, repeats, "config"));
    results.push_back(
        measure_throughput(init_params(desk_model_config(), cfg.seed), frames, repeats, "desk"));
    if (full) {
        results.push_back(measure_throughput(init_params(full_scale_model_config(), cfg.seed),
                                             std::max<std::size_t>(frames / 20, 1000), repeats,
                                             "full"));
    }
    write_bench_csv(results, cfg.out_dir / "bench.csv");
    for (const auto &r : results) {
        std::printf("%-8s params %12llu  flops/frame %12llu  %12.1f frames/s\n", r.config_name.c_str(),
                    static_cast<unsigned long long>(r.param_count),
                    static_cast<unsigned long long>(r.flops_per_frame), r.frames_per_second);
    }
    return 0;
}

int run_stream(const RunConfig &cfg, const fs::path &input) {
    const GruParams params = load_model(cfg);
    StreamStats stats;
    if (!input.empty()) {
        stats = stream_features(params, cfg.trigger_threshold, read_feature_file(input), std::cout);
    } else {
        stats = stream_text(params, cfg.trigger_threshold, std::cin, std::cout, std::cerr);
    }
    std::cerr << "# " << stats.frames << " frames, " << stats.triggers << " triggers, "
              << stats.skipped_rows << " skipped rows\n";
    return 0;
}

std::vector<std::size_t> parse_lengths(const std::string &text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception &) {
            throw ConfigError("lengths", "expected a comma-separated list of positive integers");
        }
    }
    if (out.empty()) throw ConfigError("lengths", "no window lengths given");
    return out;
}

// Trains one model per window length and evaluates each on held-out data.
int run_sweep(const RunConfig &cfg, const std::string &lengths) {
    const auto Ls = parse_lengths(lengths);
    const std::vector<Clip> train{load_clip(cfg, false)};
    const Clip test = load_clip(cfg, true);
    fs::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / "sweep.csv");
    csv << "window_len,avg_map,target_ap\n";
    for (std::size_t L : Ls) {
        TrainConfig tc = cfg.train;
        tc.window_len = L;
        const auto result = train_model(cfg.model, tc, train);
        const auto report = evaluate_stream(stream_forward(result.params, test.features), test.labels,
                                            cfg.ap_variant);
        const double avg = report.avg_map.value_or(std::nan(""));
        const double tgt = report.per_class_avg[class_index(ClassId::TargetSpeaker)].value_or(std::nan(""));
        char line[96];
        std::snprintf(line, sizeof line, "%zu,%.6f,%.6f\n", L, avg, tgt);
        csv << line << std::flush;
        std::printf("L=%-4zu avg mAP %.4f  target AP %.4f%s\n", L, avg, tgt,
                    result.diverged ? "  (diverged)" : "");
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Streaming speech-initiation prediction toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Options opts;
    app.add_option("--config", opts.config_file, "Config file of `key = value` lines")
        ->check(CLI::ExistingFile);
    for (const auto &key : config_keys()) {
        app.add_option_function<std::string>(
               "--" + key, [&opts, key](const std::string &v) { opts.overrides[key] = v; },
               "Override config key " + key)
            ->group("Config keys");
    }

    auto *synth = app.add_subcommand("synth", "Generate synthetic features and labels");

    LabelArgs label_args;
    auto *label = app.add_subcommand("label", "Convert a transcript or VAD output to a label track");
    label->add_option("--transcript", label_args.transcript, "JSONL speaker segments");
    label->add_option("--vad", label_args.vad, "JSONL speech segments");
    label->add_option("--duration", label_args.duration, "Clip duration in seconds")->required();
    label->add_flag("--smooth", label_args.smooth, "Merge short gaps and drop short speech first");

    bool save_epochs = false;
    auto *train = app.add_subcommand("train", "Train the recurrent anticipation model");
    train->add_flag("--save-epochs", save_epochs, "Write a checkpoint after every epoch");

    std::string eval_baseline;
    auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline on held-out data");
    eval->add_option("--baseline", eval_baseline, "random or silence instead of a checkpoint");

    std::string baseline_kind;
    auto *baseline = app.add_subcommand("baseline", "Run a non-learned baseline");
    baseline->add_option("kind", baseline_kind, "random or silence")->required();

    std::size_t bench_frames = 20000, bench_repeats = 5;
    bool bench_full = false;
    auto *bench = app.add_subcommand("bench", "Measure inference throughput");
    bench->add_option("--frames", bench_frames, "Frames per timed run")->check(CLI::Range(1000, 100000000));
    bench->add_option("--repeats", bench_repeats, "Timed repeats")->check(CLI::Range(1, 1000));
    bench->add_flag("--full", bench_full, "Also time the full-size preset");

    fs::path stream_input;
    auto *stream = app.add_subcommand("stream", "Score frames as they arrive on stdin");
    stream->add_option("--input-file", stream_input, "Read a binary feature file instead of stdin");

    std::string sweep_lengths = "1,2,5,10,20,40";
    auto *sweep = app.add_subcommand("sweep-L", "Train and evaluate across window lengths");
    sweep->add_option("--lengths", sweep_lengths, "Comma-separated window lengths");

    for (auto *sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const RunConfig cfg = resolve(opts);
        auto *sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        log_config(cfg, name, name != "stream");
        if (sub == synth) return run_synth(cfg);
        if (sub == label) return run_label(cfg, label_args);
        if (sub == train) return run_train(cfg, save_epochs);
        if (sub == eval) return run_eval(cfg, eval_baseline);
        if (sub == baseline) return run_baseline(cfg, baseline_kind);
        if (sub == bench) return run_bench(cfg, bench_frames, bench_repeats, bench_full);
        if (sub == stream) return run_stream(cfg, stream_input);
        if (sub == sweep) return run_sweep(cfg, sweep_lengths);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
