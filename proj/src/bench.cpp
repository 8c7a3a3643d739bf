#include "egospeak/bench.hpp"

#include "egospeak/error.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>

namespace egospeak {

std::uint64_t count_params(const ModelConfig &cfg) {
    validate(cfg);
    const std::uint64_t d_in = cfg.d_in, e = cfg.d_embed, h = cfg.d_hidden;
    const std::uint64_t out = cfg.head_outputs();
    return d_in * e + e + 3 * (e * h + h * h + h) + h * out + out;
}

std::uint64_t flops_per_frame(const ModelConfig &cfg) {
    validate(cfg);
    const std::uint64_t d_in = cfg.d_in, e = cfg.d_embed, h = cfg.d_hidden;
    const std::uint64_t macs = d_in * e + 3 * (e * h + h * h) + h * cfg.head_outputs();
    return 2 * macs;
}

BenchResult measure_throughput(const GruParams &params, std::size_t num_frames,
                               std::size_t repeats, std::string config_name) {
    if (num_frames == 0 || repeats == 0) {
        throw DomainError("benchmark needs at least one frame and one repeat");
    }
    const ModelConfig &cfg = params.cfg;
    std::mt19937_64 rng(1234);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> data(num_frames * cfg.d_in);
    for (float &v : data) v = dist(rng);
    const FeatureStream stream(FrameClock{}, cfg.d_in, std::move(data), "bench");

    (void)stream_forward(params, stream); // warm-up

    using Clock = std::chrono::steady_clock;
    std::vector<double> fps;
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        const ScoreSequence scores = stream_forward(params, stream);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        total += secs;
        fps.push_back(static_cast<double>(num_frames) / secs);
        if (scores.num_frames() != num_frames) throw std::logic_error("short benchmark output");
    }
    std::sort(fps.begin(), fps.end());
    const std::size_t mid = fps.size() / 2;
    const double median = fps.size() % 2 ? fps[mid] : 0.5 * (fps[mid - 1] + fps[mid]);

    BenchResult result;
    result.config_name = std::move(config_name);
    result.config = cfg;
    result.param_count = count_params(cfg);
    result.flops_per_frame = flops_per_frame(cfg);
    result.frames_per_second = median;
    result.wall_clock_s = total;
    result.num_frames = num_frames;
    result.repeats = repeats;
    return result;
}

void write_bench_csv(const std::vector<BenchResult> &results, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    out << "config,params,flops_per_frame,fps\n";
    for (const auto &r : results) {
        out << r.config_name << ',' << r.param_count << ',' << r.flops_per_frame << ','
            << r.frames_per_second << '\n';
    }
}

} // namespace egospeak
