#pragma once

#include "egospeak/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace egospeak {

// Scalars in the embedding, the three gates and the anticipation head.
std::uint64_t count_params(const ModelConfig &cfg);

// 2 FLOPs per multiply-accumulate over embedding, gates and head for one
// frame; element-wise work is not counted.
std::uint64_t flops_per_frame(const ModelConfig &cfg);

struct BenchResult {
    std::string config_name;
    ModelConfig config;
    std::uint64_t param_count = 0;
    std::uint64_t flops_per_frame = 0;
    double frames_per_second = 0.0; // median over repeats
    double wall_clock_s = 0.0;      // total timed wall clock
    std::size_t num_frames = 0;
    std::size_t repeats = 0;
};

// Times stream_forward on random features after one untimed warm-up run.
BenchResult measure_throughput(const GruParams &params, std::size_t num_frames,
                               std::size_t repeats, std::string config_name = "custom");

// CSV `config,params,flops_per_frame,fps`.
void write_bench_csv(const std::vector<BenchResult> &results, const std::filesystem::path &path);

} // namespace egospeak
