#pragma once

#include "egospeak/features.hpp"
#include "egospeak/labeling.hpp"
#include "egospeak/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace egospeak {

struct TrainConfig {
    std::size_t window_len = 20; // L
    double peak_lr = 1e-3;
    double weight_decay = 5e-5;
    double warmup_fraction = 0.4;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    // Windows drawn per epoch; 0 means one per valid end frame in the data.
    std::size_t windows_per_epoch = 0;
    std::uint64_t seed = 0;
};

void validate(const TrainConfig &cfg); // throws DomainError

// Optimizer settings of the full-size recurrent model (7e-5 peak, 30 epochs,
// batch 64).
TrainConfig full_scale_train_config();

// ─── Objective ───────────────────────────────────────────────────────────────

inline constexpr double kProbabilityFloor = 1e-12;

struct LossValue {
    double loss = 0.0;
    bool no_target = false; // empty target list, loss defined as 0
    bool clamped = false;   // a true-class probability hit the floor
};

// Mean over the available offsets of -log p[j][target_j].
LossValue cross_entropy_loss(const AnticipationScores &scores, const AnticipationTargets &targets);

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Real>
struct WindowGradient {
    BasicGruParams<Real> grads;
    LossValue loss;
};

// Exact gradient of the loss at the last step of frames [begin, begin + len)
// of the stream, by backpropagation through every recurrent step.
// Throws NumericalError naming the block when a gradient is not finite.
template <typename Real>
WindowGradient<Real> backward_window(const BasicGruParams<Real> &params,
                                     const FeatureStream &stream, std::size_t begin,
                                     std::size_t len, const AnticipationTargets &targets);

template <typename Real>
WindowGradient<Real> backward_window(const BasicGruParams<Real> &params,
                                     const FeatureStream &window,
                                     const AnticipationTargets &targets) {
    return backward_window(params, window, 0, window.num_frames(), targets);
}

// Loss of the same window, used for finite-difference checks.
template <typename Real>
LossValue window_loss(const BasicGruParams<Real> &params, const FeatureStream &stream,
                      std::size_t begin, std::size_t len, const AnticipationTargets &targets);

// ─── Optimization ────────────────────────────────────────────────────────────

// Linear warmup from 0 to peak over warmup_fraction of the run, then cosine
// decay to 0.
double lr_at(std::size_t iter, std::size_t total_iters, const TrainConfig &cfg);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename Real>
struct AdamState {
    BasicGruParams<Real> m;
    BasicGruParams<Real> v;
    std::uint64_t step = 0;
};

template <typename Real>
AdamState<Real> make_adam_state(const ModelConfig &cfg) {
    return {zero_params<Real>(cfg), zero_params<Real>(cfg), 0};
}

// Bias-corrected Adam plus decoupled weight decay (lr * wd * w) on weight
// blocks only.
template <typename Real>
void adam_step(BasicGruParams<Real> &params, const BasicGruParams<Real> &grads,
               AdamState<Real> &state, double lr, double weight_decay,
               const AdamHyper &hyper = {});

// ─── Data ────────────────────────────────────────────────────────────────────

struct Clip {
    FeatureStream features;
    LabelTrack labels;
};

// A window ends at end_frame (inclusive) and spans window_len frames.
struct WindowSample {
    std::size_t clip = 0;
    std::size_t end_frame = 0;

    friend bool operator==(const WindowSample &, const WindowSample &) = default;
};

struct WindowBatches {
    std::vector<std::vector<WindowSample>> batches;
    std::vector<std::size_t> skipped_clips; // clips not longer than the window
};

// Uniform over all (clip, end frame) pairs with end frame in [L, T-1].
// Deterministic in (seed, epoch).
WindowBatches sample_windows(std::span<const Clip> clips, std::size_t window_len,
                             std::size_t batch_size, std::size_t num_windows,
                             std::uint64_t seed, std::uint64_t epoch);

std::size_t count_valid_windows(std::span<const Clip> clips, std::size_t window_len);

// ─── Training loop ───────────────────────────────────────────────────────────

struct LossLogEntry {
    std::size_t epoch = 0;
    std::size_t iter = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    GruParams params;
    std::vector<LossLogEntry> log;      // one entry per optimizer step
    std::vector<double> epoch_mean_loss;
    std::size_t completed_epochs = 0;
    bool diverged = false; // params then hold the last good epoch
    std::vector<std::size_t> skipped_clips;
};

struct TrainOptions {
    // When set, writes epoch_<n>.egck after every epoch.
    std::optional<std::filesystem::path> checkpoint_dir;
    std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

inline constexpr double kDivergenceLoss = 1e4;

TrainResult train_model(const ModelConfig &model_cfg, const TrainConfig &cfg,
                        std::span<const Clip> clips, const TrainOptions &options = {});

// CSV `epoch,iter,lr,loss`.
void write_loss_log(const std::vector<LossLogEntry> &log, const std::filesystem::path &path);

} // namespace egospeak
