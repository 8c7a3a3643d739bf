#include "egospeak/training.hpp"

#include "egospeak/error.hpp"
#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

namespace egospeak {

void validate(const TrainConfig &cfg) {
    if (cfg.window_len == 0) throw DomainError("window_len must be >= 1");
    if (!(cfg.peak_lr > 0.0)) throw DomainError("peak_lr must be positive");
    if (!(cfg.weight_decay >= 0.0)) throw DomainError("weight_decay must be >= 0");
    if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0)) {
        throw DomainError("warmup_fraction must lie in (0, 1)");
    }
    if (cfg.batch_size == 0) throw DomainError("batch_size must be >= 1");
}

TrainConfig full_scale_train_config() {
    TrainConfig cfg;
    cfg.peak_lr = 7e-5;
    cfg.weight_decay = 5e-5;
    cfg.warmup_fraction = 0.4;
    cfg.epochs = 30;
    cfg.batch_size = 64;
    return cfg;
}

LossValue cross_entropy_loss(const AnticipationScores &scores, const AnticipationTargets &targets) {
    LossValue out;
    const std::size_t m = targets.targets.size();
    if (m > scores.horizon) {
        throw DomainError("more targets than anticipated offsets");
    }
    if (m == 0) {
        out.no_target = true;
        return out;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double p = scores.at(j, class_index(targets.targets[j]));
        if (p < kProbabilityFloor) {
            p = kProbabilityFloor;
            out.clamped = true;
        }
        sum += -std::log(p);
    }
    out.loss = sum / static_cast<double>(m);
    return out;
}

// ─── Backpropagation through time ────────────────────────────────────────────

namespace {

template <typename Real>
Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

// Forward activations of one window, kept for the backward pass.
template <typename Real>
struct WindowTrace {
    std::size_t len = 0;
    std::vector<Real> x, e, z, r, c, h_prev, rh; // per step, flattened
    std::vector<Real> h_last;
    std::vector<Real> logits;
    AnticipationScores scores;
};

template <typename Real>
WindowTrace<Real> trace_window(const BasicGruParams<Real> &p, const FeatureStream &stream,
                               std::size_t begin, std::size_t len) {
    const ModelConfig &cfg = p.cfg;
    if (stream.dim() != cfg.d_in) {
        throw DomainError("window feature dimension does not match model d_in");
    }
    if (len == 0 || begin + len > stream.num_frames()) {
        throw DomainError("window out of range");
    }
    const std::size_t D = cfg.d_in, E = cfg.d_embed, H = cfg.d_hidden;
    WindowTrace<Real> tr;
    tr.len = len;
    tr.x.resize(len * D);
    tr.e.resize(len * E);
    tr.z.resize(len * H);
    tr.r.resize(len * H);
    tr.c.resize(len * H);
    tr.h_prev.resize(len * H);
    tr.rh.resize(len * H);

    const auto src = stream.data().subspan(begin * D, len * D);
    std::copy(src.begin(), src.end(), tr.x.begin());
    detail::affine(p.embed_w.data(), p.embed_b.data(), E, D, tr.x.data(), len, tr.e.data());
    for (Real &v : tr.e) v = std::tanh(v);

    std::vector<Real> pre_z(len * H), pre_r(len * H), pre_c(len * H);
    detail::affine(p.update.w_in.data(), p.update.bias.data(), H, E, tr.e.data(), len, pre_z.data());
    detail::affine(p.reset.w_in.data(), p.reset.bias.data(), H, E, tr.e.data(), len, pre_r.data());
    detail::affine(p.candidate.w_in.data(), p.candidate.bias.data(), H, E, tr.e.data(), len,
                   pre_c.data());

    std::vector<Real> h(H, Real(0)), rec(H);
    for (std::size_t t = 0; t < len; ++t) {
        Real *z = tr.z.data() + t * H;
        Real *r = tr.r.data() + t * H;
        Real *c = tr.c.data() + t * H;
        Real *rh = tr.rh.data() + t * H;
        std::copy(h.begin(), h.end(), tr.h_prev.begin() + t * H);
        detail::matvec(p.update.w_rec.data(), H, H, h.data(), rec.data());
        for (std::size_t i = 0; i < H; ++i) z[i] = sigmoid(pre_z[t * H + i] + rec[i]);
        detail::matvec(p.reset.w_rec.data(), H, H, h.data(), rec.data());
        for (std::size_t i = 0; i < H; ++i) {
            r[i] = sigmoid(pre_r[t * H + i] + rec[i]);
            rh[i] = r[i] * h[i];
        }
        detail::matvec(p.candidate.w_rec.data(), H, H, rh, rec.data());
        for (std::size_t i = 0; i < H; ++i) {
            c[i] = std::tanh(pre_c[t * H + i] + rec[i]);
            h[i] = (Real(1) - z[i]) * h[i] + z[i] * c[i];
        }
    }
    tr.h_last = h;
    tr.logits.resize(cfg.head_outputs());
    detail::affine(p.head_w.data(), p.head_b.data(), cfg.head_outputs(), H, h.data(), 1,
                   tr.logits.data());
    for (Real v : tr.logits) {
        if (!std::isfinite(v)) throw NumericalError("non-finite logits in the forward pass");
    }
    tr.scores.horizon = cfg.horizon;
    tr.scores.probs.resize(cfg.head_outputs());
    for (std::size_t j = 0; j < cfg.horizon; ++j) {
        double row[kNumClasses];
        for (int k = 0; k < kNumClasses; ++k) row[k] = static_cast<double>(tr.logits[j * kNumClasses + k]);
        const auto probs = softmax_stable(row);
        std::copy(probs.begin(), probs.end(), tr.scores.probs.begin() + j * kNumClasses);
    }
    return tr;
}

// Adds the window's gradient into grads.
template <typename Real>
LossValue accumulate_window_gradient(const BasicGruParams<Real> &p, const FeatureStream &stream,
                                     std::size_t begin, std::size_t len,
                                     const AnticipationTargets &targets,
                                     BasicGruParams<Real> &grads) {
    const ModelConfig &cfg = p.cfg;
    if (targets.targets.size() > cfg.horizon) {
        throw DomainError("more targets than the model's horizon");
    }
    const WindowTrace<Real> tr = trace_window(p, stream, begin, len);
    const LossValue loss = cross_entropy_loss(tr.scores, targets);
    if (loss.no_target) return loss;

    const std::size_t D = cfg.d_in, E = cfg.d_embed, H = cfg.d_hidden;
    const std::size_t m = targets.targets.size();

    // d loss / d logits: (p - onehot) / m on supervised rows, zero elsewhere.
    std::vector<Real> dlogits(cfg.head_outputs(), Real(0));
    for (std::size_t j = 0; j < m; ++j) {
        const int y = class_index(targets.targets[j]);
        if (tr.scores.at(j, y) < kProbabilityFloor) continue; // clamped: flat loss
        for (int k = 0; k < kNumClasses; ++k) {
            const double g = (tr.scores.at(j, k) - (k == y ? 1.0 : 0.0)) / static_cast<double>(m);
            dlogits[j * kNumClasses + k] = static_cast<Real>(g);
        }
    }
    detail::outer_acc(dlogits.data(), cfg.head_outputs(), tr.h_last.data(), H, grads.head_w.data());
    for (std::size_t o = 0; o < cfg.head_outputs(); ++o) grads.head_b[o] += dlogits[o];

    std::vector<Real> dh(H, Real(0));
    detail::matvec_transposed_acc(p.head_w.data(), cfg.head_outputs(), H, dlogits.data(), dh.data());

    std::vector<Real> dh_prev(H), dz_pre(H), dr_pre(H), dc_pre(H), drh(H), de(E), de_pre(E);
    for (std::size_t step = len; step-- > 0;) {
        const Real *x = tr.x.data() + step * D;
        const Real *e = tr.e.data() + step * E;
        const Real *z = tr.z.data() + step * H;
        const Real *r = tr.r.data() + step * H;
        const Real *c = tr.c.data() + step * H;
        const Real *hp = tr.h_prev.data() + step * H;
        const Real *rh = tr.rh.data() + step * H;

        for (std::size_t i = 0; i < H; ++i) {
            const Real dz = dh[i] * (c[i] - hp[i]);
            const Real dc = dh[i] * z[i];
            dh_prev[i] = dh[i] * (Real(1) - z[i]);
            dc_pre[i] = dc * (Real(1) - c[i] * c[i]);
            dz_pre[i] = dz * z[i] * (Real(1) - z[i]);
        }
        // Candidate gate: c = tanh(W_c e + U_c (r*h) + b_c).
        detail::outer_acc(dc_pre.data(), H, rh, H, grads.candidate.w_rec.data());
        detail::outer_acc(dc_pre.data(), H, e, E, grads.candidate.w_in.data());
        std::fill(drh.begin(), drh.end(), Real(0));
        detail::matvec_transposed_acc(p.candidate.w_rec.data(), H, H, dc_pre.data(), drh.data());
        for (std::size_t i = 0; i < H; ++i) {
            grads.candidate.bias[i] += dc_pre[i];
            dh_prev[i] += drh[i] * r[i];
            dr_pre[i] = drh[i] * hp[i] * r[i] * (Real(1) - r[i]);
        }
        detail::outer_acc(dr_pre.data(), H, hp, H, grads.reset.w_rec.data());
        detail::outer_acc(dr_pre.data(), H, e, E, grads.reset.w_in.data());
        detail::outer_acc(dz_pre.data(), H, hp, H, grads.update.w_rec.data());
        detail::outer_acc(dz_pre.data(), H, e, E, grads.update.w_in.data());
        for (std::size_t i = 0; i < H; ++i) {
            grads.reset.bias[i] += dr_pre[i];
            grads.update.bias[i] += dz_pre[i];
        }
        detail::matvec_transposed_acc(p.reset.w_rec.data(), H, H, dr_pre.data(), dh_prev.data());
        detail::matvec_transposed_acc(p.update.w_rec.data(), H, H, dz_pre.data(), dh_prev.data());

        // Back into the embedding e = tanh(W_e x + b_e).
        std::fill(de.begin(), de.end(), Real(0));
        detail::matvec_transposed_acc(p.update.w_in.data(), H, E, dz_pre.data(), de.data());
        detail::matvec_transposed_acc(p.reset.w_in.data(), H, E, dr_pre.data(), de.data());
        detail::matvec_transposed_acc(p.candidate.w_in.data(), H, E, dc_pre.data(), de.data());
        for (std::size_t i = 0; i < E; ++i) {
            de_pre[i] = de[i] * (Real(1) - e[i] * e[i]);
            grads.embed_b[i] += de_pre[i];
        }
        detail::outer_acc(de_pre.data(), E, x, D, grads.embed_w.data());
        dh.swap(dh_prev);
    }
    return loss;
}

template <typename Real>
void check_finite(const BasicGruParams<Real> &grads) {
    grads.for_each_block([](std::string_view name, const std::vector<Real> &block, BlockKind) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (!std::isfinite(block[i])) {
                throw NumericalError("non-finite gradient in block " + std::string(name) +
                                     " at index " + std::to_string(i));
            }
        }
    });
}

} // namespace

template <typename Real>
WindowGradient<Real> backward_window(const BasicGruParams<Real> &params,
                                     const FeatureStream &stream, std::size_t begin,
                                     std::size_t len, const AnticipationTargets &targets) {
    WindowGradient<Real> out{zero_params<Real>(params.cfg), {}};
    out.loss = accumulate_window_gradient(params, stream, begin, len, targets, out.grads);
    check_finite(out.grads);
    return out;
}

template <typename Real>
LossValue window_loss(const BasicGruParams<Real> &params, const FeatureStream &stream,
                      std::size_t begin, std::size_t len, const AnticipationTargets &targets) {
    return cross_entropy_loss(trace_window(params, stream, begin, len).scores, targets);
}

// ─── Optimizer ───────────────────────────────────────────────────────────────

double lr_at(std::size_t iter, std::size_t total_iters, const TrainConfig &cfg) {
    if (total_iters == 0) throw DomainError("lr_at: total_iters must be positive");
    if (iter > total_iters) throw DomainError("lr_at: iteration past the end of the schedule");
    const double total = static_cast<double>(total_iters);
    const double warmup = cfg.warmup_fraction * total;
    const double it = static_cast<double>(iter);
    if (it < warmup) {
        return cfg.peak_lr * it / warmup;
    }
    const double progress = (it - warmup) / (total - warmup);
    return cfg.peak_lr * (1.0 + std::cos(std::numbers::pi * progress)) / 2.0;
}

template <typename Real>
void adam_step(BasicGruParams<Real> &params, const BasicGruParams<Real> &grads,
               AdamState<Real> &state, double lr, double weight_decay, const AdamHyper &hyper) {
    if (grads.cfg != params.cfg || state.m.cfg != params.cfg) {
        throw DomainError("adam_step: parameter, gradient and state shapes differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);

    std::vector<const std::vector<Real> *> g_blocks;
    std::vector<std::vector<Real> *> m_blocks, v_blocks;
    grads.for_each_block([&](std::string_view, const std::vector<Real> &b, BlockKind) { g_blocks.push_back(&b); });
    state.m.for_each_block([&](std::string_view, std::vector<Real> &b, BlockKind) { m_blocks.push_back(&b); });
    state.v.for_each_block([&](std::string_view, std::vector<Real> &b, BlockKind) { v_blocks.push_back(&b); });

    std::size_t idx = 0;
    params.for_each_block([&](std::string_view, std::vector<Real> &w, BlockKind kind) {
        const auto &g = *g_blocks[idx];
        auto &m = *m_blocks[idx];
        auto &v = *v_blocks[idx];
        ++idx;
        const double decay = kind == BlockKind::Weight ? lr * weight_decay : 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * gi;
            const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * gi * gi;
            m[i] = static_cast<Real>(mi);
            v[i] = static_cast<Real>(vi);
            const double m_hat = mi / correction1;
            const double v_hat = vi / correction2;
            const double wi = static_cast<double>(w[i]);
            w[i] = static_cast<Real>(wi - decay * wi - lr * m_hat / (std::sqrt(v_hat) + hyper.eps));
        }
    });
}

// ─── Window sampling ─────────────────────────────────────────────────────────

std::size_t count_valid_windows(std::span<const Clip> clips, std::size_t window_len) {
    std::size_t n = 0;
    for (const auto &clip : clips) {
        const std::size_t T = clip.labels.size();
        if (T > window_len) n += T - window_len;
    }
    return n;
}

WindowBatches sample_windows(std::span<const Clip> clips, std::size_t window_len,
                             std::size_t batch_size, std::size_t num_windows, std::uint64_t seed,
                             std::uint64_t epoch) {
    if (window_len == 0 || batch_size == 0) {
        throw DomainError("window_len and batch_size must be >= 1");
    }
    WindowBatches out;
    // Prefix sums over usable clips of their end-frame counts T - L.
    std::vector<std::size_t> clip_index;
    std::vector<std::size_t> prefix{0};
    for (std::size_t c = 0; c < clips.size(); ++c) {
        const std::size_t T = clips[c].labels.size();
        if (clips[c].features.num_frames() != T) {
            throw DomainError("clip " + std::to_string(c) + " has mismatched feature/label lengths");
        }
        if (T <= window_len) {
            out.skipped_clips.push_back(c);
            continue;
        }
        clip_index.push_back(c);
        prefix.push_back(prefix.back() + (T - window_len));
    }
    const std::size_t total = prefix.back();
    if (total == 0) return out;

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);

    const std::size_t num_batches = std::max<std::size_t>(1, num_windows / batch_size);
    out.batches.resize(num_batches);
    for (auto &batch : out.batches) {
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const std::size_t u = pick(rng);
            const auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
            const std::size_t slot = static_cast<std::size_t>(it - prefix.begin()) - 1;
            batch.push_back({clip_index[slot], window_len + (u - prefix[slot])});
        }
    }
    return out;
}

// ─── Training loop ───────────────────────────────────────────────────────────

namespace {

void scale_params(GruParams &p, float factor) {
    p.for_each_block([&](std::string_view, std::vector<float> &b, BlockKind) {
        for (float &v : b) v *= factor;
    });
}

void zero_fill(GruParams &p) {
    p.for_each_block([](std::string_view, std::vector<float> &b, BlockKind) {
        std::fill(b.begin(), b.end(), 0.0f);
    });
}

} // namespace

TrainResult train_model(const ModelConfig &model_cfg, const TrainConfig &cfg,
                        std::span<const Clip> clips, const TrainOptions &options) {
    validate(model_cfg);
    validate(cfg);
    TrainResult result;
    result.params = init_params(model_cfg, cfg.seed);
    if (cfg.epochs == 0) return result;

    const std::size_t valid = count_valid_windows(clips, cfg.window_len);
    if (valid == 0) {
        throw DomainError("no clip is longer than the training window");
    }
    const std::size_t per_epoch = cfg.windows_per_epoch ? cfg.windows_per_epoch : valid;
    const std::size_t iters_per_epoch = std::max<std::size_t>(1, per_epoch / cfg.batch_size);
    const std::size_t total_iters = iters_per_epoch * cfg.epochs;

    GruParams params = result.params;
    GruParams last_good = params;
    AdamState<float> adam = make_adam_state<float>(model_cfg);
    GruParams grads = zero_params<float>(model_cfg);
    const std::size_t L = cfg.window_len;

    std::size_t iter = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
        const WindowBatches sampled =
            sample_windows(clips, L, cfg.batch_size, per_epoch, cfg.seed, epoch);
        if (epoch == 0) result.skipped_clips = sampled.skipped_clips;
        double epoch_sum = 0.0;
        for (const auto &batch : sampled.batches) {
            zero_fill(grads);
            double loss_sum = 0.0;
            try {
                for (const WindowSample &s : batch) {
                    const Clip &clip = clips[s.clip];
                    const auto targets =
                        anticipation_targets(clip.labels, s.end_frame, model_cfg.horizon);
                    loss_sum += accumulate_window_gradient(params, clip.features,
                                                           s.end_frame + 1 - L, L, targets, grads)
                                    .loss;
                }
                check_finite(grads);
            } catch (const NumericalError &) {
                result.diverged = true;
                break;
            }
            const double batch_loss = loss_sum / static_cast<double>(batch.size());
            if (!std::isfinite(batch_loss) || batch_loss > kDivergenceLoss) {
                result.diverged = true;
                break;
            }
            scale_params(grads, 1.0f / static_cast<float>(batch.size()));
            const double lr = lr_at(iter, total_iters, cfg);
            adam_step(params, grads, adam, lr, cfg.weight_decay);
            result.log.push_back({epoch, iter, lr, batch_loss});
            epoch_sum += batch_loss;
            ++iter;
        }
        if (result.diverged) break;

        last_good = params;
        const double mean = epoch_sum / static_cast<double>(sampled.batches.size());
        result.epoch_mean_loss.push_back(mean);
        result.completed_epochs = epoch + 1;
        if (options.checkpoint_dir) {
            std::filesystem::create_directories(*options.checkpoint_dir);
            write_checkpoint(params, *options.checkpoint_dir /
                                         ("epoch_" + std::to_string(epoch + 1) + ".egck"));
        }
        if (options.on_epoch) options.on_epoch(epoch + 1, mean);
    }
    result.params = std::move(last_good);
    return result;
}

void write_loss_log(const std::vector<LossLogEntry> &log, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    out << "epoch,iter,lr,loss\n";
    out.precision(17);
    for (const auto &e : log) {
        out << e.epoch << ',' << e.iter << ',' << e.lr << ',' << e.loss << '\n';
    }
}

#define EGOSPEAK_INSTANTIATE(Real)                                                                 \
    template WindowGradient<Real> backward_window<Real>(                                           \
        const BasicGruParams<Real> &, const FeatureStream &, std::size_t, std::size_t,             \
        const AnticipationTargets &);                                                              \
    template LossValue window_loss<Real>(const BasicGruParams<Real> &, const FeatureStream &,      \
                                         std::size_t, std::size_t, const AnticipationTargets &);   \
    template void adam_step<Real>(BasicGruParams<Real> &, const BasicGruParams<Real> &,            \
                                  AdamState<Real> &, double, double, const AdamHyper &);

EGOSPEAK_INSTANTIATE(float)
EGOSPEAK_INSTANTIATE(double)

#undef EGOSPEAK_INSTANTIATE

} // namespace egospeak
