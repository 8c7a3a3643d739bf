#include "egospeak/model.hpp"

#include "egospeak/error.hpp"
#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace egospeak {

void validate(const ModelConfig &cfg) {
    if (cfg.d_in == 0 || cfg.d_embed == 0 || cfg.d_hidden == 0) {
        throw DomainError("model dimensions must be >= 1");
    }
    if (cfg.horizon == 0) throw DomainError("anticipation horizon must be >= 1");
    if (cfg.num_classes != static_cast<std::size_t>(kNumClasses)) {
        throw DomainError("the model predicts exactly 3 classes");
    }
}

ModelConfig desk_model_config() { return ModelConfig{}; }

ModelConfig full_scale_model_config() {
    ModelConfig cfg;
    cfg.d_in = 2048;
    cfg.d_embed = 2048;
    cfg.d_hidden = 1024;
    cfg.horizon = 10;
    return cfg;
}

template <typename Real>
std::size_t BasicGruParams<Real>::scalar_count() const {
    std::size_t n = 0;
    for_each_block([&](std::string_view, const std::vector<Real> &b, BlockKind) { n += b.size(); });
    return n;
}

template <typename Real>
BasicGruParams<Real> zero_params(const ModelConfig &cfg) {
    validate(cfg);
    BasicGruParams<Real> p;
    p.cfg = cfg;
    const std::size_t e = cfg.d_embed;
    const std::size_t h = cfg.d_hidden;
    p.embed_w.assign(e * cfg.d_in, Real(0));
    p.embed_b.assign(e, Real(0));
    for (GateParams<Real> *g : {&p.update, &p.reset, &p.candidate}) {
        g->w_in.assign(h * e, Real(0));
        g->w_rec.assign(h * h, Real(0));
        g->bias.assign(h, Real(0));
    }
    p.head_w.assign(cfg.head_outputs() * h, Real(0));
    p.head_b.assign(cfg.head_outputs(), Real(0));
    return p;
}

namespace {

std::size_t fan_in(const ModelConfig &cfg, std::string_view block) {
    if (block == "embed_w") return cfg.d_in;
    if (block.ends_with("w_in")) return cfg.d_embed;
    return cfg.d_hidden; // recurrent and head weights
}

} // namespace

GruParams init_params(const ModelConfig &cfg, std::uint64_t seed) {
    GruParams p = zero_params<float>(cfg);
    std::mt19937_64 rng(seed);
    p.for_each_block([&](std::string_view name, std::vector<float> &block, BlockKind kind) {
        if (kind == BlockKind::Bias) return;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(cfg, name)));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (float &w : block) w = static_cast<float>(dist(rng));
    });
    return p;
}

template <typename Real>
void validate(const BasicGruParams<Real> &params) {
    validate(params.cfg);
    const BasicGruParams<Real> shape = zero_params<Real>(params.cfg);
    std::vector<std::size_t> sizes;
    shape.for_each_block(
        [&](std::string_view, const std::vector<Real> &b, BlockKind) { sizes.push_back(b.size()); });
    std::size_t i = 0;
    params.for_each_block([&](std::string_view name, const std::vector<Real> &b, BlockKind) {
        if (b.size() != sizes[i++]) {
            throw DomainError("parameter block " + std::string(name) + " has the wrong shape");
        }
        for (Real v : b) {
            if (!std::isfinite(v)) {
                throw DomainError("parameter block " + std::string(name) + " is not finite");
            }
        }
    });
}

std::vector<double> softmax_stable(std::span<const double> logits) {
    double max = -INFINITY;
    for (double l : logits) {
        if (!std::isfinite(l)) throw DomainError("softmax input is not finite");
        max = std::max(max, l);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - max);
        sum += p[k];
    }
    for (double &v : p) v /= sum;
    return p;
}

// ─── Shared step machinery ───────────────────────────────────────────────────

namespace {

template <typename Real>
Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

template <typename Real>
struct StepBuffers {
    explicit StepBuffers(const ModelConfig &cfg)
        : rec_z(cfg.d_hidden), rec_r(cfg.d_hidden), rec_c(cfg.d_hidden), z(cfg.d_hidden),
          rh(cfg.d_hidden), logits(cfg.head_outputs()), logits_d(cfg.head_outputs()) {}

    std::vector<Real> rec_z, rec_r, rec_c, z, rh, logits;
    std::vector<double> logits_d;
};

// Embeds n frames (tanh of affine) into E, n x d_embed.
template <typename Real>
void embed_frames(const BasicGruParams<Real> &p, const Real *X, std::size_t n, Real *E) {
    detail::affine(p.embed_w.data(), p.embed_b.data(), p.cfg.d_embed, p.cfg.d_in, X, n, E);
    for (std::size_t i = 0; i < n * p.cfg.d_embed; ++i) E[i] = std::tanh(E[i]);
}

// Input pre-activations b_g + W_g x for n embedded inputs; P holds, per input,
// [update | reset | candidate] blocks of d_hidden each.
template <typename Real>
void gate_inputs(const BasicGruParams<Real> &p, const Real *E, std::size_t n, Real *P,
                 std::vector<Real> &tmp) {
    const std::size_t h = p.cfg.d_hidden;
    const std::size_t e = p.cfg.d_embed;
    tmp.resize(n * h);
    const GateParams<Real> *gates[3] = {&p.update, &p.reset, &p.candidate};
    for (std::size_t g = 0; g < 3; ++g) {
        detail::affine(gates[g]->w_in.data(), gates[g]->bias.data(), h, e, E, n, tmp.data());
        for (std::size_t f = 0; f < n; ++f) {
            std::copy_n(tmp.data() + f * h, h, P + f * 3 * h + g * h);
        }
    }
}

// h <- GRU(h) given the input pre-activations of one frame.
template <typename Real>
void recurrent_update(const BasicGruParams<Real> &p, const Real *pre, Real *h,
                      StepBuffers<Real> &buf) {
    const std::size_t H = p.cfg.d_hidden;
    detail::matvec(p.update.w_rec.data(), H, H, h, buf.rec_z.data());
    detail::matvec(p.reset.w_rec.data(), H, H, h, buf.rec_r.data());
    for (std::size_t i = 0; i < H; ++i) {
        buf.z[i] = sigmoid(pre[i] + buf.rec_z[i]);
        const Real r = sigmoid(pre[H + i] + buf.rec_r[i]);
        buf.rh[i] = r * h[i];
    }
    detail::matvec(p.candidate.w_rec.data(), H, H, buf.rh.data(), buf.rec_c.data());
    for (std::size_t i = 0; i < H; ++i) {
        const Real c = std::tanh(pre[2 * H + i] + buf.rec_c[i]);
        h[i] = (Real(1) - buf.z[i]) * h[i] + buf.z[i] * c;
    }
}

template <typename Real>
void head_probs(const BasicGruParams<Real> &p, const Real *h, StepBuffers<Real> &buf,
                std::span<double> out) {
    detail::affine(p.head_w.data(), p.head_b.data(), p.cfg.head_outputs(), p.cfg.d_hidden, h, 1,
                   buf.logits.data());
    for (std::size_t j = 0; j < p.cfg.horizon; ++j) {
        double row[kNumClasses];
        for (int k = 0; k < kNumClasses; ++k) {
            row[k] = static_cast<double>(buf.logits[j * kNumClasses + k]);
        }
        const auto probs = softmax_stable(row);
        std::copy(probs.begin(), probs.end(), out.begin() + j * kNumClasses);
    }
}

template <typename Real>
void check_dim(const BasicGruParams<Real> &p, std::size_t dim) {
    if (dim != p.cfg.d_in) {
        throw DomainError("feature dimension " + std::to_string(dim) + " does not match model d_in " +
                          std::to_string(p.cfg.d_in));
    }
}

} // namespace

template <typename Real>
std::vector<Real> gru_step(const BasicGruParams<Real> &params,
                           std::span<const std::type_identity_t<Real>> h,
                           std::span<const std::type_identity_t<Real>> x) {
    if (h.size() != params.cfg.d_hidden || x.size() != params.cfg.d_embed) {
        throw DomainError("gru_step: state or input size does not match the model");
    }
    std::vector<Real> pre(3 * params.cfg.d_hidden);
    std::vector<Real> tmp;
    gate_inputs(params, x.data(), 1, pre.data(), tmp);
    std::vector<Real> next(h.begin(), h.end());
    StepBuffers<Real> buf(params.cfg);
    recurrent_update(params, pre.data(), next.data(), buf);
    return next;
}

template <typename Real>
ScoreSequence stream_forward(const BasicGruParams<Real> &params, const FeatureStream &stream) {
    check_dim(params, stream.dim());
    const ModelConfig &cfg = params.cfg;
    const std::size_t T = stream.num_frames();
    ScoreSequence out(T, cfg.horizon);

    constexpr std::size_t kChunk = 64;
    std::vector<Real> X(kChunk * cfg.d_in);
    std::vector<Real> E(kChunk * cfg.d_embed);
    std::vector<Real> P(kChunk * 3 * cfg.d_hidden);
    std::vector<Real> tmp;
    std::vector<Real> h(cfg.d_hidden, Real(0));
    StepBuffers<Real> buf(cfg);

    // Embedding and input projections have no recurrence, so they are
    // computed a chunk at a time; only the state update is sequential.
    for (std::size_t t0 = 0; t0 < T; t0 += kChunk) {
        const std::size_t n = std::min(kChunk, T - t0);
        const auto src = stream.data().subspan(t0 * cfg.d_in, n * cfg.d_in);
        std::copy(src.begin(), src.end(), X.begin());
        embed_frames(params, X.data(), n, E.data());
        gate_inputs(params, E.data(), n, P.data(), tmp);
        for (std::size_t f = 0; f < n; ++f) {
            recurrent_update(params, P.data() + f * 3 * cfg.d_hidden, h.data(), buf);
            head_probs(params, h.data(), buf, out.frame(t0 + f));
        }
    }
    return out;
}

template <typename Real>
OnlineGru<Real>::OnlineGru(const BasicGruParams<Real> &params)
    : params_(&params), h_(params.cfg.d_hidden, Real(0)), input_(params.cfg.d_in),
      embedded_(params.cfg.d_embed), gate_pre_(3 * params.cfg.d_hidden) {}

template <typename Real>
AnticipationScores OnlineGru<Real>::push(std::span<const float> frame) {
    const BasicGruParams<Real> &p = *params_;
    check_dim(p, frame.size());
    std::copy(frame.begin(), frame.end(), input_.begin());
    embed_frames(p, input_.data(), 1, embedded_.data());
    gate_inputs(p, embedded_.data(), 1, gate_pre_.data(), scratch_);
    StepBuffers<Real> buf(p.cfg);
    recurrent_update(p, gate_pre_.data(), h_.data(), buf);
    AnticipationScores scores{p.cfg.horizon, std::vector<double>(p.cfg.head_outputs())};
    head_probs(p, h_.data(), buf, scores.probs);
    ++frames_seen_;
    return scores;
}

template <typename Real>
void OnlineGru<Real>::reset() {
    std::fill(h_.begin(), h_.end(), Real(0));
    frames_seen_ = 0;
}

template <typename Real>
AnticipationScores forward_window(const BasicGruParams<Real> &params,
                                  const FeatureStream &window) {
    check_dim(params, window.dim());
    OnlineGru<Real> online(params);
    AnticipationScores last;
    for (std::size_t t = 0; t < window.num_frames(); ++t) {
        last = online.push(window.frame(t));
    }
    return last;
}

#define EGOSPEAK_INSTANTIATE(Real)                                                                 \
    template struct BasicGruParams<Real>;                                                          \
    template BasicGruParams<Real> zero_params<Real>(const ModelConfig &);                          \
    template void validate<Real>(const BasicGruParams<Real> &);                                    \
    template std::vector<Real> gru_step<Real>(const BasicGruParams<Real> &,                        \
                                              std::span<const Real>, std::span<const Real>);       \
    template AnticipationScores forward_window<Real>(const BasicGruParams<Real> &,                 \
                                                     const FeatureStream &);                       \
    template ScoreSequence stream_forward<Real>(const BasicGruParams<Real> &,                      \
                                                const FeatureStream &);                            \
    template class OnlineGru<Real>;

EGOSPEAK_INSTANTIATE(float)
EGOSPEAK_INSTANTIATE(double)

#undef EGOSPEAK_INSTANTIATE

} // namespace egospeak
