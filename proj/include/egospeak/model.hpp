#pragma once

#include "egospeak/features.hpp"
#include "egospeak/scores.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace egospeak {

// ─── Configuration ───────────────────────────────────────────────────────────

struct ModelConfig {
    std::size_t d_in = 64;
    std::size_t d_embed = 64;
    std::size_t d_hidden = 64;
    std::size_t horizon = 10; // anticipated future frames
    std::size_t num_classes = kNumClasses;

    std::size_t head_outputs() const { return horizon * num_classes; }

    friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

void validate(const ModelConfig &cfg); // throws DomainError

ModelConfig desk_model_config();
// 2048-d embedding, 1024-d recurrent state, 2 s horizon.
ModelConfig full_scale_model_config();

// ─── Parameters ──────────────────────────────────────────────────────────────

template <typename Real>
struct GateParams {
    std::vector<Real> w_in;  // d_hidden x d_embed
    std::vector<Real> w_rec; // d_hidden x d_hidden
    std::vector<Real> bias;  // d_hidden

    friend bool operator==(const GateParams &, const GateParams &) = default;
};

enum class BlockKind : std::uint8_t { Weight, Bias };

// All weight matrices are stored output-major: row o holds the weights
// feeding output o.
template <typename Real>
struct BasicGruParams {
    ModelConfig cfg;
    std::vector<Real> embed_w; // d_embed x d_in
    std::vector<Real> embed_b; // d_embed
    GateParams<Real> update;
    GateParams<Real> reset;
    GateParams<Real> candidate;
    std::vector<Real> head_w; // (horizon * K) x d_hidden
    std::vector<Real> head_b; // horizon * K

    // Visits every block in serialization order:
    //   embed_w, embed_b, {update, reset, candidate} x {w_in, w_rec, bias}, head_w, head_b
    template <typename Fn>
    void for_each_block(Fn &&fn) {
        visit(*this, fn);
    }
    template <typename Fn>
    void for_each_block(Fn &&fn) const {
        visit(*this, fn);
    }

    std::size_t scalar_count() const;

    friend bool operator==(const BasicGruParams &, const BasicGruParams &) = default;

private:
    template <typename Self, typename Fn>
    static void visit(Self &self, Fn &fn) {
        fn(std::string_view("embed_w"), self.embed_w, BlockKind::Weight);
        fn(std::string_view("embed_b"), self.embed_b, BlockKind::Bias);
        fn(std::string_view("update_w_in"), self.update.w_in, BlockKind::Weight);
        fn(std::string_view("update_w_rec"), self.update.w_rec, BlockKind::Weight);
        fn(std::string_view("update_bias"), self.update.bias, BlockKind::Bias);
        fn(std::string_view("reset_w_in"), self.reset.w_in, BlockKind::Weight);
        fn(std::string_view("reset_w_rec"), self.reset.w_rec, BlockKind::Weight);
        fn(std::string_view("reset_bias"), self.reset.bias, BlockKind::Bias);
        fn(std::string_view("candidate_w_in"), self.candidate.w_in, BlockKind::Weight);
        fn(std::string_view("candidate_w_rec"), self.candidate.w_rec, BlockKind::Weight);
        fn(std::string_view("candidate_bias"), self.candidate.bias, BlockKind::Bias);
        fn(std::string_view("head_w"), self.head_w, BlockKind::Weight);
        fn(std::string_view("head_b"), self.head_b, BlockKind::Bias);
    }
};

using GruParams = BasicGruParams<float>;

template <typename Real>
BasicGruParams<Real> zero_params(const ModelConfig &cfg);

// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
GruParams init_params(const ModelConfig &cfg, std::uint64_t seed);

template <typename To, typename From>
BasicGruParams<To> convert_params(const BasicGruParams<From> &p) {
    BasicGruParams<To> out = zero_params<To>(p.cfg);
    std::vector<const std::vector<From> *> src;
    p.for_each_block([&](std::string_view, const std::vector<From> &b, BlockKind) {
        src.push_back(&b);
    });
    std::size_t i = 0;
    out.for_each_block([&](std::string_view, std::vector<To> &b, BlockKind) {
        const auto &s = *src[i++];
        for (std::size_t k = 0; k < b.size(); ++k) b[k] = static_cast<To>(s[k]);
    });
    return out;
}

// Throws DomainError naming the first block with a non-finite entry or the
// wrong shape.
template <typename Real>
void validate(const BasicGruParams<Real> &params);

// ─── Checkpoints ─────────────────────────────────────────────────────────────

// "EGCK" | u32 version=1 | u32 d_in, d_embed, d_hidden, horizon, num_classes |
// every block as f32 little-endian in for_each_block order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const GruParams &params, const std::filesystem::path &path);
GruParams read_checkpoint(const std::filesystem::path &path);

// ─── Inference ───────────────────────────────────────────────────────────────

// Max-subtracted softmax; throws DomainError on non-finite logits.
std::vector<double> softmax_stable(std::span<const double> logits);

// One gated recurrent update on an already-embedded input:
//   z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r)
//   c = tanh(W_c x + U_c (r * h) + b_c), h' = (1 - z) * h + z * c
template <typename Real>
std::vector<Real> gru_step(const BasicGruParams<Real> &params,
                           std::span<const std::type_identity_t<Real>> h,
                           std::span<const std::type_identity_t<Real>> x);

// Scores for the last frame of the window, starting from a zero state.
template <typename Real>
AnticipationScores forward_window(const BasicGruParams<Real> &params,
                                  const FeatureStream &window);

// Scores for every frame; frame t sees only frames 0..t.
template <typename Real>
ScoreSequence stream_forward(const BasicGruParams<Real> &params, const FeatureStream &stream);

// Frame-at-a-time inference holding one stream's recurrent state. The params
// must outlive the object.
template <typename Real>
class OnlineGru {
public:
    explicit OnlineGru(const BasicGruParams<Real> &params);

    AnticipationScores push(std::span<const float> frame);
    void reset();
    std::size_t frames_seen() const noexcept { return frames_seen_; }
    std::span<const Real> hidden() const noexcept { return h_; }

private:
    const BasicGruParams<Real> *params_;
    std::vector<Real> h_;
    std::vector<Real> input_;
    std::vector<Real> embedded_;
    std::vector<Real> gate_pre_;
    std::vector<Real> scratch_;
    std::size_t frames_seen_ = 0;
};

} // namespace egospeak
