#include "egospeak/error.hpp"
#include "egospeak/features.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace egospeak;

namespace {

std::filesystem::path tmp(const char *name) { return std::filesystem::temp_directory_path() / name; }

FeatureStream ramp(std::size_t frames, std::size_t dim, float offset = 0.0f) {
    std::vector<float> v(frames * dim);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = offset + 0.25f * static_cast<float>(i);
    return FeatureStream(FrameClock(5), dim, std::move(v), "audio");
}

std::vector<char> slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const std::filesystem::path &p, const std::vector<char> &bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

FileErrc read_error(const std::filesystem::path &p) {
    try {
        read_feature_file(p);
    } catch (const FileFormatError &e) {
        return e.code();
    }
    FAIL("expected a FileFormatError");
    return FileErrc::Io;
}

} // namespace

TEST_CASE("feature stream invariants") {
    CHECK_THROWS_AS(FeatureStream(FrameClock(5), 0, {1.0f}, "x"), DomainError);
    CHECK_THROWS_AS(FeatureStream(FrameClock(5), 2, {}, "x"), DomainError);
    CHECK_THROWS_AS(FeatureStream(FrameClock(5), 2, {1.0f, 2.0f, 3.0f}, "x"), DomainError);
    CHECK_THROWS_AS(
        FeatureStream(FrameClock(5), 1, {std::numeric_limits<float>::quiet_NaN()}, "x"),
        DomainError);
}

TEST_CASE("feature file round trip is bit-identical") {
    const auto path = tmp("egospeak_rt.egf");
    std::vector<float> v{1.5f, -0.0f, 3.25e-30f, 7.0f, -2.0f, 1e30f};
    const FeatureStream s(FrameClock(5), 2, v, "rgb");
    write_feature_file(s, path);
    const FeatureStream back = read_feature_file(path);
    REQUIRE(back.num_frames() == 3);
    CHECK(back.dim() == 2);
    CHECK(back.modality_tag() == "rgb");
    CHECK(std::memcmp(back.data().data(), v.data(), v.size() * sizeof(float)) == 0);
    CHECK(back == s);
    std::filesystem::remove(path);
}

TEST_CASE("feature file header layout") {
    const auto path = tmp("egospeak_layout.egf");
    write_feature_file(ramp(3, 2), path);
    const auto bytes = slurp(path);
    // magic 4 + version 4 + dim 4 + frames 8 + fps 4 + tag_len 4 + "audio" 5 + 6 floats
    REQUIRE(bytes.size() == 4 + 4 + 4 + 8 + 4 + 4 + 5 + 6 * 4);
    CHECK(std::string(bytes.data(), 4) == "EGF1");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
    CHECK(bytes[12] == 3);
    float fps = 0.0f;
    std::memcpy(&fps, bytes.data() + 20, 4);
    CHECK(fps == 5.0f);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt feature files raise distinct errors") {
    const auto path = tmp("egospeak_bad.egf");
    write_feature_file(ramp(10, 3), path);
    const auto good = slurp(path);

    auto bytes = good;
    std::memcpy(bytes.data(), "XXXX", 4);
    dump(path, bytes);
    CHECK(read_error(path) == FileErrc::BadMagic);

    bytes = good;
    bytes[4] = 2;
    dump(path, bytes);
    CHECK(read_error(path) == FileErrc::VersionMismatch);

    // Header says 10 frames; drop the last frame's payload.
    bytes = good;
    bytes.resize(bytes.size() - 3 * sizeof(float));
    dump(path, bytes);
    CHECK(read_error(path) == FileErrc::Truncated);

    bytes = good;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
    dump(path, bytes);
    CHECK(read_error(path) == FileErrc::NonFinite);

    bytes = good;
    bytes.push_back(0);
    dump(path, bytes);
    CHECK(read_error(path) == FileErrc::TrailingData);

    std::filesystem::remove(path);
    CHECK(read_error(path) == FileErrc::Io);
}

TEST_CASE("concat_modalities") {
    const auto c = concat_modalities(ramp(5, 2), ramp(5, 3, 100.0f));
    CHECK(c.num_frames() == 5);
    CHECK(c.dim() == 5);
    CHECK(c.modality_tag() == "audio+audio");

    const auto t = concat_modalities(ramp(5, 2), ramp(4, 3));
    CHECK(t.num_frames() == 4);
    CHECK(t.dim() == 5);

    const auto a = ramp(6, 3);
    const auto self = concat_modalities(a, a);
    CHECK(self.dim() == 6);
    for (std::size_t f = 0; f < a.num_frames(); ++f) {
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(self.frame(f)[d] == a.frame(f)[d]);
            CHECK(self.frame(f)[d + 3] == a.frame(f)[d]);
        }
    }

    const FeatureStream slow(FrameClock(10), 1, {1.0f}, "x");
    CHECK_THROWS_AS(concat_modalities(ramp(1, 1), slow), DomainError);
}

TEST_CASE("synth config validation") {
    SynthConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.transition_weights[0] = {0.2, 0.5, 0.5};
    CHECK_THROWS_AS(validate(cfg), DomainError);
    cfg = SynthConfig{};
    cfg.dwell_mean_frames[1] = 0.5;
    CHECK_THROWS_AS(validate(cfg), DomainError);
    cfg = SynthConfig{};
    cfg.noise_sigma = 0.0;
    CHECK_THROWS_AS(validate(cfg), DomainError);
    cfg = SynthConfig{};
    cfg.transition_weights[2] = {0.5, 0.0, 0.5};
    CHECK_THROWS_AS(validate(cfg), DomainError);
}

TEST_CASE("synth_conversation is deterministic per seed") {
    SynthConfig cfg;
    cfg.seed = 42;
    const auto a = synth_conversation(cfg, 500);
    const auto b = synth_conversation(cfg, 500);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    cfg.seed = 43;
    CHECK_FALSE(synth_conversation(cfg, 500).features == a.features);
}

TEST_CASE("synth class frequencies match the symmetric chain's stationary law") {
    SynthConfig cfg;
    cfg.seed = 5;
    const auto clip = synth_conversation(cfg, 100000);
    std::array<double, 3> freq{};
    for (auto c : clip.labels.labels) freq[class_index(c)] += 1.0;
    for (double &f : freq) {
        f /= 100000.0;
        CHECK(std::abs(f - 1.0 / 3.0) <= 0.02);
    }
}

TEST_CASE("synth dwell times and transitions follow the configuration") {
    SynthConfig cfg;
    cfg.seed = 9;
    cfg.dwell_mean_frames = {4.0, 12.0, 8.0};
    cfg.transition_weights = {{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}}};
    const auto clip = synth_conversation(cfg, 200000);
    std::array<double, 3> run_sum{}, run_count{};
    const auto &l = clip.labels.labels;
    std::size_t i = 0;
    bool first = true;
    while (i < l.size()) {
        std::size_t j = i;
        while (j < l.size() && l[j] == l[i]) ++j;
        if (!first && j < l.size()) { // skip the truncated runs at either end
            run_sum[class_index(l[i])] += static_cast<double>(j - i);
            run_count[class_index(l[i])] += 1.0;
            CHECK(class_index(l[j]) == (class_index(l[i]) + 1) % 3);
        }
        first = false;
        i = j;
    }
    for (int c = 0; c < 3; ++c) {
        CHECK(run_sum[c] / run_count[c] == doctest::Approx(cfg.dwell_mean_frames[c]).epsilon(0.05));
    }
}

TEST_CASE("synth features: class means, noise and the cue ramp") {
    SynthConfig cfg;
    cfg.seed = 1;
    cfg.dim = 4;
    cfg.class_mean_separation = 10.0;
    cfg.noise_sigma = 1e-3;
    cfg.cue_lead_frames = 3;
    const auto clip = synth_conversation(cfg, 3000);
    const auto &l = clip.labels.labels;
    for (std::size_t t = 0; t + 4 < l.size(); ++t) {
        const int cur = class_index(l[t]);
        const auto f = clip.features.frame(t);
        // Frames more than 3 before a change sit on the class mean.
        bool far = true;
        for (std::size_t k = 1; k <= 3; ++k) far = far && l[t + k] == l[t];
        if (far) {
            CHECK(f[cur] == doctest::Approx(10.0).epsilon(1e-3));
            CHECK(std::abs(f[3]) < 0.01);
        }
        // Last frame of a run: 3/4 of the way toward the next mean.
        if (l[t + 1] != l[t]) {
            const int nxt = class_index(l[t + 1]);
            CHECK(f[cur] == doctest::Approx(2.5).epsilon(0.01));
            CHECK(f[nxt] == doctest::Approx(7.5).epsilon(0.01));
        }
    }
}

TEST_CASE("zero separation gives label-independent features") {
    SynthConfig cfg;
    cfg.seed = 2;
    cfg.class_mean_separation = 0.0;
    const auto clip = synth_conversation(cfg, 30000);
    std::array<double, 3> sum{}, n{};
    for (std::size_t t = 0; t < clip.labels.size(); ++t) {
        const int c = class_index(clip.labels[t]);
        sum[c] += clip.features.frame(t)[c];
        n[c] += 1.0;
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(sum[c] / n[c]) < 0.05);
}
