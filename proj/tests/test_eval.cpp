#include "egospeak/error.hpp"
#include "egospeak/eval.hpp"
#include "egospeak/features.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace egospeak;

namespace {

using Bits = std::vector<std::uint8_t>;

std::optional<double> ap(std::vector<double> s, Bits p, ApVariant v = ApVariant::PositivesRank) {
    return average_precision(s, p, v);
}

ScoreSequence oracle_scores(const LabelTrack &gt, std::size_t horizon) {
    ScoreSequence s(gt.size(), horizon);
    for (std::size_t t = 0; t < gt.size(); ++t) {
        for (std::size_t j = 0; j < horizon; ++j) {
            if (t + j + 1 < gt.size()) s.at(t, j, class_index(gt.labels[t + j + 1])) = 1.0;
        }
    }
    return s;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("average precision examples") {
    CHECK(*ap({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0}) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(*ap({0.9, 0.8, 0.4, 0.3}, {1, 1, 0, 0}) == 1.0);
    CHECK(*ap({0.9, 0.8, 0.4, 0.3}, {0, 1, 0, 1}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(ap({0.9, 0.8}, {0, 0}).has_value());
    // Ties are broken by index: the later positive ranks second.
    CHECK(*ap({0.5, 0.5}, {0, 1}) == doctest::Approx(0.5));
    CHECK(*ap({0.5, 0.5}, {1, 0}) == 1.0);
    CHECK_THROWS_AS(ap({0.1, 0.2}, {1}), DomainError);
    CHECK_THROWS_AS(ap({}, {}), DomainError);

    // Precision at every rank: 1, 1/2, 2/3, 2/4.
    CHECK(*ap({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0}, ApVariant::AllThresholds) ==
          doctest::Approx((1.0 + 0.5 + 2.0 / 3.0 + 0.5) / 4.0));
}

TEST_CASE("ap variant names") {
    for (auto v : {ApVariant::PositivesRank, ApVariant::AllThresholds}) {
        CHECK(ap_variant_from_string(to_string(v)) == v);
    }
    CHECK_THROWS_AS(ap_variant_from_string("interpolated"), DomainError);
}

TEST_CASE("average precision equals the exact rational oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<double> s(n);
        Bits p(n);
        const int levels = 1 + static_cast<int>(rng() % 6); // few levels force ties
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % levels) / levels;
            p[i] = rng() % 2;
        }
        if (std::none_of(p.begin(), p.end(), [](auto b) { return b; })) p[rng() % n] = 1;
        const double expected = oracle::to_double(oracle::brute_force_ap(s, p));
        REQUIRE(std::abs(*average_precision(s, p) - expected) <= 1e-12);
    }
}

TEST_CASE("average precision invariances") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 50;
        std::vector<double> s(n);
        Bits p(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = u(rng);
            p[i] = rng() % 3 == 0;
        }
        p[0] = 1;
        const double base = *average_precision(s, p);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);

        std::vector<double> mono(n);
        std::transform(s.begin(), s.end(), mono.begin(), [](double x) { return std::exp(2 * x) - 7; });
        CHECK(*average_precision(mono, p) == doctest::Approx(base).epsilon(1e-15));

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> ps(n);
        Bits pp(n);
        for (std::size_t i = 0; i < n; ++i) {
            ps[i] = s[perm[i]];
            pp[i] = p[perm[i]];
        }
        CHECK(*average_precision(ps, pp) == doctest::Approx(base).epsilon(1e-15));
    }
}

TEST_CASE("oracle predictor scores perfectly") {
    SynthConfig sc;
    sc.dim = 3;
    const auto clip = synth_conversation(sc, 2000);
    const auto report = evaluate_stream(oracle_scores(clip.labels, 10), clip.labels);
    CHECK(report.absent_cells == 0);
    for (const auto &row : report.ap) {
        for (const auto &v : row) CHECK(*v == 1.0);
    }
    CHECK(*report.avg_map == 1.0);
}

TEST_CASE("uniform predictor matches prevalence under random order") {
    SynthConfig sc;
    sc.dim = 3;
    sc.seed = 4;
    const std::size_t T = 10000;
    const auto clip = synth_conversation(sc, T);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 3; ++k) {
        // Shuffle the evaluation order so index tie-breaking is not aligned
        // with the track's structure.
        std::vector<std::size_t> order(T - 1);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> s(T - 1, 1.0 / 3.0);
        Bits p(T - 1);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < T - 1; ++i) {
            p[i] = class_index(clip.labels.labels[order[i] + 1]) == k;
            pos += p[i];
        }
        const double prevalence = static_cast<double>(pos) / static_cast<double>(T - 1);
        CHECK(std::abs(*average_precision(s, p) - prevalence) <= 0.02);
    }
}

TEST_CASE("offsets past the end are absent") {
    const auto gt = make_track({0, 1, 2, 1, 0});
    ScoreSequence pred(5, 10);
    const auto report = evaluate_stream(pred, gt);
    for (std::size_t j = 5; j <= 10; ++j) {
        for (int k = 0; k < 3; ++k) CHECK_FALSE(report.class_ap(j, class_from_index(k)).has_value());
        CHECK_FALSE(report.map_per_offset[j - 1].has_value());
    }
    CHECK(report.class_ap(1, ClassId::TargetSpeaker).has_value());
    CHECK(report.absent_cells >= 18);
    CHECK_THROWS_AS(evaluate_stream(ScoreSequence(4, 10), gt), DomainError);
    CHECK_THROWS_AS(evaluate_stream(ScoreSequence(5, 0), gt), DomainError);
}

TEST_CASE("aggregates are exact means of present entries") {
    SynthConfig sc;
    sc.dim = 3;
    const auto clip = synth_conversation(sc, 500);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    ScoreSequence pred(500, 10);
    for (std::size_t t = 0; t < 500; ++t) {
        for (std::size_t j = 0; j < 10; ++j) {
            for (int k = 0; k < 3; ++k) pred.at(t, j, k) = u(rng);
        }
    }
    const auto r = evaluate_stream(pred, clip.labels);
    double sum = 0.0;
    for (const auto &m : r.map_per_offset) sum += *m;
    CHECK(*r.avg_map == sum / 10.0);
    for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < 10; ++j) s += *r.ap[j][k];
        CHECK(*r.per_class_avg[k] == doctest::Approx(s / 10.0).epsilon(1e-15));
    }
}

TEST_CASE("report files") {
    CHECK(offset_headers(10, 5) ==
          std::vector<std::string>{"0.20s", "0.40s", "0.60s", "0.80s", "1.00s", "1.20s", "1.40s",
                                   "1.60s", "1.80s", "2.00s"});

    SynthConfig sc;
    sc.dim = 3;
    const auto clip = synth_conversation(sc, 300);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    ScoreSequence pred(300, 10);
    for (std::size_t t = 0; t < 300; ++t) {
        for (std::size_t j = 0; j < 10; ++j) {
            for (int k = 0; k < 3; ++k) pred.at(t, j, k) = u(rng);
        }
    }
    auto r = evaluate_stream(pred, clip.labels);
    r.ap[3][2].reset(); // force an absent cell
    summarize(r);

    const auto dir = std::filesystem::temp_directory_path() / "egospeak_eval_report";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_report(r, dir);

    const std::string txt = slurp(dir / "report.txt");
    CHECK(txt.find("0.20s") != std::string::npos);
    CHECK(txt.find("2.00s") != std::string::npos);
    CHECK(txt.find("Avg") != std::string::npos);

    const std::string csv = slurp(dir / "report.csv");
    CHECK(csv.rfind("offset_s,class,ap\n", 0) == 0);
    CHECK(csv.find("0.80,2,\n") != std::string::npos);

    const auto back = read_report(dir);
    CHECK(back.horizon == 10);
    CHECK(back.variant == r.variant);
    for (std::size_t j = 0; j < 10; ++j) {
        for (int k = 0; k < 3; ++k) {
            REQUIRE(back.ap[j][k].has_value() == r.ap[j][k].has_value());
            if (r.ap[j][k]) CHECK(std::abs(*back.ap[j][k] - *r.ap[j][k]) < 5e-7);
        }
    }
    CHECK(std::abs(*back.avg_map - *r.avg_map) < 5e-7);
    std::filesystem::remove_all(dir);
}
