#include "latentprog/rng.hpp"
#include "latentprog/stats.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace lp;
using namespace lp::stats;
using lp::testing::error_of;

namespace {

const std::vector<double> kScores{0.1, 0.4, 0.35, 0.8};
const std::vector<int> kLabels{0, 0, 1, 1};

struct Instance {
    std::vector<double> scores;
    std::vector<int> labels;
};

// Small cohort with both classes and plenty of tied scores.
Instance random_instance(Rng& rng) {
    Instance in;
    const int n = 2 + static_cast<int>(rng.below(11));
    for (int i = 0; i < n; ++i) {
        in.scores.push_back(static_cast<double>(rng.below(6)) / 4.0);
        in.labels.push_back(static_cast<int>(rng.below(2)));
    }
    in.labels[0] = 0;
    in.labels[1] = 1;
    return in;
}

Instance planted_cohort(int n, double shift, Rng& rng) {
    Instance in;
    for (int i = 0; i < n; ++i) {
        const int y = rng.uniform() < 0.3 ? 1 : 0;
        in.labels.push_back(y);
        in.scores.push_back(rng.normal() + shift * y);
    }
    return in;
}

const Metric kAuc = [](std::span<const double> s, std::span<const int> y) { return roc_auc(s, y); };

} // namespace

TEST_CASE("roc_auc examples") {
    CHECK(roc_auc(kScores, kLabels) == 0.75);
    CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, kLabels) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, kLabels) == 0.5);
    CHECK(error_of([] { roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }) == ErrorKind::SingleClass);
    CHECK(error_of([] { roc_auc(std::vector<double>{0.1}, std::vector<int>{1, 0}); }) == ErrorKind::LengthMismatch);
    CHECK(error_of([] { roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 2}); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("roc_auc properties") {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        auto in = planted_cohort(40, 0.5, rng);
        in.labels[0] = 0;
        in.labels[1] = 1;
        const double a = roc_auc(in.scores, in.labels);
        std::vector<double> neg, mono;
        for (double s : in.scores) {
            neg.push_back(-s);
            mono.push_back(std::exp(3.0 * s) + 1.0);
        }
        CHECK(a + roc_auc(neg, in.labels) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(roc_auc(mono, in.labels) == a);
    }
}

TEST_CASE("optimal_cutoff examples") {
    const auto c = optimal_cutoff(kScores, kLabels);
    CHECK(c.threshold == doctest::Approx(0.6));
    CHECK(c.sensitivity == 0.5);
    CHECK(c.specificity == 1.0);
    CHECK(c.objective == doctest::Approx(0.25));

    const auto sep = optimal_cutoff(std::vector<double>{0.1, 0.2, 0.8, 0.9}, kLabels);
    CHECK(sep.objective == 0.0);
    CHECK(sep.sensitivity == 1.0);
    CHECK(sep.specificity == 1.0);

    const auto single = optimal_cutoff(std::vector<double>{0.1, 0.2, 0.3, 0.95}, std::vector<int>{0, 0, 0, 1});
    CHECK(single.sensitivity == 1.0);
    CHECK(single.specificity == 1.0);
    CHECK(error_of([] { optimal_cutoff(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}); }) ==
          ErrorKind::SingleClass);
}

TEST_CASE("roc_auc, optimal_cutoff and kappas agree with brute force") {
    Rng rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        const auto in = random_instance(rng);
        CHECK(roc_auc(in.scores, in.labels) == oracle::auc(in.scores, in.labels));
        const auto c = optimal_cutoff(in.scores, in.labels);
        const auto o = oracle::cutoff(in.scores, in.labels);
        CHECK(c.true_positive == o.tp);
        CHECK(c.false_negative == o.fn);
        CHECK(c.true_negative == o.tn);
        CHECK(c.false_positive == o.fp);
        CHECK(c.threshold == o.threshold);
        CHECK(c.sensitivity == static_cast<double>(c.true_positive) / (c.true_positive + c.false_negative));
        CHECK(c.specificity == static_cast<double>(c.true_negative) / (c.true_negative + c.false_positive));
        CHECK((c.objective >= 0.0 && c.objective <= 2.0));
    }
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(10));
        std::vector<int> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(static_cast<int>(rng.below(3)));
            b.push_back(rng.uniform() < 0.6 ? a.back() : static_cast<int>(rng.below(3)));
        }
        a[0] = 0;
        a[1] = 1;
        CHECK(std::abs(cohens_kappa(a, b) - oracle::cohen(a, b)) < 1e-12);

        const int raters = 2 + static_cast<int>(rng.below(5));
        std::vector<std::vector<int>> m(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(raters)));
        for (auto& item : m)
            for (int& v : item) v = static_cast<int>(rng.below(2));
        m[0][0] = 0;
        m[1][0] = 1;
        CHECK(std::abs(fleiss_kappa(m) - oracle::fleiss(m)) < 1e-12);
    }
}

TEST_CASE("kappa examples") {
    CHECK(cohens_kappa(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0}) == 1.0);
    CHECK(cohens_kappa(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}) == 0.0);
    CHECK(error_of([] { cohens_kappa(std::vector<int>{1, 1}, std::vector<int>{1, 1}); }) ==
          ErrorKind::DegenerateMarginals);
    CHECK(error_of([] { cohens_kappa(std::vector<int>{1}, std::vector<int>{1, 0}); }) == ErrorKind::LengthMismatch);

    std::vector<std::vector<int>> unanimous;
    for (int i = 0; i < 6; ++i) unanimous.push_back(std::vector<int>(7, i % 2));
    CHECK(fleiss_kappa(unanimous) == 1.0);

    // Per-item agreement 1, 1/3, 1, 1/3 -> P = 2/3; marginals 1/2 -> Pe = 1/2.
    const std::vector<std::vector<int>> hand{{1, 1, 1}, {1, 1, 0}, {0, 0, 0}, {1, 0, 0}};
    CHECK(std::abs(fleiss_kappa(hand) - 1.0 / 3.0) < 1e-12);
    CHECK(error_of([] { fleiss_kappa({{1}, {0}}); }) == ErrorKind::TooFewRaters);
    CHECK(error_of([] { fleiss_kappa({{1, 1}, {1, 1}}); }) == ErrorKind::DegenerateMarginals);

    // Two raters, perfect agreement or chance-level 2x2 table: both formulas agree.
    const std::vector<int> a{1, 1, 0, 0}, b{1, 1, 0, 0};
    CHECK(fleiss_kappa({{1, 1}, {1, 1}, {0, 0}, {0, 0}}) == cohens_kappa(a, b));
}

TEST_CASE("bootstrap: constant metric, reproducibility, ordering") {
    Rng rng(3);
    const auto in = planted_cohort(80, 1.0, rng);
    const Metric constant = [](std::span<const double>, std::span<const int>) { return 0.7; };
    const auto c = bootstrap_ci(constant, in.scores, in.labels, 200, 1);
    CHECK(c.point == 0.7);
    CHECK(c.lo == 0.7);
    CHECK(c.hi == 0.7);
    CHECK(c.sd == 0.0);

    const auto a = bootstrap_ci(kAuc, in.scores, in.labels, 500, 9);
    const auto b = bootstrap_ci(kAuc, in.scores, in.labels, 500, 9);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.sd == b.sd);
    CHECK(a.lo <= a.point);
    CHECK(a.point <= a.hi);
    CHECK(a.sd > 0.0);

    CHECK(error_of([&] { bootstrap_ci(kAuc, in.scores, in.labels, 99, 1); }) == ErrorKind::TooFewRedraws);
    // A metric defined on the full cohort but on none of its resamples.
    const Metric undefined = [&](std::span<const double> s, std::span<const int>) -> double {
        if (s.data() != in.scores.data()) fail(ErrorKind::InsufficientData, "undefined");
        return 0.5;
    };
    CHECK(error_of([&] { bootstrap_ci(undefined, in.scores, in.labels, 100, 1); }) == ErrorKind::MetricUndefined);
    // One positive among 60: about a third of resamples lose it and are redrawn.
    std::vector<double> s(60, 0.0);
    std::vector<int> y(60, 0);
    y[0] = 1;
    s[0] = 1.0;
    const auto rare = bootstrap_ci(kAuc, s, y, 1000, 1);
    CHECK(rare.invalid_resamples > 300);
    CHECK(rare.invalid_resamples < 900);
}

TEST_CASE("bootstrap interval matches an independent implementation") {
    Rng rng(4);
    const auto in = planted_cohort(200, 1.0, rng);
    const auto mine = bootstrap_ci(kAuc, in.scores, in.labels, 4000, 21);
    const auto ref = oracle::bootstrap_auc(in.scores, in.labels, 4000, 22);
    CHECK(std::abs(mine.lo - ref.lo) < 0.01);
    CHECK(std::abs(mine.hi - ref.hi) < 0.01);
    CHECK(std::abs(mine.sd - ref.sd) < 0.01);
}

TEST_CASE("sorted_quantile interpolates linearly") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(sorted_quantile(v, 0.0) == 1.0);
    CHECK(sorted_quantile(v, 1.0) == 5.0);
    CHECK(sorted_quantile(v, 0.5) == 3.0);
    CHECK(sorted_quantile(v, 0.125) == 1.5);
}

TEST_CASE("permutation test") {
    Rng rng(5);
    const auto in = planted_cohort(500, 2.0, rng);
    CHECK(permutation_pvalue(in.scores, in.scores, in.labels, kAuc, 200, 1) == 1.0);

    std::vector<double> noise;
    for (std::size_t i = 0; i < in.scores.size(); ++i) noise.push_back(rng.normal());
    const auto r = permutation_test(in.scores, noise, in.labels, kAuc, 1000, 2);
    CHECK(r.observed_delta > 0.2);
    CHECK(r.p_value < 0.01);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value == permutation_test(in.scores, noise, in.labels, kAuc, 1000, 2).p_value);

    CHECK(error_of([&] { permutation_pvalue(in.scores, std::span(noise).first(10), in.labels, kAuc, 200, 1); }) ==
          ErrorKind::LengthMismatch);
    CHECK(error_of([&] { permutation_pvalue(in.scores, noise, in.labels, kAuc, 50, 1); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("ssim properties") {
    Rng rng(6);
    Image a(32, 32), b(32, 32);
    for (double& p : a.pixels) p = rng.uniform(0.2, 0.8);
    for (double& p : b.pixels) p = rng.uniform(0.2, 0.8);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, b) == ssim(b, a));
    CHECK((ssim(a, b) >= -1.0 && ssim(a, b) <= 1.0));

    // Smooth image plus strong independent noise.
    Image smooth(32, 32), noisy(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) smooth.at(y, x) = 0.5 + 0.3 * std::sin(0.3 * x) * std::cos(0.2 * y);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.pixels[i] = smooth.pixels[i] + 0.3 * rng.normal();
    CHECK(ssim(smooth, noisy) < 0.5);

    CHECK(error_of([&] { ssim(a, Image(32, 16)); }) == ErrorKind::DimensionMismatch);
    CHECK(error_of([&] { ssim(a, b, 4); }) == ErrorKind::InvalidArgument);
    CHECK(error_of([&] { ssim(Image(5, 5), Image(5, 5)); }) == ErrorKind::InvalidArgument);
}
