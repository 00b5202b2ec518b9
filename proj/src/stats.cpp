#include "latentprog/stats.hpp"

#include "latentprog/error.hpp"
#include "latentprog/parallel.hpp"
#include "latentprog/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace lp::stats {

namespace {

struct ClassCounts {
    int positives = 0;
    int negatives = 0;
};

ClassCounts check_cohort(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), ErrorKind::LengthMismatch,
            std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) + " labels");
    ClassCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        require(std::isfinite(scores[i]), ErrorKind::InvalidArgument, "scores must be finite");
        require(labels[i] == 0 || labels[i] == 1, ErrorKind::InvalidArgument, "labels must be 0 or 1");
        (labels[i] == 1 ? c.positives : c.negatives) += 1;
    }
    return c;
}

void require_both(const ClassCounts& c) {
    require(c.positives > 0 && c.negatives > 0, ErrorKind::SingleClass,
            "cohort has " + std::to_string(c.positives) + " positives and " + std::to_string(c.negatives) +
                " negatives");
}

} // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    const ClassCounts c = check_cohort(scores, labels);
    require_both(c);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Ranks are 1-based; tied blocks share their average rank. Twice the rank
    // is an integer, so the sum stays exact.
    double twice_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double twice_rank = static_cast<double>(i + 1 + j); // (i+1) + j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) twice_rank_sum += twice_rank;
        i = j;
    }
    const double np = c.positives;
    const double nn = c.negatives;
    const double u = twice_rank_sum / 2.0 - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

Cutoff optimal_cutoff(std::span<const double> scores, std::span<const int> labels) {
    const ClassCounts c = check_cohort(scores, labels);
    require_both(c);
    std::vector<std::pair<double, int>> sorted;
    for (std::size_t i = 0; i < scores.size(); ++i) sorted.emplace_back(scores[i], labels[i]);
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i].first < sorted[i + 1].first)
            thresholds.push_back(sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0);
    thresholds.push_back(std::numeric_limits<double>::infinity());

    // Sweep upward: everything at or below the threshold is called negative.
    Cutoff best;
    bool have = false;
    std::size_t below = 0;
    int neg_below = 0;
    int pos_below = 0;
    for (double t : thresholds) {
        while (below < sorted.size() && sorted[below].first <= t) {
            (sorted[below].second == 1 ? pos_below : neg_below) += 1;
            ++below;
        }
        Cutoff k;
        k.threshold = t;
        k.true_positive = c.positives - pos_below;
        k.false_negative = pos_below;
        k.true_negative = neg_below;
        k.false_positive = c.negatives - neg_below;
        k.sensitivity = static_cast<double>(k.true_positive) / c.positives;
        k.specificity = static_cast<double>(k.true_negative) / c.negatives;
        k.objective = (1.0 - k.sensitivity) * (1.0 - k.sensitivity) + (1.0 - k.specificity) * (1.0 - k.specificity);
        constexpr double tol = 1e-12;
        const bool better = !have || k.objective < best.objective - tol ||
                            (std::abs(k.objective - best.objective) <= tol &&
                             (k.specificity > best.specificity ||
                              (k.specificity == best.specificity && k.threshold > best.threshold)));
        if (better) {
            best = k;
            have = true;
        }
    }
    return best;
}

double sorted_quantile(std::span<const double> sorted, double q) {
    require(!sorted.empty(), ErrorKind::InsufficientData, "quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(const Metric& metric, std::span<const double> scores, std::span<const int> labels,
                      int redraws, std::uint64_t seed) {
    require(redraws >= 100, ErrorKind::TooFewRedraws, "bootstrap needs at least 100 redraws, got " +
                                                           std::to_string(redraws));
    check_cohort(scores, labels);
    require(!scores.empty(), ErrorKind::InsufficientData, "bootstrap of an empty cohort");
    Interval out;
    out.point = metric(scores, labels);

    const std::size_t n = scores.size();
    const auto limit = static_cast<long>(redraws);
    std::vector<double> values(static_cast<std::size_t>(redraws));
    std::vector<long> invalid(static_cast<std::size_t>(redraws), 0);
    std::atomic<long> total_invalid{0};
    parallel_for(static_cast<std::size_t>(redraws), [&](std::size_t r) {
        Rng rng(seed, r);
        std::vector<double> s(n);
        std::vector<int> y(n);
        while (true) {
            // Once invalid draws outnumber all redraws the answer is fixed.
            if (total_invalid.load(std::memory_order_relaxed) > limit) return;
            int positives = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto k = static_cast<std::size_t>(rng.below(n));
                s[i] = scores[k];
                y[i] = labels[k];
                positives += y[i];
            }
            if (positives > 0 && positives < static_cast<int>(n)) {
                try {
                    values[r] = metric(s, y);
                    if (std::isfinite(values[r])) return;
                } catch (const Error&) {
                }
            }
            ++invalid[r];
            total_invalid.fetch_add(1, std::memory_order_relaxed);
        }
    });
    out.invalid_resamples = std::accumulate(invalid.begin(), invalid.end(), 0L);
    require(out.invalid_resamples <= limit, ErrorKind::MetricUndefined,
            "more than half of the bootstrap resamples were invalid");

    // Deviations are taken from the first value so that a constant metric
    // gives exactly zero spread.
    const double shift = values.front();
    double mean = 0.0;
    for (double v : values) mean += v - shift;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - shift - mean) * (v - shift - mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    std::sort(values.begin(), values.end());
    out.lo = sorted_quantile(values, 0.025);
    out.hi = sorted_quantile(values, 0.975);
    return out;
}

PermutationResult permutation_test(std::span<const double> scores_a, std::span<const double> scores_b,
                                   std::span<const int> labels, const Metric& metric, int n_perm,
                                   std::uint64_t seed) {
    require(scores_a.size() == scores_b.size() && scores_a.size() == labels.size(), ErrorKind::LengthMismatch,
            "scores and labels must be aligned");
    require(n_perm >= 100, ErrorKind::InvalidArgument, "permutation test needs at least 100 rounds");
    PermutationResult out;
    out.observed_delta = metric(scores_a, labels) - metric(scores_b, labels);
    const double observed = std::abs(out.observed_delta);
    const std::size_t n = labels.size();
    std::vector<char> hit(static_cast<std::size_t>(n_perm), 0);
    parallel_for(static_cast<std::size_t>(n_perm), [&](std::size_t r) {
        Rng rng(seed, r);
        std::vector<double> a(scores_a.begin(), scores_a.end());
        std::vector<double> b(scores_b.begin(), scores_b.end());
        for (std::size_t i = 0; i < n; ++i)
            if (rng.coin()) std::swap(a[i], b[i]);
        const double delta = metric(a, labels) - metric(b, labels);
        // Rounding in the metric must not turn an exact tie into a miss.
        hit[r] = std::abs(delta) >= observed - 1e-12 ? 1 : 0;
    });
    const auto count = std::count(hit.begin(), hit.end(), 1);
    out.p_value = static_cast<double>(1 + count) / static_cast<double>(n_perm + 1);
    return out;
}

double permutation_pvalue(std::span<const double> scores_a, std::span<const double> scores_b,
                          std::span<const int> labels, const Metric& metric, int n_perm, std::uint64_t seed) {
    return permutation_test(scores_a, scores_b, labels, metric, n_perm, seed).p_value;
}

double cohens_kappa(std::span<const int> ratings_a, std::span<const int> ratings_b) {
    require(ratings_a.size() == ratings_b.size(), ErrorKind::LengthMismatch,
            std::to_string(ratings_a.size()) + " vs " + std::to_string(ratings_b.size()) + " ratings");
    require(!ratings_a.empty(), ErrorKind::InsufficientData, "no ratings");
    const double n = static_cast<double>(ratings_a.size());
    std::map<int, std::pair<double, double>> marginals;
    double agree = 0.0;
    for (std::size_t i = 0; i < ratings_a.size(); ++i) {
        marginals[ratings_a[i]].first += 1.0;
        marginals[ratings_b[i]].second += 1.0;
        if (ratings_a[i] == ratings_b[i]) agree += 1.0;
    }
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [category, m] : marginals) p_e += (m.first / n) * (m.second / n);
    require(p_e < 1.0, ErrorKind::DegenerateMarginals, "expected agreement is 1");
    return (p_o - p_e) / (1.0 - p_e);
}

double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
    require(!ratings.empty() && ratings.front().size() >= 2, ErrorKind::TooFewRaters,
            "Fleiss' kappa needs at least two raters");
    require(ratings.size() >= 2, ErrorKind::InsufficientData, "Fleiss' kappa needs at least two items");
    const std::size_t raters = ratings.front().size();
    for (const auto& row : ratings)
        require(row.size() == raters, ErrorKind::InvalidArgument, "every item needs the same number of raters");
    const double n = static_cast<double>(raters);
    const double items = static_cast<double>(ratings.size());
    std::map<int, double> totals;
    double p_bar = 0.0;
    for (const auto& row : ratings) {
        std::map<int, double> counts;
        for (int r : row) counts[r] += 1.0;
        double sq = 0.0;
        for (const auto& [category, k] : counts) {
            sq += k * k;
            totals[category] += k;
        }
        p_bar += (sq - n) / (n * (n - 1.0));
    }
    p_bar /= items;
    double p_e = 0.0;
    for (const auto& [category, k] : totals) {
        const double p = k / (items * n);
        p_e += p * p;
    }
    require(p_e < 1.0, ErrorKind::DegenerateMarginals, "expected agreement is 1");
    return (p_bar - p_e) / (1.0 - p_e);
}

double ssim(const Image& a, const Image& b, int window) {
    require(a.height == b.height && a.width == b.width, ErrorKind::DimensionMismatch,
            "images differ in shape: " + std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                std::to_string(b.height) + "x" + std::to_string(b.width));
    require(window >= 3 && window % 2 == 1, ErrorKind::InvalidArgument, "SSIM window must be odd and at least 3");
    require(window <= a.height && window <= a.width, ErrorKind::InvalidArgument, "SSIM window exceeds the image");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const double count = static_cast<double>(window) * window;
    const auto at = [](const Image& img, int y, int x) {
        return img.pixels[static_cast<std::size_t>(y) * img.width + x];
    };
    double total = 0.0;
    int positions = 0;
    for (int y0 = 0; y0 + window <= a.height; ++y0)
        for (int x0 = 0; x0 + window <= a.width; ++x0) {
            double ma = 0.0, mb = 0.0;
            for (int y = y0; y < y0 + window; ++y)
                for (int x = x0; x < x0 + window; ++x) {
                    ma += at(a, y, x);
                    mb += at(b, y, x);
                }
            ma /= count;
            mb /= count;
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (int y = y0; y < y0 + window; ++y)
                for (int x = x0; x < x0 + window; ++x) {
                    const double da = at(a, y, x) - ma;
                    const double db = at(b, y, x) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va /= count - 1.0;
            vb /= count - 1.0;
            cov /= count - 1.0;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++positions;
        }
    return total / positions;
}

} // namespace lp::stats
