#pragma once

// Evaluation statistics: ROC-AUC, cutoff selection, bootstrap intervals,
// paired permutation test, agreement kappas and SSIM.
//
// Labels are 0/1 integers (1 = positive / progressor).

#include "latentprog/image.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lp::stats {

// Mann-Whitney AUC from average-rank sums: the fraction of (positive,
// negative) pairs with the positive scored higher, ties counting one half.
// Throws SingleClass, LengthMismatch, InvalidArgument (labels not 0/1,
// non-finite scores).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct Cutoff {
    double threshold = 0.0; // a sample is called positive when score > threshold
    double sensitivity = 0.0;
    double specificity = 0.0;
    double objective = 0.0; // (1 - sens)^2 + (1 - spec)^2
    int true_positive = 0;
    int false_negative = 0;
    int true_negative = 0;
    int false_positive = 0;
};

// Scans the midpoints of sorted unique scores plus -inf and +inf. Among
// minimal objectives prefers higher specificity, then the higher threshold.
// Throws SingleClass, LengthMismatch, InvalidArgument.
Cutoff optimal_cutoff(std::span<const double> scores, std::span<const int> labels);

using Metric = std::function<double(std::span<const double> scores, std::span<const int> labels)>;

struct Interval {
    double point = 0.0; // metric on the full cohort
    double lo = 0.0;    // 2.5th percentile of the redraws
    double hi = 0.0;    // 97.5th percentile
    double sd = 0.0;    // sample standard deviation of the redraws
    long invalid_resamples = 0;
};

// Percentile bootstrap. Redraw i samples with replacement from its own
// substream Rng(seed, i); a resample with a single class (or on which the
// metric throws an lp::Error) is redrawn from the same substream and
// counted. Percentiles interpolate linearly between order statistics.
// Throws TooFewRedraws (< 100), MetricUndefined when invalid resamples
// outnumber valid ones, LengthMismatch.
Interval bootstrap_ci(const Metric& metric, std::span<const double> scores, std::span<const int> labels,
                      int redraws, std::uint64_t seed);

// Linear-interpolation quantile (q in [0,1]) of already sorted values.
double sorted_quantile(std::span<const double> sorted, double q);

struct PermutationResult {
    double observed_delta = 0.0; // metric(a) - metric(b)
    double p_value = 1.0;
};

// Paired permutation test: for each of n_perm rounds (substream
// Rng(seed, round)) every sample's two predictions are swapped with
// probability 1/2. p = (1 + #{|delta_i| >= |delta|}) / (n_perm + 1).
// Throws LengthMismatch, InvalidArgument (n_perm < 100).
PermutationResult permutation_test(std::span<const double> scores_a, std::span<const double> scores_b,
                                   std::span<const int> labels, const Metric& metric, int n_perm,
                                   std::uint64_t seed);
double permutation_pvalue(std::span<const double> scores_a, std::span<const double> scores_b,
                          std::span<const int> labels, const Metric& metric, int n_perm, std::uint64_t seed);

// (p_o - p_e) / (1 - p_e) over arbitrary integer categories.
// Throws LengthMismatch, InsufficientData (empty), DegenerateMarginals.
double cohens_kappa(std::span<const int> ratings_a, std::span<const int> ratings_b);

// ratings[item][rater]. Throws TooFewRaters, InsufficientData (< 2 items),
// InvalidArgument (ragged), DegenerateMarginals.
double fleiss_kappa(const std::vector<std::vector<int>>& ratings);

// Mean SSIM over every valid window x window position, with sample
// (n - 1) variances and C1 = 0.01^2, C2 = 0.03^2 for unit-range images.
// Throws DimensionMismatch, InvalidArgument (window even, < 3 or larger
// than the image).
double ssim(const Image& a, const Image& b, int window = 7);

} // namespace lp::stats
