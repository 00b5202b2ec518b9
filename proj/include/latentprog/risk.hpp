#pragma once

// Progression risk from per-visit grade probabilities, and the shallow latent
// probe that supplies those probabilities from latents.

#include "latentprog/autodiff.hpp"
#include "latentprog/latent_core.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lp::risk {

inline constexpr int kGrades = 5;
inline constexpr double kPainKoosThreshold = 86.1;

using ProbabilityVector = std::array<double, kGrades>;

// Throws InvalidProbability unless every entry is in [0,1] and they sum to 1
// within 1e-6.
void validate(const ProbabilityVector& p);

// True iff the follow-up grade exceeds the baseline grade by more than one.
// Throws InvalidGrade.
bool progression_label(int kls_baseline, int kls_followup);

struct RiskScore {
    double p_progress = 0.0;
    double p_stable = 1.0;
};

// p_progress = sum over (ci, cj) with cj - ci > 1 of p_i[ci] * p_j[cj].
RiskScore progression_risk(const ProbabilityVector& p_baseline, const ProbabilityVector& p_followup);

// One p_progress per follow-up, each against the fixed baseline.
// Throws EmptyFollowups.
std::vector<double> risk_trajectory(const ProbabilityVector& p_baseline,
                                    std::span<const ProbabilityVector> followups);

// Pain label: KOOS at or below the threshold.
bool pain_label(double koos);

// ----------------------------------------------------------------------------
// Latent probe: d -> h (ReLU) -> classes (softmax).

enum class ProbeTask { Kls, Pain };

int task_classes(ProbeTask task) noexcept;

struct ProbeConfig {
    int hidden = 64;
    int epochs = 200;
    double learning_rate = 1e-3;
    int batch_size = 32;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct LatentProbe {
    ProbeTask task = ProbeTask::Kls;
    int input_dim = 0;
    int hidden = 0;
    int classes = 0;
    // Inputs are standardised per coordinate with the training mean / sd.
    std::vector<double> input_mean;
    std::vector<double> input_scale;
    ad::Tensor w1; // [input_dim, hidden]
    ad::Tensor b1; // [1, hidden]
    ad::Tensor w2; // [hidden, classes]
    ad::Tensor b2; // [1, classes]
    std::vector<double> train_loss; // per epoch
    std::vector<double> validation_loss; // per epoch; empty without a validation split
};

// Zero weights and identity standardisation.
LatentProbe zero_probe(ProbeTask task, int input_dim, int hidden);

// Cross-entropy training with Adam on minibatches. A seeded
// validation_fraction of the samples is held out for the validation log.
// Throws InsufficientData (< 2 samples), LengthMismatch, DegenerateLabels
// (fewer than two classes), InvalidGrade / InvalidArgument for labels outside
// the task's range, DimensionMismatch.
LatentProbe train_latent_probe(std::span<const std::vector<double>> latents, std::span<const int> labels,
                               ProbeTask task, const ProbeConfig& cfg);

// Softmax class probabilities. Throws DimensionMismatch.
std::vector<double> probe_predict(const LatentProbe& probe, std::span<const double> w);
// Grade probabilities from a KLS probe.
ProbabilityVector probe_predict_grades(const LatentProbe& probe, const LatentVector& w);

// ----------------------------------------------------------------------------
// Probability oracle CSV: subject_id,side,visit_month,p0,p1,p2,p3,p4

using ProbabilityTable = std::map<VisitKey, ProbabilityVector>;

ProbabilityTable parse_probability_csv(const std::string& text);
ProbabilityTable read_probability_csv(const std::filesystem::path& path);
void write_probability_csv(const std::filesystem::path& path, const ProbabilityTable& table);

struct KneeRisk {
    KneeKey key;
    int baseline_month = 0;
    std::vector<int> followup_months;
    std::vector<double> p_progress;
};

// One trajectory per knee that has the baseline month and at least one later
// visit; knees without the baseline month are skipped.
std::vector<KneeRisk> knee_risks(const ProbabilityTable& table, int baseline_month);

} // namespace lp::risk
