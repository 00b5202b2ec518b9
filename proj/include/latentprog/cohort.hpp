#pragma once

// Synthetic longitudinal "knee" cohort: two bright bone bands separated by a
// dark joint space whose width (the gap) narrows over time for planted
// progressors. Every knee is rendered in right-knee configuration.

#include "latentprog/image.hpp"
#include "latentprog/latent_core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lp::cohort {

inline constexpr int kImageSize = 32;
inline constexpr double kMinGap = 1.0;
inline constexpr double kMaxGap = 10.0;

// Throws GapOutOfRange outside [1, 10].
Image render_joint(double gap, std::uint64_t jitter_seed, int size = kImageSize);

// KLS analogue: (8,10] -> 0, (6,8] -> 1, (4,6] -> 2, (2,4] -> 3, [1,2] -> 4.
int gap_grade(double gap);

struct SyntheticSubject {
    std::string subject_id;
    Side side = Side::Right;
    bool progressor = false;
    double gap_baseline = 0.0;
    double gap_final = 0.0;
    int horizon_months = 96;
    std::uint64_t noise_seed = 0;

    // Linear in time between baseline and the horizon.
    double gap_at(int month) const;
};

struct CohortConfig {
    int n_subjects = 200;
    double progressor_fraction = 0.2;
    std::vector<int> visits{0, 12, 24, 48, 72, 96};
    std::uint64_t seed = 0;
};

struct SyntheticVisit {
    VisitRow row;
    double gap = 0.0;
    Image image;
};

struct Cohort {
    std::vector<SyntheticSubject> subjects;
    std::vector<SyntheticVisit> visits; // subject-major, visit order

    std::vector<VisitRow> metadata() const;
};

// Throws InvalidCount (n < 10), InvalidFraction, InvalidArgument (visits
// without month 0, unsorted or duplicate months).
Cohort simulate_cohort(const CohortConfig& config);

std::string image_filename(const VisitKey& visit);

// PGMs, metadata.csv and ground_truth.json under `dir`.
void write_cohort(const Cohort& cohort, const std::filesystem::path& dir);

} // namespace lp::cohort
