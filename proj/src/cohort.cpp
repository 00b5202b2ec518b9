#include "latentprog/cohort.hpp"

#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"
#include "latentprog/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace lp::cohort {

namespace {

constexpr double kSpaceIntensity = 0.1;
constexpr double kTextureSd = 0.03;

// Overlap of pixel row [y, y+1) with the joint space [lo, hi].
double space_coverage(int y, double lo, double hi) {
    return std::clamp(std::min(hi, y + 1.0) - std::max(lo, static_cast<double>(y)), 0.0, 1.0);
}

} // namespace

Image render_joint(double gap, std::uint64_t jitter_seed, int size) {
    require(gap >= kMinGap && gap <= kMaxGap, ErrorKind::GapOutOfRange,
            "gap " + std::to_string(gap) + " outside [1, 10]");
    require(size >= 16, ErrorKind::InvalidArgument, "joint images need at least 16 rows");
    Rng rng(jitter_seed, 0x6a6f696e74);
    const double centre = size / 2.0;
    const double lo = centre - gap / 2.0;
    const double hi = centre + gap / 2.0;
    const double brightness = 0.02 * rng.normal();
    Image img(size, size);
    for (int y = 0; y < size; ++y) {
        const double dist = std::abs(y + 0.5 - centre) / centre;
        const double coverage = space_coverage(y, lo, hi);
        for (int x = 0; x < size; ++x) {
            // Bone is densest at the joint margin and slightly brighter medially.
            const double bone = 0.85 - 0.25 * dist + 0.06 * (0.5 - static_cast<double>(x) / (size - 1));
            const double v = bone * (1.0 - coverage) + kSpaceIntensity * coverage;
            img.at(y, x) = v + brightness + kTextureSd * rng.normal();
        }
    }
    clamp_unit(img);
    return img;
}

int gap_grade(double gap) {
    require(gap >= kMinGap && gap <= kMaxGap, ErrorKind::GapOutOfRange,
            "gap " + std::to_string(gap) + " outside [1, 10]");
    if (gap > 8.0) return 0;
    if (gap > 6.0) return 1;
    if (gap > 4.0) return 2;
    if (gap > 2.0) return 3;
    return 4;
}

double SyntheticSubject::gap_at(int month) const {
    const double t = horizon_months > 0 ? std::clamp(static_cast<double>(month) / horizon_months, 0.0, 1.0) : 0.0;
    return gap_baseline + (gap_final - gap_baseline) * t;
}

std::vector<VisitRow> Cohort::metadata() const {
    std::vector<VisitRow> rows;
    rows.reserve(visits.size());
    for (const auto& v : visits) rows.push_back(v.row);
    return rows;
}

Cohort simulate_cohort(const CohortConfig& config) {
    require(config.n_subjects >= 10, ErrorKind::InvalidCount, "a cohort needs at least 10 subjects");
    require(config.progressor_fraction >= 0.0 && config.progressor_fraction <= 1.0, ErrorKind::InvalidFraction,
            "progressor fraction must lie in [0, 1]");
    require(!config.visits.empty() && config.visits.front() == 0, ErrorKind::InvalidArgument,
            "visit schedule must start at month 0");
    for (std::size_t i = 1; i < config.visits.size(); ++i)
        require(config.visits[i] > config.visits[i - 1], ErrorKind::InvalidArgument,
                "visit months must be strictly increasing");

    const auto n = static_cast<std::size_t>(config.n_subjects);
    const auto n_progressors = static_cast<std::size_t>(std::lround(config.progressor_fraction * config.n_subjects));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng assign(config.seed, 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[assign.below(i)]);
    std::vector<bool> is_progressor(n, false);
    for (std::size_t i = 0; i < n_progressors; ++i) is_progressor[order[i]] = true;

    const int horizon = config.visits.back();
    Cohort cohort;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(config.seed, 1000 + i);
        SyntheticSubject s;
        char id[16];
        std::snprintf(id, sizeof id, "S%04zu", i + 1);
        s.subject_id = id;
        s.side = rng.coin() ? Side::Left : Side::Right;
        s.progressor = is_progressor[i];
        s.horizon_months = horizon;
        s.noise_seed = rng.next_u64();
        if (s.progressor) {
            s.gap_baseline = rng.uniform(5.2, 7.4);
            // Two or more grades of narrowing by the horizon.
            s.gap_final = gap_grade(s.gap_baseline) == 1 ? rng.uniform(1.2, 3.8) : rng.uniform(1.1, 1.9);
        } else {
            s.gap_baseline = rng.uniform(6.8, kMaxGap);
            s.gap_final = s.gap_baseline * (1.0 - rng.uniform(0.0, 0.04));
        }
        for (int month : config.visits) {
            SyntheticVisit v;
            v.gap = s.gap_at(month);
            v.row = {s.subject_id, s.side, month, gap_grade(v.gap)};
            v.image = render_joint(v.gap, derive_seed(s.noise_seed, static_cast<std::uint64_t>(month)));
            cohort.visits.push_back(std::move(v));
        }
        cohort.subjects.push_back(std::move(s));
    }
    return cohort;
}

std::string image_filename(const VisitKey& visit) {
    return visit.knee.subject_id + "_" + std::string(side_name(visit.knee.side)) + "_" +
           std::to_string(visit.visit_month) + ".pgm";
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& v : cohort.visits) write_pgm(dir / image_filename(v.row.visit()), v.image);
    const auto rows = cohort.metadata();
    write_visit_csv(dir / "metadata.csv", rows);

    nlohmann::ordered_json truth = nlohmann::ordered_json::array();
    for (const auto& s : cohort.subjects) {
        nlohmann::ordered_json gaps = nlohmann::ordered_json::object();
        for (const auto& v : cohort.visits)
            if (v.row.subject_id == s.subject_id) gaps[std::to_string(v.row.visit_month)] = v.gap;
        truth.push_back({{"subject_id", s.subject_id},
                         {"side", side_name(s.side)},
                         {"progressor", s.progressor},
                         {"gap_baseline", s.gap_baseline},
                         {"gap_final", s.gap_final},
                         {"gaps", gaps}});
    }
    csv::write_text(dir / "ground_truth.json", truth.dump(2) + "\n");
}

} // namespace lp::cohort
