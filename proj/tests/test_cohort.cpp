#include "latentprog/cohort.hpp"
#include "latentprog/risk.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

using namespace lp;
using namespace lp::cohort;
using lp::testing::error_of;

namespace {

double central_mean(const Image& img) {
    double total = 0.0;
    int n = 0;
    for (int y = 14; y < 18; ++y)
        for (int x = 0; x < img.width; ++x, ++n) total += img.at(y, x);
    return total / n;
}

std::map<KneeKey, std::vector<int>> grades_by_knee(const Cohort& c) {
    std::map<KneeKey, std::vector<int>> out;
    for (const auto& v : c.visits) out[v.row.knee()].push_back(*v.row.kls);
    return out;
}

} // namespace

TEST_CASE("render_joint examples") {
    const Image wide = render_joint(10.0, 3), narrow = render_joint(1.0, 3);
    CHECK(wide.height == 32);
    CHECK(wide.width == 32);
    CHECK(central_mean(narrow) > central_mean(wide));
    CHECK(render_joint(4.5, 9) == render_joint(4.5, 9));
    CHECK(!(render_joint(4.5, 9) == render_joint(4.5, 10)));
    for (double p : wide.pixels) CHECK((p >= 0.0 && p <= 1.0));
    CHECK(error_of([] { render_joint(0.5, 1); }) == ErrorKind::GapOutOfRange);
    CHECK(error_of([] { render_joint(10.5, 1); }) == ErrorKind::GapOutOfRange);
}

TEST_CASE("central intensity never rises as the gap widens") {
    double previous = 2.0;
    for (double gap = 1.0; gap <= 10.0; gap += 1.0) {
        const double m = central_mean(render_joint(gap, 5));
        CHECK(m <= previous);
        previous = m;
    }
}

TEST_CASE("gap buckets") {
    CHECK(gap_grade(10.0) == 0);
    CHECK(gap_grade(8.01) == 0);
    CHECK(gap_grade(8.0) == 1);
    CHECK(gap_grade(6.0) == 2);
    CHECK(gap_grade(4.0) == 3);
    CHECK(gap_grade(2.0) == 4);
    CHECK(gap_grade(1.0) == 4);
}

TEST_CASE("exact progressor count and planted labels") {
    CohortConfig cfg;
    cfg.n_subjects = 100;
    cfg.progressor_fraction = 0.2;
    cfg.seed = 11;
    const auto c = simulate_cohort(cfg);
    CHECK(c.subjects.size() == 100);
    CHECK(std::count_if(c.subjects.begin(), c.subjects.end(), [](const auto& s) { return s.progressor; }) == 20);
    CHECK(c.visits.size() == 600);

    const auto grades = grades_by_knee(c);
    for (const auto& s : c.subjects) {
        const auto& g = grades.at({s.subject_id, s.side});
        REQUIRE(g.size() == 6);
        // Labels recomputed from the rendered gaps equal the planted ones.
        CHECK(risk::progression_label(g.front(), g.back()) == s.progressor);
        if (s.progressor) {
            CHECK(s.gap_final < s.gap_baseline);
            CHECK(s.gap_at(12) < s.gap_at(0));
        } else {
            CHECK(std::abs(s.gap_final - s.gap_baseline) < 0.05 * s.gap_baseline);
        }
    }
    for (const auto& v : c.visits) {
        CHECK(v.row.kls == gap_grade(v.gap));
        CHECK((v.gap >= kMinGap && v.gap <= kMaxGap));
    }
}

TEST_CASE("no progressors keeps every grade sequence within one bucket") {
    CohortConfig cfg;
    cfg.n_subjects = 50;
    cfg.progressor_fraction = 0.0;
    cfg.seed = 2;
    const auto c = simulate_cohort(cfg);
    for (const auto& [knee, g] : grades_by_knee(c)) {
        const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
        CHECK(*hi - *lo <= 1);
    }
}

TEST_CASE("simulation is deterministic and validates its configuration") {
    CohortConfig cfg;
    cfg.n_subjects = 12;
    cfg.seed = 4;
    const auto a = simulate_cohort(cfg), b = simulate_cohort(cfg);
    REQUIRE(a.visits.size() == b.visits.size());
    for (std::size_t i = 0; i < a.visits.size(); ++i) CHECK(a.visits[i].image == b.visits[i].image);

    auto bad = cfg;
    bad.n_subjects = 9;
    CHECK(error_of([&] { simulate_cohort(bad); }) == ErrorKind::InvalidCount);
    bad = cfg;
    bad.progressor_fraction = 1.2;
    CHECK(error_of([&] { simulate_cohort(bad); }) == ErrorKind::InvalidFraction);
    bad = cfg;
    bad.visits = {12, 24};
    CHECK(error_of([&] { simulate_cohort(bad); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("write_cohort lays out images, metadata and ground truth") {
    CohortConfig cfg;
    cfg.n_subjects = 10;
    cfg.seed = 5;
    const auto c = simulate_cohort(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "latentprog_test_cohort";
    std::filesystem::remove_all(dir);
    write_cohort(c, dir);
    int pgms = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) pgms += e.path().extension() == ".pgm";
    CHECK(pgms == 60);
    CHECK(std::filesystem::exists(dir / "ground_truth.json"));
    const auto rows = read_visit_csv(dir / "metadata.csv");
    CHECK(rows == c.metadata());
    const auto first = read_pgm(dir / image_filename(c.visits[0].row.visit()));
    for (std::size_t i = 0; i < first.size(); ++i)
        CHECK(std::abs(first.pixels[i] - c.visits[0].image.pixels[i]) <= 0.5 / 65535 + 1e-12);
}
