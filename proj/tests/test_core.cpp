#include "latentprog/adam.hpp"
#include "latentprog/binary_io.hpp"
#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"
#include "latentprog/frechet.hpp"
#include "latentprog/image.hpp"
#include "latentprog/latent_core.hpp"
#include "latentprog/parallel.hpp"
#include "latentprog/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

using namespace lp;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an lp::Error");
    return ErrorKind::IoError;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "latentprog_test_core";
    std::filesystem::create_directories(dir);
    return dir / name;
}

LatentVector vec(std::initializer_list<float> v) { return LatentVector(std::vector<float>(v)); }

LatentVector ramp(int d, float base) {
    std::vector<float> v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = base + 0.25f * static_cast<float>(i);
    return LatentVector(v);
}

} // namespace

TEST_CASE("rng is deterministic per (seed, stream) and streams differ") {
    Rng a(42, 3), b(42, 3), c(42, 4);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
}

TEST_CASE("rng distributions stay in range and have the right moments") {
    Rng r(7);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto k = r.below(7);
        CHECK(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("csv parse trims fields and skips blank lines") {
    const auto t = csv::parse("a, b ,c\n\n1,2, 3 \n4,5,6\n");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][2] == "3");
    CHECK(t.column("b") == 1);
    CHECK(kind_of([&] { (void)t.column("zzz"); }) == ErrorKind::FormatError);
    CHECK(kind_of([] { (void)csv::to_double("x1", "field"); }) == ErrorKind::FormatError);
}

TEST_CASE("pgm round trip at 8 and 16 bits") {
    Image img(3, 4);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<double>(i) / 11.0;
    const auto p16 = scratch("a16.pgm");
    write_pgm(p16, img);
    const Image back16 = read_pgm(p16);
    CHECK(back16.height == 3);
    CHECK(back16.width == 4);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back16.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-4));
    const auto p8 = scratch("a8.pgm");
    write_pgm(p8, img, 255);
    CHECK(std::filesystem::file_size(p8) < std::filesystem::file_size(p16));
    const Image back8 = read_pgm(p8);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back8.pixels[i] - img.pixels[i]) <= 0.5 / 255 + 1e-12);
}

TEST_CASE("truncated binary input raises FormatError") {
    const std::vector<std::uint8_t> bytes{1, 2, 3};
    bin::Reader r(bytes);
    CHECK(r.u16() == 0x0201);
    CHECK(kind_of([&] { (void)r.u32(); }) == ErrorKind::FormatError);
}

TEST_CASE("build_dictionary: three unique rows, d = 8") {
    std::vector<VisitRow> meta{{"A", Side::Left, 0, 1}, {"A", Side::Left, 12, 2}, {"B", Side::Right, 0, std::nullopt}};
    LatentTable latents;
    for (const auto& row : meta) latents[row.visit()] = ramp(8, static_cast<float>(row.visit_month));
    const auto dict = build_dictionary(meta, latents);
    CHECK(dict.size() == 3);
    CHECK(dict.dimension() == 8);
    CHECK(dict.visits({"A", Side::Left}).size() == 2);
    CHECK(dict.find({{"B", Side::Right}, 0}) != nullptr);
}

TEST_CASE("build_dictionary errors") {
    std::vector<VisitRow> dup{{"A", Side::Left, 0, 1}, {"A", Side::Left, 0, 2}};
    LatentTable latents{{dup[0].visit(), ramp(4, 0.0f)}};
    CHECK(kind_of([&] { build_dictionary(dup, latents); }) == ErrorKind::DuplicateVisit);

    std::vector<VisitRow> missing{{"A", Side::Left, 0, 1}, {"A", Side::Left, 12, 1}};
    CHECK(kind_of([&] { build_dictionary(missing, latents); }) == ErrorKind::MissingLatent);

    LatentTable uneven{{missing[0].visit(), ramp(4, 0.0f)}, {missing[1].visit(), ramp(5, 0.0f)}};
    CHECK(kind_of([&] { build_dictionary(missing, uneven); }) == ErrorKind::DimensionMismatch);

    CHECK(kind_of([] { make_dictionary(2, {{"A", Side::Left, 0, 7, vec({1, 2})}}); }) == ErrorKind::InvalidGrade);
}

TEST_CASE("records are sorted by subject, side, month") {
    std::vector<KneeRecord> recs{{"B", Side::Left, 0, {}, vec({1, 0})},
                                 {"A", Side::Right, 24, {}, vec({1, 0})},
                                 {"A", Side::Right, 0, {}, vec({1, 0})},
                                 {"A", Side::Left, 12, {}, vec({1, 0})}};
    const auto dict = make_dictionary(2, recs);
    std::vector<VisitKey> keys;
    for (const auto& r : dict.records()) keys.push_back(r.visit());
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(dict.records()[0].side == Side::Left);
}

TEST_CASE("pair_trajectories examples") {
    SUBCASE("visits at 0, 48, 96 give two pairs") {
        const auto dict = make_dictionary(2, {{"A", Side::Left, 0, {}, vec({1, 0})},
                                              {"A", Side::Left, 48, {}, vec({0, 1})},
                                              {"A", Side::Left, 96, {}, vec({1, 1})}});
        const auto pairs = pair_trajectories(dict);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].delta_t == 48);
        CHECK(pairs[1].delta_t == 96);
        CHECK(pairs[1].baseline == vec({1, 0}));
    }
    SUBCASE("single visit gives nothing") {
        CHECK(pair_trajectories(make_dictionary(2, {{"A", Side::Left, 0, {}, vec({1, 0})}})).empty());
    }
    SUBCASE("two knees with two visits give two pairs") {
        const auto dict = make_dictionary(2, {{"A", Side::Left, 0, {}, vec({1, 0})},
                                              {"A", Side::Left, 12, {}, vec({0, 1})},
                                              {"A", Side::Right, 0, {}, vec({1, 1})},
                                              {"A", Side::Right, 24, {}, vec({2, 1})}});
        CHECK(pair_trajectories(dict).size() == 2);
    }
    SUBCASE("baseline is the earliest visit even when it is not month 0") {
        const auto dict = make_dictionary(2, {{"A", Side::Left, 24, {}, vec({3, 0})},
                                              {"A", Side::Left, 12, {}, vec({2, 0})}});
        const auto pairs = pair_trajectories(dict);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].baseline_month == 12);
        CHECK(pairs[0].delta_t == 12);
    }
}

TEST_CASE("pair count equals sum of (visits - 1) on random dictionaries") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<KneeRecord> recs;
        std::size_t expected = 0;
        const int knees = 1 + static_cast<int>(rng.below(6));
        for (int k = 0; k < knees; ++k) {
            const int visits = 1 + static_cast<int>(rng.below(5));
            expected += static_cast<std::size_t>(visits - 1);
            for (int v = 0; v < visits; ++v)
                recs.push_back({"S" + std::to_string(k), rng.coin() ? Side::Left : Side::Right, 0, {}, vec({1, 2})});
            // Sides are drawn per visit; make keys unique by month within a knee.
            for (int v = 0; v < visits; ++v) {
                auto& r = recs[recs.size() - static_cast<std::size_t>(visits) + static_cast<std::size_t>(v)];
                r.side = Side::Left;
                r.visit_month = 12 * v;
            }
        }
        const auto pairs = pair_trajectories(make_dictionary(2, recs));
        CHECK(pairs.size() == expected);
        for (const auto& p : pairs) CHECK(p.delta_t > 0);
    }
}

TEST_CASE("latent store layout matches the documented byte format") {
    const auto dict = make_dictionary(2, {{"AB", Side::Right, 12, 3, vec({1.0f, -2.0f})}});
    const auto bytes = encode_latent_store(dict);
    bin::Writer w;
    w.bytes("LTNT");
    w.u32(1);
    w.u32(2);
    w.u64(1);
    w.u16(2);
    w.bytes("AB");
    w.u8(1);
    w.u16(12);
    w.i8(3);
    w.f32(1.0f);
    w.f32(-2.0f);
    CHECK(bytes == w.data());
}

TEST_CASE("latent store round trip is byte identical and keeps missing KLS") {
    Rng rng(9);
    std::vector<KneeRecord> recs;
    for (int i = 0; i < 6; ++i) {
        std::vector<float> v(16);
        for (float& x : v) x = static_cast<float>(rng.normal());
        recs.push_back({"S" + std::to_string(i / 2), Side::Left, 12 * (i % 2),
                        i % 3 == 0 ? std::optional<int>{} : std::optional<int>{i % 5}, LatentVector(v)});
    }
    const auto dict = make_dictionary(16, recs);
    const auto path = scratch("store.ltnt");
    save_latent_store(path, dict);
    const auto back = load_latent_store(path);
    CHECK(std::equal(back.records().begin(), back.records().end(), dict.records().begin(), dict.records().end()));
    CHECK(encode_latent_store(back) == encode_latent_store(dict));

    auto bytes = encode_latent_store(dict);
    bytes[0] = 'X';
    CHECK(kind_of([&] { decode_latent_store(bytes); }) == ErrorKind::FormatError);
    bytes = encode_latent_store(dict);
    bytes.pop_back();
    CHECK(kind_of([&] { decode_latent_store(bytes); }) == ErrorKind::FormatError);
}

TEST_CASE("visit CSV round trip with empty KLS") {
    const auto rows = parse_visit_csv("subject_id,side,visit_month,kls\nS1,left,0,2\nS1,left,12,\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].kls == 2);
    CHECK(!rows[1].kls.has_value());
    const auto path = scratch("visits.csv");
    write_visit_csv(path, rows);
    CHECK(read_visit_csv(path) == rows);
    CHECK(kind_of([] { parse_visit_csv("subject_id,side,visit_month,kls\nS1,left,0,9\n"); }) == ErrorKind::InvalidGrade);
}

TEST_CASE("adam examples") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        std::vector<ad::Tensor> p{ad::Tensor({3}, std::vector<double>{1, 2, 3})};
        const std::vector<ad::Tensor> g{ad::Tensor({3})};
        AdamState s(p);
        for (int i = 0; i < 5; ++i) adam_step(s, p, g, 0.1);
        CHECK(p[0].data == std::vector<double>{1, 2, 3});
    }
    SUBCASE("first step on a scalar with g = 1, lr = 0.1 moves by -0.1") {
        std::vector<ad::Tensor> p{ad::Tensor({1}, 0.0)};
        const std::vector<ad::Tensor> g{ad::Tensor({1}, 1.0)};
        AdamState s(p);
        adam_step(s, p, g, 0.1);
        CHECK(std::abs(p[0].data[0] + 0.1) < 1e-6);
        CHECK(s.step_count == 1);
    }
    SUBCASE("identical runs give identical trajectories") {
        auto run = [] {
            std::vector<ad::Tensor> p{ad::Tensor({2}, std::vector<double>{0.5, -1.0})};
            AdamState s(p);
            for (int i = 0; i < 50; ++i) {
                const std::vector<ad::Tensor> g{ad::Tensor({2}, std::vector<double>{2 * p[0].data[0], std::sin(p[0].data[1])})};
                adam_step(s, p, g, 0.05);
            }
            return p[0].data;
        };
        CHECK(run() == run());
    }
    SUBCASE("shape mismatch") {
        std::vector<ad::Tensor> p{ad::Tensor({2})};
        const std::vector<ad::Tensor> g{ad::Tensor({3})};
        AdamState s(p);
        CHECK(kind_of([&] { adam_step(s, p, g, 0.1); }) == ErrorKind::ShapeMismatch);
    }
}

TEST_CASE("frechet distance examples") {
    GaussianSummary a{Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()};
    CHECK(frechet_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));

    GaussianSummary shifted{Eigen::Vector2d(1.5, -2.0), Eigen::Matrix2d::Identity()};
    CHECK(frechet_distance(a, shifted) == doctest::Approx(1.5 * 1.5 + 4.0).epsilon(1e-12));

    GaussianSummary d1{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 4).asDiagonal()};
    GaussianSummary d2{Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 1).asDiagonal()};
    CHECK(frechet_distance(d1, d2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(frechet_distance(d2, d1) == doctest::Approx(frechet_distance(d1, d2)).epsilon(1e-12));

    GaussianSummary bad{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1).asDiagonal()};
    CHECK(kind_of([&] { (void)frechet_distance(bad, a); }) == ErrorKind::NonPSDCovariance);
    GaussianSummary three{Eigen::Vector3d(0, 0, 0), Eigen::Matrix3d::Identity()};
    CHECK(kind_of([&] { (void)frechet_distance(a, three); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("frechet distance matches the closed form for random full covariances") {
    // For commuting matrices (shared eigenvectors) the square-root trace is
    // sum sqrt(l_a * l_b); build such pairs by rotating diagonal spectra.
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 4;
        Eigen::MatrixXd m(d, d);
        for (int i = 0; i < d * d; ++i) m.data()[i] = rng.normal();
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
        const Eigen::MatrixXd q = qr.householderQ();
        Eigen::VectorXd la(d), lb(d), mu_a(d), mu_b(d);
        double expected = 0.0;
        for (int i = 0; i < d; ++i) {
            la[i] = rng.uniform(0.1, 3.0);
            lb[i] = rng.uniform(0.1, 3.0);
            mu_a[i] = rng.normal();
            mu_b[i] = rng.normal();
            expected += (mu_a[i] - mu_b[i]) * (mu_a[i] - mu_b[i]) + la[i] + lb[i] - 2.0 * std::sqrt(la[i] * lb[i]);
        }
        GaussianSummary a{mu_a, q * la.asDiagonal() * q.transpose()};
        GaussianSummary b{mu_b, q * lb.asDiagonal() * q.transpose()};
        CHECK(frechet_distance(a, b) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("parallel_for results do not depend on the worker count") {
    auto run = [](const char* threads) {
        setenv("LP_THREADS", threads, 1);
        std::vector<double> out(1000);
        parallel_for(out.size(), [&](std::size_t i) { out[i] = std::sin(static_cast<double>(i)); });
        return out;
    };
    CHECK(run("1") == run("4"));
    unsetenv("LP_THREADS");
    CHECK(kind_of([] { parallel_for(10, [](std::size_t i) { if (i == 7) fail(ErrorKind::EmptyBatch, "x"); }); }) ==
          ErrorKind::EmptyBatch);
}
