#include "latentprog/adam.hpp"
#include "latentprog/inversion.hpp"
#include "latentprog/stats.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace lp;
using namespace lp::inversion;
using lp::testing::error_of;

namespace {

const gan::Architecture kArch{8, 4, 4}; // 16x16 images

Image random_image(int size, Rng& rng) {
    Image img(size, size);
    for (double& p : img.pixels) p = rng.uniform();
    return img;
}

InversionConfig quick(int steps) {
    InversionConfig cfg;
    cfg.steps = steps;
    cfg.n_z = 2000;
    return cfg;
}

} // namespace

TEST_CASE("latent statistics of a constant mapping") {
    const std::vector<double> c{1.5, -2.0, 0.25};
    const auto s = latent_statistics([&](std::span<const double>) { return c; }, 3, 100, 1);
    CHECK(s.mu_w == c);
    CHECK(s.sigma_w == 0.0);
}

TEST_CASE("latent statistics of the identity mapping, d = 4") {
    const auto s = latent_statistics([](std::span<const double> z) { return std::vector<double>(z.begin(), z.end()); },
                                     4, 100000, 2);
    CHECK(std::abs(s.sigma_w * s.sigma_w - 4.0) < 0.2);
    for (double m : s.mu_w) CHECK(std::abs(m) < 0.02);
}

TEST_CASE("latent statistics preconditions and permutation invariance") {
    const MappingFn id = [](std::span<const double> z) { return std::vector<double>(z.begin(), z.end()); };
    CHECK(error_of([&] { latent_statistics(id, 4, 1, 0); }) == ErrorKind::InvalidCount);
    Rng rng(3);
    std::vector<std::vector<double>> samples(50, std::vector<double>(3));
    for (auto& v : samples)
        for (double& x : v) x = rng.normal();
    const auto a = latent_statistics_of(samples);
    std::reverse(samples.begin(), samples.end());
    std::rotate(samples.begin(), samples.begin() + 17, samples.end());
    const auto b = latent_statistics_of(samples);
    CHECK(a.sigma_w == doctest::Approx(b.sigma_w).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.mu_w[i] == doctest::Approx(b.mu_w[i]).epsilon(1e-12));
}

TEST_CASE("perceptual distance: identity, symmetry, shape check") {
    Rng rng(4);
    for (int i = 0; i < 5; ++i) {
        const Image a = random_image(16, rng), b = random_image(16, rng);
        CHECK(perceptual_distance(a, a) == 0.0);
        CHECK(perceptual_distance(a, b) > 0.0);
        CHECK(perceptual_distance(a, b) == perceptual_distance(b, a));
    }
    CHECK(error_of([&] { perceptual_distance(Image(16, 16), Image(16, 12)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("perceptual distance increases along a blend away from the target") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Image target = random_image(32, rng), other = random_image(32, rng);
        double previous = 0.0;
        for (int k = 1; k <= 10; ++k) {
            Image blend = target;
            const double s = 0.1 * k;
            for (std::size_t i = 0; i < blend.size(); ++i)
                blend.pixels[i] = (1.0 - s) * target.pixels[i] + s * other.pixels[i];
            const double d = perceptual_distance(target, blend);
            CHECK(d > previous);
            previous = d;
        }
    }
}

TEST_CASE("differentiable perceptual distance matches the plain one") {
    Rng rng(6);
    const Image a = random_image(16, rng), b = random_image(16, rng);
    const auto& metric = default_metric();
    const double d = metric.distance_to(gan::image_to_var(a), metric.embedding(b)).item();
    CHECK(d == doctest::Approx(perceptual_distance(a, b)).epsilon(1e-9));
}

TEST_CASE("noise regularisation examples") {
    // Levels 32, 16, 8: two per level for a constant map.
    const std::vector<ad::Tensor> ones{ad::Tensor({1, 32, 32}, 1.0)};
    CHECK(noise_regularization(ones) == doctest::Approx(6.0).epsilon(1e-12));
    const std::vector<ad::Tensor> two{ad::Tensor({1, 8, 8}, 1.0), ad::Tensor({1, 16, 16}, 1.0)};
    CHECK(noise_regularization(two) == doctest::Approx(2.0 + 4.0).epsilon(1e-12));

    Rng rng(7);
    ad::Tensor white({1, 256, 256});
    for (double& x : white.data) x = rng.normal();
    const std::vector<ad::Tensor> w{white};
    CHECK(noise_regularization(w) < 0.01);
    CHECK(noise_regularization(std::span<const ad::Tensor>{}) == 0.0);

    // Smooth maps are penalised far more than white noise.
    ad::Tensor smooth({1, 32, 32});
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) smooth.data[static_cast<std::size_t>(y * 32 + x)] = std::sin(0.2 * x) + std::cos(0.2 * y);
    const std::vector<ad::Tensor> s{smooth};
    CHECK(noise_regularization(s) > 0.1);
}

TEST_CASE("schedules") {
    const InversionConfig cfg;
    CHECK(lr_multiplier(0.0, cfg) == 0.0);
    CHECK(lr_multiplier(0.025, cfg) == doctest::Approx(0.5));
    CHECK(lr_multiplier(0.5, cfg) == doctest::Approx(1.0));
    CHECK(lr_multiplier(0.875, cfg) == doctest::Approx(0.5));
    CHECK(exploration_t(0.0, cfg) == 1.0);
    CHECK(exploration_t(0.375, cfg) == doctest::Approx(0.5));
    CHECK(exploration_t(0.9, cfg) == 0.0);
    InversionConfig constant = cfg;
    constant.constant_t = true;
    CHECK(exploration_t(0.9, constant) == 1.0);
}

TEST_CASE("Adam on a quadratic converges monotonically after warm-up without exploration noise") {
    Rng rng(8);
    const int d = 8;
    std::vector<double> c(d);
    for (double& x : c) x = rng.uniform(-1.0, 1.0);
    std::vector<ad::Tensor> p{ad::Tensor({d})};
    AdamState state(p, 0.9, 0.999);
    const InversionConfig cfg;
    const int steps = 1000;
    double previous = 0.0;
    for (int s = 0; s < steps; ++s) {
        ad::Tensor g({d});
        double loss = 0.0;
        for (int i = 0; i < d; ++i) {
            const double r = p[0].data[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)];
            g.data[static_cast<std::size_t>(i)] = r;
            loss += 0.5 * r * r;
        }
        if (s > 10) CHECK(loss <= previous + 1e-12);
        previous = loss;
        const std::vector<ad::Tensor> grads{g};
        adam_step(state, p, grads, 0.01 * lr_multiplier(static_cast<double>(s) / steps, cfg));
    }
    CHECK(previous < 1e-6);
}

TEST_CASE("inversion with zero steps returns mu_w exactly") {
    const auto params = gan::init_params(kArch, 9);
    const auto stats = latent_statistics(params, 500, 1);
    Rng rng(10);
    const auto res = invert_generator(params, random_image(16, rng), quick(0), 3, stats);
    CHECK(res.w == stats.mu_w);
    CHECK(res.steps == 0);
    CHECK(res.final_loss == res.initial_loss);
}

TEST_CASE("inversion is deterministic, never worse than its start, and checks shapes") {
    const auto params = gan::init_params(kArch, 11);
    const auto stats = latent_statistics(params, 2000, 1);
    std::vector<double> z(8);
    Rng rng(12);
    for (double& x : z) x = rng.normal();
    const Image target = gan::generator_forward(params, gan::map_latent(params, z), gan::zero_noise(kArch));
    const auto a = invert_generator(params, target, quick(150), 5, stats);
    const auto b = invert_generator(params, target, quick(150), 5, stats);
    CHECK(a.w == b.w);
    CHECK(a.final_loss == b.final_loss);
    CHECK(a.final_loss <= a.initial_loss);
    CHECK(std::isfinite(a.perceptual));

    // The reported loss is the objective at the returned iterate.
    const Image recon = gan::generator_forward(params, a.w, a.noise);
    CHECK(perceptual_distance(recon, target) == doctest::Approx(a.perceptual).epsilon(1e-9));
    CHECK(a.final_loss ==
          doctest::Approx(a.perceptual + quick(0).alpha * noise_regularization(a.noise.maps)).epsilon(1e-9));

    CHECK(error_of([&] { invert_generator(params, Image(8, 8), quick(5), 5, stats); }) ==
          ErrorKind::DimensionMismatch);
}

TEST_CASE("invert_many matches per-image inversions with derived seeds") {
    const auto params = gan::init_params(kArch, 13);
    const auto stats = latent_statistics(params, 500, 1);
    Rng rng(14);
    const std::vector<Image> targets{random_image(16, rng), random_image(16, rng), random_image(16, rng)};
    const auto many = invert_many(params, targets, quick(20), 77, stats);
    REQUIRE(many.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(many[i].w == invert_generator(params, targets[i], quick(20), derive_seed(77, i), stats).w);
}

TEST_CASE("inversion config parsing") {
    const auto c = parse_inversion_config("eta = 0.05\nalpha = 1000.0\nsteps = 200\nconstant_t = true\n");
    CHECK(c.eta == 0.05);
    CHECK(c.alpha == 1000.0);
    CHECK(c.steps == 200);
    CHECK(c.constant_t);
    CHECK(c.n_z == 10000);
    CHECK(error_of([] { parse_inversion_config("eta = -1.0"); }) == ErrorKind::InvalidArgument);
    CHECK(error_of([] { parse_inversion_config("eta = "); }) == ErrorKind::FormatError);
}
