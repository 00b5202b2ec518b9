#include "latentprog/inversion.hpp"

#include "latentprog/adam.hpp"
#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"
#include "latentprog/parallel.hpp"
#include "latentprog/rng.hpp"

#include <toml.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace lp::inversion {

using ad::Tensor;
using ad::Var;

LatentStats latent_statistics_of(std::span<const std::vector<double>> samples) {
    require(samples.size() >= 2, ErrorKind::InvalidCount, "latent statistics need at least two samples");
    const std::size_t d = samples.front().size();
    LatentStats s;
    s.mu_w.assign(d, 0.0);
    for (const auto& w : samples) {
        require(w.size() == d, ErrorKind::DimensionMismatch, "latent samples differ in dimension");
        for (std::size_t j = 0; j < d; ++j) s.mu_w[j] += w[j];
    }
    for (double& m : s.mu_w) m /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (const auto& w : samples)
        for (std::size_t j = 0; j < d; ++j) ss += (w[j] - s.mu_w[j]) * (w[j] - s.mu_w[j]);
    s.sigma_w = std::sqrt(ss / static_cast<double>(samples.size()));
    return s;
}

LatentStats latent_statistics(const MappingFn& mapping, int latent_dim, int n_z, std::uint64_t seed) {
    require(n_z >= 2, ErrorKind::InvalidCount, "n_z must be at least 2, got " + std::to_string(n_z));
    require(latent_dim > 0, ErrorKind::InvalidArgument, "latent dimension must be positive");
    Rng rng(seed, 0x5354);
    std::vector<std::vector<double>> ws;
    ws.reserve(static_cast<std::size_t>(n_z));
    std::vector<double> z(static_cast<std::size_t>(latent_dim));
    for (int i = 0; i < n_z; ++i) {
        for (double& v : z) v = rng.normal();
        ws.push_back(mapping(z));
    }
    return latent_statistics_of(ws);
}

LatentStats latent_statistics(const gan::ToyGanParams& params, int n_z, std::uint64_t seed) {
    return latent_statistics([&](std::span<const double> z) { return gan::map_latent(params, z); },
                             params.arch.latent_dim, n_z, seed);
}

// ----------------------------------------------------------------------------
// Perceptual distance

namespace {

Tensor he_normal(ad::Shape shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double sd = std::sqrt(2.0 / fan_in);
    for (double& v : t.data) v = rng.normal(0.0, sd);
    return t;
}

Var flat_scaled(const Var& x) {
    const int n = static_cast<int>(x.size());
    return ad::scale(ad::reshape(x, {n}), 1.0 / std::sqrt(static_cast<double>(n)));
}

} // namespace

PerceptualMetric::PerceptualMetric(std::uint64_t seed) {
    Rng rng(seed, 0x5045);
    const int c1 = 8, c2 = 16, c3 = 16;
    weights_.push_back(he_normal({c1, 1 * 9}, 9, rng));
    weights_.push_back(Tensor({c1}));
    weights_.push_back(he_normal({c2, c1 * 9}, c1 * 9, rng));
    weights_.push_back(Tensor({c2}));
    weights_.push_back(he_normal({c3, c2 * 9}, c2 * 9, rng));
    weights_.push_back(Tensor({c3}));
}

std::vector<Var> PerceptualMetric::embed(const Var& image) const {
    const auto w = gan::constants(weights_);
    // Centre pixel intensities so the first layer sees signed input.
    Var x = ad::add_scalar(image, -0.5);
    Var h1 = ad::leaky_relu(ad::conv3x3(x, w[0], w[1]), gan::kLeakySlope);
    Var h2 = ad::leaky_relu(ad::conv3x3(ad::avgpool2(h1), w[2], w[3]), gan::kLeakySlope);
    Var h3 = ad::leaky_relu(ad::conv3x3(ad::avgpool2(h2), w[4], w[5]), gan::kLeakySlope);
    return {flat_scaled(h1), flat_scaled(h2), flat_scaled(h3)};
}

std::vector<double> PerceptualMetric::embedding(const Image& image) const {
    require(image.height % 4 == 0 && image.width % 4 == 0 && image.height > 0 && image.width > 0,
            ErrorKind::DimensionMismatch, "perceptual embedding needs image sides divisible by 4");
    ad::NoGradGuard no_grad;
    std::vector<double> out;
    for (const Var& layer : embed(gan::image_to_var(image)))
        out.insert(out.end(), layer.value().data.begin(), layer.value().data.end());
    return out;
}

double PerceptualMetric::distance(const Image& a, const Image& b) const {
    require(a.height == b.height && a.width == b.width, ErrorKind::DimensionMismatch,
            "images differ in shape: " + std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                std::to_string(b.height) + "x" + std::to_string(b.width));
    const auto ea = embedding(a);
    const auto eb = embedding(b);
    double ss = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) ss += (ea[i] - eb[i]) * (ea[i] - eb[i]);
    return std::sqrt(ss);
}

Var PerceptualMetric::distance_to(const Var& image, const std::vector<double>& target_embedding) const {
    Var ss = ad::constant(Tensor({1}));
    std::size_t offset = 0;
    for (const Var& layer : embed(image)) {
        require(offset + layer.size() <= target_embedding.size(), ErrorKind::DimensionMismatch,
                "embedding sizes differ");
        const auto first = target_embedding.begin() + static_cast<std::ptrdiff_t>(offset);
        Tensor t(layer.shape(), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(layer.size())));
        const Var diff = ad::sub(layer, ad::constant(std::move(t)));
        ss = ad::add(ss, ad::reshape(ad::sum(ad::mul(diff, diff)), {1}));
        offset += layer.size();
    }
    require(offset == target_embedding.size(), ErrorKind::DimensionMismatch, "embedding sizes differ");
    return ad::sqrt(ad::add_scalar(ss, 1e-12));
}

const PerceptualMetric& default_metric() {
    static const PerceptualMetric metric;
    return metric;
}

double perceptual_distance(const Image& a, const Image& b) { return default_metric().distance(a, b); }

// ----------------------------------------------------------------------------
// Noise regularisation

Var noise_regularization(std::span<const Var> maps) {
    Var total = ad::constant(Tensor({1}));
    for (Var n : maps) {
        require(n.shape().size() == 3, ErrorKind::ShapeMismatch, "noise maps must be [C,H,W]");
        while (true) {
            const Var cx = ad::mean(ad::mul(n, ad::roll(n, 0, 1)));
            const Var cy = ad::mean(ad::mul(n, ad::roll(n, 1, 0)));
            total = ad::add(total, ad::reshape(ad::add(ad::mul(cx, cx), ad::mul(cy, cy)), {1}));
            if (n.shape()[1] <= 8 || n.shape()[2] <= 8 || n.shape()[1] % 2 || n.shape()[2] % 2) break;
            n = ad::avgpool2(n);
        }
    }
    return total;
}

double noise_regularization(std::span<const Tensor> maps) {
    ad::NoGradGuard no_grad;
    const auto vars = gan::constants(maps);
    return noise_regularization(std::span<const Var>(vars)).item();
}

// ----------------------------------------------------------------------------
// Inversion

double lr_multiplier(double progress, const InversionConfig& cfg) {
    double m = 1.0;
    if (cfg.lr_rampdown > 0.0) {
        const double down = std::min(1.0, (1.0 - progress) / cfg.lr_rampdown);
        m = 0.5 - 0.5 * std::cos(down * std::numbers::pi);
    }
    if (cfg.lr_rampup > 0.0) m *= std::min(1.0, progress / cfg.lr_rampup);
    return m;
}

double exploration_t(double progress, const InversionConfig& cfg) {
    if (cfg.constant_t) return 1.0;
    if (cfg.noise_ramp <= 0.0) return 0.0;
    return std::max(0.0, 1.0 - progress / cfg.noise_ramp);
}

namespace {

struct Objective {
    Var total;
    double perceptual = 0.0;
};

Objective objective(const gan::ToyGanParams& params, std::span<const Var> g, const Var& w,
                    std::span<const Var> noise, const std::vector<double>& target_embedding, double alpha) {
    const Var img = gan::synthesis_forward(g, params.arch, w, noise);
    const Var p = default_metric().distance_to(img, target_embedding);
    const Var reg = noise_regularization(noise);
    return {ad::add(ad::reshape(p, {1}), ad::scale(reg, alpha)), p.item()};
}

} // namespace

InversionResult invert_generator(const gan::ToyGanParams& params, const Image& target, const InversionConfig& cfg,
                                 std::uint64_t seed) {
    return invert_generator(params, target, cfg, seed, latent_statistics(params, cfg.n_z, seed));
}

InversionResult invert_generator(const gan::ToyGanParams& params, const Image& target, const InversionConfig& cfg,
                                 std::uint64_t seed, const LatentStats& stats) {
    const auto& arch = params.arch;
    require(target.height == arch.image_size() && target.width == arch.image_size(), ErrorKind::DimensionMismatch,
            "target is " + std::to_string(target.height) + "x" + std::to_string(target.width) +
                ", generator produces " + std::to_string(arch.image_size()) + "x" +
                std::to_string(arch.image_size()));
    require(stats.mu_w.size() == static_cast<std::size_t>(arch.latent_dim), ErrorKind::DimensionMismatch,
            "latent statistics do not match the generator");
    require(cfg.steps >= 0, ErrorKind::InvalidCount, "steps must be non-negative");
    require(cfg.eta > 0.0 && cfg.alpha >= 0.0, ErrorKind::InvalidArgument, "eta must be positive, alpha >= 0");

    const auto target_embedding = default_metric().embedding(target);
    const auto g = gan::constants(params.generator);
    Rng rng(seed, 0x494e56);

    // Optimised tensors: w followed by the noise maps.
    std::vector<Tensor> state;
    state.emplace_back(ad::Shape{arch.latent_dim}, stats.mu_w);
    for (Tensor& n : gan::random_noise(arch, rng).maps) state.push_back(std::move(n));
    AdamState adam(state, cfg.beta1, cfg.beta2);

    auto clean_loss = [&](const std::vector<Tensor>& s) {
        ad::NoGradGuard no_grad;
        const auto vars = gan::constants(s);
        const Objective o = objective(params, g, vars[0],
                                      std::span<const Var>(vars).subspan(1), target_embedding, cfg.alpha);
        return std::pair{o.total.item(), o.perceptual};
    };
    auto check = [](double v, int step) {
        require(std::isfinite(v), ErrorKind::NonFiniteLoss,
                "inversion objective became non-finite at step " + std::to_string(step));
    };

    InversionResult best;
    best.steps = cfg.steps;
    {
        const auto [loss, perc] = clean_loss(state);
        check(loss, 0);
        best.initial_loss = best.final_loss = loss;
        best.perceptual = perc;
        best.best_step = 0;
    }
    std::vector<Tensor> best_state = state;

    for (int step = 0; step < cfg.steps; ++step) {
        const double progress = static_cast<double>(step) / cfg.steps;
        const double amplitude = cfg.exploration_scale * stats.sigma_w * exploration_t(progress, cfg);
        const auto vars = gan::parameters(state);
        Var w_eval = vars[0];
        if (amplitude > 0.0) {
            Tensor jitter({arch.latent_dim});
            for (double& v : jitter.data) v = amplitude * rng.normal();
            w_eval = ad::add(w_eval, ad::constant(std::move(jitter)));
        }
        const Objective o =
            objective(params, g, w_eval, std::span<const Var>(vars).subspan(1), target_embedding, cfg.alpha);
        const double loss = o.total.item();
        check(loss, step);
        // Only unperturbed evaluations are comparable with the reported loss.
        if (amplitude == 0.0 && loss < best.final_loss) {
            best.final_loss = loss;
            best.perceptual = o.perceptual;
            best.best_step = step;
            best_state = state;
        }
        const auto grads = ad::grad(o.total, vars);
        std::vector<Tensor> gvals = gan::values(grads);
        adam_step(adam, state, gvals, cfg.eta * lr_multiplier(progress, cfg));
    }
    if (cfg.steps > 0) {
        const auto [loss, perc] = clean_loss(state);
        check(loss, cfg.steps);
        if (loss < best.final_loss) {
            best.final_loss = loss;
            best.perceptual = perc;
            best.best_step = cfg.steps;
            best_state = state;
        }
    }

    best.w = best_state[0].data;
    best.noise.maps.assign(best_state.begin() + 1, best_state.end());
    return best;
}

std::vector<InversionResult> invert_many(const gan::ToyGanParams& params, std::span<const Image> targets,
                                         const InversionConfig& cfg, std::uint64_t seed, const LatentStats& stats) {
    std::vector<InversionResult> out(targets.size());
    parallel_for(targets.size(), [&](std::size_t i) {
        out[i] = invert_generator(params, targets[i], cfg, derive_seed(seed, i), stats);
    });
    return out;
}

InversionConfig parse_inversion_config(const std::string& toml_text, InversionConfig c) {
    toml::table table;
    try {
        table = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        fail(ErrorKind::FormatError, std::string("inversion config: ") + std::string(e.description()));
    }
    if (auto v = table["eta"].value<double>()) c.eta = *v;
    if (auto v = table["alpha"].value<double>()) c.alpha = *v;
    if (auto v = table["n_z"].value<std::int64_t>()) c.n_z = static_cast<int>(*v);
    if (auto v = table["steps"].value<std::int64_t>()) c.steps = static_cast<int>(*v);
    if (auto v = table["noise_ramp"].value<double>()) c.noise_ramp = *v;
    if (auto v = table["constant_t"].value<bool>()) c.constant_t = *v;
    if (auto v = table["exploration_scale"].value<double>()) c.exploration_scale = *v;
    if (auto v = table["beta1"].value<double>()) c.beta1 = *v;
    if (auto v = table["beta2"].value<double>()) c.beta2 = *v;
    require(c.eta > 0.0 && c.alpha >= 0.0 && c.n_z >= 2 && c.steps >= 0 && c.noise_ramp >= 0.0 &&
                c.exploration_scale >= 0.0 && c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 > 0.0 && c.beta2 < 1.0,
            ErrorKind::InvalidArgument, "inversion config has out-of-range values");
    return c;
}

InversionConfig load_inversion_config(const std::filesystem::path& path, InversionConfig base) {
    return parse_inversion_config(csv::read_text(path), base);
}

} // namespace lp::inversion
