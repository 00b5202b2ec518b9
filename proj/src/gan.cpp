#include "latentprog/gan.hpp"

#include "latentprog/binary_io.hpp"
#include "latentprog/error.hpp"
#include "latentprog/frechet.hpp"
#include "latentprog/parallel.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <sstream>

namespace lp::gan {

namespace {

using namespace lp::ad;

void add_into(std::vector<Tensor>& acc, const std::vector<Tensor>& g) {
    if (acc.empty()) {
        acc = g;
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i)
        for (std::size_t j = 0; j < acc[i].size(); ++j) acc[i].data[j] += g[i].data[j];
}

// Sums per-sample losses and their gradients wrt `tensors`. Samples run in
// parallel, the reduction is in sample order.
template <typename PerSample>
ValueAndGrad accumulate(std::span<const Tensor> tensors, std::size_t n, PerSample per_sample) {
    const std::vector<Var> params = parameters(tensors);
    std::vector<double> values(n);
    std::vector<std::vector<Tensor>> grads(n);
    parallel_for(n, [&](std::size_t i) {
        const Var loss = per_sample(std::span<const Var>(params), i);
        values[i] = loss.item();
        grads[i] = gan::values(grad(loss, params));
    });
    ValueAndGrad out;
    for (std::size_t i = 0; i < n; ++i) {
        out.value += values[i];
        add_into(out.grads, grads[i]);
    }
    if (out.grads.empty()) {
        for (const Tensor& t : tensors) out.grads.emplace_back(t.shape, 0.0);
    }
    return out;
}

void check_latent(const Architecture& arch, std::size_t dim) {
    require(dim == static_cast<std::size_t>(arch.latent_dim), ErrorKind::DimensionMismatch,
            "latent has dimension " + std::to_string(dim) + ", generator expects " + std::to_string(arch.latent_dim));
}

void check_image(const Architecture& arch, const Image& img) {
    require(img.height == arch.image_size() && img.width == arch.image_size(), ErrorKind::DimensionMismatch,
            "image is " + std::to_string(img.height) + "x" + std::to_string(img.width) + ", model expects " +
                std::to_string(arch.image_size()) + "x" + std::to_string(arch.image_size()));
}

void check_noise(const Architecture& arch, const NoiseMaps& noise) {
    const auto expected = zero_noise(arch);
    require(noise.maps.size() == expected.maps.size(), ErrorKind::DimensionMismatch, "wrong number of noise maps");
    for (std::size_t i = 0; i < noise.maps.size(); ++i)
        require(noise.maps[i].shape == expected.maps[i].shape, ErrorKind::DimensionMismatch, "noise map shape mismatch");
}

Var noise_injection(const Var& x, const Var& scales, const Var& map) {
    const int c = x.shape()[0];
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    Var plane = matmul(reshape(scales, {c, 1}), reshape(map, {1, h * w}));
    return add(x, reshape(plane, {c, h, w}));
}

Var vec_var(std::span<const double> v) { return constant(Tensor({static_cast<int>(v.size())}, {v.begin(), v.end()})); }

Var bce_real(const Var& logit) { return scale(log_floor(sigmoid(logit), kLogFloor), -1.0); }

Var bce_fake(const Var& logit) {
    return scale(log_floor(add_scalar(scale(sigmoid(logit), -1.0), 1.0), kLogFloor), -1.0);
}

std::vector<Tensor> concat(std::span<const Tensor> a, std::span<const Tensor> b) {
    std::vector<Tensor> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool finite(const std::vector<Tensor>& ts) {
    for (const Tensor& t : ts)
        for (double v : t.data)
            if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

// ----------------------------------------------------------------------------
// Parameters

std::vector<Shape> mapping_shapes(const Architecture& a) {
    const int d = a.latent_dim;
    return {{d, d}, {d}, {d, d}, {d}};
}

std::vector<Shape> generator_shapes(const Architecture& a) {
    const int c = a.channels;
    const int base = c * a.base_res * a.base_res;
    return {{base, a.latent_dim}, {base}, {c, c * 9}, {c}, {c}, {1, c * 9}, {1}, {1}};
}

std::vector<Shape> discriminator_shapes(const Architecture& a) {
    const int c = a.channels;
    return {{c, 9}, {c}, {c, c * 9}, {c}, {1, c * a.base_res * a.base_res}, {1}};
}

std::size_t ToyGanParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto* group : {&mapping, &generator, &discriminator})
        for (const Tensor& t : *group) n += t.size();
    return n;
}

bool ToyGanParams::all_finite() const { return finite(mapping) && finite(generator) && finite(discriminator); }

bool ToyGanParams::operator==(const ToyGanParams& o) const {
    auto same = [](const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].shape != b[i].shape || a[i].data != b[i].data) return false;
        return true;
    };
    return arch == o.arch && same(mapping, o.mapping) && same(generator, o.generator) &&
           same(discriminator, o.discriminator);
}

ToyGanParams zero_params(const Architecture& arch) {
    require(arch.latent_dim >= 2 && arch.base_res >= 1 && arch.channels >= 1, ErrorKind::InvalidArgument,
            "invalid GAN architecture");
    ToyGanParams p;
    p.arch = arch;
    for (const Shape& s : mapping_shapes(arch)) p.mapping.emplace_back(s, 0.0);
    for (const Shape& s : generator_shapes(arch)) p.generator.emplace_back(s, 0.0);
    for (const Shape& s : discriminator_shapes(arch)) p.discriminator.emplace_back(s, 0.0);
    return p;
}

ToyGanParams init_params(const Architecture& arch, std::uint64_t seed) {
    ToyGanParams p = zero_params(arch);
    Rng rng(seed, 0x6761);
    auto fill = [&rng](Tensor& t, double gain) {
        const double sd = gain / std::sqrt(static_cast<double>(t.shape.at(1)));
        for (double& v : t.data) v = sd * rng.normal();
    };
    const double he = std::sqrt(2.0);
    fill(p.mapping[kMapW1], he);
    fill(p.mapping[kMapW2], he);
    fill(p.generator[kGenDenseW], he);
    fill(p.generator[kGenConv1W], he);
    fill(p.generator[kGenConv2W], 1.0);
    std::fill(p.generator[kGenNoise1].data.begin(), p.generator[kGenNoise1].data.end(), 0.1);
    std::fill(p.generator[kGenNoise2].data.begin(), p.generator[kGenNoise2].data.end(), 0.1);
    fill(p.discriminator[kDisConv1W], he);
    fill(p.discriminator[kDisConv2W], he);
    fill(p.discriminator[kDisDenseW], 1.0);
    return p;
}

NoiseMaps zero_noise(const Architecture& arch) {
    NoiseMaps n;
    n.maps.emplace_back(Shape{1, 2 * arch.base_res, 2 * arch.base_res}, 0.0);
    n.maps.emplace_back(Shape{1, 4 * arch.base_res, 4 * arch.base_res}, 0.0);
    return n;
}

NoiseMaps random_noise(const Architecture& arch, Rng& rng) {
    NoiseMaps n = zero_noise(arch);
    for (Tensor& t : n.maps)
        for (double& v : t.data) v = rng.normal();
    return n;
}

std::vector<Var> constants(std::span<const Tensor> tensors) {
    std::vector<Var> out;
    out.reserve(tensors.size());
    for (const Tensor& t : tensors) out.push_back(constant(t));
    return out;
}

std::vector<Var> parameters(std::span<const Tensor> tensors) {
    std::vector<Var> out;
    out.reserve(tensors.size());
    for (const Tensor& t : tensors) out.push_back(parameter(t));
    return out;
}

std::vector<Tensor> values(std::span<const Var> vars) {
    std::vector<Tensor> out;
    out.reserve(vars.size());
    for (const Var& v : vars) out.push_back(v.value());
    return out;
}

// ----------------------------------------------------------------------------
// Forward passes

Var mapping_forward(std::span<const Var> m, const Var& z) {
    Var h = leaky_relu(dense(z, m[kMapW1], m[kMapB1]), kLeakySlope);
    return leaky_relu(dense(h, m[kMapW2], m[kMapB2]), kLeakySlope);
}

Var synthesis_forward(std::span<const Var> g, const Architecture& arch, const Var& w, std::span<const Var> noise) {
    const int b = arch.base_res;
    const int c = arch.channels;
    Var x = reshape(leaky_relu(dense(w, g[kGenDenseW], g[kGenDenseB]), kLeakySlope), {c, b, b});
    x = conv3x3(upsample2(x), g[kGenConv1W], g[kGenConv1B]);
    x = leaky_relu(noise_injection(x, g[kGenNoise1], noise[0]), kLeakySlope);
    x = conv3x3(upsample2(x), g[kGenConv2W], g[kGenConv2B]);
    return sigmoid(noise_injection(x, g[kGenNoise2], noise[1]));
}

Var discriminator_logit(std::span<const Var> d, const Architecture& arch, const Var& image) {
    (void)arch;
    Var x = avgpool2(leaky_relu(conv3x3(image, d[kDisConv1W], d[kDisConv1B]), kLeakySlope));
    x = avgpool2(leaky_relu(conv3x3(x, d[kDisConv2W], d[kDisConv2B]), kLeakySlope));
    const int flat = static_cast<int>(x.size());
    return dense(reshape(x, {flat}), d[kDisDenseW], d[kDisDenseB]);
}

Var image_to_var(const Image& img) { return constant(Tensor({1, img.height, img.width}, img.pixels)); }

Image var_to_image(const Var& v) {
    const Shape& s = v.shape();
    require(s.size() == 3 && s[0] == 1, ErrorKind::ShapeMismatch, "expected a [1,H,W] tensor");
    Image img(s[1], s[2]);
    img.pixels = v.value().data;
    return img;
}

std::vector<double> map_latent(const ToyGanParams& params, std::span<const double> z) {
    check_latent(params.arch, z.size());
    NoGradGuard no_grad;
    const auto m = constants(params.mapping);
    return mapping_forward(m, vec_var(z)).value().data;
}

Image generator_forward(const ToyGanParams& params, std::span<const double> w, const NoiseMaps& noise) {
    check_latent(params.arch, w.size());
    check_noise(params.arch, noise);
    NoGradGuard no_grad;
    const auto g = constants(params.generator);
    const auto n = constants(noise.maps);
    Image img = var_to_image(synthesis_forward(g, params.arch, vec_var(w), n));
    clamp_unit(img);
    return img;
}

Image generator_forward(const ToyGanParams& params, const LatentVector& w, const NoiseMaps& noise) {
    const auto v = w.as_doubles();
    return generator_forward(params, std::span<const double>(v), noise);
}

double discriminator_probability(const ToyGanParams& params, const Image& image) {
    check_image(params.arch, image);
    NoGradGuard no_grad;
    const auto d = constants(params.discriminator);
    return sigmoid(discriminator_logit(d, params.arch, image_to_var(image))).item();
}

// ----------------------------------------------------------------------------
// Losses

namespace {

std::vector<Image> fake_images(const ToyGanParams& params, std::span<const std::vector<double>> z_batch,
                               std::span<const NoiseMaps> noise) {
    std::vector<Image> fakes(z_batch.size());
    parallel_for(z_batch.size(), [&](std::size_t i) {
        const auto w = map_latent(params, z_batch[i]);
        NoGradGuard no_grad;
        const auto g = constants(params.generator);
        const auto n = constants(noise[i].maps);
        fakes[i] = var_to_image(synthesis_forward(g, params.arch, vec_var(w), n));
    });
    return fakes;
}

void check_batches(const ToyGanParams& params, std::span<const Image> real, std::span<const std::vector<double>> z,
                   std::span<const NoiseMaps> noise) {
    require(!real.empty() && !z.empty(), ErrorKind::EmptyBatch, "GAN losses need non-empty real and latent batches");
    require(noise.size() == z.size(), ErrorKind::LengthMismatch, "one noise set per latent is required");
    for (const Image& img : real) check_image(params.arch, img);
    for (const auto& zi : z) check_latent(params.arch, zi.size());
    for (const NoiseMaps& n : noise) check_noise(params.arch, n);
}

std::vector<NoiseMaps> zero_noise_batch(const Architecture& arch, std::size_t n) {
    return std::vector<NoiseMaps>(n, zero_noise(arch));
}

} // namespace

Losses gan_losses(const ToyGanParams& params, std::span<const Image> real, std::span<const std::vector<double>> z_batch) {
    const auto noise = zero_noise_batch(params.arch, z_batch.size());
    return gan_losses(params, real, z_batch, noise);
}

Losses gan_losses(const ToyGanParams& params, std::span<const Image> real, std::span<const std::vector<double>> z_batch,
                  std::span<const NoiseMaps> noise) {
    check_batches(params, real, z_batch, noise);
    const auto fakes = fake_images(params, z_batch, noise);
    NoGradGuard no_grad;
    const auto d = constants(params.discriminator);
    Losses out;
    for (const Image& img : real) out.d_loss += bce_real(discriminator_logit(d, params.arch, image_to_var(img))).item();
    out.d_loss /= static_cast<double>(real.size());
    double fake_term = 0.0;
    for (const Image& img : fakes) {
        const Var logit = discriminator_logit(d, params.arch, image_to_var(img));
        fake_term += bce_fake(logit).item();
        out.g_loss += bce_real(logit).item();
    }
    out.d_loss += fake_term / static_cast<double>(fakes.size());
    out.g_loss /= static_cast<double>(fakes.size());
    return out;
}

ValueAndGrad discriminator_loss_grad(const ToyGanParams& params, std::span<const Image> real,
                                     std::span<const std::vector<double>> z_batch, std::span<const NoiseMaps> noise) {
    check_batches(params, real, z_batch, noise);
    const auto fakes = fake_images(params, z_batch, noise);
    const double inv_real = 1.0 / static_cast<double>(real.size());
    const double inv_fake = 1.0 / static_cast<double>(fakes.size());
    const Architecture arch = params.arch;
    return accumulate(params.discriminator, real.size() + fakes.size(), [&](std::span<const Var> d, std::size_t i) {
        if (i < real.size()) return scale(bce_real(discriminator_logit(d, arch, image_to_var(real[i]))), inv_real);
        return scale(bce_fake(discriminator_logit(d, arch, image_to_var(fakes[i - real.size()]))), inv_fake);
    });
}

ValueAndGrad generator_loss_grad(const ToyGanParams& params, std::span<const std::vector<double>> z_batch,
                                 std::span<const NoiseMaps> noise) {
    require(!z_batch.empty(), ErrorKind::EmptyBatch, "generator loss needs a non-empty latent batch");
    require(noise.size() == z_batch.size(), ErrorKind::LengthMismatch, "one noise set per latent is required");
    for (const auto& zi : z_batch) check_latent(params.arch, zi.size());
    for (const NoiseMaps& n : noise) check_noise(params.arch, n);
    const auto tensors = concat(params.mapping, params.generator);
    const auto d = constants(params.discriminator);
    const double inv = 1.0 / static_cast<double>(z_batch.size());
    const Architecture arch = params.arch;
    return accumulate(tensors, z_batch.size(), [&](std::span<const Var> p, std::size_t i) {
        const Var w = mapping_forward(p.subspan(0, kMappingCount), vec_var(z_batch[i]));
        const auto n = constants(noise[i].maps);
        const Var img = synthesis_forward(p.subspan(kMappingCount), arch, w, n);
        return scale(bce_real(discriminator_logit(d, arch, img)), inv);
    });
}

// ----------------------------------------------------------------------------
// R1

Var r1_penalty_term(const LogitFn& logit, std::span<const Image> real, double gamma) {
    require(!real.empty(), ErrorKind::EmptyBatch, "R1 needs a non-empty real batch");
    require(gamma > 0.0, ErrorKind::InvalidArgument, "R1 weight gamma must be positive");
    Var total;
    for (const Image& img : real) {
        const Var x = parameter(Tensor({1, img.height, img.width}, img.pixels));
        const Var out = logit(x);
        const Var g = grad(out, std::span<const Var>(&x, 1), true)[0];
        const Var sq = sum(mul(g, g));
        total = total.defined() ? add(total, sq) : sq;
    }
    return scale(total, 0.5 * gamma / static_cast<double>(real.size()));
}

double r1_penalty(const ToyGanParams& params, std::span<const Image> real, double gamma) {
    for (const Image& img : real) check_image(params.arch, img);
    const auto d = constants(params.discriminator);
    const Architecture arch = params.arch;
    return r1_penalty_term([&](const Var& x) { return discriminator_logit(d, arch, x); }, real, gamma).item();
}

ValueAndGrad r1_penalty_grad(const ToyGanParams& params, std::span<const Image> real, double gamma) {
    require(!real.empty(), ErrorKind::EmptyBatch, "R1 needs a non-empty real batch");
    for (const Image& img : real) check_image(params.arch, img);
    const double inv = 1.0 / static_cast<double>(real.size());
    const Architecture arch = params.arch;
    return accumulate(params.discriminator, real.size(), [&](std::span<const Var> d, std::size_t i) {
        const auto logit = [&](const Var& x) { return discriminator_logit(d, arch, x); };
        return scale(r1_penalty_term(logit, real.subspan(i, 1), gamma), inv);
    });
}

// ----------------------------------------------------------------------------
// Path length

std::vector<Var> path_length_norms(const GeneratorFn& generator, std::span<const std::vector<double>> w_batch,
                                   std::span<const Tensor> y_batch) {
    require(!w_batch.empty(), ErrorKind::EmptyBatch, "path-length penalty needs a non-empty latent batch");
    require(y_batch.size() == w_batch.size(), ErrorKind::LengthMismatch, "one y per latent is required");
    std::vector<Var> norms;
    norms.reserve(w_batch.size());
    for (std::size_t i = 0; i < w_batch.size(); ++i) {
        const Var w = parameter(Tensor({static_cast<int>(w_batch[i].size())}, w_batch[i]));
        const Var img = generator(w);
        require(img.shape() == y_batch[i].shape, ErrorKind::ShapeMismatch, "y must have the generated image's shape");
        const Var projected = sum(mul(img, constant(y_batch[i])));
        const Var jt_y = grad(projected, std::span<const Var>(&w, 1), true)[0];
        norms.push_back(sqrt(sum(mul(jt_y, jt_y))));
    }
    return norms;
}

Var path_length_from_norms(std::span<const Var> norms, double a) {
    require(!norms.empty(), ErrorKind::EmptyBatch, "no path-length norms");
    Var total;
    for (const Var& n : norms) {
        const Var dev = add_scalar(n, -a);
        const Var sq = mul(dev, dev);
        total = total.defined() ? add(total, sq) : sq;
    }
    return scale(total, 1.0 / static_cast<double>(norms.size()));
}

PenaltyState advance_path_length_state(const PenaltyState& state, double mean_norm) {
    PenaltyState next = state;
    next.path_length_ema = state.path_length_ema + (1.0 - state.ema_decay) * (mean_norm - state.path_length_ema);
    return next;
}

PathLengthResult path_length_penalty_grad(const ToyGanParams& params, std::span<const std::vector<double>> w_batch,
                                          std::span<const Tensor> y_batch, std::span<const NoiseMaps> noise,
                                          const PenaltyState& state) {
    require(!w_batch.empty(), ErrorKind::EmptyBatch, "path-length penalty needs a non-empty latent batch");
    require(y_batch.size() == w_batch.size() && noise.size() == w_batch.size(), ErrorKind::LengthMismatch,
            "w, y and noise batches must align");
    require(state.ema_decay > 0.0 && state.ema_decay < 1.0, ErrorKind::InvalidArgument, "EMA decay must be in (0,1)");
    for (const auto& w : w_batch) check_latent(params.arch, w.size());
    const Architecture arch = params.arch;

    // First pass: norms only, to advance the running average.
    std::vector<double> norms(w_batch.size());
    const auto g_const = constants(params.generator);
    parallel_for(w_batch.size(), [&](std::size_t i) {
        const auto n = constants(noise[i].maps);
        const GeneratorFn gen = [&](const Var& w) { return synthesis_forward(g_const, arch, w, n); };
        norms[i] = path_length_norms(gen, w_batch.subspan(i, 1), y_batch.subspan(i, 1))[0].item();
    });
    const double mean_norm = std::accumulate(norms.begin(), norms.end(), 0.0) / static_cast<double>(norms.size());
    PathLengthResult out;
    out.state = advance_path_length_state(state, mean_norm);
    const double a = out.state.path_length_ema;
    const double inv = 1.0 / static_cast<double>(w_batch.size());

    ValueAndGrad vg = accumulate(params.generator, w_batch.size(), [&](std::span<const Var> g, std::size_t i) {
        const auto n = constants(noise[i].maps);
        const GeneratorFn gen = [&](const Var& w) { return synthesis_forward(g, arch, w, n); };
        const auto norm = path_length_norms(gen, w_batch.subspan(i, 1), y_batch.subspan(i, 1));
        return scale(path_length_from_norms(norm, a), inv);
    });
    out.penalty = vg.value;
    out.grads = std::move(vg.grads);
    return out;
}

std::pair<double, PenaltyState> path_length_penalty(const ToyGanParams& params,
                                                    std::span<const std::vector<double>> w_batch,
                                                    const PenaltyState& state, Rng& rng) {
    require(!w_batch.empty(), ErrorKind::EmptyBatch, "path-length penalty needs a non-empty latent batch");
    const int s = params.arch.image_size();
    std::vector<Tensor> ys;
    std::vector<NoiseMaps> noise;
    for (std::size_t i = 0; i < w_batch.size(); ++i) {
        Tensor y({1, s, s});
        for (double& v : y.data) v = rng.normal();
        ys.push_back(std::move(y));
        noise.push_back(random_noise(params.arch, rng));
    }
    auto result = path_length_penalty_grad(params, w_batch, ys, noise, state);
    return {result.penalty, result.state};
}

// ----------------------------------------------------------------------------
// Training

TrainResult train_toy_gan(const TrainConfig& config, std::span<const Image> data, const ProgressFn& progress) {
    return train_toy_gan(config, init_params(config.arch, config.seed), data, progress);
}

TrainResult train_toy_gan(const TrainConfig& config, const ToyGanParams& init, std::span<const Image> data,
                          const ProgressFn& progress) {
    require(data.size() >= 2, ErrorKind::InsufficientData, "GAN training needs at least two images");
    require(config.steps >= 0 && config.batch_size >= 1 && config.lazy_k >= 1 && config.eval_every >= 1,
            ErrorKind::InvalidArgument, "invalid training configuration");
    require(init.arch == config.arch, ErrorKind::DimensionMismatch, "initial parameters do not match the architecture");
    for (const Image& img : data) check_image(config.arch, img);

    const Architecture& arch = config.arch;
    const int size = arch.image_size();
    TrainResult result;
    result.params = init;
    ToyGanParams& p = result.params;

    AdamState opt_d(p.discriminator, config.beta1, config.beta2);
    std::vector<Tensor> g_tensors = concat(p.mapping, p.generator);
    AdamState opt_g(g_tensors, config.beta1, config.beta2);
    PenaltyState pl_state{0.0, config.pl_decay};

    Rng rng(config.seed, 1);
    auto draw_z = [&](Rng& r) {
        std::vector<double> z(static_cast<std::size_t>(arch.latent_dim));
        for (double& v : z) v = r.normal();
        return z;
    };

    // Fixed evaluation sets.
    const FeatureProjector projector(size * size);
    Rng eval_rng(config.seed, 2);
    std::vector<Image> eval_real(data.begin(), data.end());
    for (std::size_t i = eval_real.size(); i > 1; --i) std::swap(eval_real[i - 1], eval_real[eval_rng.below(i)]);
    if (eval_real.size() > static_cast<std::size_t>(config.eval_samples) && config.eval_samples >= 2)
        eval_real.resize(static_cast<std::size_t>(config.eval_samples));
    const GaussianSummary real_summary = projector.summary(eval_real);
    std::vector<std::vector<double>> eval_z;
    std::vector<NoiseMaps> eval_noise;
    for (int i = 0; i < std::max(config.eval_samples, 2); ++i) {
        eval_z.push_back(draw_z(eval_rng));
        eval_noise.push_back(random_noise(arch, eval_rng));
    }
    auto evaluate = [&]() {
        std::vector<Image> generated = fake_images(p, eval_z, eval_noise);
        for (Image& img : generated) clamp_unit(img);
        return frechet_distance(real_summary, projector.summary(generated));
    };
    result.frechet.emplace_back(0, evaluate());

    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int step = 1; step <= config.steps; ++step) {
        LogEntry entry;
        entry.step = step;
        const bool regularize = step % config.lazy_k == 0;

        // Discriminator.
        std::vector<Image> real;
        std::vector<std::vector<double>> z;
        std::vector<NoiseMaps> noise;
        for (std::size_t i = 0; i < batch; ++i) {
            real.push_back(data[rng.below(data.size())]);
            z.push_back(draw_z(rng));
            noise.push_back(random_noise(arch, rng));
        }
        ValueAndGrad d_step = discriminator_loss_grad(p, real, z, noise);
        entry.d_loss = d_step.value;
        if (regularize) {
            const ValueAndGrad r1 = r1_penalty_grad(p, real, config.gamma);
            entry.r1 = r1.value;
            const double k = static_cast<double>(config.lazy_k);
            for (std::size_t t = 0; t < d_step.grads.size(); ++t)
                for (std::size_t j = 0; j < d_step.grads[t].size(); ++j) d_step.grads[t].data[j] += k * r1.grads[t].data[j];
        }
        adam_step(opt_d, p.discriminator, d_step.grads, config.lr_d);

        // Generator.
        z.clear();
        noise.clear();
        for (std::size_t i = 0; i < batch; ++i) {
            z.push_back(draw_z(rng));
            noise.push_back(random_noise(arch, rng));
        }
        ValueAndGrad g_step = generator_loss_grad(p, z, noise);
        entry.g_loss = g_step.value;
        if (regularize && config.pl_weight > 0.0) {
            std::vector<std::vector<double>> w_batch;
            std::vector<Tensor> ys;
            for (const auto& zi : z) {
                w_batch.push_back(map_latent(p, zi));
                Tensor y({1, size, size});
                for (double& v : y.data) v = rng.normal();
                ys.push_back(std::move(y));
            }
            const PathLengthResult pl = path_length_penalty_grad(p, w_batch, ys, noise, pl_state);
            pl_state = pl.state;
            entry.path_length = pl.penalty;
            const double wgt = config.pl_weight * static_cast<double>(config.lazy_k);
            for (std::size_t t = 0; t < pl.grads.size(); ++t) {
                Tensor& target = g_step.grads[kMappingCount + t];
                for (std::size_t j = 0; j < target.size(); ++j) target.data[j] += wgt * pl.grads[t].data[j];
            }
        }
        g_tensors = concat(p.mapping, p.generator);
        adam_step(opt_g, g_tensors, g_step.grads, config.lr_g);
        std::copy(g_tensors.begin(), g_tensors.begin() + kMappingCount, p.mapping.begin());
        std::copy(g_tensors.begin() + kMappingCount, g_tensors.end(), p.generator.begin());

        const bool penalties_ok = (!regularize) || ((std::isnan(entry.r1) || std::isfinite(entry.r1)) &&
                                                    (std::isnan(entry.path_length) || std::isfinite(entry.path_length)));
        if (!std::isfinite(entry.d_loss) || !std::isfinite(entry.g_loss) || !penalties_ok || !p.all_finite())
            fail(ErrorKind::DivergenceDetected, "non-finite loss or weights at step " + std::to_string(step));

        if (step % config.eval_every == 0 || step == config.steps) {
            entry.frechet = evaluate();
            result.frechet.emplace_back(step, entry.frechet);
        }
        result.log.push_back(entry);
        if (progress) progress(entry);
    }
    return result;
}

TrainConfig parse_train_config(const std::string& toml_text) {
    toml::table table;
    try {
        table = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        fail(ErrorKind::FormatError, std::string("training config: ") + std::string(e.description()));
    }
    TrainConfig c;
    auto get_int = [&](const char* key, auto& target) {
        if (auto v = table[key].value<std::int64_t>()) target = static_cast<std::remove_reference_t<decltype(target)>>(*v);
    };
    auto get_double = [&](const char* key, double& target) {
        if (auto v = table[key].value<double>()) target = *v;
    };
    get_int("steps", c.steps);
    get_int("batch_size", c.batch_size);
    get_double("lr_g", c.lr_g);
    get_double("lr_d", c.lr_d);
    get_double("gamma", c.gamma);
    get_double("pl_weight", c.pl_weight);
    get_int("lazy_k", c.lazy_k);
    get_int("seed", c.seed);
    get_int("eval_every", c.eval_every);
    get_int("eval_samples", c.eval_samples);
    get_double("beta1", c.beta1);
    get_double("beta2", c.beta2);
    get_double("pl_decay", c.pl_decay);
    get_int("latent_dim", c.arch.latent_dim);
    get_int("base_res", c.arch.base_res);
    get_int("channels", c.arch.channels);
    require(c.steps >= 0 && c.batch_size >= 1 && c.lazy_k >= 1 && c.eval_every >= 1 && c.gamma > 0.0 &&
                c.lr_g >= 0.0 && c.lr_d >= 0.0 && c.pl_weight >= 0.0,
            ErrorKind::InvalidArgument, "training config has out-of-range values");
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str());
}

// ----------------------------------------------------------------------------
// Model file

namespace {

constexpr std::string_view kModelMagic = "TGAN";
constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint32_t> descriptor(const Architecture& arch) {
    std::vector<std::uint32_t> d{static_cast<std::uint32_t>(arch.latent_dim), static_cast<std::uint32_t>(arch.base_res),
                                 static_cast<std::uint32_t>(arch.channels)};
    std::vector<Shape> shapes = mapping_shapes(arch);
    for (auto&& group : {generator_shapes(arch), discriminator_shapes(arch)}) shapes.insert(shapes.end(), group.begin(), group.end());
    d.push_back(static_cast<std::uint32_t>(shapes.size()));
    for (const Shape& s : shapes) {
        d.push_back(static_cast<std::uint32_t>(s.size()));
        for (int dim : s) d.push_back(static_cast<std::uint32_t>(dim));
    }
    return d;
}

} // namespace

std::vector<std::uint8_t> encode_model(const ToyGanParams& params) {
    bin::Writer w;
    w.bytes(kModelMagic);
    w.u32(kModelVersion);
    const auto desc = descriptor(params.arch);
    w.u32(static_cast<std::uint32_t>(desc.size()));
    for (std::uint32_t v : desc) w.u32(v);
    for (const auto* group : {&params.mapping, &params.generator, &params.discriminator})
        for (const Tensor& t : *group)
            for (double v : t.data) w.f32(static_cast<float>(v));
    return std::move(w.data());
}

ToyGanParams decode_model(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    require(r.bytes(4) == kModelMagic, ErrorKind::FormatError, "model file: bad magic");
    const std::uint32_t version = r.u32();
    require(version == kModelVersion, ErrorKind::FormatError, "model file: unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    require(count >= 4 && count < (1u << 20), ErrorKind::FormatError, "model file: bad descriptor length");
    std::vector<std::uint32_t> desc(count);
    for (auto& v : desc) v = r.u32();
    Architecture arch{static_cast<int>(desc[0]), static_cast<int>(desc[1]), static_cast<int>(desc[2])};
    require(desc == descriptor(arch), ErrorKind::FormatError, "model file: descriptor does not match a toy architecture");
    ToyGanParams p = zero_params(arch);
    for (auto* group : {&p.mapping, &p.generator, &p.discriminator})
        for (Tensor& t : *group)
            for (double& v : t.data) v = r.f32();
    require(r.at_end(), ErrorKind::FormatError, "model file: trailing bytes");
    return p;
}

void save_model(const std::filesystem::path& path, const ToyGanParams& params) {
    bin::write_file(path.string(), encode_model(params));
}

ToyGanParams load_model(const std::filesystem::path& path) { return decode_model(bin::read_file(path.string())); }

} // namespace lp::gan
