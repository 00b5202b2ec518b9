#pragma once

// Generator inversion: find the latent w (and per-block noise maps) whose
// generated image best matches a target image.

#include "latentprog/autodiff.hpp"
#include "latentprog/gan.hpp"
#include "latentprog/image.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <span>
#include <vector>

namespace lp::inversion {

struct LatentStats {
    std::vector<double> mu_w;
    double sigma_w = 0.0; // sqrt of the mean squared distance of f(z) from mu_w
};

using MappingFn = std::function<std::vector<double>(std::span<const double> z)>;

// Samples n_z standard-normal latents z (seeded), maps them and returns the
// mean and scalar spread of f(z). Throws InvalidCount for n_z < 2.
LatentStats latent_statistics(const MappingFn& mapping, int latent_dim, int n_z, std::uint64_t seed);
LatentStats latent_statistics(const gan::ToyGanParams& params, int n_z, std::uint64_t seed);
// Same statistics from already-mapped samples.
LatentStats latent_statistics_of(std::span<const std::vector<double>> samples);

// Distance between deep embeddings of two images. The embedding network is a
// fixed, seeded, untrained three-layer convolutional extractor:
//   conv3x3 1->8, lrelu | avgpool | conv3x3 8->16, lrelu | avgpool | conv3x3 16->16, lrelu
// Each layer's activations are divided by sqrt(their element count); the
// embedding is the three layers concatenated and the distance is the
// Euclidean norm of the difference.
class PerceptualMetric {
public:
    explicit PerceptualMetric(std::uint64_t seed = 0x4c50495053ULL);

    // One flattened, scaled tensor per layer.
    std::vector<ad::Var> embed(const ad::Var& image) const;
    std::vector<double> embedding(const Image& image) const;
    double distance(const Image& a, const Image& b) const;
    // Differentiable distance to a precomputed embedding; a 1e-12 floor under
    // the square root keeps the gradient finite at zero distance.
    ad::Var distance_to(const ad::Var& image, const std::vector<double>& target_embedding) const;

private:
    std::vector<ad::Tensor> weights_; // conv1 w,b, conv2 w,b, conv3 w,b
};

const PerceptualMetric& default_metric();

// Throws DimensionMismatch on differing shapes.
double perceptual_distance(const Image& a, const Image& b);

// Auto-correlation penalty on noise maps ([1,H,W] each): at every pyramid
// level, (mean(n * roll_x(n)))^2 + (mean(n * roll_y(n)))^2 with circular
// one-pixel shifts, halving by 2x average pooling until a side reaches 8.
// Summed over maps and levels.
ad::Var noise_regularization(std::span<const ad::Var> maps);
double noise_regularization(std::span<const ad::Tensor> maps);

struct InversionConfig {
    double eta = 0.1;
    double alpha = 1e5;
    int n_z = 10000;
    int steps = 1000;
    // Fraction of the step budget over which the latent exploration amplitude
    // t decays linearly from 1 to 0.
    double noise_ramp = 0.75;
    // Keep t at 1 for every step instead of annealing it.
    bool constant_t = false;
    double exploration_scale = 0.05;
    double lr_rampup = 0.05;
    double lr_rampdown = 0.25;
    // Adam moments. The short second-moment memory lets the noise maps recover
    // from the large early gradients of the auto-correlation penalty.
    double beta1 = 0.9;
    double beta2 = 0.99;
};

// Learning-rate multiplier at progress p in [0,1): linear ramp-up over the
// first lr_rampup, cosine decay over the last lr_rampdown.
double lr_multiplier(double progress, const InversionConfig& cfg);
// t at progress p.
double exploration_t(double progress, const InversionConfig& cfg);

struct InversionResult {
    std::vector<double> w;
    gan::NoiseMaps noise;
    double final_loss = 0.0;     // perceptual + alpha * noise regularisation at w
    double perceptual = 0.0;     // perceptual part alone
    double initial_loss = 0.0;   // same objective at w = mu_w
    int best_step = 0;           // optimisation step of the returned iterate
    int steps = 0;
};

// Throws DimensionMismatch when the target does not match the generator and
// NonFiniteLoss if the objective stops being finite.
InversionResult invert_generator(const gan::ToyGanParams& params, const Image& target, const InversionConfig& cfg,
                                 std::uint64_t seed);
// With precomputed latent statistics (they depend only on the mapping).
InversionResult invert_generator(const gan::ToyGanParams& params, const Image& target, const InversionConfig& cfg,
                                 std::uint64_t seed, const LatentStats& stats);

// Inverts every image independently (in parallel); image i uses seed
// derive_seed(seed, i), so results do not depend on the thread count.
std::vector<InversionResult> invert_many(const gan::ToyGanParams& params, std::span<const Image> targets,
                                         const InversionConfig& cfg, std::uint64_t seed, const LatentStats& stats);

// Keys (all optional): eta, alpha, n_z, steps, noise_ramp, constant_t,
// exploration_scale, beta1, beta2. Throws FormatError / InvalidArgument.
InversionConfig parse_inversion_config(const std::string& toml_text, InversionConfig base = {});
InversionConfig load_inversion_config(const std::filesystem::path& path, InversionConfig base = {});

} // namespace lp::inversion
