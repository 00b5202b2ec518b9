#pragma once

// Toy style-based GAN.
//
//   mapping f:      z -> lrelu(W2 lrelu(W1 z + b1) + b2) = w          (d -> d -> d)
//   synthesis G:    w -> dense -> [C, b, b] -> lrelu
//                     -> up2 -> conv3x3 (C->C) + s1 * n1 -> lrelu
//                     -> up2 -> conv3x3 (C->1) + s2 * n2 -> sigmoid   [1, 4b, 4b]
//   discriminator:  x -> conv3x3 (1->C) -> lrelu -> avgpool2
//                     -> conv3x3 (C->C) -> lrelu -> avgpool2 -> dense -> logit
//
// D(x) = sigmoid(logit). The losses use the non-saturating form
//   L_D = E[-log D(x_real)] + E[-log(1 - D(G(z)))],  L_G = E[-log D(G(z))],
// with log arguments floored at 1e-7. R1 is taken on the logit at real images.

#include "latentprog/adam.hpp"
#include "latentprog/autodiff.hpp"
#include "latentprog/image.hpp"
#include "latentprog/latent_core.hpp"
#include "latentprog/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace lp::gan {

using ad::Shape;
using ad::Tensor;
using ad::Var;

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kLogFloor = 1e-7;

struct Architecture {
    int latent_dim = 512;
    int base_res = 8;
    int channels = 8;

    int image_size() const noexcept { return base_res * 4; }
    bool operator==(const Architecture&) const = default;
};

enum MappingTensor { kMapW1, kMapB1, kMapW2, kMapB2, kMappingCount };
enum GeneratorTensor {
    kGenDenseW,
    kGenDenseB,
    kGenConv1W,
    kGenConv1B,
    kGenNoise1,
    kGenConv2W,
    kGenConv2B,
    kGenNoise2,
    kGeneratorCount
};
enum DiscriminatorTensor { kDisConv1W, kDisConv1B, kDisConv2W, kDisConv2B, kDisDenseW, kDisDenseB, kDiscriminatorCount };

std::vector<Shape> mapping_shapes(const Architecture& arch);
std::vector<Shape> generator_shapes(const Architecture& arch);
std::vector<Shape> discriminator_shapes(const Architecture& arch);

struct ToyGanParams {
    Architecture arch;
    std::vector<Tensor> mapping;
    std::vector<Tensor> generator;
    std::vector<Tensor> discriminator;

    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const ToyGanParams&) const;
};

// He-style normal initialisation; noise scales start at 0.1.
ToyGanParams init_params(const Architecture& arch, std::uint64_t seed);
ToyGanParams zero_params(const Architecture& arch);

// Per-block noise inputs: [1, 2b, 2b] and [1, 4b, 4b].
struct NoiseMaps {
    std::vector<Tensor> maps;
};

NoiseMaps zero_noise(const Architecture& arch);
NoiseMaps random_noise(const Architecture& arch, Rng& rng);

std::vector<Var> constants(std::span<const Tensor> tensors);
std::vector<Var> parameters(std::span<const Tensor> tensors);
std::vector<Tensor> values(std::span<const Var> vars);

// Tape-level building blocks.
Var mapping_forward(std::span<const Var> mapping, const Var& z);
Var synthesis_forward(std::span<const Var> generator, const Architecture& arch, const Var& w,
                      std::span<const Var> noise);
Var discriminator_logit(std::span<const Var> discriminator, const Architecture& arch, const Var& image);

Var image_to_var(const Image& img);
Image var_to_image(const Var& v);

std::vector<double> map_latent(const ToyGanParams& params, std::span<const double> z);

// Pure function of (params, w, noise). Throws DimensionMismatch.
Image generator_forward(const ToyGanParams& params, std::span<const double> w, const NoiseMaps& noise);
Image generator_forward(const ToyGanParams& params, const LatentVector& w, const NoiseMaps& noise);
double discriminator_probability(const ToyGanParams& params, const Image& image);

struct Losses {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

// Fake images are G(f(z), noise); without noise the noise maps are zero.
Losses gan_losses(const ToyGanParams& params, std::span<const Image> real,
                  std::span<const std::vector<double>> z_batch);
Losses gan_losses(const ToyGanParams& params, std::span<const Image> real,
                  std::span<const std::vector<double>> z_batch, std::span<const NoiseMaps> noise);

// Value and gradients wrt the tensors of one network.
struct ValueAndGrad {
    double value = 0.0;
    std::vector<Tensor> grads;
};

// L_D wrt the discriminator.
ValueAndGrad discriminator_loss_grad(const ToyGanParams& params, std::span<const Image> real,
                                     std::span<const std::vector<double>> z_batch, std::span<const NoiseMaps> noise);

// L_G wrt mapping followed by generator tensors (mapping first).
ValueAndGrad generator_loss_grad(const ToyGanParams& params, std::span<const std::vector<double>> z_batch,
                                 std::span<const NoiseMaps> noise);

using LogitFn = std::function<Var(const Var& image)>;
using GeneratorFn = std::function<Var(const Var& w)>;

// (gamma / 2) * mean ||grad_x logit(x)||^2 over the batch, differentiable
// wrt whatever `logit` closes over.
Var r1_penalty_term(const LogitFn& logit, std::span<const Image> real, double gamma);

inline constexpr double kDefaultGamma = 10.0;

// Throws EmptyBatch, InvalidArgument for gamma <= 0.
double r1_penalty(const ToyGanParams& params, std::span<const Image> real, double gamma = kDefaultGamma);
ValueAndGrad r1_penalty_grad(const ToyGanParams& params, std::span<const Image> real, double gamma = kDefaultGamma);

// ||grad_w sum(G(w) * y)||_2 per sample, differentiable.
std::vector<Var> path_length_norms(const GeneratorFn& generator, std::span<const std::vector<double>> w_batch,
                                   std::span<const Tensor> y_batch);
// mean (norm_i - a)^2
Var path_length_from_norms(std::span<const Var> norms, double a);

struct PenaltyState {
    double path_length_ema = 0.0;
    double ema_decay = 0.99;
};

// The running average is advanced with the batch mean norm first and the
// penalty is measured against the updated value, which is held constant
// for differentiation.
PenaltyState advance_path_length_state(const PenaltyState& state, double mean_norm);

struct PathLengthResult {
    double penalty = 0.0;
    PenaltyState state;
    std::vector<Tensor> grads; // generator tensors
};

// y ~ N(0, I) of image shape, one per sample; noise maps drawn from rng as well.
std::pair<double, PenaltyState> path_length_penalty(const ToyGanParams& params,
                                                    std::span<const std::vector<double>> w_batch,
                                                    const PenaltyState& state, Rng& rng);
PathLengthResult path_length_penalty_grad(const ToyGanParams& params, std::span<const std::vector<double>> w_batch,
                                          std::span<const Tensor> y_batch, std::span<const NoiseMaps> noise,
                                          const PenaltyState& state);

// ----------------------------------------------------------------------------
// Training

struct TrainConfig {
    Architecture arch;
    int steps = 2000;
    int batch_size = 32;
    double lr_g = 0.0025;
    double lr_d = 0.0025;
    double beta1 = 0.0;
    double beta2 = 0.99;
    double gamma = kDefaultGamma;
    double pl_weight = 2.0;
    double pl_decay = 0.99;
    int lazy_k = 16;
    std::uint64_t seed = 0;
    int eval_every = 100;
    int eval_samples = 200;
};

struct LogEntry {
    int step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double r1 = std::numeric_limits<double>::quiet_NaN();
    double path_length = std::numeric_limits<double>::quiet_NaN();
    double frechet = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ToyGanParams params;
    std::vector<LogEntry> log;
    // (step, Frechet distance) at step 0, every eval_every steps and at the end.
    std::vector<std::pair<int, double>> frechet;
};

using ProgressFn = std::function<void(const LogEntry&)>;

// Throws InsufficientData for fewer than two images and DivergenceDetected on
// a non-finite loss.
TrainResult train_toy_gan(const TrainConfig& config, std::span<const Image> data, const ProgressFn& progress = {});
TrainResult train_toy_gan(const TrainConfig& config, const ToyGanParams& init, std::span<const Image> data,
                          const ProgressFn& progress = {});

// Keys: steps, batch_size, lr_g, lr_d, gamma, pl_weight, lazy_k, seed,
// eval_every, plus optional latent_dim, base_res, channels, beta1, beta2,
// pl_decay, eval_samples.
TrainConfig parse_train_config(const std::string& toml_text);
TrainConfig load_train_config(const std::filesystem::path& path);

// Model file ("TGAN"): magic, version u32, descriptor (u32 list), f32 weights.
std::vector<std::uint8_t> encode_model(const ToyGanParams& params);
ToyGanParams decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const ToyGanParams& params);
ToyGanParams load_model(const std::filesystem::path& path);

} // namespace lp::gan
