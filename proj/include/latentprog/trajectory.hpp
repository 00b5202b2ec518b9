#pragma once

// Nearest-neighbour search in latent space and extrapolation of a query
// latent along its neighbours' observed baseline -> follow-up displacements.

#include "latentprog/gan.hpp"
#include "latentprog/image.hpp"
#include "latentprog/inversion.hpp"
#include "latentprog/latent_core.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lp::trajectory {

// || x/|x| - y/|y| ||_2, in [0, 2]. Throws ZeroNormVector, DimensionMismatch.
double normalized_cosine_distance(std::span<const double> x, std::span<const double> y);
double normalized_cosine_distance(const LatentVector& x, const LatentVector& y);

struct NeighborHit {
    KneeKey key;
    double distance = 0.0;
    // The knee's earliest visit paired with its latest follow-up.
    TrajectoryPair pair;
};

// The m knees whose baseline latent is closest to `query`. Only knees with at
// least one follow-up are candidates; `exclude` removes one knee (normally
// the query's own). Ties are broken by (subject_id, side).
// Throws NotEnoughNeighbors, ZeroNormVector, DimensionMismatch,
// InvalidArgument for m < 1.
std::vector<NeighborHit> nearest_neighbors(const LatentDictionary& dict, const LatentVector& query, int m,
                                           const std::optional<KneeKey>& exclude = std::nullopt);

// How a neighbour's displacement is rescaled to the prediction horizon:
//   AsWritten:   s_i = dt_i / horizon
//   LinearTime:  s_i = horizon / dt_i
enum class Scaling { AsWritten, LinearTime };

std::string_view scaling_name(Scaling s) noexcept;
// Throws InvalidArgument on unknown names.
Scaling parse_scaling(std::string_view text);

// (1/m) sum_i s_i (followup_i - baseline_i), in double precision.
// Throws EmptyNeighborSet, NonPositiveHorizon, InvalidArgument when a pair
// has dt <= 0, DimensionMismatch.
std::vector<double> extrapolation_vector(std::span<const NeighborHit> neighbors, int horizon_months,
                                         Scaling scaling = Scaling::AsWritten);

struct ExtrapolationResult {
    std::vector<double> delta_w;
    // query_w + delta_w, summed in double and stored at latent precision.
    LatentVector predicted_w;
    std::vector<NeighborHit> neighbors_used;
    int horizon_months = 0;
};

ExtrapolationResult extrapolate(const LatentDictionary& dict, const LatentVector& query, int m, int horizon_months,
                                Scaling scaling = Scaling::AsWritten,
                                const std::optional<KneeKey>& exclude = std::nullopt);

struct PredictConfig {
    int neighbors = 1;
    int horizon_months = 96;
    Scaling scaling = Scaling::AsWritten;
    std::optional<KneeKey> exclude;
    // Used only when the query is an image.
    inversion::InversionConfig inversion;
    std::uint64_t seed = 0;
};

struct Prediction {
    LatentVector query_w;
    ExtrapolationResult extrapolation;
    // G(predicted_w) with every noise map set to zero.
    Image image;
};

Prediction predict_future(const gan::ToyGanParams& params, const LatentDictionary& dict, const LatentVector& query,
                          const PredictConfig& cfg);
// Inverts the query image first.
Prediction predict_future(const gan::ToyGanParams& params, const LatentDictionary& dict, const Image& query,
                          const PredictConfig& cfg);

} // namespace lp::trajectory
