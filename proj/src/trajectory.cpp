#include "latentprog/trajectory.hpp"

#include "latentprog/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lp::trajectory {

namespace {

std::vector<double> unit(std::span<const double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double norm = std::sqrt(ss);
    require(norm > 0.0 && std::isfinite(norm), ErrorKind::ZeroNormVector, "latent vector has zero norm");
    std::vector<double> u(v.begin(), v.end());
    for (double& x : u) x /= norm;
    return u;
}

double unit_distance(std::span<const double> ux, std::span<const double> uy) {
    double ss = 0.0;
    for (std::size_t i = 0; i < ux.size(); ++i) ss += (ux[i] - uy[i]) * (ux[i] - uy[i]);
    return std::min(2.0, std::sqrt(ss));
}

} // namespace

double normalized_cosine_distance(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::DimensionMismatch,
            "latent dimensions differ: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    return unit_distance(unit(x), unit(y));
}

double normalized_cosine_distance(const LatentVector& x, const LatentVector& y) {
    const auto a = x.as_doubles();
    const auto b = y.as_doubles();
    return normalized_cosine_distance(a, b);
}

std::vector<NeighborHit> nearest_neighbors(const LatentDictionary& dict, const LatentVector& query, int m,
                                           const std::optional<KneeKey>& exclude) {
    require(m >= 1, ErrorKind::InvalidArgument, "number of neighbours must be at least 1");
    require(query.dim() == static_cast<std::size_t>(dict.dimension()), ErrorKind::DimensionMismatch,
            "query has dimension " + std::to_string(query.dim()) + ", dictionary " +
                std::to_string(dict.dimension()));
    const auto q = unit(query.as_doubles());

    std::vector<NeighborHit> hits;
    for (const KneeKey& key : dict.knees()) {
        if (exclude && key == *exclude) continue;
        const auto visits = dict.visits(key);
        if (visits.size() < 2) continue;
        const KneeRecord& base = visits.front();
        const KneeRecord& last = visits.back();
        NeighborHit hit;
        hit.key = key;
        hit.distance = unit_distance(q, unit(base.latent.as_doubles()));
        hit.pair = {key, base.latent, last.latent, base.visit_month, last.visit_month,
                    last.visit_month - base.visit_month};
        hits.push_back(std::move(hit));
    }
    require(hits.size() >= static_cast<std::size_t>(m), ErrorKind::NotEnoughNeighbors,
            "requested " + std::to_string(m) + " neighbours but only " + std::to_string(hits.size()) +
                " knees with follow-up are available");
    std::partial_sort(hits.begin(), hits.begin() + m, hits.end(), [](const NeighborHit& a, const NeighborHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.key < b.key;
    });
    hits.resize(static_cast<std::size_t>(m));
    return hits;
}

std::string_view scaling_name(Scaling s) noexcept {
    return s == Scaling::AsWritten ? "as-written" : "linear-time";
}

Scaling parse_scaling(std::string_view text) {
    if (text == "as-written") return Scaling::AsWritten;
    if (text == "linear-time") return Scaling::LinearTime;
    fail(ErrorKind::InvalidArgument, "unknown scaling mode '" + std::string(text) + "'");
}

std::vector<double> extrapolation_vector(std::span<const NeighborHit> neighbors, int horizon_months, Scaling scaling) {
    require(!neighbors.empty(), ErrorKind::EmptyNeighborSet, "no neighbours to extrapolate from");
    require(horizon_months > 0, ErrorKind::NonPositiveHorizon,
            "horizon must be positive, got " + std::to_string(horizon_months));
    const std::size_t d = neighbors.front().pair.baseline.dim();
    std::vector<double> delta(d, 0.0);
    for (const NeighborHit& hit : neighbors) {
        const TrajectoryPair& p = hit.pair;
        require(p.delta_t > 0, ErrorKind::InvalidArgument, "neighbour " + to_string(hit.key) + " has no time gap");
        require(p.baseline.dim() == d && p.followup.dim() == d, ErrorKind::DimensionMismatch,
                "neighbour latents differ in dimension");
        const double s = scaling == Scaling::AsWritten ? static_cast<double>(p.delta_t) / horizon_months
                                                       : static_cast<double>(horizon_months) / p.delta_t;
        for (std::size_t j = 0; j < d; ++j)
            delta[j] += s * (static_cast<double>(p.followup.values[j]) - static_cast<double>(p.baseline.values[j]));
    }
    const double inv_m = 1.0 / static_cast<double>(neighbors.size());
    for (double& x : delta) x *= inv_m;
    return delta;
}

ExtrapolationResult extrapolate(const LatentDictionary& dict, const LatentVector& query, int m, int horizon_months,
                                Scaling scaling, const std::optional<KneeKey>& exclude) {
    require(horizon_months > 0, ErrorKind::NonPositiveHorizon,
            "horizon must be positive, got " + std::to_string(horizon_months));
    ExtrapolationResult r;
    r.horizon_months = horizon_months;
    r.neighbors_used = nearest_neighbors(dict, query, m, exclude);
    r.delta_w = extrapolation_vector(r.neighbors_used, horizon_months, scaling);
    std::vector<double> w = query.as_doubles();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += r.delta_w[j];
    r.predicted_w = LatentVector::from_doubles(w);
    return r;
}

Prediction predict_future(const gan::ToyGanParams& params, const LatentDictionary& dict, const LatentVector& query,
                          const PredictConfig& cfg) {
    Prediction p;
    p.query_w = query;
    p.extrapolation = extrapolate(dict, query, cfg.neighbors, cfg.horizon_months, cfg.scaling, cfg.exclude);
    p.image = gan::generator_forward(params, p.extrapolation.predicted_w, gan::zero_noise(params.arch));
    return p;
}

Prediction predict_future(const gan::ToyGanParams& params, const LatentDictionary& dict, const Image& query,
                          const PredictConfig& cfg) {
    const auto inverted = inversion::invert_generator(params, query, cfg.inversion, cfg.seed);
    return predict_future(params, dict, LatentVector::from_doubles(inverted.w), cfg);
}

} // namespace lp::trajectory
