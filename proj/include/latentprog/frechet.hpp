#pragma once

#include "latentprog/image.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace lp {

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

// Sample mean and (n-1)-normalised covariance of feature rows.
GaussianSummary summarize(const Eigen::MatrixXd& features);

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
//
// The trace of the matrix square root is taken from the eigenvalues of the
// symmetric product S_a^(1/2) S_b S_a^(1/2), which shares its spectrum with
// S_a S_b. Eigenvalues in [-1e-8, 0) are clamped to zero; anything more
// negative raises NonPSDCovariance.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

// Fixed random linear projection of flattened images, the stand-in for deep
// features when tracking GAN convergence.
class FeatureProjector {
public:
    FeatureProjector(int pixels, int features = 16, std::uint64_t seed = 0x46454154ULL);

    Eigen::MatrixXd project(std::span<const Image> images) const;
    GaussianSummary summary(std::span<const Image> images) const { return summarize(project(images)); }

private:
    Eigen::MatrixXd weights_; // features x pixels
};

} // namespace lp
