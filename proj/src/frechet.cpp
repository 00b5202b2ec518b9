#include "latentprog/frechet.hpp"

#include "latentprog/error.hpp"
#include "latentprog/rng.hpp"

#include <cmath>

namespace lp {

namespace {

constexpr double kNegativeEigenTolerance = 1e-8;

Eigen::VectorXd clamped_eigenvalues(const Eigen::MatrixXd& symmetric, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    Eigen::VectorXd values = solver.eigenvalues();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] < -kNegativeEigenTolerance)
            fail(ErrorKind::NonPSDCovariance, std::string(what) + " has eigenvalue " + std::to_string(values[i]));
        if (values[i] < 0.0) values[i] = 0.0;
    }
    return values;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& symmetric, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    Eigen::VectorXd values = solver.eigenvalues();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] < -kNegativeEigenTolerance)
            fail(ErrorKind::NonPSDCovariance, std::string(what) + " has eigenvalue " + std::to_string(values[i]));
        values[i] = std::sqrt(std::max(values[i], 0.0));
    }
    return solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
}

void check_summary(const GaussianSummary& s) {
    require(s.covariance.rows() == s.mean.size() && s.covariance.cols() == s.mean.size(), ErrorKind::DimensionMismatch,
            "covariance shape does not match mean");
}

} // namespace

GaussianSummary summarize(const Eigen::MatrixXd& features) {
    require(features.rows() >= 2, ErrorKind::InsufficientData, "need at least two feature rows");
    GaussianSummary s;
    s.mean = features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
    s.covariance = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
    return s;
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
    check_summary(a);
    check_summary(b);
    require(a.mean.size() == b.mean.size(), ErrorKind::DimensionMismatch, "summaries have different dimensions");
    const Eigen::MatrixXd sym_a = 0.5 * (a.covariance + a.covariance.transpose());
    const Eigen::MatrixXd sym_b = 0.5 * (b.covariance + b.covariance.transpose());
    clamped_eigenvalues(sym_b, "second covariance");
    const Eigen::MatrixXd root_a = psd_sqrt(sym_a, "first covariance");
    Eigen::MatrixXd product = root_a * sym_b * root_a;
    product = 0.5 * (product + product.transpose());
    const Eigen::VectorXd values = clamped_eigenvalues(product, "covariance product");
    const double trace_root = values.array().sqrt().sum();
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double d = mean_term + sym_a.trace() + sym_b.trace() - 2.0 * trace_root;
    // Round-off can leave a tiny negative for identical inputs.
    return std::max(d, 0.0);
}

FeatureProjector::FeatureProjector(int pixels, int features, std::uint64_t seed) : weights_(features, pixels) {
    Rng rng(seed, 0);
    const double s = 1.0 / std::sqrt(static_cast<double>(pixels));
    for (int r = 0; r < features; ++r)
        for (int c = 0; c < pixels; ++c) weights_(r, c) = s * rng.normal();
}

Eigen::MatrixXd FeatureProjector::project(std::span<const Image> images) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), weights_.rows());
    for (std::size_t i = 0; i < images.size(); ++i) {
        require(static_cast<Eigen::Index>(images[i].size()) == weights_.cols(), ErrorKind::DimensionMismatch,
                "image size does not match the feature projector");
        Eigen::Map<const Eigen::VectorXd> px(images[i].pixels.data(), weights_.cols());
        out.row(static_cast<Eigen::Index>(i)) = (weights_ * px).transpose();
    }
    return out;
}

} // namespace lp
