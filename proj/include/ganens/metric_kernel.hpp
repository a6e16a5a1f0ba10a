#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ganens/embedding_store.hpp"

namespace ganens {

enum class MetricKind { DensityCoverage, Frechet };
enum class Orientation { HigherIsBetter, LowerIsBetter };

/// Which distribution-quality metric d to use. Orientation follows from the
/// kind: density/coverage rewards agreement with a larger value, Fréchet
/// distance with a smaller one.
struct MetricConfig {
    MetricKind kind = MetricKind::DensityCoverage;
    std::size_t k = 5;
    /// Standardize every dimension by the reference set's mean and standard
    /// deviation before measuring distances.
    bool standardize = false;

    Orientation orientation() const noexcept {
        return kind == MetricKind::Frechet ? Orientation::LowerIsBetter
                                           : Orientation::HigherIsBetter;
    }

    friend bool operator==(const MetricConfig&, const MetricConfig&) = default;
};

std::string to_string(MetricKind kind);
std::string to_string(Orientation orientation);
MetricKind parse_metric_kind(const std::string& text);

/// Distances from each reference point to its k-th nearest other point.
struct RadiusProfile {
    std::string reference_id;
    std::size_t k = 0;
    std::vector<double> radii;
};

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct DensityCoverage {
    double density = 0.0;
    double coverage = 0.0;
};

double euclidean_distance(std::span<const float> a, std::span<const float> b);

RadiusProfile knn_radii(const EmbeddingSet& reference, std::size_t k);

/// Density and coverage of candidate against the reference manifold. Both
/// share one pass over the cross-distance matrix. Balls are closed.
DensityCoverage density_coverage(const EmbeddingSet& reference, const EmbeddingSet& candidate,
                                 std::size_t k);
DensityCoverage density_coverage(const EmbeddingSet& reference, const RadiusProfile& radii,
                                 const EmbeddingSet& candidate);

double density(const EmbeddingSet& reference, const EmbeddingSet& candidate, std::size_t k);
double coverage(const EmbeddingSet& reference, const EmbeddingSet& candidate, std::size_t k);

/// 2*dns*cvg/(dns+cvg), or 0 when both are 0.
double harmonic_d(double dns, double cvg);

GaussianSummary gaussian_summary(const EmbeddingSet& set);

/// Squared Fréchet distance between two Gaussians. The trace of the
/// product's square root uses the eigenvalues of sqrt(Sa) Sb sqrt(Sa), with
/// eigenvalues below 1e-10 clamped to zero.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

inline constexpr double kEigenClamp = 1e-10;

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues
/// clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// Rescales both sets by the reference's per-dimension mean and standard
/// deviation (dimensions with zero spread are only centred).
std::pair<EmbeddingSet, EmbeddingSet> standardize_pair(const EmbeddingSet& reference,
                                                       const EmbeddingSet& candidate);

/// d(reference, candidate). The first argument defines the manifold.
double metric_d(const EmbeddingSet& reference, const EmbeddingSet& candidate,
                const MetricConfig& cfg);

}  // namespace ganens
