#include "ganens/metric_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ganens/errors.hpp"
#include "ganens/parallel.hpp"

namespace ganens {

std::string to_string(MetricKind kind) {
    return kind == MetricKind::Frechet ? "frechet" : "density_coverage";
}

std::string to_string(Orientation orientation) {
    return orientation == Orientation::LowerIsBetter ? "lower_is_better" : "higher_is_better";
}

MetricKind parse_metric_kind(const std::string& text) {
    if (text == "dnc" || text == "density_coverage") return MetricKind::DensityCoverage;
    if (text == "fid" || text == "frechet") return MetricKind::Frechet;
    throw ParameterError("unknown metric '" + text + "' (expected dnc or fid)");
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

RadiusProfile knn_radii(const EmbeddingSet& reference, std::size_t k) {
    const std::size_t n = reference.rows();
    if (k < 1 || k >= n) {
        throw ParameterError("k-NN radius needs 1 <= k < N (k=" + std::to_string(k) +
                             ", N=" + std::to_string(n) + " for '" + reference.source_id() + "')");
    }
    RadiusProfile profile{reference.source_id(), k, std::vector<double>(n)};
    parallel_for(n, [&](std::size_t i) {
        std::vector<double> dist;
        dist.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dist.push_back(euclidean_distance(reference.row(i), reference.row(j)));
        }
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        profile.radii[i] = dist[k - 1];
    });
    return profile;
}

DensityCoverage density_coverage(const EmbeddingSet& reference, const RadiusProfile& radii,
                                 const EmbeddingSet& candidate) {
    if (radii.radii.size() != reference.rows()) {
        throw ParameterError("radius profile does not match reference '" + reference.source_id() + "'");
    }
    if (reference.dim() != candidate.dim()) {
        throw ParameterError("dimension mismatch between '" + reference.source_id() + "' and '" +
                             candidate.source_id() + "'");
    }
    const std::size_t n = reference.rows();
    const std::size_t m = candidate.rows();
    // in_ball[i] = number of candidate points inside the closed ball around reference point i.
    std::vector<std::size_t> in_ball(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const double r = radii.radii[i];
        std::size_t count = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (euclidean_distance(candidate.row(j), reference.row(i)) <= r) ++count;
        }
        in_ball[i] = count;
    });

    const std::size_t total = std::accumulate(in_ball.begin(), in_ball.end(), std::size_t{0});
    const auto covered = static_cast<std::size_t>(
        std::count_if(in_ball.begin(), in_ball.end(), [](std::size_t c) { return c > 0; }));
    DensityCoverage out;
    out.density = static_cast<double>(total) / (static_cast<double>(radii.k) * static_cast<double>(m));
    out.coverage = static_cast<double>(covered) / static_cast<double>(n);
    return out;
}

DensityCoverage density_coverage(const EmbeddingSet& reference, const EmbeddingSet& candidate,
                                 std::size_t k) {
    return density_coverage(reference, knn_radii(reference, k), candidate);
}

double density(const EmbeddingSet& reference, const EmbeddingSet& candidate, std::size_t k) {
    return density_coverage(reference, candidate, k).density;
}

double coverage(const EmbeddingSet& reference, const EmbeddingSet& candidate, std::size_t k) {
    return density_coverage(reference, candidate, k).coverage;
}

double harmonic_d(double dns, double cvg) {
    if (!(dns >= 0.0) || !(cvg >= 0.0)) {
        throw ParameterError("harmonic_d needs nonnegative inputs");
    }
    const double sum = dns + cvg;
    if (sum == 0.0) return 0.0;
    return 2.0 * dns * cvg / sum;
}

GaussianSummary gaussian_summary(const EmbeddingSet& set) {
    const std::size_t n = set.rows();
    const std::size_t d = set.dim();
    if (n < 2) {
        throw ParameterError("Gaussian summary of '" + set.source_id() + "' needs at least 2 rows");
    }
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = set.row(i);
        for (std::size_t j = 0; j < d; ++j) x(i, j) = r[j];
    }
    GaussianSummary s;
    s.mean = x.colwise().mean().transpose();
    x.rowwise() -= s.mean.transpose();
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    s.covariance = 0.5 * (cov + cov.transpose());
    return s;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows()) {
        throw ParameterError("Fréchet distance between summaries of different dimension");
    }
    const Eigen::MatrixXd root_a = psd_sqrt(a.covariance);
    Eigen::MatrixXd inner = root_a * b.covariance * root_a;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");

    double trace_root = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double lambda = eig.eigenvalues()[i];
        if (lambda >= kEigenClamp) trace_root += std::sqrt(lambda);
    }
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double value =
        mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_root;
    if (!std::isfinite(value)) throw NumericError("Fréchet distance is not finite");
    return std::max(0.0, value);
}

std::pair<EmbeddingSet, EmbeddingSet> standardize_pair(const EmbeddingSet& reference,
                                                       const EmbeddingSet& candidate) {
    const std::size_t d = reference.dim();
    const std::size_t n = reference.rows();
    std::vector<double> mean(d, 0.0), scale(d, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += reference.row(i)[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    if (n > 1) {
        std::vector<double> var(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = reference.row(i)[j] - mean[j];
                var[j] += c * c;
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double sd = std::sqrt(var[j] / static_cast<double>(n - 1));
            if (sd > 0.0) scale[j] = sd;
        }
    }
    auto apply = [&](const EmbeddingSet& s) {
        std::vector<float> out(s.data().size());
        for (std::size_t i = 0; i < s.rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out[i * d + j] = static_cast<float>((s.row(i)[j] - mean[j]) / scale[j]);
            }
        }
        return EmbeddingSet::create(s.rows(), d, std::move(out), s.source_id());
    };
    return {apply(reference), apply(candidate)};
}

double metric_d(const EmbeddingSet& reference, const EmbeddingSet& candidate,
                const MetricConfig& cfg) {
    if (cfg.standardize) {
        auto [ref, cand] = standardize_pair(reference, candidate);
        MetricConfig raw = cfg;
        raw.standardize = false;
        return metric_d(ref, cand, raw);
    }
    if (cfg.kind == MetricKind::Frechet) {
        return frechet_distance(gaussian_summary(reference), gaussian_summary(candidate));
    }
    const auto dc = density_coverage(reference, candidate, cfg.k);
    return harmonic_d(dc.density, dc.coverage);
}

}  // namespace ganens
