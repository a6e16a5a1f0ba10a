#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ganens/embedding_store.hpp"
#include "ganens/metric_kernel.hpp"

namespace ganens {

/// Binary inclusion vector over a loaded pool: bit i selects generator i in
/// canonical order.
class EnsembleGenome {
public:
    EnsembleGenome() = default;
    EnsembleGenome(std::vector<std::uint8_t> bits, std::string pool_ref);

    static EnsembleGenome from_indices(std::size_t pool_size, std::span<const std::size_t> indices,
                                       std::string pool_ref);

    std::size_t size() const noexcept { return bits_.size(); }
    bool test(std::size_t i) const { return bits_.at(i) != 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    const std::string& pool_ref() const noexcept { return pool_ref_; }
    std::size_t popcount() const noexcept;
    std::vector<std::size_t> selected() const;
    /// "0110..." in index order; used as cache and dedup key.
    std::string key() const;

    /// Lexicographic order on the bit vector.
    friend bool operator<(const EnsembleGenome& a, const EnsembleGenome& b) { return a.bits_ < b.bits_; }
    friend bool operator==(const EnsembleGenome& a, const EnsembleGenome& b) {
        return a.bits_ == b.bits_ && a.pool_ref_ == b.pool_ref_;
    }

private:
    std::vector<std::uint8_t> bits_;
    std::string pool_ref_;
};

/// The objective pair for one genome. intra and inter hold raw metric values;
/// the effective_* accessors flip sign for lower-is-better metrics so that
/// "maximize effective intra, minimize effective inter" holds for every kind.
struct ObjectiveVector {
    double intra = 0.0;
    double inter = 0.0;
    std::size_t member_count = 0;
    MetricConfig metric;

    Orientation orientation() const noexcept { return metric.orientation(); }
    double effective_intra() const noexcept {
        return orientation() == Orientation::HigherIsBetter ? intra : -intra;
    }
    double effective_inter() const noexcept {
        return orientation() == Orientation::HigherIsBetter ? inter : -inter;
    }

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

/// Symmetrized pairwise metric values among the pool's generators.
class PairwiseMatrix {
public:
    PairwiseMatrix(std::vector<std::string> ids, std::vector<double> values, MetricConfig metric,
                   std::uint64_t seed, std::vector<std::size_t> sample_sizes);

    std::size_t size() const noexcept { return ids_.size(); }
    double entry(std::size_t i, std::size_t j) const { return values_.at(i * ids_.size() + j); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const MetricConfig& metric() const noexcept { return metric_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::size_t>& sample_sizes() const noexcept { return sample_sizes_; }
    /// Number of unordered pairs actually computed.
    std::size_t computed_pairs() const noexcept { return size() * (size() - 1) / 2; }

private:
    std::vector<std::string> ids_;
    std::vector<double> values_;  // row-major, diagonal left at 0
    MetricConfig metric_;
    std::uint64_t seed_;
    std::vector<std::size_t> sample_sizes_;
};

struct Quota {
    std::size_t index = 0;
    std::size_t count = 0;
    friend bool operator==(const Quota&, const Quota&) = default;
};

/// Splits total evenly across selected generators; the remainder goes one
/// each to the earliest selected indices.
std::vector<Quota> quota_plan(const EnsembleGenome& genome, std::size_t total);

struct Shortfall {
    std::string generator_id;
    std::size_t requested = 0;
    std::size_t available = 0;
};

struct UnionSample {
    EmbeddingSet set;
    std::vector<Shortfall> shortfalls;
};

/// Uniform subsample without replacement of `count` row indices (ascending),
/// drawn from a stream seeded by (seed, tag). Returns all rows when count >= rows.
std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t count, std::uint64_t seed,
                                     const std::string& tag);

/// Quota-sampled union of the selected generators' embeddings, concatenated
/// in canonical order.
UnionSample build_union(const EnsembleGenome& genome, const LoadedPool& pool, std::size_t total,
                        std::uint64_t seed);

/// d(real, union) with the union drawn at a budget of |real| rows.
double intra_d(const EnsembleGenome& genome, const LoadedPool& pool, const EmbeddingSet& real,
               const MetricConfig& cfg, std::uint64_t seed);

/// Default pairwise subsample: min over generators of N_i, capped at |R|.
std::size_t default_pairwise_sample(const LoadedPool& pool);

PairwiseMatrix pairwise_matrix(const LoadedPool& pool, const MetricConfig& cfg,
                               std::size_t sample_per_generator, std::uint64_t seed);

/// Mean pairwise entry over distinct selected members; 0 for singletons.
double inter_d(const EnsembleGenome& genome, const PairwiseMatrix& matrix);

void write_pairwise_csv(const PairwiseMatrix& matrix, const std::filesystem::path& dest);
void write_pairwise_sidecar(const PairwiseMatrix& matrix, const std::filesystem::path& dest,
                            const std::string& provenance_json);

struct ObjectiveSettings {
    MetricConfig metric;
    std::uint64_t seed = 0;
    /// Union budget; 0 means |R|.
    std::size_t total = 0;
    /// Rows per generator for pairwise entries; 0 means default_pairwise_sample.
    std::size_t pairwise_sample = 0;
    bool memoize = true;
};

/// Evaluates genomes over one loaded pool. Precomputes the pairwise matrix and
/// the real set's k-NN radii (or Gaussian summary) once; intra values are
/// memoized by genome bits. Safe for concurrent evaluate() calls.
class EnsembleObjective {
public:
    EnsembleObjective(std::shared_ptr<const LoadedPool> pool, ObjectiveSettings settings);
    EnsembleObjective(std::shared_ptr<const LoadedPool> pool, ObjectiveSettings settings,
                      PairwiseMatrix matrix);

    double intra_d(const EnsembleGenome& genome) const;
    double inter_d(const EnsembleGenome& genome) const;
    ObjectiveVector evaluate(const EnsembleGenome& genome) const;

    EnsembleGenome genome(std::vector<std::uint8_t> bits) const;
    EnsembleGenome genome_from_ids(const std::vector<std::string>& ids) const;

    const LoadedPool& pool() const noexcept { return *pool_; }
    std::size_t pool_size() const noexcept { return pool_->size(); }
    const PairwiseMatrix& matrix() const noexcept { return matrix_; }
    const ObjectiveSettings& settings() const noexcept { return settings_; }
    std::size_t total() const noexcept { return total_; }
    std::size_t cache_size() const;
    /// Generator ids that could not fill their quota in some evaluated union.
    std::set<std::string> shortfall_ids() const;

private:
    void check(const EnsembleGenome& genome) const;
    double compute_intra(const EnsembleGenome& genome) const;

    std::shared_ptr<const LoadedPool> pool_;
    ObjectiveSettings settings_;
    std::size_t total_;
    PairwiseMatrix matrix_;
    std::string pool_ref_;
    std::optional<RadiusProfile> real_radii_;
    std::optional<GaussianSummary> real_summary_;

    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, double> intra_cache_;
    mutable std::set<std::string> shortfalls_;
};

}  // namespace ganens
