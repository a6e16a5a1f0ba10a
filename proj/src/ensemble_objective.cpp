#include "ganens/ensemble_objective.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ganens/errors.hpp"
#include "ganens/parallel.hpp"
#include "ganens/random.hpp"

namespace ganens {

using nlohmann::json;

EnsembleGenome::EnsembleGenome(std::vector<std::uint8_t> bits, std::string pool_ref)
    : bits_(std::move(bits)), pool_ref_(std::move(pool_ref)) {
    for (auto& b : bits_) b = b ? 1 : 0;
}

EnsembleGenome EnsembleGenome::from_indices(std::size_t pool_size,
                                            std::span<const std::size_t> indices,
                                            std::string pool_ref) {
    std::vector<std::uint8_t> bits(pool_size, 0);
    for (std::size_t i : indices) {
        if (i >= pool_size) throw ParameterError("genome index out of range");
        bits[i] = 1;
    }
    return EnsembleGenome(std::move(bits), std::move(pool_ref));
}

std::size_t EnsembleGenome::popcount() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> EnsembleGenome::selected() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out.push_back(i);
    }
    return out;
}

std::string EnsembleGenome::key() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) s[i] = '1';
    }
    return s;
}

PairwiseMatrix::PairwiseMatrix(std::vector<std::string> ids, std::vector<double> values,
                               MetricConfig metric, std::uint64_t seed,
                               std::vector<std::size_t> sample_sizes)
    : ids_(std::move(ids)),
      values_(std::move(values)),
      metric_(metric),
      seed_(seed),
      sample_sizes_(std::move(sample_sizes)) {
    if (values_.size() != ids_.size() * ids_.size()) {
        throw ParameterError("pairwise matrix payload does not match its id list");
    }
}

std::vector<Quota> quota_plan(const EnsembleGenome& genome, std::size_t total) {
    const auto members = genome.selected();
    const std::size_t n = members.size();
    if (n == 0) throw ParameterError("quota plan for an empty ensemble");
    if (total < n) {
        throw ParameterError("total " + std::to_string(total) + " is smaller than the " +
                             std::to_string(n) + " selected generators");
    }
    const std::size_t base = total / n;
    const std::size_t remainder = total % n;
    std::vector<Quota> plan;
    plan.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        plan.push_back({members[r], base + (r < remainder ? 1 : 0)});
    }
    return plan;
}

std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t count, std::uint64_t seed,
                                     const std::string& tag) {
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count >= rows) return idx;
    // Partial Fisher-Yates.
    Rng rng(derive_seed(seed, tag));
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(rows - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

UnionSample build_union(const EnsembleGenome& genome, const LoadedPool& pool, std::size_t total,
                        std::uint64_t seed) {
    if (genome.size() != pool.size()) {
        throw ParameterError("genome length " + std::to_string(genome.size()) +
                             " does not match pool size " + std::to_string(pool.size()));
    }
    const auto plan = quota_plan(genome, total);
    std::vector<EmbeddingSet> parts;
    std::vector<Shortfall> shortfalls;
    parts.reserve(plan.size());
    for (const auto& q : plan) {
        const auto& entry = pool.generators[q.index];
        const std::size_t available = entry.set.rows();
        if (available < q.count) shortfalls.push_back({entry.record.id, q.count, available});
        const auto rows = sample_rows(available, q.count, seed, "union:" + entry.record.id);
        parts.push_back(entry.set.select_rows(rows, entry.record.id));
    }
    return {concatenate(parts, "union"), std::move(shortfalls)};
}

double intra_d(const EnsembleGenome& genome, const LoadedPool& pool, const EmbeddingSet& real,
               const MetricConfig& cfg, std::uint64_t seed) {
    const auto u = build_union(genome, pool, real.rows(), seed);
    return metric_d(real, u.set, cfg);
}

std::size_t default_pairwise_sample(const LoadedPool& pool) {
    std::size_t n = pool.real.rows();
    for (const auto& g : pool.generators) n = std::min(n, g.set.rows());
    return n;
}

PairwiseMatrix pairwise_matrix(const LoadedPool& pool, const MetricConfig& cfg,
                               std::size_t sample_per_generator, std::uint64_t seed) {
    if (sample_per_generator == 0) throw ParameterError("pairwise sample size must be positive");
    const std::size_t n = pool.size();

    std::vector<EmbeddingSet> subsets;
    std::vector<std::size_t> sizes;
    subsets.reserve(n);
    for (const auto& g : pool.generators) {
        const auto rows = sample_rows(g.set.rows(), sample_per_generator, seed,
                                      "pairwise:" + g.record.id);
        subsets.push_back(g.set.select_rows(rows, g.record.id));
        sizes.push_back(rows.size());
    }

    // Per-generator precomputation shared by every pair it takes part in.
    std::vector<std::optional<RadiusProfile>> radii(n);
    std::vector<std::optional<GaussianSummary>> summaries(n);
    if (!cfg.standardize) {
        parallel_for(n, [&](std::size_t i) {
            if (cfg.kind == MetricKind::DensityCoverage) {
                radii[i] = knn_radii(subsets[i], cfg.k);
            } else {
                summaries[i] = gaussian_summary(subsets[i]);
            }
        });
    }
    auto directed = [&](std::size_t ref, std::size_t cand) {
        if (cfg.standardize) return metric_d(subsets[ref], subsets[cand], cfg);
        if (cfg.kind == MetricKind::Frechet) return frechet_distance(*summaries[ref], *summaries[cand]);
        const auto dc = density_coverage(subsets[ref], *radii[ref], subsets[cand]);
        return harmonic_d(dc.density, dc.coverage);
    };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::vector<double> values(n * n, 0.0);
    parallel_for(pairs.size(), [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const double v = 0.5 * (directed(i, j) + directed(j, i));
        values[i * n + j] = v;
        values[j * n + i] = v;
    });
    return PairwiseMatrix(pool.ids(), std::move(values), cfg, seed, std::move(sizes));
}

double inter_d(const EnsembleGenome& genome, const PairwiseMatrix& matrix) {
    if (genome.size() != matrix.size()) {
        throw ParameterError("genome length does not match pairwise matrix");
    }
    const auto members = genome.selected();
    const std::size_t n = members.size();
    if (n <= 1) return 0.0;
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) sum += matrix.entry(members[a], members[b]);
    }
    return sum / static_cast<double>(n * (n - 1) / 2);
}

void write_pairwise_csv(const PairwiseMatrix& matrix, const std::filesystem::path& dest) {
    std::ofstream out(dest, std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto& ids = matrix.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < ids.size(); ++j) out << (j ? "," : "") << matrix.entry(i, j);
        out << '\n';
    }
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

void write_pairwise_sidecar(const PairwiseMatrix& matrix, const std::filesystem::path& dest,
                            const std::string& provenance_json) {
    json doc;
    doc["metric"] = {{"kind", to_string(matrix.metric().kind)},
                     {"k", matrix.metric().k},
                     {"orientation", to_string(matrix.metric().orientation())},
                     {"standardize", matrix.metric().standardize}};
    doc["seed"] = matrix.seed();
    doc["ids"] = matrix.ids();
    json sizes = json::object();
    for (std::size_t i = 0; i < matrix.size(); ++i) sizes[matrix.ids()[i]] = matrix.sample_sizes()[i];
    doc["sample_sizes"] = sizes;
    doc["diagonal"] = "unused, written as 0";
    doc["provenance"] = provenance_json.empty() ? json::object() : json::parse(provenance_json);
    std::ofstream out(dest, std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

namespace {

PairwiseMatrix build_matrix(const LoadedPool& pool, const ObjectiveSettings& s) {
    const std::size_t sample = s.pairwise_sample ? s.pairwise_sample : default_pairwise_sample(pool);
    return pairwise_matrix(pool, s.metric, sample, s.seed);
}

}  // namespace

EnsembleObjective::EnsembleObjective(std::shared_ptr<const LoadedPool> pool, ObjectiveSettings settings)
    : EnsembleObjective(pool, settings, build_matrix(*pool, settings)) {}

EnsembleObjective::EnsembleObjective(std::shared_ptr<const LoadedPool> pool, ObjectiveSettings settings,
                                     PairwiseMatrix matrix)
    : pool_(std::move(pool)),
      settings_(settings),
      total_(settings.total ? settings.total : pool_->real.rows()),
      matrix_(std::move(matrix)),
      pool_ref_(pool_->fingerprint()) {
    if (pool_->size() == 0) throw ParameterError("empty generator pool");
    if (matrix_.ids() != pool_->ids() || !(matrix_.metric() == settings_.metric)) {
        throw ParameterError("pairwise matrix was built for a different pool or metric");
    }
    if (!settings_.metric.standardize) {
        if (settings_.metric.kind == MetricKind::DensityCoverage) {
            real_radii_ = knn_radii(pool_->real, settings_.metric.k);
        } else {
            real_summary_ = gaussian_summary(pool_->real);
        }
    }
}

EnsembleGenome EnsembleObjective::genome(std::vector<std::uint8_t> bits) const {
    return EnsembleGenome(std::move(bits), pool_ref_);
}

EnsembleGenome EnsembleObjective::genome_from_ids(const std::vector<std::string>& ids) const {
    std::vector<std::uint8_t> bits(pool_size(), 0);
    const auto pool_ids = pool_->ids();
    for (const auto& id : ids) {
        auto it = std::find(pool_ids.begin(), pool_ids.end(), id);
        if (it == pool_ids.end()) throw ParameterError("unknown generator id '" + id + "'");
        bits[static_cast<std::size_t>(it - pool_ids.begin())] = 1;
    }
    return genome(std::move(bits));
}

void EnsembleObjective::check(const EnsembleGenome& genome) const {
    if (genome.size() != pool_size()) {
        throw ParameterError("genome length " + std::to_string(genome.size()) +
                             " does not match pool size " + std::to_string(pool_size()));
    }
    if (genome.pool_ref() != pool_ref_) throw ParameterError("genome belongs to a different pool");
    if (genome.popcount() == 0) throw ParameterError("empty ensemble cannot be evaluated");
}

double EnsembleObjective::compute_intra(const EnsembleGenome& genome) const {
    const auto u = build_union(genome, *pool_, total_, settings_.seed);
    if (!u.shortfalls.empty()) {
        std::lock_guard lock(mutex_);
        for (const auto& s : u.shortfalls) shortfalls_.insert(s.generator_id);
    }
    if (real_radii_) {
        const auto dc = density_coverage(pool_->real, *real_radii_, u.set);
        return harmonic_d(dc.density, dc.coverage);
    }
    if (real_summary_) return frechet_distance(*real_summary_, gaussian_summary(u.set));
    return metric_d(pool_->real, u.set, settings_.metric);
}

double EnsembleObjective::intra_d(const EnsembleGenome& genome) const {
    check(genome);
    if (!settings_.memoize) return compute_intra(genome);
    const std::string key = genome.key();
    {
        std::lock_guard lock(mutex_);
        if (auto it = intra_cache_.find(key); it != intra_cache_.end()) return it->second;
    }
    // Computed outside the lock; concurrent inserts of one key carry equal values.
    const double value = compute_intra(genome);
    std::lock_guard lock(mutex_);
    intra_cache_[key] = value;
    return value;
}

double EnsembleObjective::inter_d(const EnsembleGenome& genome) const {
    check(genome);
    return ganens::inter_d(genome, matrix_);
}

ObjectiveVector EnsembleObjective::evaluate(const EnsembleGenome& genome) const {
    ObjectiveVector v;
    v.intra = intra_d(genome);
    v.inter = inter_d(genome);
    v.member_count = genome.popcount();
    v.metric = settings_.metric;
    return v;
}

std::size_t EnsembleObjective::cache_size() const {
    std::lock_guard lock(mutex_);
    return intra_cache_.size();
}

std::set<std::string> EnsembleObjective::shortfall_ids() const {
    std::lock_guard lock(mutex_);
    return shortfalls_;
}

}  // namespace ganens
