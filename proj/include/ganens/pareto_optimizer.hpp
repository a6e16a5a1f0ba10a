#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ganens/ensemble_objective.hpp"

namespace ganens {

enum class SearchAlgorithm { Exhaustive, Random, Evolutionary };

std::string to_string(SearchAlgorithm algorithm);
SearchAlgorithm parse_search_algorithm(const std::string& text);

/// Largest pool exhaustive enumeration accepts (2^20 - 1 genomes).
inline constexpr std::size_t kExhaustiveMaxPool = 20;

struct SearchConfig {
    SearchAlgorithm algorithm = SearchAlgorithm::Evolutionary;
    /// Distinct genomes to evaluate (ignored by Exhaustive).
    std::size_t budget = 1000;
    std::size_t population = 50;
    double crossover_rate = 0.9;
    /// Per-bit flip probability; defaults to 1/|G|.
    std::optional<double> mutation_rate;
    std::uint64_t seed = 0;
};

struct Evaluated {
    EnsembleGenome genome;
    ObjectiveVector objectives;
};

/// Anything that maps a genome over a fixed pool to its objective pair.
struct GenomeEvaluator {
    std::size_t pool_size = 0;
    std::string pool_ref;
    std::function<ObjectiveVector(const EnsembleGenome&)> evaluate;
};

GenomeEvaluator make_evaluator(const EnsembleObjective& objective);

/// a dominates b: effective intra >= and effective inter <=, one strictly.
/// Throws ParameterError when the two vectors disagree on orientation.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

struct ParetoFront {
    /// Non-dominated, deduplicated by genome, sorted by descending effective
    /// intra (then ascending effective inter, member count, bits).
    std::vector<Evaluated> entries;
    Orientation orientation = Orientation::HigherIsBetter;
};

ParetoFront extract_front(std::span<const Evaluated> evaluated);

struct SearchResult {
    /// Every evaluated genome, in evaluation order. Genomes are distinct.
    std::vector<Evaluated> archive;
    ParetoFront front;
};

/// Exhaustive enumerates every nonempty genome. Random and Evolutionary
/// evaluate `budget` distinct genomes (or the whole space when smaller).
/// All randomness derives from cfg.seed.
SearchResult search(const GenomeEvaluator& evaluator, const SearchConfig& cfg);
SearchResult search(const EnsembleObjective& objective, const SearchConfig& cfg);

struct SelectionManifest {
    EnsembleGenome genome;
    std::vector<std::string> chosen;
    std::vector<std::pair<std::string, std::size_t>> quotas;
    ObjectiveVector objectives;
    std::size_t front_size = 0;
    std::size_t total = 0;
};

/// Index of the entry with maximal effective intra; ties prefer fewer
/// members, then the lexicographically smallest bit vector.
std::size_t best_by_intra(std::span<const Evaluated> entries);

SelectionManifest select_best(const ParetoFront& front, const std::vector<std::string>& ids,
                              std::size_t total);

struct UniobjectiveResult {
    SearchResult search;
    SelectionManifest selection;
};

/// Same candidate generation as search(), but selects argmax intra over the
/// whole archive, ignoring inter.
UniobjectiveResult uniobjective_search(const GenomeEvaluator& evaluator, const SearchConfig& cfg,
                                       const std::vector<std::string>& ids, std::size_t total);
UniobjectiveResult uniobjective_search(const EnsembleObjective& objective, const SearchConfig& cfg);

/// Fast non-dominated sorting; returns the rank (0 = first front) of each point.
std::vector<std::size_t> nondominated_ranks(std::span<const ObjectiveVector> points);
/// Crowding distance of each point within the subset `members` (one front).
std::vector<double> crowding_distances(std::span<const ObjectiveVector> points,
                                       std::span<const std::size_t> members);

}  // namespace ganens
