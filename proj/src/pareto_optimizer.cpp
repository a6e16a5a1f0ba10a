#include "ganens/pareto_optimizer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "ganens/errors.hpp"
#include "ganens/parallel.hpp"
#include "ganens/random.hpp"

namespace ganens {

std::string to_string(SearchAlgorithm algorithm) {
    switch (algorithm) {
        case SearchAlgorithm::Exhaustive: return "exhaustive";
        case SearchAlgorithm::Random: return "random";
        case SearchAlgorithm::Evolutionary: return "nsga2";
    }
    return "unknown";
}

SearchAlgorithm parse_search_algorithm(const std::string& text) {
    if (text == "exhaustive") return SearchAlgorithm::Exhaustive;
    if (text == "random") return SearchAlgorithm::Random;
    if (text == "nsga2" || text == "evolutionary") return SearchAlgorithm::Evolutionary;
    throw ParameterError("unknown search algorithm '" + text + "' (expected exhaustive, random or nsga2)");
}

GenomeEvaluator make_evaluator(const EnsembleObjective& objective) {
    return {objective.pool_size(), objective.pool().fingerprint(),
            [&objective](const EnsembleGenome& g) { return objective.evaluate(g); }};
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    if (a.orientation() != b.orientation()) {
        throw ParameterError("cannot compare objective vectors with different orientations");
    }
    const double ai = a.effective_intra(), bi = b.effective_intra();
    const double ae = a.effective_inter(), be = b.effective_inter();
    return ai >= bi && ae <= be && (ai > bi || ae < be);
}

namespace {

bool front_order(const Evaluated& a, const Evaluated& b) {
    const auto& x = a.objectives;
    const auto& y = b.objectives;
    if (x.effective_intra() != y.effective_intra()) return x.effective_intra() > y.effective_intra();
    if (x.effective_inter() != y.effective_inter()) return x.effective_inter() < y.effective_inter();
    if (x.member_count != y.member_count) return x.member_count < y.member_count;
    return a.genome < b.genome;
}

}  // namespace

ParetoFront extract_front(std::span<const Evaluated> evaluated) {
    if (evaluated.empty()) throw ParameterError("cannot extract a front from an empty list");
    const Orientation orientation = evaluated.front().objectives.orientation();

    std::vector<Evaluated> unique;
    std::unordered_set<std::string> seen;
    for (const auto& e : evaluated) {
        if (e.objectives.orientation() != orientation) {
            throw ParameterError("mixed objective orientations in front extraction");
        }
        if (seen.insert(e.genome.key()).second) unique.push_back(e);
    }
    std::sort(unique.begin(), unique.end(), front_order);

    // Two-objective sweep: after sorting by intra descending, a point survives
    // iff its inter is strictly below every inter seen at strictly higher
    // intra and equal to the minimum within its own intra group.
    ParetoFront front{{}, orientation};
    double best_above = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < unique.size()) {
        const double intra = unique[i].objectives.effective_intra();
        std::size_t end = i;
        while (end < unique.size() && unique[end].objectives.effective_intra() == intra) ++end;
        const double group_min = unique[i].objectives.effective_inter();
        if (group_min < best_above) {
            for (std::size_t j = i; j < end && unique[j].objectives.effective_inter() == group_min; ++j) {
                front.entries.push_back(unique[j]);
            }
            best_above = group_min;
        }
        i = end;
    }
    return front;
}

std::vector<std::size_t> nondominated_ranks(std::span<const ObjectiveVector> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominators(n, 0);
    std::vector<std::size_t> rank(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++dominators[p];
            }
        }
        if (dominators[p] == 0) current.push_back(p);
    }
    std::size_t level = 0;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : current) {
            rank[p] = level;
            for (std::size_t q : dominated[p]) {
                if (--dominators[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
        ++level;
    }
    return rank;
}

std::vector<double> crowding_distances(std::span<const ObjectiveVector> points,
                                       std::span<const std::size_t> members) {
    const std::size_t m = members.size();
    std::vector<double> distance(m, 0.0);
    if (m <= 2) {
        std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
        return distance;
    }
    for (int objective = 0; objective < 2; ++objective) {
        auto value = [&](std::size_t local) {
            const auto& v = points[members[local]];
            return objective == 0 ? v.effective_intra() : v.effective_inter();
        };
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        distance[order.front()] = std::numeric_limits<double>::infinity();
        distance[order.back()] = std::numeric_limits<double>::infinity();
        const double range = value(order.back()) - value(order.front());
        if (range <= 0.0) continue;
        for (std::size_t r = 1; r + 1 < m; ++r) {
            distance[order[r]] += (value(order[r + 1]) - value(order[r - 1])) / range;
        }
    }
    return distance;
}

namespace {

/// Drives candidate generation with a duplicate-free archive.
class SearchState {
public:
    SearchState(const GenomeEvaluator& evaluator, const SearchConfig& cfg)
        : evaluator_(evaluator),
          n_(evaluator.pool_size),
          rng_(derive_seed(cfg.seed, "search")),
          mutation_rate_(cfg.mutation_rate.value_or(1.0 / static_cast<double>(evaluator.pool_size))) {
        space_ = n_ >= 63 ? std::numeric_limits<std::size_t>::max()
                          : (std::size_t{1} << n_) - 1;
        budget_ = std::min(cfg.budget, space_);
    }

    std::size_t budget() const { return budget_; }
    std::size_t evaluations() const { return archive_.size(); }
    bool exhausted() const { return archive_.size() + pending_.size() >= budget_; }
    std::vector<Evaluated>& archive() { return archive_; }
    Rng& rng() { return rng_; }
    double mutation_rate() const { return mutation_rate_; }

    EnsembleGenome make(std::vector<std::uint8_t> bits) const {
        return EnsembleGenome(std::move(bits), evaluator_.pool_ref);
    }

    std::vector<std::uint8_t> random_bits() {
        std::vector<std::uint8_t> bits(n_);
        for (auto& b : bits) b = rng_.coin() ? 1 : 0;
        repair(bits);
        return bits;
    }

    void repair(std::vector<std::uint8_t>& bits) {
        if (std::find(bits.begin(), bits.end(), std::uint8_t{1}) == bits.end()) {
            bits[rng_.below(n_)] = 1;
        }
    }

    void mutate(std::vector<std::uint8_t>& bits) {
        for (auto& b : bits) {
            if (rng_.uniform() < mutation_rate_) b ^= 1;
        }
        repair(bits);
    }

    /// Queues bits for evaluation, replacing a genome already seen by a
    /// mutated variant or, failing that, a random unseen genome. Returns false
    /// when no unseen genome could be found.
    bool enqueue(std::vector<std::uint8_t> bits) {
        for (int attempt = 0; attempt < 16 && seen(bits); ++attempt) {
            mutate(bits);
            if (seen(bits)) bits[rng_.below(n_)] ^= 1, repair(bits);
        }
        if (seen(bits)) {
            auto fresh = random_unseen();
            if (!fresh) return false;
            bits = std::move(*fresh);
        }
        seen_.insert(key(bits));
        pending_.push_back(make(std::move(bits)));
        return true;
    }

    /// Evaluates queued genomes (in parallel) and appends them to the archive.
    /// Returns archive indices of the new entries.
    std::vector<std::size_t> flush() {
        std::vector<ObjectiveVector> results(pending_.size());
        parallel_for(pending_.size(), [&](std::size_t i) { results[i] = evaluator_.evaluate(pending_[i]); });
        std::vector<std::size_t> added;
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            added.push_back(archive_.size());
            archive_.push_back({std::move(pending_[i]), results[i]});
        }
        pending_.clear();
        return added;
    }

private:
    static std::string key(const std::vector<std::uint8_t>& bits) {
        std::string s(bits.size(), '0');
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i]) s[i] = '1';
        }
        return s;
    }
    bool seen(const std::vector<std::uint8_t>& bits) const { return seen_.count(key(bits)) != 0; }

    std::optional<std::vector<std::uint8_t>> random_unseen() {
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto bits = random_bits();
            if (!seen(bits)) return bits;
        }
        if (n_ <= 30) {
            // Scan the code space from a random start.
            const std::size_t start = static_cast<std::size_t>(rng_.below(space_));
            for (std::size_t step = 0; step < space_; ++step) {
                const std::size_t code = (start + step) % space_ + 1;
                std::vector<std::uint8_t> bits(n_);
                for (std::size_t i = 0; i < n_; ++i) bits[i] = (code >> i) & 1u;
                if (!seen(bits)) return bits;
            }
            return std::nullopt;
        }
        for (int attempt = 0; attempt < 100000; ++attempt) {
            auto bits = random_bits();
            if (!seen(bits)) return bits;
        }
        return std::nullopt;
    }

    const GenomeEvaluator& evaluator_;
    std::size_t n_;
    Rng rng_;
    double mutation_rate_;
    std::size_t space_ = 0;
    std::size_t budget_ = 0;
    std::unordered_set<std::string> seen_;
    std::vector<EnsembleGenome> pending_;
    std::vector<Evaluated> archive_;
};

std::vector<Evaluated> run_exhaustive(const GenomeEvaluator& evaluator) {
    const std::size_t n = evaluator.pool_size;
    if (n > kExhaustiveMaxPool) {
        throw ParameterError("exhaustive search is limited to pools of at most " +
                             std::to_string(kExhaustiveMaxPool) + " generators (got " +
                             std::to_string(n) + ")");
    }
    const std::size_t space = (std::size_t{1} << n) - 1;
    std::vector<Evaluated> archive(space);
    parallel_for(space, [&](std::size_t c) {
        const std::size_t code = c + 1;
        std::vector<std::uint8_t> bits(n);
        for (std::size_t i = 0; i < n; ++i) bits[i] = (code >> i) & 1u;
        EnsembleGenome g(std::move(bits), evaluator.pool_ref);
        auto obj = evaluator.evaluate(g);
        archive[c] = {std::move(g), obj};
    });
    return archive;
}

std::vector<Evaluated> run_random(const GenomeEvaluator& evaluator, const SearchConfig& cfg) {
    SearchState state(evaluator, cfg);
    while (!state.exhausted()) {
        if (!state.enqueue(state.random_bits())) break;
    }
    state.flush();
    return std::move(state.archive());
}

std::vector<Evaluated> run_evolutionary(const GenomeEvaluator& evaluator, const SearchConfig& cfg) {
    if (cfg.population < 2) throw ParameterError("evolutionary search needs a population of at least 2");
    if (cfg.budget < cfg.population) {
        throw ParameterError("evolutionary budget (" + std::to_string(cfg.budget) +
                             ") must be at least the population (" + std::to_string(cfg.population) + ")");
    }
    if (cfg.crossover_rate < 0.0 || cfg.crossover_rate > 1.0) {
        throw ParameterError("crossover rate must lie in [0, 1]");
    }
    SearchState state(evaluator, cfg);
    if (state.mutation_rate() < 0.0 || state.mutation_rate() > 1.0) {
        throw ParameterError("mutation rate must lie in [0, 1]");
    }
    Rng& rng = state.rng();

    for (std::size_t i = 0; i < cfg.population && !state.exhausted(); ++i) {
        if (!state.enqueue(state.random_bits())) break;
    }
    std::vector<std::size_t> population = state.flush();

    while (!state.exhausted() && population.size() >= 2) {
        const auto& archive = state.archive();
        std::vector<ObjectiveVector> objs;
        for (std::size_t idx : population) objs.push_back(archive[idx].objectives);
        const auto rank = nondominated_ranks(objs);
        std::vector<double> crowd(population.size(), 0.0);
        for (std::size_t level = 0;; ++level) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < rank.size(); ++i) {
                if (rank[i] == level) members.push_back(i);
            }
            if (members.empty()) break;
            const auto d = crowding_distances(objs, members);
            for (std::size_t m = 0; m < members.size(); ++m) crowd[members[m]] = d[m];
        }
        auto tournament = [&]() -> std::size_t {
            const std::size_t a = rng.below(population.size());
            std::size_t b = rng.below(population.size() - 1);
            if (b >= a) ++b;
            if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
            if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? a : b;
            return std::min(a, b);
        };

        bool stalled = false;
        for (std::size_t child = 0; child < cfg.population && !state.exhausted(); ++child) {
            const auto& p1 = archive[population[tournament()]].genome.bits();
            const auto& p2 = archive[population[tournament()]].genome.bits();
            std::vector<std::uint8_t> bits = p1;
            if (rng.uniform() < cfg.crossover_rate) {
                for (std::size_t i = 0; i < bits.size(); ++i) {
                    if (rng.coin()) bits[i] = p2[i];
                }
            }
            state.mutate(bits);
            if (!state.enqueue(std::move(bits))) {
                stalled = true;
                break;
            }
        }
        const auto offspring = state.flush();
        if (offspring.empty()) break;

        // Elitist environmental selection over parents + offspring.
        std::vector<std::size_t> combined = population;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        std::vector<ObjectiveVector> cobjs;
        for (std::size_t idx : combined) cobjs.push_back(state.archive()[idx].objectives);
        const auto crank = nondominated_ranks(cobjs);
        std::vector<std::size_t> next;
        for (std::size_t level = 0; next.size() < cfg.population; ++level) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < crank.size(); ++i) {
                if (crank[i] == level) members.push_back(i);
            }
            if (members.empty()) break;
            if (next.size() + members.size() <= cfg.population) {
                for (std::size_t m : members) next.push_back(combined[m]);
                continue;
            }
            const auto d = crowding_distances(cobjs, members);
            std::vector<std::size_t> order(members.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
            for (std::size_t r = 0; next.size() < cfg.population; ++r) next.push_back(combined[members[order[r]]]);
        }
        population = std::move(next);
        if (stalled) break;
    }
    return std::move(state.archive());
}

}  // namespace

SearchResult search(const GenomeEvaluator& evaluator, const SearchConfig& cfg) {
    if (evaluator.pool_size == 0) throw ParameterError("search over an empty pool");
    SearchResult result;
    switch (cfg.algorithm) {
        case SearchAlgorithm::Exhaustive: result.archive = run_exhaustive(evaluator); break;
        case SearchAlgorithm::Random: result.archive = run_random(evaluator, cfg); break;
        case SearchAlgorithm::Evolutionary: result.archive = run_evolutionary(evaluator, cfg); break;
    }
    if (result.archive.empty()) throw ParameterError("search evaluated no genomes (budget 0?)");
    result.front = extract_front(result.archive);
    return result;
}

SearchResult search(const EnsembleObjective& objective, const SearchConfig& cfg) {
    return search(make_evaluator(objective), cfg);
}

std::size_t best_by_intra(std::span<const Evaluated> entries) {
    if (entries.empty()) throw ParameterError("no entries to select from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const auto& c = entries[i];
        const auto& b = entries[best];
        const double ci = c.objectives.effective_intra();
        const double bi = b.objectives.effective_intra();
        if (ci != bi) {
            if (ci > bi) best = i;
            continue;
        }
        if (c.objectives.member_count != b.objectives.member_count) {
            if (c.objectives.member_count < b.objectives.member_count) best = i;
            continue;
        }
        if (c.genome < b.genome) best = i;
    }
    return best;
}

namespace {

SelectionManifest make_manifest(const Evaluated& chosen, const std::vector<std::string>& ids,
                                std::size_t total, std::size_t front_size) {
    if (ids.size() != chosen.genome.size()) {
        throw ParameterError("id list does not match genome length");
    }
    SelectionManifest m;
    m.genome = chosen.genome;
    m.objectives = chosen.objectives;
    m.front_size = front_size;
    m.total = total;
    for (std::size_t i : chosen.genome.selected()) m.chosen.push_back(ids[i]);
    for (const auto& q : quota_plan(chosen.genome, total)) m.quotas.emplace_back(ids[q.index], q.count);
    return m;
}

}  // namespace

SelectionManifest select_best(const ParetoFront& front, const std::vector<std::string>& ids,
                              std::size_t total) {
    if (front.entries.empty()) throw ParameterError("cannot select from an empty front");
    const std::size_t best = best_by_intra(front.entries);
    return make_manifest(front.entries[best], ids, total, front.entries.size());
}

UniobjectiveResult uniobjective_search(const GenomeEvaluator& evaluator, const SearchConfig& cfg,
                                       const std::vector<std::string>& ids, std::size_t total) {
    UniobjectiveResult out{search(evaluator, cfg), {}};
    const std::size_t best = best_by_intra(out.search.archive);
    out.selection = make_manifest(out.search.archive[best], ids, total, out.search.front.entries.size());
    return out;
}

UniobjectiveResult uniobjective_search(const EnsembleObjective& objective, const SearchConfig& cfg) {
    return uniobjective_search(make_evaluator(objective), cfg, objective.pool().ids(), objective.total());
}

}  // namespace ganens
