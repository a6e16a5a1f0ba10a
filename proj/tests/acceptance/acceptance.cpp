// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ganens/ensemble_objective.hpp"
#include "ganens/metric_kernel.hpp"
#include "ganens/pareto_optimizer.hpp"
#include "ganens/toy_cohort.hpp"
#include "support/oracles.hpp"

using namespace ganens;
namespace fs = std::filesystem;

namespace {

constexpr double kFidSelfTol = 1e-6;
constexpr double kFidScalarTol = 1e-9;
constexpr double kGammaTol = 0.05;
constexpr double kCoverageFloor = 0.95;
constexpr double kMetricBudgetSec = 1.0;
constexpr double kParetoBudgetSec = 10.0;
constexpr double kRecoveryBudgetSec = 60.0;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(GANENS_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fixture(const std::string& name) { return std::string(GANENS_FIXTURE_DIR) + "/" + name; }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

Outcome metric_identities() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 gen(20240601);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[trial % 3];
        const std::size_t n = k + 1 + gen() % (50 - k);
        const std::size_t m = 1 + gen() % 50;
        const std::size_t dim = 1 + gen() % 6;
        const auto ref = oracle::random_set(gen, n, dim);
        const auto cand = oracle::random_set(gen, m, dim, -1.2, 1.2);
        const auto got = density_coverage(ref, cand, k);
        const auto want = oracle::density_coverage(oracle::to_rows(ref), oracle::to_rows(cand), k);
        o.require(got.density == want.first && got.coverage == want.second,
                  "density/coverage differs from the brute-force oracle at trial " + std::to_string(trial));
        o.require(coverage(ref, ref, k) == 1.0, "coverage(X,X) != 1");
        const double fid = frechet_distance(gaussian_summary(ref), gaussian_summary(ref));
        o.require(fid <= kFidSelfTol, "frechet(a,a) = " + fmt(fid));
        const double c = std::uniform_real_distribution<double>(0.0, 2.0)(gen);
        o.require(std::abs(harmonic_d(c, c) - c) <= 1e-15 * std::max(1.0, c), "harmonic_d(c,c) != c");
        o.require(harmonic_d(0.0, c) == 0.0, "harmonic_d(0,c) != 0");
    }
    const double t = seconds_since(t0);
    o.require(t < kMetricBudgetSec, "took " + fmt(t) + " s");
    if (o.pass) o.detail = "200 oracle instances, " + fmt(t) + " s";
    return o;
}

Outcome fid_scalar() {
    Outcome o;
    auto one_d = [](double mu, double var) {
        GaussianSummary g;
        g.mean = Eigen::VectorXd::Constant(1, mu);
        g.covariance = Eigen::MatrixXd::Constant(1, 1, var);
        return g;
    };
    // Hand formula in one dimension: (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2.
    const double shift = frechet_distance(one_d(0, 1), one_d(1, 1));
    const double scale = frechet_distance(one_d(0, 4), one_d(0, 1));
    o.require(std::abs(shift - 1.0) <= kFidScalarTol, "shift case " + fmt(shift));
    o.require(std::abs(scale - 1.0) <= kFidScalarTol, "scale case " + fmt(scale));
    if (o.pass) o.detail = "shift " + fmt(shift) + ", scale " + fmt(scale);
    return o;
}

std::set<std::pair<double, double>> objective_points(const ParetoFront& f) {
    std::set<std::pair<double, double>> out;
    for (const auto& e : f.entries) out.insert({e.objectives.intra, e.objectives.inter});
    return out;
}

Outcome pareto_correctness(const fs::path& work) {
    Outcome o;
    const auto spec = load_cohort_spec(fixture("ten_generators.json"));
    const auto manifest = emit_pool(spec, work / "ten", spec.seed);
    const auto t0 = std::chrono::steady_clock::now();
    auto pool = std::make_shared<const LoadedPool>(load_pool(manifest));
    const EnsembleObjective obj(pool, {MetricConfig{}, spec.seed, 0, 0, true});

    SearchConfig ex;
    ex.algorithm = SearchAlgorithm::Exhaustive;
    const auto truth = search(obj, ex);

    SearchConfig ea;
    ea.algorithm = SearchAlgorithm::Evolutionary;
    ea.seed = 1;
    ea.budget = 2048;
    const auto evo = search(obj, ea);
    std::size_t dominated = 0;
    for (const auto& p : evo.front.entries) {
        for (const auto& q : truth.front.entries) dominated += dominates(q.objectives, p.objectives) ? 1 : 0;
    }
    o.require(dominated == 0, std::to_string(dominated) + " evolutionary front points dominated");

    ea.budget = (std::size_t{1} << pool->size()) - 1;
    const auto full = search(obj, ea);
    o.require(objective_points(full.front) == objective_points(truth.front),
              "fronts differ at full-enumeration budget");
    const double t = seconds_since(t0);
    o.require(t < kParetoBudgetSec, "took " + fmt(t) + " s");
    if (o.pass) {
        o.detail = "exhaustive front " + std::to_string(truth.front.entries.size()) + " points, evolutionary " +
                   std::to_string(evo.front.entries.size()) + ", " + fmt(t) + " s";
    }
    return o;
}

Outcome mode_recovery(const fs::path& work) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    double coverage_sum = 0.0;
    std::size_t both_ac = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto dir = work / ("recovery_" + std::to_string(seed));
        const std::string s = std::to_string(seed);
        if (run_cli("toy --spec " + fixture("mode_recovery.json") + " --seed " + s + " --out " + dir.string(),
                    dir.string() + ".log") != 0 ||
            run_cli("select --manifest " + (dir / "manifest.json").string() + " --algo exhaustive --seed " + s +
                        " --materialize --out " + (dir / "sel").string(),
                    dir.string() + ".log") != 0) {
            o.require(false, "CLI failed for seed " + s);
            return o;
        }
        const auto sel = nlohmann::json::parse(oracle::read_file(dir / "sel" / "selection.json"));
        const auto chosen = sel["chosen"].get<std::vector<std::string>>();
        const auto has = [&](const std::string& id) {
            return std::find(chosen.begin(), chosen.end(), id) != chosen.end();
        };
        const auto real = read_embeddings(dir / "real.emb");
        const auto uni = read_embeddings(dir / "sel" / "union.emb");
        coverage_sum += coverage(real, uni, 5);
        o.require(!has("E"), "seed " + s + " selected E");
        if (has("A") && has("C")) {
            // Only acceptable when dropping either duplicate strictly lowers intra.
            ++both_ac;
            auto pool = std::make_shared<const LoadedPool>(load_pool(dir / "manifest.json"));
            const EnsembleObjective obj(pool, {MetricConfig{}, seed, 0, 0, true});
            const double full = obj.intra_d(obj.genome_from_ids(chosen));
            for (const std::string drop : {"A", "C"}) {
                std::vector<std::string> smaller;
                for (const auto& id : chosen) {
                    if (id != drop) smaller.push_back(id);
                }
                o.require(obj.intra_d(obj.genome_from_ids(smaller)) < full,
                          "seed " + s + " keeps A and C although a smaller ensemble ties");
            }
        }
    }
    const double mean_cov = coverage_sum / 10.0;
    o.require(mean_cov >= kCoverageFloor, "mean coverage " + fmt(mean_cov));
    const double t = seconds_since(t0);
    o.require(t < kRecoveryBudgetSec, "took " + fmt(t) + " s");
    if (o.pass) {
        o.detail = "mean coverage " + fmt(mean_cov) + ", A+C together in " + std::to_string(both_ac) +
                   "/10 seeds, " + fmt(t) + " s";
    }
    return o;
}

Outcome ablation(const fs::path& work) {
    Outcome o;
    const auto spec = load_cohort_spec(fixture("mode_recovery.json"));
    auto pool = std::make_shared<const LoadedPool>(load_pool(emit_pool(spec, work / "ablation", spec.seed)));
    SearchConfig ex;
    ex.algorithm = SearchAlgorithm::Exhaustive;
    std::string summary;
    for (auto kind : {MetricKind::DensityCoverage, MetricKind::Frechet}) {
        const EnsembleObjective obj(pool, {MetricConfig{kind, 5, false}, spec.seed, 0, 0, true});
        const auto multi = select_best(search(obj, ex).front, pool->ids(), obj.total());
        const auto uni = uniobjective_search(obj, ex).selection;
        const std::string name = to_string(kind);
        o.require(multi.objectives.member_count <= uni.objectives.member_count,
                  name + ": multi uses " + std::to_string(multi.objectives.member_count) + " members, uni " +
                      std::to_string(uni.objectives.member_count));
        o.require(multi.objectives.effective_intra() >= uni.objectives.effective_intra(),
                  name + ": multi intra worse than uni");
        summary += name + " " + std::to_string(multi.objectives.member_count) + "<=" +
                   std::to_string(uni.objectives.member_count) + " ";
    }
    if (o.pass) o.detail = summary;
    return o;
}

Outcome gap_reproduction(const fs::path& work) {
    Outcome o;
    struct Row {
        const char* label;
        std::array<double, 3> synth;
        std::array<double, 3> printed;
    };
    const std::array<double, 3> real{0.822, 0.817, 0.607};
    const std::vector<Row> rows{
        {"top1", {0.854, 0.707, 0.588}, {3.9, -13.5, -3.1}},
        {"top5", {0.842, 0.697, 0.555}, {2.4, -14.7, -8.6}},
        {"avg", {0.652, 0.407, 0.339}, {-20.7, -50.2, -44.2}},
        {"naive_random", {0.822, 0.664, 0.533}, {0.0, -18.7, -12.2}},
        {"naive_all", {0.823, 0.714, 0.487}, {0.1, -12.6, -19.8}},
        {"pareto", {0.867, 0.755, 0.573}, {5.5, -7.6, -5.6}},
        {"oracle", {0.881, 0.755, 0.573}, {7.2, -7.6, -5.6}},
    };
    std::size_t checked = 0;
    double worst = 0.0;
    for (const auto& row : rows) {
        for (std::size_t d = 0; d < 3; ++d) {
            const auto out = work / "gap.json";
            std::ostringstream args;
            args.precision(17);
            args << "gap --real " << real[d] << " --synth " << row.synth[d] << " --out " << out.string();
            if (run_cli(args.str(), work / "gap.log") != 0) {
                o.require(false, std::string("gap failed for ") + row.label);
                continue;
            }
            const auto doc = nlohmann::json::parse(oracle::read_file(out));
            const double err = std::abs(doc["gamma_rs"].get<double>() - row.printed[d]);
            worst = std::max(worst, err);
            o.require(err <= kGammaTol, std::string(row.label) + " column " + std::to_string(d) + " off by " + fmt(err));
            ++checked;
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " pairs, worst deviation " + fmt(worst);
    return o;
}

Outcome quota_arithmetic() {
    Outcome o;
    std::vector<std::size_t> idx(38);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto big = quota_plan(EnsembleGenome::from_indices(38, idx, ""), 4708);
    std::size_t sum = 0;
    for (const auto& q : big) sum += q.count;
    o.require(big.size() == 38 && sum == 4708, "4708/38 sums to " + std::to_string(sum));
    const std::vector<std::size_t> three{0, 1, 2};
    const auto small = quota_plan(EnsembleGenome::from_indices(3, three, ""), 100);
    o.require(small.size() == 3 && small[0].count == 34 && small[1].count == 33 && small[2].count == 33,
              "100/3 is not (34,33,33)");
    if (o.pass) o.detail = "4708 over 38 and (34,33,33)";
    return o;
}

Outcome determinism(const fs::path& work) {
    Outcome o;
    const auto pool = work / "det_pool";
    o.require(run_cli("toy --spec " + fixture("ten_generators.json") + " --out " + pool.string(),
                      work / "det.log") == 0,
              "toy failed");
    const std::string args = "optimize --manifest " + (pool / "manifest.json").string() +
                             " --algo nsga2 --budget 400 --seed 99 --out ";
    o.require(run_cli(args + (work / "det_a").string(), work / "det.log") == 0, "first optimize failed");
    ::setenv("GANENS_THREADS", "3", 1);
    o.require(run_cli(args + (work / "det_b").string(), work / "det.log") == 0, "second optimize failed");
    ::unsetenv("GANENS_THREADS");
    const auto a = oracle::read_file(work / "det_a" / "front.json");
    const auto b = oracle::read_file(work / "det_b" / "front.json");
    o.require(!a.empty() && a == b, "front.json differs between runs");
    if (o.pass) o.detail = "front.json identical (" + std::to_string(a.size()) + " bytes), thread counts 1 vs 3";
    return o;
}

}  // namespace

int main() {
    const auto work = oracle::scratch_dir("acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 metric identities", metric_identities},
        {"AC2 FID scalar cases", fid_scalar},
        {"AC3 Pareto correctness", [&] { return pareto_correctness(work); }},
        {"AC4 mode recovery", [&] { return mode_recovery(work); }},
        {"AC5 ablation member count", [&] { return ablation(work); }},
        {"AC6 gamma_RS reproduction", [&] { return gap_reproduction(work); }},
        {"AC7 quota arithmetic", quota_arithmetic},
        {"AC8 determinism", [&] { return determinism(work); }},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << " : " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
