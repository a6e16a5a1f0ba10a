// ganens: select a generator ensemble by Pareto optimization over fidelity
// (Intra-d) and overlap (Inter-d) of precomputed embeddings.
//
// Exit codes: 0 success, 1 usage, 2 data/validation, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganens/embedding_store.hpp"
#include "ganens/ensemble_objective.hpp"
#include "ganens/errors.hpp"
#include "ganens/pareto_optimizer.hpp"
#include "ganens/report.hpp"
#include "ganens/toy_cohort.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ganens;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct MetricFlags {
    std::string metric = "dnc";
    std::size_t k = 5;
    bool standardize = false;
    std::uint64_t seed = 0;
    std::size_t sample = 0;
    std::size_t total = 0;

    void add(CLI::App& app) {
        app.add_option("--metric", metric, "Distribution metric d")->check(CLI::IsMember({"dnc", "fid"}));
        app.add_option("--k", k, "Neighbour count for density/coverage")->check(CLI::PositiveNumber);
        app.add_flag("--standardize", standardize, "Standardize dimensions by the real set's statistics");
        app.add_option("--seed", seed, "Seed for every sampling stream");
        app.add_option("--sample", sample, "Rows per generator for pairwise entries (default: min N_i capped at |R|)");
        app.add_option("--total", total, "Union budget and quota total (default: |R|)");
    }

    MetricConfig config() const { return {parse_metric_kind(metric), k, standardize}; }
    ObjectiveSettings settings() const { return {config(), seed, total, sample, true}; }
};

struct SearchFlags {
    std::string algo = "nsga2";
    std::size_t budget = 1000;
    std::size_t population = 50;
    double crossover = 0.9;
    std::optional<double> mutation;
    std::string objective = "multi";

    void add(CLI::App& app) {
        app.add_option("--algo", algo, "Search algorithm")->check(CLI::IsMember({"exhaustive", "random", "nsga2"}));
        app.add_option("--budget", budget, "Distinct genomes to evaluate");
        app.add_option("--population", population, "Evolutionary population size");
        app.add_option("--crossover", crossover, "Uniform crossover rate");
        app.add_option("--mutation", mutation, "Per-bit mutation rate (default 1/|G|)");
        app.add_option("--objective", objective, "multi: Pareto front + max Intra-d; uni: max Intra-d only")
            ->check(CLI::IsMember({"multi", "uni"}));
    }

    SearchConfig config(std::uint64_t seed) const {
        SearchConfig cfg;
        cfg.algorithm = parse_search_algorithm(algo);
        cfg.budget = budget;
        cfg.population = population;
        cfg.crossover_rate = crossover;
        cfg.mutation_rate = mutation;
        cfg.seed = seed;
        return cfg;
    }
};

json base_provenance(const std::string& command) {
    return {{"tool", "ganens"}, {"version", kToolVersion}, {"command", command}};
}

json objective_provenance(const EnsembleObjective& objective, const std::string& manifest) {
    const auto& s = objective.settings();
    json p;
    p["manifest"] = manifest;
    p["pool_fingerprint"] = objective.pool().fingerprint();
    p["pool_size"] = objective.pool_size();
    p["metric"] = metric_json(s.metric);
    p["seed"] = s.seed;
    p["total"] = objective.total();
    p["real_rows"] = objective.pool().real.rows();
    p["pairwise_sample"] = objective.matrix().sample_sizes().empty()
                               ? 0
                               : *std::min_element(objective.matrix().sample_sizes().begin(),
                                                   objective.matrix().sample_sizes().end());
    return p;
}

void report_shortfalls(const EnsembleObjective& objective, json& provenance) {
    const auto ids = objective.shortfall_ids();
    if (ids.empty()) return;
    provenance["shortfalls"] = ids;
    for (const auto& id : ids) {
        std::cerr << "warning: generator '" << id << "' holds fewer rows than its quota\n";
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw WriteError("cannot create '" + dir.string() + "': " + ec.message());
}

std::shared_ptr<const LoadedPool> load_shared(const std::string& manifest) {
    return std::make_shared<const LoadedPool>(load_pool(manifest));
}

struct OptimizeOutcome {
    SearchResult result;
    SelectionManifest selection;
    json provenance;
};

OptimizeOutcome run_optimize(const EnsembleObjective& objective, const SearchFlags& sf,
                             std::uint64_t seed, const std::string& manifest, const std::string& command) {
    const SearchConfig cfg = sf.config(seed);
    OptimizeOutcome out;
    out.provenance = base_provenance(command);
    out.provenance.update(objective_provenance(objective, manifest));
    out.provenance["search"] = search_json(cfg, objective.pool_size());
    out.provenance["objective"] = sf.objective;
    if (sf.objective == "uni") {
        auto uni = uniobjective_search(objective, cfg);
        out.result = std::move(uni.search);
        out.selection = std::move(uni.selection);
    } else {
        out.result = search(objective, cfg);
        out.selection = select_best(out.result.front, objective.pool().ids(), objective.total());
    }
    out.provenance["evaluations"] = out.result.archive.size();
    report_shortfalls(objective, out.provenance);
    return out;
}

int cmd_toy(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
    const CohortSpec spec = load_cohort_spec(spec_path);
    const fs::path manifest = emit_pool(spec, out, seed.value_or(spec.seed));
    std::cout << manifest.string() << '\n';
    return kOk;
}

int cmd_pairwise(const std::string& manifest, const MetricFlags& mf, const std::string& out) {
    auto pool = load_shared(manifest);
    const auto cfg = mf.config();
    const std::size_t sample = mf.sample ? mf.sample : default_pairwise_sample(*pool);
    const auto matrix = pairwise_matrix(*pool, cfg, sample, mf.seed);
    ensure_dir(out);
    json provenance = base_provenance("pairwise");
    provenance["manifest"] = manifest;
    provenance["pool_fingerprint"] = pool->fingerprint();
    provenance["sample_per_generator"] = sample;
    write_pairwise_csv(matrix, fs::path(out) / "pairwise.csv");
    write_pairwise_sidecar(matrix, fs::path(out) / "pairwise.json", provenance.dump());
    std::cout << "pairwise matrix " << matrix.size() << "x" << matrix.size() << " ("
              << matrix.computed_pairs() << " pairs) -> " << (fs::path(out) / "pairwise.csv").string() << '\n';
    return kOk;
}

int cmd_optimize(const std::string& manifest, const MetricFlags& mf, const SearchFlags& sf,
                 const std::string& out) {
    auto pool = load_shared(manifest);
    const EnsembleObjective objective(pool, mf.settings());
    const auto outcome = run_optimize(objective, sf, mf.seed, manifest, "optimize");
    ensure_dir(out);
    write_json(front_json(outcome.result.front, pool->ids(), outcome.provenance), fs::path(out) / "front.json");
    write_front_scatter_csv(outcome.result.archive, outcome.result.front, fs::path(out) / "scatter.csv",
                            outcome.provenance);
    std::cout << "evaluated " << outcome.result.archive.size() << " ensembles; front holds "
              << outcome.result.front.entries.size() << '\n';
    return kOk;
}

void print_selection(const SelectionManifest& s) {
    std::cout << "G* (" << s.chosen.size() << " generators):";
    for (const auto& id : s.chosen) std::cout << ' ' << id;
    std::cout << "\nIntra-d " << format_fixed(s.objectives.intra, 3) << "  Inter-d "
              << format_fixed(s.objectives.inter, 3) << "  front size " << s.front_size << '\n';
}

int cmd_select(const std::string& front_path, const std::string& manifest, const MetricFlags& mf,
               const SearchFlags& sf, bool materialize, const std::string& out) {
    SelectionManifest selection;
    json provenance;
    std::shared_ptr<const LoadedPool> pool;
    if (!front_path.empty()) {
        std::ifstream in(front_path);
        if (!in) throw LoadError(LoadErrorKind::Io, "cannot open front file '" + front_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw LoadError(LoadErrorKind::Manifest, std::string("front file is not valid JSON: ") + e.what());
        }
        const auto loaded = parse_front_json(doc);
        std::size_t total = mf.total ? mf.total : loaded.provenance.value("total", std::size_t{0});
        if (total == 0) throw ParameterError("--total is required when the front file does not record one");
        selection = select_best(loaded.front, loaded.pool_ids, total);
        provenance = base_provenance("select");
        provenance["front_file"] = front_path;
        provenance["source"] = loaded.provenance;
        provenance["total"] = total;
        if (!manifest.empty()) {
            pool = load_shared(manifest);
            if (pool->ids() != loaded.pool_ids) {
                throw ParameterError("front file and manifest describe different pools");
            }
        }
    } else {
        pool = load_shared(manifest);
        const EnsembleObjective objective(pool, mf.settings());
        auto outcome = run_optimize(objective, sf, mf.seed, manifest, "select");
        selection = std::move(outcome.selection);
        provenance = std::move(outcome.provenance);
    }

    ensure_dir(out);
    if (materialize) {
        if (!pool) throw ParameterError("--materialize needs --manifest to locate generator embeddings");
        if (selection.genome.size() != pool->size()) {
            throw ParameterError("front file and manifest describe different pools");
        }
        const EnsembleGenome genome(selection.genome.bits(), pool->fingerprint());
        const auto u = build_union(genome, *pool, selection.total, mf.seed);
        for (const auto& s : u.shortfalls) {
            std::cerr << "warning: generator '" << s.generator_id << "' supplied " << s.available << " of "
                      << s.requested << " rows\n";
        }
        write_embeddings(u.set, fs::path(out) / "union.emb");
        provenance["union_file"] = "union.emb";
        provenance["union_rows"] = u.set.rows();
    }
    write_json(selection_json(selection, provenance), fs::path(out) / "selection.json");
    print_selection(selection);
    return kOk;
}

int cmd_quality(const std::string& manifest, const std::string& selection_path, const MetricFlags& mf,
                bool all_baseline, const std::string& out) {
    auto pool = load_shared(manifest);
    const std::size_t total = mf.total ? mf.total : pool->real.rows();
    std::vector<QualityRow> rows;
    const auto& real = pool->real;

    for (const auto& g : pool->generators) {
        const auto idx = sample_rows(g.set.rows(), real.rows(), mf.seed, "quality:" + g.record.id);
        rows.push_back(quality_row(g.record.id, real, g.set.select_rows(idx, g.record.id), mf.k));
    }
    auto union_row = [&](const std::string& label, const EnsembleGenome& genome) {
        const auto u = build_union(genome, *pool, total, mf.seed);
        for (const auto& s : u.shortfalls) {
            std::cerr << "warning: generator '" << s.generator_id << "' supplied " << s.available << " of "
                      << s.requested << " rows for " << label << '\n';
        }
        rows.push_back(quality_row(label, real, u.set, mf.k));
    };
    if (all_baseline) {
        union_row("naive_all", EnsembleGenome(std::vector<std::uint8_t>(pool->size(), 1), pool->fingerprint()));
    }
    if (!selection_path.empty()) {
        std::ifstream in(selection_path);
        if (!in) throw LoadError(LoadErrorKind::Io, "cannot open selection '" + selection_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw LoadError(LoadErrorKind::Manifest, std::string("selection is not valid JSON: ") + e.what());
        }
        const auto ids = pool->ids();
        std::vector<std::uint8_t> bits(pool->size(), 0);
        for (const auto& id : doc.at("chosen")) {
            auto it = std::find(ids.begin(), ids.end(), id.get<std::string>());
            if (it == ids.end()) throw LoadError(LoadErrorKind::Manifest, "selection names unknown generator " + id.dump());
            bits[static_cast<std::size_t>(it - ids.begin())] = 1;
        }
        union_row("G*", EnsembleGenome(std::move(bits), pool->fingerprint()));
    }

    json provenance = base_provenance("quality");
    provenance["manifest"] = manifest;
    provenance["pool_fingerprint"] = pool->fingerprint();
    provenance["k"] = mf.k;
    provenance["seed"] = mf.seed;
    provenance["total"] = total;
    if (!selection_path.empty()) provenance["selection"] = selection_path;
    ensure_dir(out);
    write_quality_csv(rows, fs::path(out) / "quality.csv", provenance);
    write_quality_scatter_csv(rows, fs::path(out) / "quality_scatter.csv", provenance);

    std::cout << "label,fid,density,coverage\n";
    for (const auto& r : rows) {
        std::cout << r.label << ',' << format_fixed(r.fid, 3) << ',' << format_fixed(r.density, 3) << ','
                  << format_fixed(r.coverage, 3) << '\n';
    }
    return kOk;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(LoadErrorKind::Io, "cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cmd_gap(std::optional<double> real, std::optional<double> synth, const std::string& real_confusion,
            const std::string& synth_confusion, const std::string& out) {
    if (!real_confusion.empty()) real = gmean_from_confusion(parse_confusion_csv(slurp(real_confusion)));
    if (!synth_confusion.empty()) synth = gmean_from_confusion(parse_confusion_csv(slurp(synth_confusion)));
    if (!real || !synth) throw CLI::ValidationError("gap needs a real and a synthetic g-mean");
    const auto report = gap_report(*real, *synth);
    std::cout << "g-mean real " << format_fixed(report.gmean_real, 3) << "  synthetic "
              << format_fixed(report.gmean_synth, 3) << "  gamma_RS " << format_signed(report.gamma_rs, 1)
              << "%\n";
    if (!out.empty()) {
        json doc = {{"gmean_real", report.gmean_real},
                    {"gmean_synth", report.gmean_synth},
                    {"gamma_rs", report.gamma_rs},
                    {"gamma_rs_display", format_signed(report.gamma_rs, 1)},
                    {"provenance", base_provenance("gap")}};
        write_json(doc, out);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pareto ensemble selection for generative models over embedding files"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    auto* toy = app.add_subcommand("toy", "Emit a synthetic cohort pool from a profile spec");
    std::string spec_path, out;
    std::optional<std::uint64_t> toy_seed;
    toy->add_option("--spec", spec_path, "Profile spec JSON")->required()->check(CLI::ExistingFile);
    toy->add_option("--out", out, "Output directory")->required();
    toy->add_option("--seed", toy_seed, "Override the spec's seed");

    std::string manifest;
    MetricFlags mf;
    SearchFlags sf;

    auto* pairwise = app.add_subcommand("pairwise", "Compute the symmetrized pairwise metric matrix");
    pairwise->add_option("--manifest", manifest, "Pool manifest JSON")->required()->check(CLI::ExistingFile);
    mf.add(*pairwise);
    pairwise->add_option("--out", out, "Output directory")->required();

    auto* optimize = app.add_subcommand("optimize", "Search ensembles and export the Pareto front");
    optimize->add_option("--manifest", manifest, "Pool manifest JSON")->required()->check(CLI::ExistingFile);
    mf.add(*optimize);
    sf.add(*optimize);
    optimize->add_option("--out", out, "Output directory")->required();

    auto* select = app.add_subcommand("select", "Choose G* and its sampling quotas");
    std::string front_path;
    bool materialize = false;
    auto* front_opt = select->add_option("--front", front_path, "Front JSON from optimize")->check(CLI::ExistingFile);
    auto* manifest_opt = select->add_option("--manifest", manifest, "Pool manifest JSON")->check(CLI::ExistingFile);
    mf.add(*select);
    sf.add(*select);
    select->add_flag("--materialize", materialize, "Also write the S* union embedding file");
    select->add_option("--out", out, "Output directory")->required();
    select->callback([&] {
        if (front_opt->count() == 0 && manifest_opt->count() == 0) {
            throw CLI::ValidationError("select needs --front or --manifest");
        }
    });

    auto* quality = app.add_subcommand("quality", "FID/density/coverage report per generator and union");
    std::string selection_path;
    bool all_baseline = false;
    quality->add_option("--manifest", manifest, "Pool manifest JSON")->required()->check(CLI::ExistingFile);
    quality->add_option("--selection", selection_path, "Selection JSON from select")->check(CLI::ExistingFile);
    quality->add_flag("--baseline-all", all_baseline, "Add a row for the union of every generator");
    mf.add(*quality);
    quality->add_option("--out", out, "Output directory")->required();

    auto* gap = app.add_subcommand("gap", "Real-synthetic downstream gap (percent)");
    std::optional<double> gm_real, gm_synth;
    std::string real_confusion, synth_confusion;
    gap->add_option("--real", gm_real, "g-mean of the real-trained classifier");
    gap->add_option("--synth", gm_synth, "g-mean of the synthetic-trained classifier");
    gap->add_option("--real-confusion", real_confusion, "Confusion matrix CSV of the real-trained classifier")
        ->check(CLI::ExistingFile);
    gap->add_option("--synth-confusion", synth_confusion, "Confusion matrix CSV of the synthetic-trained classifier")
        ->check(CLI::ExistingFile);
    gap->add_option("--out", out, "Optional JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*toy) return cmd_toy(spec_path, out, toy_seed);
        if (*pairwise) return cmd_pairwise(manifest, mf, out);
        if (*optimize) return cmd_optimize(manifest, mf, sf, out);
        if (*select) return cmd_select(front_path, manifest, mf, sf, materialize, out);
        if (*quality) return cmd_quality(manifest, selection_path, mf, all_baseline, out);
        if (*gap) return cmd_gap(gm_real, gm_synth, real_confusion, synth_confusion, out);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
