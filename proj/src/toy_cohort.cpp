#include "ganens/toy_cohort.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "ganens/errors.hpp"
#include "ganens/random.hpp"

namespace ganens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void validate_modes(const std::vector<ModeSpec>& modes) {
    if (modes.empty()) throw ParameterError("cohort needs at least one mode");
    const std::size_t dim = modes.front().center.size();
    if (dim == 0) throw ParameterError("mode centers must have at least one coordinate");
    double total = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const auto& mode = modes[m];
        if (mode.center.size() != dim) {
            throw ParameterError("mode " + std::to_string(m) + " has dimension " +
                                 std::to_string(mode.center.size()) + ", expected " + std::to_string(dim));
        }
        if (!(mode.spread >= 0.0) || !std::isfinite(mode.spread)) {
            throw ParameterError("mode " + std::to_string(m) + " has an invalid spread");
        }
        if (!(mode.weight >= 0.0) || !std::isfinite(mode.weight)) {
            throw ParameterError("mode " + std::to_string(m) + " has an invalid weight");
        }
        total += mode.weight;
    }
    if (!(total > 0.0)) throw ParameterError("mode weights sum to zero");
}

/// Draws n points from the mixture restricted to `active` modes.
EmbeddingSet draw_mixture(const std::vector<ModeSpec>& modes, const std::vector<std::size_t>& active,
                          double extra_spread, const std::vector<double>& offset, std::size_t n,
                          std::uint64_t seed, std::string source_id) {
    if (n == 0) throw ParameterError("sample count must be positive");
    const std::size_t dim = modes.front().center.size();
    if (!offset.empty() && offset.size() != dim) {
        throw ParameterError("offset of '" + source_id + "' has dimension " +
                             std::to_string(offset.size()) + ", expected " + std::to_string(dim));
    }
    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t m : active) {
        total += modes[m].weight;
        cumulative.push_back(total);
    }
    if (!(total > 0.0)) throw ParameterError("selected modes of '" + source_id + "' have zero weight");

    Rng rng(seed);
    std::vector<float> data(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        std::size_t pick = 0;
        while (pick + 1 < cumulative.size() && u >= cumulative[pick]) ++pick;
        const ModeSpec& mode = modes[active[pick]];
        const double sd = mode.spread + extra_spread;
        for (std::size_t j = 0; j < dim; ++j) {
            double v = mode.center[j] + sd * rng.normal();
            if (!offset.empty()) v += offset[j];
            data[i * dim + j] = static_cast<float>(v);
        }
    }
    return EmbeddingSet::create(n, dim, std::move(data), std::move(source_id));
}

}  // namespace

EmbeddingSet sample_real(const std::vector<ModeSpec>& modes, std::size_t n, std::uint64_t seed) {
    validate_modes(modes);
    std::vector<std::size_t> all(modes.size());
    for (std::size_t m = 0; m < modes.size(); ++m) all[m] = m;
    return draw_mixture(modes, all, 0.0, {}, n, seed, "real");
}

EmbeddingSet sample_generator(const GeneratorProfile& profile, const std::vector<ModeSpec>& modes,
                              std::uint64_t seed) {
    validate_modes(modes);
    if (profile.modes_covered.empty()) {
        throw ParameterError("profile '" + profile.id + "' covers no modes");
    }
    for (std::size_t m : profile.modes_covered) {
        if (m >= modes.size()) {
            throw ParameterError("profile '" + profile.id + "' references unknown mode " + std::to_string(m));
        }
    }
    if (!(profile.fidelity_noise >= 0.0)) {
        throw ParameterError("profile '" + profile.id + "' has negative fidelity noise");
    }
    return draw_mixture(modes, profile.modes_covered, profile.fidelity_noise, profile.offset,
                        profile.samples, seed, profile.id);
}

CohortSpec parse_cohort_spec(const std::string& json_text) {
    CohortSpec spec;
    try {
        const json doc = json::parse(json_text);
        for (const auto& m : doc.at("modes")) {
            spec.modes.push_back({m.at("center").get<std::vector<double>>(), m.value("spread", 1.0),
                                  m.value("weight", 1.0)});
        }
        spec.real_samples = doc.at("real_samples").get<std::size_t>();
        spec.seed = doc.value("seed", std::uint64_t{0});
        for (const auto& g : doc.at("generators")) {
            GeneratorProfile p;
            p.id = g.at("id").get<std::string>();
            p.modes_covered = g.at("modes").get<std::vector<std::size_t>>();
            p.fidelity_noise = g.value("noise", 0.0);
            p.offset = g.value("offset", std::vector<double>{});
            p.samples = g.at("samples").get<std::size_t>();
            p.model = g.value("model", p.id);
            p.iteration = g.value("iteration", std::uint64_t{0});
            spec.generators.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed cohort spec: ") + e.what());
    }
    validate_modes(spec.modes);
    std::set<std::string> ids;
    for (const auto& g : spec.generators) {
        if (g.id.empty() || g.id.find_first_of("/\\") != std::string::npos) {
            throw ParameterError("generator id '" + g.id + "' is not a valid file stem");
        }
        if (!ids.insert(g.id).second) throw ParameterError("duplicate generator id '" + g.id + "'");
    }
    return spec;
}

CohortSpec load_cohort_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(LoadErrorKind::Io, "cannot open cohort spec '" + path.string() + "'");
    return parse_cohort_spec(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

fs::path emit_pool(const CohortSpec& spec, const fs::path& out_dir, std::uint64_t seed) {
    if (spec.generators.empty()) throw ParameterError("cohort spec lists no generators");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw WriteError("cannot create '" + out_dir.string() + "': " + ec.message());

    PoolManifest manifest;
    manifest.real = out_dir / "real.emb";
    const auto real = sample_real(spec.modes, spec.real_samples, derive_seed(seed, "real"));
    write_embeddings(real, manifest.real);
    manifest.embedding_dim = real.dim();

    for (const auto& profile : spec.generators) {
        const auto set = sample_generator(profile, spec.modes, derive_seed(seed, profile.id));
        GeneratorRecord rec{profile.id, profile.model.empty() ? profile.id : profile.model,
                            profile.iteration, out_dir / (profile.id + ".emb"), set.rows()};
        write_embeddings(set, rec.path);
        manifest.generators.push_back(std::move(rec));
    }
    const fs::path manifest_path = out_dir / "manifest.json";
    write_manifest(manifest, manifest_path);
    return manifest_path;
}

}  // namespace ganens
