#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ganens/embedding_store.hpp"

namespace ganens {

/// One Gaussian component of the synthetic "real" distribution.
struct ModeSpec {
    std::vector<double> center;
    double spread = 1.0;
    double weight = 1.0;
};

/// An imperfect generator: samples only some modes, with extra noise and a
/// drift vector.
struct GeneratorProfile {
    std::string id;
    std::vector<std::size_t> modes_covered;
    double fidelity_noise = 0.0;
    std::vector<double> offset;  // empty means no drift
    std::size_t samples = 0;
    std::string model;           // defaults to id
    std::uint64_t iteration = 0;
};

struct CohortSpec {
    std::vector<ModeSpec> modes;
    std::size_t real_samples = 0;
    std::vector<GeneratorProfile> generators;
    std::uint64_t seed = 0;
};

/// Parses the profile spec JSON:
/// {modes: [{center, spread, weight}], real_samples, generators: [{id, modes,
/// noise, offset, samples, model?, iteration?}], seed}.
CohortSpec parse_cohort_spec(const std::string& json_text);
CohortSpec load_cohort_spec(const std::filesystem::path& path);

EmbeddingSet sample_real(const std::vector<ModeSpec>& modes, std::size_t n, std::uint64_t seed);
EmbeddingSet sample_generator(const GeneratorProfile& profile, const std::vector<ModeSpec>& modes,
                              std::uint64_t seed);

/// Writes real.emb, one <id>.emb per profile and manifest.json into out_dir;
/// returns the manifest path. Streams derive from (seed, "real") and
/// (seed, profile id).
std::filesystem::path emit_pool(const CohortSpec& spec, const std::filesystem::path& out_dir,
                                std::uint64_t seed);

}  // namespace ganens
