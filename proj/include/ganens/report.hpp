#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganens/ensemble_objective.hpp"
#include "ganens/pareto_optimizer.hpp"

namespace ganens {

inline constexpr const char* kToolVersion = "0.1.0";

/// Downstream utility gap between synthetic- and real-trained classifiers.
struct GapReport {
    double gmean_real = 0.0;
    double gmean_synth = 0.0;
    double gamma_rs = 0.0;  // percent, unrounded
};

/// gamma = (synth - real) / real * 100. Throws ParameterError unless real > 0.
GapReport gap_report(double gmean_real, double gmean_synth);

/// Geometric mean of per-class recalls. confusion[t][p] counts samples of
/// true class t predicted as p.
double gmean_from_confusion(const std::vector<std::vector<double>>& confusion);
std::vector<std::vector<double>> parse_confusion_csv(const std::string& text);

/// Round half away from zero to `decimals` places; never returns -0.
double round_half_away(double value, int decimals);
/// Fixed-point text with `decimals` places and an explicit sign ("+5.5",
/// "-7.6", "0.0").
std::string format_signed(double value, int decimals);
std::string format_fixed(double value, int decimals);

struct QualityRow {
    std::string label;
    double fid = 0.0;
    double density = 0.0;
    double coverage = 0.0;
};

/// FID, density and coverage of candidate against real, using the first
/// argument as the manifold reference.
QualityRow quality_row(std::string label, const EmbeddingSet& real, const EmbeddingSet& candidate,
                       std::size_t k);

/// Quality table CSV: label,fid,density,coverage.
void write_quality_csv(std::span<const QualityRow> rows, const std::filesystem::path& dest,
                       const nlohmann::json& provenance);
/// Scatter CSV for fidelity-vs-diversity plots: label,diversity,fidelity.
void write_quality_scatter_csv(std::span<const QualityRow> rows, const std::filesystem::path& dest,
                               const nlohmann::json& provenance);

nlohmann::json metric_json(const MetricConfig& metric);
nlohmann::json search_json(const SearchConfig& cfg, std::size_t pool_size);

/// Front document: {provenance, orientation, pool_ids, front: [{bits, intra,
/// inter, member_count}]} where bits lists the member ids.
nlohmann::json front_json(const ParetoFront& front, const std::vector<std::string>& ids,
                          const nlohmann::json& provenance);

/// Scatter CSV of every evaluated genome: intra,inter,on_front,member_count.
void write_front_scatter_csv(std::span<const Evaluated> archive, const ParetoFront& front,
                             const std::filesystem::path& dest, const nlohmann::json& provenance);

struct LoadedFront {
    ParetoFront front;
    std::vector<std::string> pool_ids;
    nlohmann::json provenance;
};

/// Reads a front document written by front_json.
LoadedFront parse_front_json(const nlohmann::json& doc);

nlohmann::json selection_json(const SelectionManifest& selection, const nlohmann::json& provenance);

/// Writes JSON with a trailing newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& dest);

}  // namespace ganens
