#include "ganens/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ganens/errors.hpp"

namespace ganens {

namespace fs = std::filesystem;
using nlohmann::json;

GapReport gap_report(double gmean_real, double gmean_synth) {
    if (!(gmean_real > 0.0) || !std::isfinite(gmean_real)) {
        throw ParameterError("real g-mean must be positive");
    }
    if (!std::isfinite(gmean_synth)) throw ParameterError("synthetic g-mean must be finite");
    return {gmean_real, gmean_synth, (gmean_synth - gmean_real) / gmean_real * 100.0};
}

double gmean_from_confusion(const std::vector<std::vector<double>>& confusion) {
    const std::size_t classes = confusion.size();
    if (classes == 0) throw ParameterError("empty confusion matrix");
    double log_sum = 0.0;
    for (std::size_t t = 0; t < classes; ++t) {
        if (confusion[t].size() != classes) throw ParameterError("confusion matrix must be square");
        double row = 0.0;
        for (double c : confusion[t]) {
            if (!(c >= 0.0)) throw ParameterError("confusion counts must be nonnegative");
            row += c;
        }
        if (row == 0.0) throw ParameterError("class " + std::to_string(t) + " has no samples");
        const double recall = confusion[t][t] / row;
        if (recall == 0.0) return 0.0;
        log_sum += std::log(recall);
    }
    return std::exp(log_sum / static_cast<double>(classes));
}

std::vector<std::vector<double>> parse_confusion_csv(const std::string& text) {
    std::vector<std::vector<double>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            double v = 0.0;
            const auto first = cell.find_first_not_of(" \t");
            const auto last = cell.find_last_not_of(" \t\r");
            if (first == std::string::npos) throw ParameterError("empty cell in confusion matrix");
            auto [ptr, ec] = std::from_chars(cell.data() + first, cell.data() + last + 1, v);
            if (ec != std::errc() || ptr != cell.data() + last + 1) {
                throw ParameterError("confusion matrix cell '" + cell + "' is not a number");
            }
            row.push_back(v);
        }
        out.push_back(std::move(row));
    }
    return out;
}

double round_half_away(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    const double r = std::round(value * scale) / scale;
    return r == 0.0 ? 0.0 : r;
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_away(value, decimals));
    return buf;
}

std::string format_signed(double value, int decimals) {
    const double r = round_half_away(value, decimals);
    return (r > 0.0 ? "+" : "") + format_fixed(r, decimals);
}

QualityRow quality_row(std::string label, const EmbeddingSet& real, const EmbeddingSet& candidate,
                       std::size_t k) {
    QualityRow row;
    row.label = std::move(label);
    row.fid = frechet_distance(gaussian_summary(real), gaussian_summary(candidate));
    const auto dc = density_coverage(real, candidate, k);
    row.density = dc.density;
    row.coverage = dc.coverage;
    return row;
}

namespace {

std::ofstream open_out(const fs::path& dest) {
    std::ofstream out(dest, std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

void finish(std::ofstream& out, const fs::path& dest) {
    out.close();
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

void write_provenance_comment(std::ostream& out, const json& provenance) {
    out << "# provenance: " << provenance.dump() << '\n';
}

}  // namespace

void write_quality_csv(std::span<const QualityRow> rows, const fs::path& dest, const json& provenance) {
    auto out = open_out(dest);
    write_provenance_comment(out, provenance);
    out << "label,fid,density,coverage\n";
    for (const auto& r : rows) out << r.label << ',' << r.fid << ',' << r.density << ',' << r.coverage << '\n';
    finish(out, dest);
}

void write_quality_scatter_csv(std::span<const QualityRow> rows, const fs::path& dest,
                               const json& provenance) {
    auto out = open_out(dest);
    write_provenance_comment(out, provenance);
    out << "label,diversity,fidelity\n";
    for (const auto& r : rows) out << r.label << ',' << r.coverage << ',' << r.density << '\n';
    finish(out, dest);
}

json metric_json(const MetricConfig& metric) {
    return {{"kind", to_string(metric.kind)},
            {"k", metric.k},
            {"orientation", to_string(metric.orientation())},
            {"standardize", metric.standardize}};
}

json search_json(const SearchConfig& cfg, std::size_t pool_size) {
    const double mutation =
        cfg.mutation_rate.value_or(pool_size ? 1.0 / static_cast<double>(pool_size) : 0.0);
    return {{"algorithm", to_string(cfg.algorithm)},
            {"budget", cfg.budget},
            {"population", cfg.population},
            {"crossover_rate", cfg.crossover_rate},
            {"mutation_rate", mutation},
            {"seed", cfg.seed}};
}

json front_json(const ParetoFront& front, const std::vector<std::string>& ids, const json& provenance) {
    json doc;
    doc["provenance"] = provenance;
    doc["orientation"] = to_string(front.orientation);
    doc["pool_ids"] = ids;
    json entries = json::array();
    for (const auto& e : front.entries) {
        json members = json::array();
        for (std::size_t i : e.genome.selected()) members.push_back(ids.at(i));
        entries.push_back({{"bits", members},
                           {"intra", e.objectives.intra},
                           {"inter", e.objectives.inter},
                           {"member_count", e.objectives.member_count}});
    }
    doc["front"] = std::move(entries);
    return doc;
}

void write_front_scatter_csv(std::span<const Evaluated> archive, const ParetoFront& front,
                             const fs::path& dest, const json& provenance) {
    std::unordered_set<std::string> on_front;
    for (const auto& e : front.entries) on_front.insert(e.genome.key());
    auto out = open_out(dest);
    write_provenance_comment(out, provenance);
    out << "intra,inter,on_front,member_count\n";
    for (const auto& e : archive) {
        out << e.objectives.intra << ',' << e.objectives.inter << ','
            << (on_front.count(e.genome.key()) ? 1 : 0) << ',' << e.objectives.member_count << '\n';
    }
    finish(out, dest);
}

LoadedFront parse_front_json(const json& doc) {
    LoadedFront out;
    try {
        out.pool_ids = doc.at("pool_ids").get<std::vector<std::string>>();
        out.provenance = doc.value("provenance", json::object());
        MetricConfig metric;
        if (out.provenance.contains("metric")) {
            const auto& m = out.provenance["metric"];
            metric.kind = parse_metric_kind(m.at("kind").get<std::string>());
            metric.k = m.value("k", metric.k);
            metric.standardize = m.value("standardize", false);
        } else if (doc.value("orientation", std::string()) == to_string(Orientation::LowerIsBetter)) {
            metric.kind = MetricKind::Frechet;
        }
        out.front.orientation = metric.orientation();
        const std::string pool_ref = doc.value("pool_ref", std::string());
        for (const auto& e : doc.at("front")) {
            std::vector<std::uint8_t> bits(out.pool_ids.size(), 0);
            for (const auto& id : e.at("bits")) {
                auto it = std::find(out.pool_ids.begin(), out.pool_ids.end(), id.get<std::string>());
                if (it == out.pool_ids.end()) {
                    throw LoadError(LoadErrorKind::Manifest, "front references unknown generator id " + id.dump());
                }
                bits[static_cast<std::size_t>(it - out.pool_ids.begin())] = 1;
            }
            ObjectiveVector v;
            v.intra = e.at("intra").get<double>();
            v.inter = e.at("inter").get<double>();
            v.member_count = e.at("member_count").get<std::size_t>();
            v.metric = metric;
            out.front.entries.push_back({EnsembleGenome(std::move(bits), pool_ref), v});
        }
    } catch (const json::exception& e) {
        throw LoadError(LoadErrorKind::Manifest, std::string("malformed front document: ") + e.what());
    }
    return out;
}

json selection_json(const SelectionManifest& selection, const json& provenance) {
    json quotas = json::array();
    for (const auto& [id, count] : selection.quotas) quotas.push_back({{"id", id}, {"quota", count}});
    return {{"chosen", selection.chosen},
            {"quotas", quotas},
            {"total", selection.total},
            {"intra", selection.objectives.intra},
            {"inter", selection.objectives.inter},
            {"member_count", selection.objectives.member_count},
            {"front_size", selection.front_size},
            {"provenance", provenance}};
}

void write_json(const json& doc, const fs::path& dest) {
    std::ofstream out(dest, std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

}  // namespace ganens
