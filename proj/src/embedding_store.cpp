#include "ganens/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <tuple>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ganens/errors.hpp"
#include "ganens/parallel.hpp"
#include "ganens/random.hpp"

namespace ganens {

namespace fs = std::filesystem;
using nlohmann::json;

EmbeddingSet EmbeddingSet::create(std::size_t rows, std::size_t dim, std::vector<float> data,
                                  std::string source_id) {
    if (rows == 0 || dim == 0) {
        throw ParameterError("embedding set '" + source_id + "' must have at least one row and one "
                             "column (got " + std::to_string(rows) + "x" + std::to_string(dim) + ")");
    }
    if (data.size() != rows * dim) {
        throw ParameterError("embedding set '" + source_id + "': payload holds " +
                             std::to_string(data.size()) + " values, expected " +
                             std::to_string(rows * dim));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw ParameterError("embedding set '" + source_id + "': non-finite value at row " +
                                 std::to_string(i / dim) + ", column " + std::to_string(i % dim));
        }
    }
    return EmbeddingSet(rows, dim, std::make_shared<const std::vector<float>>(std::move(data)),
                        std::move(source_id));
}

EmbeddingSet EmbeddingSet::select_rows(std::span<const std::size_t> indices,
                                       std::string source_id) const {
    std::vector<float> out;
    out.reserve(indices.size() * dim_);
    for (std::size_t idx : indices) {
        if (idx >= rows_) throw ParameterError("row index out of range in select_rows");
        auto r = row(idx);
        out.insert(out.end(), r.begin(), r.end());
    }
    return create(indices.size(), dim_, std::move(out), std::move(source_id));
}

EmbeddingSet EmbeddingSet::with_source_id(std::string source_id) const {
    return EmbeddingSet(rows_, dim_, data_, std::move(source_id));
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.rows_ != b.rows_ || a.dim_ != b.dim_) return false;
    // Bitwise comparison: the format promises bit-exact round trips.
    return std::memcmp(a.data_->data(), b.data_->data(), a.data_->size() * sizeof(float)) == 0;
}

EmbeddingSet concatenate(std::span<const EmbeddingSet> parts, std::string source_id) {
    if (parts.empty()) throw ParameterError("cannot concatenate zero embedding sets");
    const std::size_t dim = parts.front().dim();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.dim() != dim) {
            throw ParameterError("dimension mismatch while concatenating '" +
                                 parts.front().source_id() + "' and '" + p.source_id() + "'");
        }
        rows += p.rows();
    }
    std::vector<float> out;
    out.reserve(rows * dim);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    return EmbeddingSet::create(rows, dim, std::move(out), std::move(source_id));
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

bool is_text_path(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" || ext == ".txt";
}

std::string slurp(const fs::path& src) {
    std::ifstream in(src, std::ios::binary);
    if (!in) throw LoadError(LoadErrorKind::Io, "cannot open '" + src.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw LoadError(LoadErrorKind::Io, "read failure on '" + src.string() + "'");
    return bytes;
}

EmbeddingSet parse_binary(const std::string& bytes, const std::string& name) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
        throw LoadError(LoadErrorKind::BadMagic, name + ": bad magic at offset 0 (expected \"EMB1\")");
    }
    if (bytes.size() < kEmbeddingHeaderBytes) {
        throw LoadError(LoadErrorKind::Truncated, name + ": header truncated at offset " +
                                                      std::to_string(bytes.size()));
    }
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t rows = get_u32(raw + 4);
    const std::uint64_t dim = get_u32(raw + 8);
    if (rows == 0 || dim == 0) {
        throw LoadError(LoadErrorKind::EmptyShape, name + ": header at offset 4 declares " +
                                                       std::to_string(rows) + "x" +
                                                       std::to_string(dim) + " (both must be >= 1)");
    }
    const std::uint64_t expected = kEmbeddingHeaderBytes + rows * dim * 4;
    if (bytes.size() < expected) {
        throw LoadError(LoadErrorKind::Truncated,
                        name + ": payload truncated at offset " + std::to_string(bytes.size()) +
                            ", expected " + std::to_string(expected) + " bytes");
    }
    if (bytes.size() > expected) {
        throw LoadError(LoadErrorKind::TrailingData, name + ": unexpected data after offset " +
                                                         std::to_string(expected));
    }
    std::vector<float> data(rows * dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t offset = kEmbeddingHeaderBytes + 4 * i;
        const float v = std::bit_cast<float>(get_u32(raw + offset));
        if (!std::isfinite(v)) {
            throw LoadError(LoadErrorKind::NonFinite,
                            name + ": non-finite value at offset " + std::to_string(offset));
        }
        data[i] = v;
    }
    return EmbeddingSet::create(rows, dim, std::move(data), name);
}

}  // namespace

void write_embeddings(const EmbeddingSet& set, const fs::path& dest) {
    std::string buf;
    buf.reserve(kEmbeddingHeaderBytes + set.data().size() * 4);
    buf.append(kEmbeddingMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(set.rows()));
    put_u32(buf, static_cast<std::uint32_t>(set.dim()));
    for (float v : set.data()) put_u32(buf, std::bit_cast<std::uint32_t>(v));

    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.close();
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

EmbeddingSet parse_embeddings_csv(const std::string& text, std::string source_id) {
    std::vector<float> data;
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::size_t fields = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw LoadError(LoadErrorKind::Parse, source_id + ": line " + std::to_string(line_no) +
                                                          ", field " + std::to_string(fields + 1) +
                                                          ": not a decimal number");
            }
            const auto f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                throw LoadError(LoadErrorKind::NonFinite, source_id + ": line " +
                                                              std::to_string(line_no) +
                                                              ": non-finite value");
            }
            data.push_back(f);
            ++fields;
            p = next;
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            if (p == end) break;
            if (*p != ',') {
                throw LoadError(LoadErrorKind::Parse, source_id + ": line " + std::to_string(line_no) +
                                                          ": expected ',' after field " +
                                                          std::to_string(fields));
            }
            ++p;
        }
        if (rows == 0) {
            dim = fields;
        } else if (fields != dim) {
            throw LoadError(LoadErrorKind::Parse, source_id + ": line " + std::to_string(line_no) +
                                                      " has " + std::to_string(fields) +
                                                      " fields, expected " + std::to_string(dim));
        }
        ++rows;
    }
    if (rows == 0) throw LoadError(LoadErrorKind::EmptyShape, source_id + ": no vectors found");
    return EmbeddingSet::create(rows, dim, std::move(data), std::move(source_id));
}

EmbeddingSet read_embeddings(const fs::path& src) {
    const std::string bytes = slurp(src);
    if (is_text_path(src)) return parse_embeddings_csv(bytes, src.string());
    return parse_binary(bytes, src.string());
}

std::vector<std::string> LoadedPool::ids() const {
    std::vector<std::string> out;
    out.reserve(generators.size());
    for (const auto& g : generators) out.push_back(g.record.id);
    return out;
}

std::string LoadedPool::fingerprint() const {
    std::string joined = std::to_string(real.dim());
    for (const auto& g : generators) joined += "|" + g.record.id;
    std::ostringstream os;
    os << std::hex << derive_seed(0, joined);
    return os.str();
}

PoolManifest parse_manifest(const std::string& json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw LoadError(LoadErrorKind::Manifest, std::string("manifest is not valid JSON: ") + e.what());
    }
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    PoolManifest manifest;
    try {
        manifest.real = resolve(doc.at("real").get<std::string>());
        const auto& gens = doc.at("generators");
        if (!gens.is_array() || gens.empty()) {
            throw LoadError(LoadErrorKind::Manifest, "manifest must list at least one generator");
        }
        for (const auto& g : gens) {
            GeneratorRecord rec;
            rec.id = g.at("id").get<std::string>();
            rec.model_name = g.value("model", rec.id);
            rec.iteration = g.value("iteration", std::uint64_t{0});
            rec.path = resolve(g.at("path").get<std::string>());
            manifest.generators.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw LoadError(LoadErrorKind::Manifest, std::string("malformed manifest: ") + e.what());
    }

    std::set<std::string> ids;
    std::set<std::pair<std::string, std::uint64_t>> keys;
    for (const auto& rec : manifest.generators) {
        if (!ids.insert(rec.id).second) {
            throw LoadError(LoadErrorKind::DuplicateId, "duplicate generator id '" + rec.id + "'");
        }
        if (!keys.emplace(rec.model_name, rec.iteration).second) {
            throw LoadError(LoadErrorKind::DuplicateId,
                            "duplicate (model, iteration) pair (" + rec.model_name + ", " +
                                std::to_string(rec.iteration) + ")");
        }
    }
    std::sort(manifest.generators.begin(), manifest.generators.end(),
              [](const GeneratorRecord& a, const GeneratorRecord& b) {
                  return std::tie(a.model_name, a.iteration) < std::tie(b.model_name, b.iteration);
              });
    return manifest;
}

LoadedPool load_pool(const fs::path& manifest_path) {
    PoolManifest manifest = parse_manifest(slurp(manifest_path), manifest_path.parent_path());

    const std::size_t n = manifest.generators.size();
    std::vector<std::optional<EmbeddingSet>> loaded(n + 1);
    parallel_for(n + 1, [&](std::size_t i) {
        if (i == n) {
            loaded[i] = read_embeddings(manifest.real).with_source_id("real");
        } else {
            const auto& rec = manifest.generators[i];
            loaded[i] = read_embeddings(rec.path).with_source_id(rec.id);
        }
    });

    EmbeddingSet real = *loaded[n];
    manifest.embedding_dim = real.dim();
    std::vector<GeneratorEntry> generators;
    generators.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& rec = manifest.generators[i];
        const EmbeddingSet& set = *loaded[i];
        if (set.dim() != real.dim()) {
            throw LoadError(LoadErrorKind::DimMismatch,
                            "dimension mismatch: '" + set.source_id() + "' has D=" +
                                std::to_string(set.dim()) + " but '" + real.source_id() +
                                "' has D=" + std::to_string(real.dim()));
        }
        rec.count = set.rows();
        generators.push_back({rec, set});
    }
    return LoadedPool{std::move(manifest), std::move(real), std::move(generators)};
}

void write_manifest(const PoolManifest& manifest, const fs::path& dest) {
    const fs::path base = dest.parent_path();
    auto rel = [&](const fs::path& p) {
        if (base.empty()) return p.generic_string();
        auto r = p.lexically_relative(base);
        if (r.empty() || *r.begin() == "..") return p.generic_string();
        return r.generic_string();
    };
    json doc;
    doc["real"] = rel(manifest.real);
    doc["generators"] = json::array();
    for (const auto& g : manifest.generators) {
        doc["generators"].push_back(
            {{"id", g.id}, {"model", g.model_name}, {"iteration", g.iteration}, {"path", rel(g.path)}});
    }
    std::ofstream out(dest, std::ios::trunc);
    if (!out) throw WriteError("cannot open '" + dest.string() + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw WriteError("write failure on '" + dest.string() + "'");
}

}  // namespace ganens
