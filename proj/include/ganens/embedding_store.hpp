#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ganens {

/// An immutable N x D matrix of 32-bit feature vectors, row-major.
///
/// Instances are cheap to copy: the payload is shared and never mutated, so a
/// set may be handed to any number of threads.
class EmbeddingSet {
public:
    /// Validates and wraps a row-major payload. Throws ParameterError when
    /// rows or dim is zero, when the payload size disagrees with rows*dim, or
    /// when any entry is NaN/Inf.
    static EmbeddingSet create(std::size_t rows, std::size_t dim, std::vector<float> data,
                               std::string source_id);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& source_id() const noexcept { return source_id_; }
    std::span<const float> data() const noexcept { return {data_->data(), data_->size()}; }
    std::span<const float> row(std::size_t i) const noexcept {
        return {data_->data() + i * dim_, dim_};
    }

    /// New set holding the given rows, in the given order.
    EmbeddingSet select_rows(std::span<const std::size_t> indices, std::string source_id) const;
    EmbeddingSet with_source_id(std::string source_id) const;

    friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

private:
    EmbeddingSet(std::size_t rows, std::size_t dim, std::shared_ptr<const std::vector<float>> data,
                 std::string source_id)
        : rows_(rows), dim_(dim), data_(std::move(data)), source_id_(std::move(source_id)) {}

    std::size_t rows_;
    std::size_t dim_;
    std::shared_ptr<const std::vector<float>> data_;
    std::string source_id_;
};

/// Row-wise concatenation; all parts must share a dimension.
EmbeddingSet concatenate(std::span<const EmbeddingSet> parts, std::string source_id);

/// Binary layout: "EMB1", u32 LE rows, u32 LE dim, rows*dim f32 LE row-major.
inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbeddingHeaderBytes = 12;

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& dest);

/// Reads the binary format, or comma-separated text when the extension is
/// .csv or .txt (one vector per line).
EmbeddingSet read_embeddings(const std::filesystem::path& src);
EmbeddingSet parse_embeddings_csv(const std::string& text, std::string source_id);

struct GeneratorRecord {
    std::string id;
    std::string model_name;
    std::uint64_t iteration = 0;
    std::filesystem::path path;
    std::size_t count = 0;
};

struct PoolManifest {
    std::filesystem::path real;
    std::vector<GeneratorRecord> generators;  // canonical (model_name, iteration) order
    std::size_t embedding_dim = 0;
};

struct GeneratorEntry {
    GeneratorRecord record;
    EmbeddingSet set;
};

/// A fully loaded candidate pool. Genome index i refers to generators[i].
struct LoadedPool {
    PoolManifest manifest;
    EmbeddingSet real;
    std::vector<GeneratorEntry> generators;

    std::size_t size() const noexcept { return generators.size(); }
    std::vector<std::string> ids() const;
    /// Stable identity of the pool: derived from canonical ids and dimension.
    std::string fingerprint() const;
};

/// Parses manifest JSON ({"real": path, "generators": [{id, model, iteration,
/// path}]}). Relative paths resolve against base_dir. Records come back in
/// canonical order; counts and dim are filled in by load_pool.
PoolManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir);

LoadedPool load_pool(const std::filesystem::path& manifest_path);

/// Writes the manifest JSON with paths relative to the manifest's directory
/// when they live beneath it.
void write_manifest(const PoolManifest& manifest, const std::filesystem::path& dest);

}  // namespace ganens
