#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curator/corpus.hpp"

namespace curator {

enum class EmbedFields { instruction, instruction_input };

const char* to_string(EmbedFields f);
EmbedFields embed_fields_from_string(const std::string& s);

/// Row-major matrix of unit-norm embeddings, aligned to a dataset's order.
/// Stored double precision; distances accumulate in double.
class EmbeddingMatrix {
public:
    explicit EmbeddingMatrix(size_t dim) : dim_(dim) {
        if (dim == 0) throw ContractError("embedding dimension must be positive");
    }

    void add_row(std::string id, const std::vector<double>& v);

    size_t size() const { return ids_.size(); }
    size_t dim() const { return dim_; }
    std::span<const double> row(size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::string& id(size_t i) const { return ids_[i]; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::optional<size_t> index_of(const std::string& id) const;

    /// Restriction to the given ids, in the given order.
    EmbeddingMatrix subset(const std::vector<std::string>& keep_ids) const;

private:
    size_t dim_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, size_t> index_;
    std::vector<double> data_;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One vector per text, aligned, consistent dimension.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string identity() const = 0;
};

/// Deterministic test double: seeded feature-hashing of character trigrams
/// into d dimensions, L2-normalized. Versioned so golden selections stay
/// stable.
class LocalEmbedder : public Embedder {
public:
    explicit LocalEmbedder(size_t dim = 64, uint64_t seed = 42) : dim_(dim), seed_(seed) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override;

private:
    size_t dim_;
    uint64_t seed_;
};

/// Plays back fixed vectors, for transcript fixtures.
class ReplayEmbedder : public Embedder {
public:
    explicit ReplayEmbedder(std::vector<std::vector<double>> rows)
        : rows_(std::move(rows)) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override { return "replay"; }

private:
    std::vector<std::vector<double>> rows_;
    size_t cursor_ = 0;
};

/// Embeds the dataset in order, one unit-norm row per record. The embedded
/// text defaults to the instruction field only.
EmbeddingMatrix embed_dataset(const Dataset& d, Embedder& embedder,
                              EmbedFields fields = EmbedFields::instruction);

/// Euclidean distance. On unit vectors this is rank-equivalent to cosine
/// distance. Throws ContractError on dimension mismatch.
double pairwise_distance(std::span<const double> a, std::span<const double> b);

/// Cache file: first line a header {"dim":d,"embedder":identity}, then one
/// row per line {"id":str,"v":[...]}.
void save_embedding_cache(const EmbeddingMatrix& m, const std::string& embedder_identity,
                          const std::string& path);

struct EmbeddingCache {
    EmbeddingMatrix matrix;
    std::string embedder_identity;
};

EmbeddingCache load_embedding_cache(const std::string& path);

}  // namespace curator
