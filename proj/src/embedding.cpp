#include "curator/embedding.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "curator/hash.hpp"

namespace curator {

using nlohmann::json;

const char* to_string(EmbedFields f) {
    return f == EmbedFields::instruction ? "instruction" : "instruction+input";
}

EmbedFields embed_fields_from_string(const std::string& s) {
    if (s == "instruction") return EmbedFields::instruction;
    if (s == "instruction+input") return EmbedFields::instruction_input;
    throw ContractError("unknown embed_fields: " + s);
}

void EmbeddingMatrix::add_row(std::string id, const std::vector<double>& v) {
    if (v.size() != dim_)
        throw ContractError("row dimension " + std::to_string(v.size()) +
                            " does not match matrix dimension " + std::to_string(dim_));
    for (double x : v)
        if (!std::isfinite(x)) throw StageError("embedding", "non-finite component in row " + id);
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), v.begin(), v.end());
}

std::optional<size_t> EmbeddingMatrix::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

EmbeddingMatrix EmbeddingMatrix::subset(const std::vector<std::string>& keep_ids) const {
    EmbeddingMatrix out(dim_);
    for (const auto& id : keep_ids) {
        auto idx = index_of(id);
        if (!idx) throw ContractError("id not present in embedding matrix: " + id);
        auto r = row(*idx);
        out.add_row(id, std::vector<double>(r.begin(), r.end()));
    }
    return out;
}

std::vector<std::vector<double>> LocalEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<double> v(dim_, 0.0);
        if (text.size() >= 3) {
            for (size_t i = 0; i + 3 <= text.size(); ++i) {
                uint64_t h = fnv1a64(std::string_view(text).substr(i, 3), seed_ ^ 0x9e3779b97f4a7c15ull);
                size_t bucket = h % dim_;
                v[bucket] += (h >> 63) ? 1.0 : -1.0;
            }
        } else {
            uint64_t h = fnv1a64(text, seed_ ^ 0x9e3779b97f4a7c15ull);
            v[h % dim_] += 1.0;
        }
        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (norm2 == 0.0) {
            v[0] = 1.0;  // n-gram signs cancelled exactly
        } else {
            double inv = 1.0 / std::sqrt(norm2);
            for (double& x : v) x *= inv;
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string LocalEmbedder::identity() const {
    return "local-trigram-v1:d=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

std::vector<std::vector<double>> ReplayEmbedder::embed(const std::vector<std::string>& texts) {
    if (cursor_ + texts.size() > rows_.size())
        throw StageError("embedding", "replay transcript exhausted");
    std::vector<std::vector<double>> out(rows_.begin() + static_cast<long>(cursor_),
                                         rows_.begin() + static_cast<long>(cursor_ + texts.size()));
    cursor_ += texts.size();
    return out;
}

EmbeddingMatrix embed_dataset(const Dataset& d, Embedder& embedder, EmbedFields fields) {
    std::vector<std::string> texts;
    texts.reserve(d.size());
    for (const auto& r : d) {
        if (fields == EmbedFields::instruction || r.input.empty())
            texts.push_back(r.instruction);
        else
            texts.push_back(r.instruction + "\n\n" + r.input);
    }
    auto rows = embedder.embed(texts);
    if (rows.size() != d.size())
        throw StageError("embedding", "backend returned " + std::to_string(rows.size()) +
                                          " vectors for " + std::to_string(d.size()) + " texts");
    size_t dim = rows.empty() ? 1 : rows[0].size();
    EmbeddingMatrix m(dim);
    for (size_t i = 0; i < rows.size(); ++i) {
        auto& v = rows[i];
        if (v.size() != dim)
            throw StageError("embedding", "dimension mismatch across rows: " +
                                              std::to_string(v.size()) + " vs " +
                                              std::to_string(dim));
        double norm2 = 0.0;
        for (double x : v) {
            if (!std::isfinite(x))
                throw StageError("embedding",
                                 "non-finite component for record " + d.records()[i].id);
            norm2 += x * x;
        }
        if (norm2 == 0.0)
            throw StageError("embedding", "zero vector for record " + d.records()[i].id);
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        m.add_row(d.records()[i].id, v);
    }
    return m;
}

double pairwise_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ContractError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

void save_embedding_cache(const EmbeddingMatrix& m, const std::string& embedder_identity,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("embedding", "cannot write " + path);
    json header;
    header["dim"] = m.dim();
    header["embedder"] = embedder_identity;
    out << header.dump() << '\n';
    for (size_t i = 0; i < m.size(); ++i) {
        json row;
        row["id"] = m.id(i);
        row["v"] = std::vector<double>(m.row(i).begin(), m.row(i).end());
        out << row.dump() << '\n';
    }
    if (!out) throw StageError("embedding", "I/O error writing " + path);
}

EmbeddingCache load_embedding_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("embedding", "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw StageError("embedding", "empty cache file " + path);
    json header = json::parse(line);
    size_t dim = header.at("dim").get<size_t>();
    EmbeddingCache cache{EmbeddingMatrix(dim), header.at("embedder").get<std::string>()};
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json row = json::parse(line);
        cache.matrix.add_row(row.at("id").get<std::string>(),
                             row.at("v").get<std::vector<double>>());
    }
    return cache;
}

}  // namespace curator
