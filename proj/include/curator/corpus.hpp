#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curator/errors.hpp"

namespace curator {

/// One Alpaca-style (instruction, input, output) triplet. The id is a
/// deterministic digest of the canonicalized fields: equal triplets always
/// get equal ids, regardless of how the source file was serialized.
struct InstructionRecord {
    std::string id;
    std::string instruction;
    std::string input;   // may be empty
    std::string output;

    bool operator==(const InstructionRecord&) const = default;
};

std::string record_id(const std::string& instruction, const std::string& input,
                      const std::string& output);

/// Builds a record, computing its id. Throws ContractError if the
/// instruction is empty after whitespace trimming.
InstructionRecord make_record(std::string instruction, std::string input,
                              std::string output);

/// Ordered, immutable-after-load collection of records. Iteration order is
/// the ingestion order of the source file.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::string source_label) : source_label_(std::move(source_label)) {}
    Dataset(std::vector<InstructionRecord> records, std::string source_label)
        : records_(std::move(records)), source_label_(std::move(source_label)) {}

    void push_back(InstructionRecord r) { records_.push_back(std::move(r)); }

    const std::vector<InstructionRecord>& records() const { return records_; }
    const std::string& source_label() const { return source_label_; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

private:
    std::vector<InstructionRecord> records_;
    std::string source_label_;
};

/// Loads a JSONL corpus: one object per line with string fields
/// "instruction", "output" and optional "input". Errors name the offending
/// line number. Missing "input" becomes the empty string.
Dataset load_jsonl(const std::string& path);

/// Writes one JSON object per line. With with_id the digest is included as
/// an "id" field; load_jsonl recomputes it either way.
void write_jsonl(const Dataset& d, const std::string& path, bool with_id = false);

/// Keeps the first occurrence of each id. Output order is a subsequence of
/// input order. Idempotent. Never applied implicitly by pipeline stages.
Dataset dedupe(const Dataset& d);

struct CorpusStats {
    size_t count = 0;
    std::optional<double> mean_instruction_length;
    std::optional<double> p50_instruction_length;
    std::optional<double> p90_instruction_length;
    std::optional<double> empty_input_fraction;
};

CorpusStats stats(const Dataset& d);

std::string format_stats(const CorpusStats& s);

}  // namespace curator
