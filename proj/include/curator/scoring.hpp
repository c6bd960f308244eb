#pragma once

#include <memory>
#include <string>
#include <vector>

#include "curator/corpus.hpp"

namespace curator {

enum class ScoreKind { quality, necessity };

const char* to_string(ScoreKind k);
ScoreKind score_kind_from_string(const std::string& s);

/// Record plus a reward-scale score. The scale is unbounded in principle;
/// values are required to be finite.
struct ScoredRecord {
    InstructionRecord record;
    double score = 0.0;
    ScoreKind kind = ScoreKind::quality;
};

/// What a scorer backend sees for one item. For quality scoring the
/// response is the dataset's gold output; for necessity scoring it is the
/// initial model's generated response and the input field is folded into
/// the instruction.
struct ScoreItem {
    std::string instruction;
    std::string input;
    std::string response;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    /// One score per item, aligned. Implementations must either return
    /// exactly items.size() finite scores or throw StageError.
    virtual std::vector<double> score(const std::vector<ScoreItem>& items) = 0;
    virtual std::string identity() const = 0;
};

/// Deterministic test double: seeded hash of the item content mixed with
/// length statistics, mapped into [-4, 4]. Exists so the pipeline and its
/// property suite run hermetically; makes no claim of quality judgment.
class LocalScorer : public Scorer {
public:
    explicit LocalScorer(uint64_t seed = 42) : seed_(seed) {}
    std::vector<double> score(const std::vector<ScoreItem>& items) override;
    std::string identity() const override;

    double score_one(const ScoreItem& item) const;

private:
    uint64_t seed_;
};

/// Fixed transcript playback, for fixtures. Throws when the transcript is
/// shorter than the request.
class ReplayScorer : public Scorer {
public:
    explicit ReplayScorer(std::vector<double> scores) : scores_(std::move(scores)) {}
    std::vector<double> score(const std::vector<ScoreItem>& items) override;
    std::string identity() const override { return "replay"; }

private:
    std::vector<double> scores_;
    size_t cursor_ = 0;
};

/// Quality scoring: one ScoredRecord per input record, order preserved.
/// The response sent to the backend is the record's gold output.
std::vector<ScoredRecord> score_quality(const Dataset& d, Scorer& scorer,
                                        bool skip_failures = false);

/// The text pair sent to the scorer for necessity: instruction with the
/// input appended after a blank line when non-empty.
std::string necessity_prompt(const InstructionRecord& r);

/// Necessity scoring over (record, generated response) pairs. The gold
/// output plays no role here.
std::vector<ScoredRecord> score_necessity(
    const std::vector<std::pair<InstructionRecord, std::string>>& pairs, Scorer& scorer,
    bool skip_failures = false);

/// Keeps records with score strictly greater than alpha. Order preserved.
/// Pass -inf to keep everything. Throws ContractError on mixed kinds.
Dataset filter_quality(const std::vector<ScoredRecord>& scored, double alpha);

/// Keeps records with score strictly less than beta. Order preserved.
/// Pass +inf to keep everything. Throws ContractError on mixed kinds.
Dataset filter_necessity(const std::vector<ScoredRecord>& scored, double beta);

void write_scored_jsonl(const std::vector<ScoredRecord>& scored, const std::string& path);
std::vector<ScoredRecord> load_scored_jsonl(const std::string& path);

}  // namespace curator
