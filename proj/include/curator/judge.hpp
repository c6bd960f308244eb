#pragma once

#include <map>
#include <string>
#include <vector>

#include "curator/corpus.hpp"

namespace curator {

/// Per-round relation of model A's score to model B's within one judging
/// round.
enum class RoundRel { win, tie, lose };

enum class MatchOutcome { Win, Tie, Lose };

const char* to_string(RoundRel r);
const char* to_string(MatchOutcome o);

/// A single judging round. order records which model's response was placed
/// first in the prompt; scores are always reported from A's perspective.
struct RoundResult {
    double score_a = 0.0;  // in [1,10]
    double score_b = 0.0;  // in [1,10]
    bool a_first = true;
};

/// Double-evaluation outcome rules:
///   win both, or win one and tie the other          -> Win
///   tie both, or win one and lose the other         -> Tie
///   lose both, or lose one and tie the other        -> Lose
/// Symmetric in round order.
MatchOutcome classify(RoundRel r1, RoundRel r2);

/// ((win - lose) / total) + 1, in [0, 2]. Greater than 1 means A ahead.
double winning_score(long win, long lose, long total);

struct InstructionOutcome {
    std::string id;
    RoundResult round1;  // A's response placed first
    RoundResult round2;  // B's response placed first
    MatchOutcome outcome = MatchOutcome::Tie;
};

struct MatchReport {
    long wins = 0;
    long ties = 0;
    long losses = 0;
    long total = 0;
    double score = 1.0;
    std::vector<InstructionOutcome> details;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    /// Scores the two responses as presented, first then second, each in
    /// [1,10].
    virtual std::pair<double, double> judge(const std::string& instruction,
                                            const std::string& response_1,
                                            const std::string& response_2) = 0;
};

/// Runs the full pairwise protocol: every instruction is judged twice with
/// the response order swapped, classified, and aggregated. Response maps
/// are keyed by record id and must cover the dataset.
MatchReport run_match(const Dataset& instructions,
                      const std::map<std::string, std::string>& responses_a,
                      const std::map<std::string, std::string>& responses_b,
                      JudgeClient& judge);

std::string match_report_json(const MatchReport& r);

}  // namespace curator
