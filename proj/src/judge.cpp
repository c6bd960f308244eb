#include "curator/judge.hpp"

#include <cmath>

#include <json.hpp>

namespace curator {

using nlohmann::json;

const char* to_string(RoundRel r) {
    switch (r) {
        case RoundRel::win: return "win";
        case RoundRel::tie: return "tie";
        default: return "lose";
    }
}

const char* to_string(MatchOutcome o) {
    switch (o) {
        case MatchOutcome::Win: return "Win";
        case MatchOutcome::Tie: return "Tie";
        default: return "Lose";
    }
}

MatchOutcome classify(RoundRel r1, RoundRel r2) {
    int value = [](RoundRel r) {
        return r == RoundRel::win ? 1 : r == RoundRel::lose ? -1 : 0;
    }(r1);
    value += r2 == RoundRel::win ? 1 : r2 == RoundRel::lose ? -1 : 0;
    if (value > 0) return MatchOutcome::Win;
    if (value < 0) return MatchOutcome::Lose;
    return MatchOutcome::Tie;
}

double winning_score(long win, long lose, long total) {
    if (total < 1) throw ContractError("winning_score: total must be >= 1");
    if (win < 0 || lose < 0 || win + lose > total)
        throw ContractError("winning_score: counts inconsistent with total");
    // exact integer arithmetic, one final division
    return static_cast<double>(win - lose) / static_cast<double>(total) + 1.0;
}

namespace {

RoundRel relation(double score_a, double score_b) {
    // no epsilon band: judge scores are coarse
    if (score_a > score_b) return RoundRel::win;
    if (score_a < score_b) return RoundRel::lose;
    return RoundRel::tie;
}

void check_range(double score, const std::string& id) {
    if (!std::isfinite(score) || score < 1.0 || score > 10.0)
        throw StageError("judge", "score " + std::to_string(score) +
                                      " outside [1,10] for instruction " + id);
}

const std::string& response_for(const std::map<std::string, std::string>& responses,
                                const std::string& id, const char* side) {
    auto it = responses.find(id);
    if (it == responses.end())
        throw StageError("judge",
                         std::string("missing response from model ") + side + " for id " + id);
    return it->second;
}

}  // namespace

MatchReport run_match(const Dataset& instructions,
                      const std::map<std::string, std::string>& responses_a,
                      const std::map<std::string, std::string>& responses_b,
                      JudgeClient& judge) {
    MatchReport report;
    for (const auto& rec : instructions) {
        const auto& resp_a = response_for(responses_a, rec.id, "A");
        const auto& resp_b = response_for(responses_b, rec.id, "B");

        auto [s1a, s1b] = judge.judge(rec.instruction, resp_a, resp_b);
        auto [s2b, s2a] = judge.judge(rec.instruction, resp_b, resp_a);
        check_range(s1a, rec.id);
        check_range(s1b, rec.id);
        check_range(s2a, rec.id);
        check_range(s2b, rec.id);

        InstructionOutcome item;
        item.id = rec.id;
        item.round1 = {s1a, s1b, true};
        item.round2 = {s2a, s2b, false};
        item.outcome = classify(relation(s1a, s1b), relation(s2a, s2b));
        switch (item.outcome) {
            case MatchOutcome::Win: ++report.wins; break;
            case MatchOutcome::Tie: ++report.ties; break;
            case MatchOutcome::Lose: ++report.losses; break;
        }
        ++report.total;
        report.details.push_back(std::move(item));
    }
    if (report.total > 0)
        report.score = winning_score(report.wins, report.losses, report.total);
    return report;
}

std::string match_report_json(const MatchReport& r) {
    json out;
    out["win"] = r.wins;
    out["tie"] = r.ties;
    out["lose"] = r.losses;
    out["total"] = r.total;
    out["winning_score"] = r.score;
    json details = json::array();
    for (const auto& d : r.details) {
        details.push_back({{"id", d.id},
                           {"round1", {{"score_a", d.round1.score_a}, {"score_b", d.round1.score_b}}},
                           {"round2", {{"score_a", d.round2.score_a}, {"score_b", d.round2.score_b}}},
                           {"outcome", to_string(d.outcome)}});
    }
    out["details"] = details;
    return out.dump(2) + "\n";
}

}  // namespace curator
