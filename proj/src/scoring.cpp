#include "curator/scoring.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "curator/hash.hpp"

namespace curator {

using nlohmann::json;

const char* to_string(ScoreKind k) {
    return k == ScoreKind::quality ? "quality" : "necessity";
}

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "quality") return ScoreKind::quality;
    if (s == "necessity") return ScoreKind::necessity;
    throw ContractError("unknown score kind: " + s);
}

double LocalScorer::score_one(const ScoreItem& item) const {
    std::string content = item.instruction;
    content += '\x1f';
    content += item.input;
    content += '\x1f';
    content += item.response;
    uint64_t h = fnv1a64(content, seed_ ^ 14695981039346656037ull);
    h = mix64(h, static_cast<uint64_t>(item.response.size()));
    h = mix64(h, static_cast<uint64_t>(item.instruction.size()));
    // top 53 bits -> [0,1) -> [-4,4)
    double u = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
    return u * 8.0 - 4.0;
}

std::vector<double> LocalScorer::score(const std::vector<ScoreItem>& items) {
    std::vector<double> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(score_one(it));
    return out;
}

std::string LocalScorer::identity() const {
    return "local-hash-v1:seed=" + std::to_string(seed_);
}

std::vector<double> ReplayScorer::score(const std::vector<ScoreItem>& items) {
    if (cursor_ + items.size() > scores_.size())
        throw StageError("scoring", "replay transcript exhausted");
    std::vector<double> out(scores_.begin() + static_cast<long>(cursor_),
                            scores_.begin() + static_cast<long>(cursor_ + items.size()));
    cursor_ += items.size();
    return out;
}

namespace {

std::vector<ScoredRecord> score_items(const std::vector<InstructionRecord>& records,
                                      const std::vector<ScoreItem>& items, Scorer& scorer,
                                      ScoreKind kind, bool skip_failures) {
    std::vector<ScoredRecord> out;
    if (records.empty()) return out;

    std::vector<double> scores;
    try {
        scores = scorer.score(items);
    } catch (const BackendItemError& e) {
        if (!skip_failures) {
            size_t idx = std::min(e.item_index(), records.size() - 1);
            throw StageError("scoring", "record " + records[idx].id + ": " + e.what());
        }
        // Degrade to per-item calls so individual failures can be dropped.
        out.reserve(records.size());
        for (size_t i = 0; i < records.size(); ++i) {
            try {
                auto one = scorer.score({items[i]});
                if (one.size() != 1 || !std::isfinite(one[0])) continue;
                out.push_back({records[i], one[0], kind});
            } catch (const StageError&) {
                continue;
            }
        }
        return out;
    }

    if (scores.size() != records.size())
        throw StageError("scoring", "backend returned " + std::to_string(scores.size()) +
                                        " scores for " + std::to_string(records.size()) +
                                        " items");
    out.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw StageError("scoring",
                             "non-finite score for record " + records[i].id);
        out.push_back({records[i], scores[i], kind});
    }
    return out;
}

void require_kind(const std::vector<ScoredRecord>& scored, ScoreKind kind) {
    for (const auto& s : scored)
        if (s.kind != kind)
            throw ContractError(std::string("expected only ") + to_string(kind) +
                                " scores, found " + to_string(s.kind));
}

}  // namespace

std::vector<ScoredRecord> score_quality(const Dataset& d, Scorer& scorer,
                                        bool skip_failures) {
    std::vector<ScoreItem> items;
    items.reserve(d.size());
    for (const auto& r : d) items.push_back({r.instruction, r.input, r.output});
    return score_items(d.records(), items, scorer, ScoreKind::quality, skip_failures);
}

std::string necessity_prompt(const InstructionRecord& r) {
    if (r.input.empty()) return r.instruction;
    return r.instruction + "\n\n" + r.input;
}

std::vector<ScoredRecord> score_necessity(
    const std::vector<std::pair<InstructionRecord, std::string>>& pairs, Scorer& scorer,
    bool skip_failures) {
    std::vector<InstructionRecord> records;
    std::vector<ScoreItem> items;
    records.reserve(pairs.size());
    items.reserve(pairs.size());
    for (const auto& [rec, response] : pairs) {
        records.push_back(rec);
        items.push_back({necessity_prompt(rec), "", response});
    }
    return score_items(records, items, scorer, ScoreKind::necessity, skip_failures);
}

Dataset filter_quality(const std::vector<ScoredRecord>& scored, double alpha) {
    require_kind(scored, ScoreKind::quality);
    Dataset out("filtered:quality");
    for (const auto& s : scored)
        if (s.score > alpha) out.push_back(s.record);
    return out;
}

Dataset filter_necessity(const std::vector<ScoredRecord>& scored, double beta) {
    require_kind(scored, ScoreKind::necessity);
    Dataset out("filtered:necessity");
    for (const auto& s : scored)
        if (s.score < beta) out.push_back(s.record);
    return out;
}

void write_scored_jsonl(const std::vector<ScoredRecord>& scored, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("scoring", "cannot write " + path);
    for (const auto& s : scored) {
        json obj;
        obj["instruction"] = s.record.instruction;
        obj["input"] = s.record.input;
        obj["output"] = s.record.output;
        obj["id"] = s.record.id;
        obj["score"] = s.score;
        obj["kind"] = to_string(s.kind);
        out << obj.dump() << '\n';
    }
    if (!out) throw StageError("scoring", "I/O error writing " + path);
}

std::vector<ScoredRecord> load_scored_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("scoring", "cannot open " + path);
    std::vector<ScoredRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw StageError("scoring", "malformed JSON at line " + std::to_string(lineno) +
                                            ": " + e.what());
        }
        ScoredRecord s;
        s.record = make_record(obj.at("instruction").get<std::string>(),
                               obj.value("input", std::string{}),
                               obj.at("output").get<std::string>());
        s.score = obj.at("score").get<double>();
        s.kind = score_kind_from_string(obj.at("kind").get<std::string>());
        if (!std::isfinite(s.score))
            throw StageError("scoring",
                             "non-finite score at line " + std::to_string(lineno));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace curator
