#include "curator/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "curator/hash.hpp"

namespace curator {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string rtrim(std::string_view s) {
    size_t e = s.size();
    while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(0, e));
}

}  // namespace

std::string record_id(const std::string& instruction, const std::string& input,
                      const std::string& output) {
    // Canonicalize: trim trailing whitespace per field, join with the unit
    // separator so field boundaries cannot be forged by content.
    std::string canon;
    canon.reserve(instruction.size() + input.size() + output.size() + 2);
    canon += rtrim(instruction);
    canon += '\x1f';
    canon += rtrim(input);
    canon += '\x1f';
    canon += rtrim(output);
    return to_hex(fnv1a64(canon));
}

InstructionRecord make_record(std::string instruction, std::string input,
                              std::string output) {
    if (trim(instruction).empty())
        throw ContractError("instruction is empty after whitespace trimming");
    InstructionRecord r;
    r.id = record_id(instruction, input, output);
    r.instruction = std::move(instruction);
    r.input = std::move(input);
    r.output = std::move(output);
    return r;
}

Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("corpus", "cannot open " + path);

    Dataset d(path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw StageError("corpus", "malformed JSON at line " + std::to_string(lineno) +
                                           ": " + e.what());
        }
        if (!obj.is_object())
            throw StageError("corpus", "line " + std::to_string(lineno) + " is not an object");
        for (const char* field : {"instruction", "output"}) {
            if (!obj.contains(field) || !obj[field].is_string())
                throw StageError("corpus", std::string("missing or non-string field \"") + field +
                                               "\" at line " + std::to_string(lineno));
        }
        std::string input;
        if (obj.contains("input")) {
            if (!obj["input"].is_string())
                throw StageError("corpus", "non-string field \"input\" at line " +
                                               std::to_string(lineno));
            input = obj["input"].get<std::string>();
        }
        InstructionRecord rec;
        try {
            rec = make_record(obj["instruction"].get<std::string>(), std::move(input),
                              obj["output"].get<std::string>());
        } catch (const ContractError& e) {
            throw StageError("corpus",
                             std::string(e.what()) + " at line " + std::to_string(lineno));
        }
        d.push_back(std::move(rec));
    }
    return d;
}

void write_jsonl(const Dataset& d, const std::string& path, bool with_id) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("corpus", "cannot write " + path);
    for (const auto& r : d) {
        json obj;
        obj["instruction"] = r.instruction;
        obj["input"] = r.input;
        obj["output"] = r.output;
        if (with_id) obj["id"] = r.id;
        out << obj.dump() << '\n';
    }
    if (!out) throw StageError("corpus", "I/O error writing " + path);
}

Dataset dedupe(const Dataset& d) {
    Dataset out(d.source_label());
    std::unordered_set<std::string> seen;
    for (const auto& r : d) {
        if (seen.insert(r.id).second) out.push_back(r);
    }
    return out;
}

CorpusStats stats(const Dataset& d) {
    CorpusStats s;
    s.count = d.size();
    if (d.empty()) return s;

    std::vector<double> lengths;
    lengths.reserve(d.size());
    size_t empty_inputs = 0;
    double sum = 0.0;
    for (const auto& r : d) {
        lengths.push_back(static_cast<double>(r.instruction.size()));
        sum += static_cast<double>(r.instruction.size());
        if (r.input.empty()) ++empty_inputs;
    }
    std::sort(lengths.begin(), lengths.end());
    auto percentile = [&](double p) {
        double idx = p * static_cast<double>(lengths.size() - 1);
        size_t lo = static_cast<size_t>(std::floor(idx));
        size_t hi = static_cast<size_t>(std::ceil(idx));
        double frac = idx - static_cast<double>(lo);
        return lengths[lo] * (1.0 - frac) + lengths[hi] * frac;
    };
    s.mean_instruction_length = sum / static_cast<double>(d.size());
    s.p50_instruction_length = percentile(0.5);
    s.p90_instruction_length = percentile(0.9);
    s.empty_input_fraction =
        static_cast<double>(empty_inputs) / static_cast<double>(d.size());
    return s;
}

std::string format_stats(const CorpusStats& s) {
    std::ostringstream out;
    out << "records: " << s.count << '\n';
    if (s.mean_instruction_length) {
        out << "mean_instruction_length: " << *s.mean_instruction_length << '\n'
            << "p50_instruction_length: " << *s.p50_instruction_length << '\n'
            << "p90_instruction_length: " << *s.p90_instruction_length << '\n'
            << "empty_input_fraction: " << *s.empty_input_fraction << '\n';
    }
    return out.str();
}

}  // namespace curator
