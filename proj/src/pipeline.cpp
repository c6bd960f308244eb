#include "curator/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "curator/hash.hpp"
#include "curator/http_backends.hpp"

namespace curator {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(PoolMode m) {
    return m == PoolMode::seed_as_pool ? "seed-as-pool" : "empty-pool";
}

PoolMode pool_mode_from_string(const std::string& s) {
    if (s == "seed-as-pool") return PoolMode::seed_as_pool;
    if (s == "empty-pool") return PoolMode::empty_pool;
    throw ContractError("unknown augmented_pool_mode: " + s);
}

PipelineConfig preset(const std::string& name) {
    PipelineConfig cfg;
    if (name == "alpaca") {
        cfg.alpha = 0.0;
        cfg.beta = 0.0;
        cfg.seed_budget = 500;
        cfg.augmented_budget = 500;
    } else if (name == "mixture") {
        cfg.alpha = 1.0;
        cfg.beta = -1.0;
        cfg.seed_budget = 1000;
        cfg.augmented_budget = 3000;
    } else {
        throw ContractError("unknown preset: " + name);
    }
    return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
    json out;
    out["alpha"] = cfg.alpha;
    out["beta"] = cfg.beta;
    out["seed_budget"] = cfg.seed_budget;
    out["augmented_budget"] = cfg.augmented_budget;
    out["embed_fields"] = to_string(cfg.embed_fields);
    out["augmented_pool_mode"] = to_string(cfg.augmented_pool_mode);
    out["exclude_seed_from_augmented"] = cfg.exclude_seed_from_augmented;
    out["first_center"] = to_string(cfg.first_center);
    out["scorer_url"] = cfg.scorer_url;
    out["embedder_url"] = cfg.embedder_url;
    out["responses_path"] = cfg.responses_path;
    out["embed_dim"] = cfg.embed_dim;
    out["local_seed"] = cfg.local_seed;
    out["jobs"] = cfg.jobs;
    out["skip_failures"] = cfg.skip_failures;
    return out.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
    json obj = json::parse(text);
    PipelineConfig cfg;
    if (obj.contains("preset")) cfg = preset(obj["preset"].get<std::string>());
    cfg.alpha = obj.value("alpha", cfg.alpha);
    cfg.beta = obj.value("beta", cfg.beta);
    cfg.seed_budget = obj.value("seed_budget", cfg.seed_budget);
    cfg.augmented_budget = obj.value("augmented_budget", cfg.augmented_budget);
    if (obj.contains("embed_fields"))
        cfg.embed_fields = embed_fields_from_string(obj["embed_fields"].get<std::string>());
    if (obj.contains("augmented_pool_mode"))
        cfg.augmented_pool_mode =
            pool_mode_from_string(obj["augmented_pool_mode"].get<std::string>());
    cfg.exclude_seed_from_augmented =
        obj.value("exclude_seed_from_augmented", cfg.exclude_seed_from_augmented);
    if (obj.contains("first_center"))
        cfg.first_center = first_center_from_string(obj["first_center"].get<std::string>());
    cfg.scorer_url = obj.value("scorer_url", cfg.scorer_url);
    cfg.embedder_url = obj.value("embedder_url", cfg.embedder_url);
    cfg.responses_path = obj.value("responses_path", cfg.responses_path);
    cfg.embed_dim = obj.value("embed_dim", cfg.embed_dim);
    cfg.local_seed = obj.value("local_seed", cfg.local_seed);
    cfg.jobs = obj.value("jobs", cfg.jobs);
    cfg.skip_failures = obj.value("skip_failures", cfg.skip_failures);
    if (cfg.seed_budget < 1) throw ContractError("seed_budget must be >= 1");
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("config", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

FileResponseProvider::FileResponseProvider(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("responses", "cannot open " + path);
    std::string line;
    std::string all;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        all += line;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw StageError("responses", "malformed JSON at line " + std::to_string(lineno) +
                                              ": " + e.what());
        }
        responses_[obj.at("id").get<std::string>()] = obj.at("response").get<std::string>();
    }
    identity_ = "file:" + path + ":" + to_hex(fnv1a64(all));
}

std::optional<std::string> FileResponseProvider::response_for(const InstructionRecord& r) {
    auto it = responses_.find(r.id);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<InstructionRecord, std::string>> collect_responses(
    const Dataset& d, ResponseProvider& provider, bool strict) {
    std::vector<std::pair<InstructionRecord, std::string>> out;
    out.reserve(d.size());
    for (const auto& r : d) {
        auto resp = provider.response_for(r);
        if (!resp) {
            if (strict) throw StageError("responses", "missing response for id " + r.id);
            continue;
        }
        out.emplace_back(r, std::move(*resp));
    }
    return out;
}

void write_responses_jsonl(
    const std::vector<std::pair<InstructionRecord, std::string>>& pairs,
    const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("responses", "cannot write " + path);
    for (const auto& [rec, resp] : pairs) {
        json obj;
        obj["id"] = rec.id;
        obj["response"] = resp;
        out << obj.dump() << '\n';
    }
    if (!out) throw StageError("responses", "I/O error writing " + path);
}

std::string dataset_digest(const Dataset& d) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& r : d) {
        h = fnv1a64(r.id, h);
        h = fnv1a64("\x1e", h);
    }
    return to_hex(h);
}

namespace {

std::string digest_of(const std::string& s) { return to_hex(fnv1a64(s)); }

std::string responses_digest(
    const std::vector<std::pair<InstructionRecord, std::string>>& pairs) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& [rec, resp] : pairs) {
        h = fnv1a64(rec.id, h);
        h = fnv1a64(resp, h);
        h = fnv1a64("\x1e", h);
    }
    return to_hex(h);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::string out_dir)
    : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
    if (cfg_.seed_budget < 1) throw ContractError("seed_budget must be >= 1");
    fs::create_directories(out_dir_);
    load_previous_manifest();
}

Scorer& Pipeline::scorer() {
    if (!scorer_) {
        if (cfg_.scorer_url.empty())
            scorer_ = std::make_unique<LocalScorer>(cfg_.local_seed);
        else {
            EndpointConfig ep;
            ep.base_url = cfg_.scorer_url;
            ep.in_flight = cfg_.jobs;
            scorer_ = std::make_unique<HttpScorer>(ep);
        }
    }
    return *scorer_;
}

Embedder& Pipeline::embedder() {
    if (!embedder_) {
        if (cfg_.embedder_url.empty())
            embedder_ = std::make_unique<LocalEmbedder>(cfg_.embed_dim, cfg_.local_seed);
        else {
            EndpointConfig ep;
            ep.base_url = cfg_.embedder_url;
            ep.in_flight = cfg_.jobs;
            embedder_ = std::make_unique<HttpEmbedder>(ep);
        }
    }
    return *embedder_;
}

ResponseProvider& Pipeline::provider() {
    if (!provider_) {
        if (cfg_.responses_path.empty())
            provider_ = std::make_unique<EchoProvider>();
        else
            provider_ = std::make_unique<FileResponseProvider>(cfg_.responses_path);
    }
    return *provider_;
}

std::string Pipeline::path(const std::string& name) const {
    return (fs::path(out_dir_) / name).string();
}

bool Pipeline::resumable(const StageArtifact& want) const {
    auto it = previous_.find(want.stage);
    if (it == previous_.end()) return false;
    const auto& prev = it->second;
    return prev.input_digest == want.input_digest &&
           prev.params_digest == want.params_digest && fs::exists(want.path);
}

void Pipeline::record_artifact(StageArtifact a) {
    for (auto& existing : manifest_) {
        if (existing.stage == a.stage) {
            existing = std::move(a);
            return;
        }
    }
    manifest_.push_back(std::move(a));
}

void Pipeline::load_previous_manifest() {
    std::string manifest_path = path("manifest.json");
    if (!fs::exists(manifest_path)) return;
    std::ifstream in(manifest_path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    json obj;
    try {
        obj = json::parse(buf.str());
    } catch (const json::parse_error&) {
        return;  // stale or truncated manifest: recompute everything
    }
    for (const auto& a : obj.value("artifacts", json::array())) {
        StageArtifact art;
        art.stage = a.at("stage").get<std::string>();
        art.input_digest = a.at("input_digest").get<std::string>();
        art.params_digest = a.at("params_digest").get<std::string>();
        art.path = a.at("path").get<std::string>();
        art.records = a.at("records").get<size_t>();
        const json extra = a.value("extra_counts", json::object());
        for (const auto& [k, v] : extra.items()) art.extra_counts[k] = v.get<size_t>();
        previous_[art.stage] = art;
    }
}

void Pipeline::write_manifest() const {
    json obj;
    obj["config"] = json::parse(config_to_json(cfg_));
    json arts = json::array();
    for (const auto& a : manifest_) {
        json e;
        e["stage"] = a.stage;
        e["input_digest"] = a.input_digest;
        e["params_digest"] = a.params_digest;
        e["path"] = a.path;
        e["records"] = a.records;
        if (!a.extra_counts.empty()) e["extra_counts"] = a.extra_counts;
        arts.push_back(e);
    }
    obj["artifacts"] = arts;

    // write-temp-then-rename so readers never see a torn manifest
    std::string final_path = path("manifest.json");
    std::string tmp_path = final_path + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw StageError("pipeline", "cannot write " + tmp_path);
        out << obj.dump(2) << '\n';
    }
    fs::rename(tmp_path, final_path);
}

Dataset Pipeline::run_quality_stage(const Dataset& raw) {
    if (raw.empty()) throw StageError("quality", "raw dataset is empty");
    StageArtifact art;
    art.stage = "quality";
    art.input_digest = dataset_digest(raw);
    art.params_digest = digest_of("alpha=" + std::to_string(cfg_.alpha) +
                                  ";scorer=" + scorer().identity() +
                                  ";skip=" + std::to_string(cfg_.skip_failures));
    art.path = path("02_high_quality.jsonl");

    if (resumable(art) && fs::exists(path("01_scored_quality.jsonl"))) {
        Dataset hq = load_jsonl(art.path);
        art.records = hq.size();
        record_artifact(art);
        return hq;
    }

    auto scored = score_quality(raw, scorer(), cfg_.skip_failures);
    write_scored_jsonl(scored, path("01_scored_quality.jsonl"));
    Dataset hq = filter_quality(scored, cfg_.alpha);
    write_jsonl(hq, art.path);
    art.records = hq.size();
    record_artifact(art);
    ++stages_recomputed_;
    return hq;
}

Dataset Pipeline::run_seed_stage(const Dataset& hq) {
    if (hq.empty()) throw StageError("seed", "high-quality dataset is empty");
    StageArtifact art;
    art.stage = "seed";
    art.input_digest = dataset_digest(hq);
    art.params_digest = digest_of(
        "embedder=" + embedder().identity() + ";fields=" + to_string(cfg_.embed_fields) +
        ";budget=" + std::to_string(cfg_.seed_budget) +
        ";first=" + to_string(cfg_.first_center));
    art.path = path("04_seed.jsonl");

    std::string cache_path = path("03_embeddings.jsonl");
    if (resumable(art) && fs::exists(cache_path) && fs::exists(path("04_seed_report.json"))) {
        auto cache = load_embedding_cache(cache_path);
        if (cache.embedder_identity == embedder().identity()) {
            hq_embeddings_ = std::move(cache.matrix);
            Dataset seed = load_jsonl(art.path);
            art.records = seed.size();
            record_artifact(art);
            return seed;
        }
    }

    hq_embeddings_ = embed_dataset(hq, embedder(), cfg_.embed_fields);
    save_embedding_cache(*hq_embeddings_, embedder().identity(), cache_path);

    SelectionOptions opts{cfg_.jobs, cfg_.first_center};
    auto sel = k_center_greedy(*hq_embeddings_, {}, cfg_.seed_budget, opts);
    {
        std::ofstream out(path("04_seed_report.json"), std::ios::binary | std::ios::trunc);
        out << selection_report_json(sel, cfg_.seed_budget, opts);
    }

    std::map<std::string, const InstructionRecord*> by_id;
    for (const auto& r : hq) by_id.emplace(r.id, &r);
    Dataset seed("seed");
    for (const auto& id : sel.selected_ids) seed.push_back(*by_id.at(id));
    write_jsonl(seed, art.path);
    art.records = seed.size();
    record_artifact(art);
    ++stages_recomputed_;
    return seed;
}

std::vector<std::pair<InstructionRecord, std::string>> Pipeline::responses_stage(
    const Dataset& hq) {
    StageArtifact art;
    art.stage = "responses";
    art.input_digest = dataset_digest(hq);
    art.params_digest = digest_of("provider=" + provider().identity());
    art.path = path("05_responses.jsonl");

    if (resumable(art)) {
        FileResponseProvider replay(art.path);
        auto pairs = collect_responses(hq, replay, /*strict=*/true);
        art.records = pairs.size();
        record_artifact(art);
        return pairs;
    }

    auto pairs = collect_responses(hq, provider(), /*strict=*/!cfg_.skip_failures);
    write_responses_jsonl(pairs, art.path);
    art.records = pairs.size();
    record_artifact(art);
    ++stages_recomputed_;
    return pairs;
}

Dataset Pipeline::run_augmented_stage(
    const Dataset& hq, const Dataset& seed,
    const std::vector<std::pair<InstructionRecord, std::string>>& responses) {
    StageArtifact art;
    art.stage = "augmented";
    art.input_digest = digest_of(dataset_digest(hq) + "|" + dataset_digest(seed) + "|" +
                                 responses_digest(responses));
    art.params_digest = digest_of(
        "beta=" + std::to_string(cfg_.beta) + ";scorer=" + scorer().identity() +
        ";budget=" + std::to_string(cfg_.augmented_budget) +
        ";pool=" + to_string(cfg_.augmented_pool_mode) +
        ";exclude_seed=" + std::to_string(cfg_.exclude_seed_from_augmented) +
        ";embedder=" + embedder().identity() + ";fields=" + to_string(cfg_.embed_fields) +
        ";first=" + to_string(cfg_.first_center));
    art.path = path("07_augmented.jsonl");

    if (resumable(art) && previous_.count("augmented")) {
        Dataset augmented = load_jsonl(art.path);
        art.records = augmented.size();
        art.extra_counts = previous_.at("augmented").extra_counts;
        record_artifact(art);
        return augmented;
    }

    auto scored = score_necessity(responses, scorer(), cfg_.skip_failures);
    write_scored_jsonl(scored, path("06_scored_necessity.jsonl"));
    Dataset candidates = filter_necessity(scored, cfg_.beta);

    std::unordered_set<std::string> seed_ids;
    for (const auto& r : seed) seed_ids.insert(r.id);

    Dataset pool_free("necessity-candidates");
    for (const auto& r : candidates) {
        if (cfg_.exclude_seed_from_augmented && seed_ids.count(r.id)) continue;
        pool_free.push_back(r);
    }
    art.extra_counts["necessity_candidates"] = candidates.size();
    art.extra_counts["selectable_candidates"] = pool_free.size();

    Dataset augmented("augmented");
    size_t budget = std::min(cfg_.augmented_budget, pool_free.size());
    if (budget > 0) {
        if (!hq_embeddings_) hq_embeddings_ = embed_dataset(hq, embedder(), cfg_.embed_fields);

        std::vector<std::string> include_ids;
        std::vector<std::string> pool_ids;
        if (cfg_.augmented_pool_mode == PoolMode::seed_as_pool) {
            for (const auto& r : seed) include_ids.push_back(r.id);
            pool_ids = include_ids;
        }
        std::unordered_set<std::string> included(include_ids.begin(), include_ids.end());
        for (const auto& r : pool_free)
            if (included.insert(r.id).second) include_ids.push_back(r.id);

        auto submatrix = hq_embeddings_->subset(include_ids);
        SelectionOptions opts{cfg_.jobs, cfg_.first_center};
        auto sel = k_center_greedy(submatrix, pool_ids, budget, opts);
        {
            std::ofstream out(path("07_augmented_report.json"),
                              std::ios::binary | std::ios::trunc);
            out << selection_report_json(sel, budget, opts);
        }

        std::map<std::string, const InstructionRecord*> by_id;
        for (const auto& r : pool_free) by_id.emplace(r.id, &r);
        for (const auto& id : sel.selected_ids) augmented.push_back(*by_id.at(id));
    }
    // zero candidates below beta is a warning, not an error
    write_jsonl(augmented, art.path);
    art.records = augmented.size();
    record_artifact(art);
    ++stages_recomputed_;
    return augmented;
}

Dataset Pipeline::merge_stage(const Dataset& seed, const Dataset& augmented) {
    Dataset merged("final");
    std::unordered_set<std::string> seen;
    for (const auto& r : seed)
        if (seen.insert(r.id).second) merged.push_back(r);
    for (const auto& r : augmented)
        if (seen.insert(r.id).second) merged.push_back(r);
    return merged;
}

Dataset Pipeline::run_all(const Dataset& raw) {
    manifest_.clear();

    StageArtifact corpus_art;
    corpus_art.stage = "corpus";
    corpus_art.input_digest = dataset_digest(raw);
    corpus_art.params_digest = digest_of("corpus-v1");
    corpus_art.path = path("00_corpus.jsonl");
    corpus_art.records = raw.size();
    if (!resumable(corpus_art)) {
        write_jsonl(raw, corpus_art.path);
        ++stages_recomputed_;
    }
    record_artifact(corpus_art);

    Dataset hq = run_quality_stage(raw);
    Dataset seed = run_seed_stage(hq);
    auto responses = responses_stage(hq);
    Dataset augmented = run_augmented_stage(hq, seed, responses);

    Dataset merged = merge_stage(seed, augmented);
    StageArtifact merge_art;
    merge_art.stage = "merge";
    merge_art.input_digest =
        digest_of(dataset_digest(seed) + "|" + dataset_digest(augmented));
    merge_art.params_digest = digest_of("merge-v1");
    merge_art.path = path("08_final.jsonl");
    merge_art.records = merged.size();
    merge_art.extra_counts["seed"] = seed.size();
    merge_art.extra_counts["augmented"] = augmented.size();
    if (!resumable(merge_art)) {
        write_jsonl(merged, merge_art.path);
        ++stages_recomputed_;
    }
    record_artifact(merge_art);

    write_manifest();
    return merged;
}

}  // namespace curator
