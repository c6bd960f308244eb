#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curator/embedding.hpp"
#include "curator/scoring.hpp"
#include "curator/selection.hpp"

namespace curator {

enum class PoolMode { seed_as_pool, empty_pool };

const char* to_string(PoolMode m);
PoolMode pool_mode_from_string(const std::string& s);

struct PipelineConfig {
    double alpha = 0.0;                     // quality threshold, strict >
    double beta = 0.0;                      // necessity threshold, strict <
    size_t seed_budget = 500;
    size_t augmented_budget = 500;
    EmbedFields embed_fields = EmbedFields::instruction;
    PoolMode augmented_pool_mode = PoolMode::seed_as_pool;
    bool exclude_seed_from_augmented = true;
    FirstCenter first_center = FirstCenter::smallest_id;

    // empty URL selects the local deterministic backend
    std::string scorer_url;
    std::string embedder_url;
    // empty selects the echo stub; otherwise a response JSONL produced by
    // the fine-tuned initial model out of band
    std::string responses_path;

    size_t embed_dim = 64;      // local embedder only
    uint64_t local_seed = 42;   // local scorer/embedder only
    int jobs = 1;
    bool skip_failures = false;
};

/// Named presets carrying the shipped threshold/budget configurations.
/// "alpaca": alpha 0.0, beta 0.0, budgets 500/500.
/// "mixture": alpha 1.0, beta -1.0, budgets 1000/3000.
PipelineConfig preset(const std::string& name);

PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config_file(const std::string& path);

/// Source of the initial model's generations, consumed at the pipeline's
/// fine-tuning boundary.
class ResponseProvider {
public:
    virtual ~ResponseProvider() = default;
    virtual std::optional<std::string> response_for(const InstructionRecord& r) = 0;
    virtual std::string identity() const = 0;
};

/// Stub: response equals the instruction text.
class EchoProvider : public ResponseProvider {
public:
    std::optional<std::string> response_for(const InstructionRecord& r) override {
        return r.instruction;
    }
    std::string identity() const override { return "echo"; }
};

/// Replays a response JSONL ({"id":str,"response":str} per line).
class FileResponseProvider : public ResponseProvider {
public:
    explicit FileResponseProvider(const std::string& path);
    std::optional<std::string> response_for(const InstructionRecord& r) override;
    std::string identity() const override { return identity_; }

private:
    std::map<std::string, std::string> responses_;
    std::string identity_;
};

/// One response per record, in dataset order. In strict mode a missing
/// response is a stage error naming the id; otherwise the record is dropped.
std::vector<std::pair<InstructionRecord, std::string>> collect_responses(
    const Dataset& d, ResponseProvider& provider, bool strict = true);

void write_responses_jsonl(
    const std::vector<std::pair<InstructionRecord, std::string>>& pairs,
    const std::string& path);

struct StageArtifact {
    std::string stage;
    std::string input_digest;
    std::string params_digest;
    std::string path;
    size_t records = 0;
    std::map<std::string, size_t> extra_counts;
};

/// Orchestrates quality -> seed -> responses -> augmented -> merge with
/// content-addressed stage artifacts persisted under an output directory.
/// Re-running with identical digests reuses the persisted outputs.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::string out_dir);

    // test seams; defaults are built from the config
    void set_scorer(std::unique_ptr<Scorer> s) { scorer_ = std::move(s); }
    void set_embedder(std::unique_ptr<Embedder> e) { embedder_ = std::move(e); }
    void set_provider(std::unique_ptr<ResponseProvider> p) { provider_ = std::move(p); }

    Dataset run_quality_stage(const Dataset& raw);
    Dataset run_seed_stage(const Dataset& hq);
    std::vector<std::pair<InstructionRecord, std::string>> responses_stage(const Dataset& hq);
    Dataset run_augmented_stage(const Dataset& hq, const Dataset& seed,
                                const std::vector<std::pair<InstructionRecord, std::string>>& responses);
    static Dataset merge_stage(const Dataset& seed, const Dataset& augmented);

    /// Full flow; emits manifest.json listing one artifact per stage.
    Dataset run_all(const Dataset& raw);

    const std::vector<StageArtifact>& manifest() const { return manifest_; }
    size_t stages_recomputed() const { return stages_recomputed_; }
    const PipelineConfig& config() const { return cfg_; }

private:
    Scorer& scorer();
    Embedder& embedder();
    ResponseProvider& provider();

    std::string path(const std::string& name) const;
    bool resumable(const StageArtifact& want) const;
    void record_artifact(StageArtifact a);
    void write_manifest() const;
    void load_previous_manifest();

    PipelineConfig cfg_;
    std::string out_dir_;
    std::unique_ptr<Scorer> scorer_;
    std::unique_ptr<Embedder> embedder_;
    std::unique_ptr<ResponseProvider> provider_;

    std::optional<EmbeddingMatrix> hq_embeddings_;

    std::vector<StageArtifact> manifest_;
    std::map<std::string, StageArtifact> previous_;
    size_t stages_recomputed_ = 0;
};

std::string dataset_digest(const Dataset& d);

}  // namespace curator
