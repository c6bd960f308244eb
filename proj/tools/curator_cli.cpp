// curator: instruction-data curation pipeline CLI.
//
// Subcommands map 1:1 onto the library stages: score, filter, embed,
// select, responses, augment, merge, run-all, judge, stats, dedupe.
// Data goes to files/stdout; structured log events go to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "curator/http_backends.hpp"
#include "curator/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace curator;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void log_event(const std::string& event, json fields = json::object()) {
    fields["event"] = event;
    std::cerr << fields.dump() << "\n";
}

// sentinel "none" disables a threshold
double parse_threshold(const std::string& text, bool is_alpha) {
    if (text == "none")
        return is_alpha ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    return std::stod(text);
}

void write_run_manifest(const std::string& output_path, const std::string& subcommand,
                        json info) {
    info["tool_version"] = kVersion;
    info["subcommand"] = subcommand;
    std::ofstream out(output_path + ".manifest.json", std::ios::binary | std::ios::trunc);
    out << info.dump(2) << '\n';
}

std::unique_ptr<Scorer> make_scorer(const std::string& url, uint64_t seed, int jobs) {
    if (url.empty()) return std::make_unique<LocalScorer>(seed);
    EndpointConfig ep;
    ep.base_url = url;
    ep.in_flight = jobs;
    return std::make_unique<HttpScorer>(ep);
}

std::unique_ptr<Embedder> make_embedder(const std::string& url, size_t dim, uint64_t seed,
                                        int jobs) {
    if (url.empty()) return std::make_unique<LocalEmbedder>(dim, seed);
    EndpointConfig ep;
    ep.base_url = url;
    ep.in_flight = jobs;
    return std::make_unique<HttpEmbedder>(ep);
}

std::map<std::string, std::string> load_response_map(const std::string& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("responses", "cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line);
        out[obj.at("id").get<std::string>()] = obj.at("response").get<std::string>();
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curator: quality/coverage/necessity instruction data selection"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // ---- stats ----
    auto* cmd_stats = app.add_subcommand("stats", "Summarize a JSONL corpus");
    std::string stats_input;
    cmd_stats->add_option("input", stats_input, "corpus JSONL")->required();

    // ---- dedupe ----
    auto* cmd_dedupe = app.add_subcommand("dedupe", "Drop exact duplicates (by content id)");
    std::string dd_input, dd_output;
    cmd_dedupe->add_option("--input", dd_input)->required();
    cmd_dedupe->add_option("--output", dd_output)->required();

    // ---- score ----
    auto* cmd_score = app.add_subcommand("score", "Score records (quality or necessity)");
    std::string sc_input, sc_output, sc_kind = "quality", sc_scorer_url, sc_responses;
    uint64_t sc_seed = 42;
    int sc_jobs = 1;
    bool sc_skip = false;
    cmd_score->add_option("--input", sc_input)->required();
    cmd_score->add_option("--output", sc_output)->required();
    cmd_score->add_option("--kind", sc_kind)->check(CLI::IsMember({"quality", "necessity"}));
    cmd_score->add_option("--scorer-url", sc_scorer_url)->envname("CURATOR_SCORER_URL");
    cmd_score->add_option("--responses", sc_responses,
                          "response JSONL, required for necessity scoring");
    cmd_score->add_option("--local-seed", sc_seed);
    cmd_score->add_option("--jobs", sc_jobs);
    cmd_score->add_flag("--skip-failures", sc_skip);

    // ---- filter ----
    auto* cmd_filter = app.add_subcommand("filter", "Apply a threshold to scored records");
    std::string fl_input, fl_output, fl_alpha, fl_beta;
    cmd_filter->add_option("--input", fl_input)->required();
    cmd_filter->add_option("--output", fl_output)->required();
    cmd_filter->add_option("--alpha", fl_alpha, "keep quality scores strictly above (or 'none')");
    cmd_filter->add_option("--beta", fl_beta, "keep necessity scores strictly below (or 'none')");

    // ---- embed ----
    auto* cmd_embed = app.add_subcommand("embed", "Embed instructions into a cache file");
    std::string em_input, em_output, em_url, em_fields = "instruction";
    size_t em_dim = 64;
    uint64_t em_seed = 42;
    int em_jobs = 1;
    cmd_embed->add_option("--input", em_input)->required();
    cmd_embed->add_option("--output", em_output)->required();
    cmd_embed->add_option("--embedder-url", em_url)->envname("CURATOR_EMBEDDER_URL");
    cmd_embed->add_option("--dim", em_dim, "local embedder dimension");
    cmd_embed->add_option("--local-seed", em_seed);
    cmd_embed->add_option("--embed-fields", em_fields)
        ->check(CLI::IsMember({"instruction", "instruction+input"}));
    cmd_embed->add_option("--jobs", em_jobs);

    // ---- select ----
    auto* cmd_select = app.add_subcommand("select", "K-center greedy over an embedding cache");
    std::string se_cache, se_output, se_pool, se_first = "smallest-id";
    size_t se_budget = 0;
    int se_jobs = 1;
    cmd_select->add_option("--embeddings", se_cache)->required();
    cmd_select->add_option("--budget", se_budget)->required()->check(CLI::PositiveNumber);
    cmd_select->add_option("--output", se_output, "selection report JSON")->required();
    cmd_select->add_option("--pool-ids", se_pool, "file with one existing-pool id per line");
    cmd_select->add_option("--first-center", se_first)
        ->check(CLI::IsMember({"smallest-id", "centroid-farthest"}));
    cmd_select->add_option("--jobs", se_jobs);

    // ---- responses ----
    auto* cmd_resp = app.add_subcommand("responses", "Collect initial-model responses");
    std::string rp_input, rp_output, rp_file;
    bool rp_lenient = false;
    cmd_resp->add_option("--input", rp_input)->required();
    cmd_resp->add_option("--output", rp_output)->required();
    cmd_resp->add_option("--responses", rp_file,
                         "response JSONL to replay; omit for the echo stub");
    cmd_resp->add_flag("--lenient", rp_lenient, "drop records with missing responses");

    // ---- augment / run-all shared config flags ----
    auto add_config_flags = [](CLI::App* cmd, std::string& preset_name, std::string& alpha,
                               std::string& beta, size_t& seed_budget, size_t& aug_budget,
                               std::string& scorer_url, std::string& embedder_url,
                               std::string& responses, std::string& pool_mode,
                               bool& include_seed, size_t& dim, uint64_t& seed, int& jobs,
                               bool& skip) {
        cmd->add_option("--preset", preset_name)->check(CLI::IsMember({"alpaca", "mixture"}));
        cmd->add_option("--alpha", alpha);
        cmd->add_option("--beta", beta);
        cmd->add_option("--seed-budget", seed_budget)->check(CLI::PositiveNumber);
        cmd->add_option("--augmented-budget", aug_budget);
        cmd->add_option("--scorer-url", scorer_url)->envname("CURATOR_SCORER_URL");
        cmd->add_option("--embedder-url", embedder_url)->envname("CURATOR_EMBEDDER_URL");
        cmd->add_option("--responses", responses, "initial-model response JSONL");
        cmd->add_option("--pool-mode", pool_mode)
            ->check(CLI::IsMember({"seed-as-pool", "empty-pool"}));
        cmd->add_flag("--include-seed-in-augmented", include_seed);
        cmd->add_option("--embed-dim", dim);
        cmd->add_option("--local-seed", seed);
        cmd->add_option("--jobs", jobs);
        cmd->add_flag("--skip-failures", skip);
    };

    auto* cmd_augment = app.add_subcommand("augment", "Necessity scoring + augmented selection");
    std::string ag_hq, ag_seed_path, ag_out_dir, ag_output;
    std::string ag_preset, ag_alpha, ag_beta, ag_scorer, ag_embedder, ag_responses, ag_pool;
    size_t ag_seed_budget = 500, ag_budget = 500, ag_dim = 64;
    uint64_t ag_local_seed = 42;
    int ag_jobs = 1;
    bool ag_include_seed = false, ag_skip = false;
    cmd_augment->add_option("--hq", ag_hq, "high-quality dataset JSONL")->required();
    cmd_augment->add_option("--seed", ag_seed_path, "seed dataset JSONL")->required();
    cmd_augment->add_option("--out-dir", ag_out_dir)->required();
    cmd_augment->add_option("--output", ag_output)->required();
    add_config_flags(cmd_augment, ag_preset, ag_alpha, ag_beta, ag_seed_budget, ag_budget,
                     ag_scorer, ag_embedder, ag_responses, ag_pool, ag_include_seed, ag_dim,
                     ag_local_seed, ag_jobs, ag_skip);
    cmd_augment->get_option("--responses")->required();

    auto* cmd_merge = app.add_subcommand("merge", "Merge seed and augmented datasets");
    std::string mg_seed, mg_aug, mg_output;
    cmd_merge->add_option("--seed", mg_seed)->required();
    cmd_merge->add_option("--augmented", mg_aug)->required();
    cmd_merge->add_option("--output", mg_output)->required();

    auto* cmd_run = app.add_subcommand("run-all", "Run the full selection pipeline");
    std::string ra_input, ra_out_dir = "curator-out", ra_config;
    std::string ra_preset, ra_alpha, ra_beta, ra_scorer, ra_embedder, ra_responses, ra_pool;
    size_t ra_seed_budget = 0, ra_budget = std::numeric_limits<size_t>::max(), ra_dim = 0;
    uint64_t ra_local_seed = std::numeric_limits<uint64_t>::max();
    int ra_jobs = 0;
    bool ra_include_seed = false, ra_skip = false, ra_dry = false;
    cmd_run->add_option("--input", ra_input, "raw corpus JSONL");
    cmd_run->add_option("--out-dir", ra_out_dir);
    cmd_run->add_option("--config", ra_config, "JSON config file (flags override)");
    add_config_flags(cmd_run, ra_preset, ra_alpha, ra_beta, ra_seed_budget, ra_budget,
                     ra_scorer, ra_embedder, ra_responses, ra_pool, ra_include_seed, ra_dim,
                     ra_local_seed, ra_jobs, ra_skip);
    cmd_run->add_flag("--dry-run", ra_dry, "print resolved config, write nothing");

    auto* cmd_judge = app.add_subcommand("judge", "Pairwise double evaluation of two models");
    std::string jd_instructions, jd_a, jd_b, jd_url, jd_output;
    cmd_judge->add_option("--instructions", jd_instructions)->required();
    cmd_judge->add_option("--responses-a", jd_a)->required();
    cmd_judge->add_option("--responses-b", jd_b)->required();
    cmd_judge->add_option("--judge-url", jd_url)->envname("CURATOR_JUDGE_URL")->required();
    cmd_judge->add_option("--output", jd_output)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_stats->parsed()) {
            auto d = load_jsonl(stats_input);
            std::cout << format_stats(stats(d));
            return 0;
        }

        if (cmd_dedupe->parsed()) {
            auto d = load_jsonl(dd_input);
            auto out = dedupe(d);
            write_jsonl(out, dd_output);
            log_event("dedupe", {{"in", d.size()}, {"out", out.size()}});
            write_run_manifest(dd_output, "dedupe",
                               {{"input", dd_input}, {"input_digest", dataset_digest(d)},
                                {"output", dd_output}, {"records", out.size()}});
            return 0;
        }

        if (cmd_score->parsed()) {
            auto d = load_jsonl(sc_input);
            auto scorer = make_scorer(sc_scorer_url, sc_seed, sc_jobs);
            std::vector<ScoredRecord> scored;
            if (sc_kind == "quality") {
                scored = score_quality(d, *scorer, sc_skip);
            } else {
                if (sc_responses.empty())
                    throw CLI::ValidationError("--responses is required for --kind necessity");
                FileResponseProvider provider(sc_responses);
                auto pairs = collect_responses(d, provider, !sc_skip);
                scored = score_necessity(pairs, *scorer, sc_skip);
            }
            write_scored_jsonl(scored, sc_output);
            log_event("score", {{"kind", sc_kind}, {"records", scored.size()}});
            write_run_manifest(sc_output, "score",
                               {{"input", sc_input}, {"input_digest", dataset_digest(d)},
                                {"kind", sc_kind}, {"scorer", scorer->identity()},
                                {"records", scored.size()}});
            return 0;
        }

        if (cmd_filter->parsed()) {
            if (fl_alpha.empty() == fl_beta.empty())
                throw CLI::ValidationError("pass exactly one of --alpha or --beta");
            auto scored = load_scored_jsonl(fl_input);
            Dataset out = fl_alpha.empty()
                              ? filter_necessity(scored, parse_threshold(fl_beta, false))
                              : filter_quality(scored, parse_threshold(fl_alpha, true));
            write_jsonl(out, fl_output);
            log_event("filter", {{"in", scored.size()}, {"out", out.size()}});
            write_run_manifest(fl_output, "filter",
                               {{"input", fl_input},
                                {"threshold", fl_alpha.empty() ? fl_beta : fl_alpha},
                                {"records", out.size()}});
            return 0;
        }

        if (cmd_embed->parsed()) {
            auto d = load_jsonl(em_input);
            auto embedder = make_embedder(em_url, em_dim, em_seed, em_jobs);
            auto matrix = embed_dataset(d, *embedder, embed_fields_from_string(em_fields));
            save_embedding_cache(matrix, embedder->identity(), em_output);
            log_event("embed", {{"records", matrix.size()}, {"dim", matrix.dim()}});
            write_run_manifest(em_output, "embed",
                               {{"input", em_input}, {"input_digest", dataset_digest(d)},
                                {"embedder", embedder->identity()}, {"dim", matrix.dim()},
                                {"records", matrix.size()}});
            return 0;
        }

        if (cmd_select->parsed()) {
            auto cache = load_embedding_cache(se_cache);
            std::vector<std::string> pool;
            if (!se_pool.empty()) {
                std::ifstream in(se_pool);
                if (!in) throw StageError("selection", "cannot open " + se_pool);
                std::string id;
                while (std::getline(in, id))
                    if (!id.empty()) pool.push_back(id);
            }
            SelectionOptions opts{se_jobs, first_center_from_string(se_first)};
            auto sel = k_center_greedy(cache.matrix, pool, se_budget, opts);
            std::ofstream out(se_output, std::ios::binary | std::ios::trunc);
            out << selection_report_json(sel, se_budget, opts);
            log_event("select", {{"selected", sel.selected_ids.size()},
                                 {"truncated", sel.truncated}});
            write_run_manifest(se_output, "select",
                               {{"embeddings", se_cache}, {"budget", se_budget},
                                {"embedder", cache.embedder_identity},
                                {"first_center", se_first},
                                {"selected", sel.selected_ids.size()}});
            return 0;
        }

        if (cmd_resp->parsed()) {
            auto d = load_jsonl(rp_input);
            std::unique_ptr<ResponseProvider> provider;
            if (rp_file.empty())
                provider = std::make_unique<EchoProvider>();
            else
                provider = std::make_unique<FileResponseProvider>(rp_file);
            auto pairs = collect_responses(d, *provider, !rp_lenient);
            write_responses_jsonl(pairs, rp_output);
            log_event("responses", {{"records", pairs.size()}});
            write_run_manifest(rp_output, "responses",
                               {{"input", rp_input}, {"provider", provider->identity()},
                                {"records", pairs.size()}});
            return 0;
        }

        if (cmd_augment->parsed()) {
            PipelineConfig cfg = ag_preset.empty() ? PipelineConfig{} : preset(ag_preset);
            if (!ag_beta.empty()) cfg.beta = parse_threshold(ag_beta, false);
            if (cmd_augment->count("--augmented-budget")) cfg.augmented_budget = ag_budget;
            cfg.scorer_url = ag_scorer;
            cfg.embedder_url = ag_embedder;
            cfg.responses_path = ag_responses;
            if (!ag_pool.empty()) cfg.augmented_pool_mode = pool_mode_from_string(ag_pool);
            cfg.exclude_seed_from_augmented = !ag_include_seed;
            cfg.embed_dim = ag_dim;
            cfg.local_seed = ag_local_seed;
            cfg.jobs = ag_jobs;
            cfg.skip_failures = ag_skip;

            auto hq = load_jsonl(ag_hq);
            auto seed = load_jsonl(ag_seed_path);
            Pipeline pipeline(cfg, ag_out_dir);
            FileResponseProvider provider(ag_responses);
            auto pairs = collect_responses(hq, provider, !ag_skip);
            auto augmented = pipeline.run_augmented_stage(hq, seed, pairs);
            write_jsonl(augmented, ag_output);
            log_event("augment", {{"records", augmented.size()}});
            write_run_manifest(ag_output, "augment",
                               {{"hq", ag_hq}, {"seed", ag_seed_path},
                                {"config", json::parse(config_to_json(cfg))},
                                {"records", augmented.size()}});
            return 0;
        }

        if (cmd_merge->parsed()) {
            auto seed = load_jsonl(mg_seed);
            auto aug = load_jsonl(mg_aug);
            auto merged = Pipeline::merge_stage(seed, aug);
            write_jsonl(merged, mg_output);
            log_event("merge", {{"seed", seed.size()}, {"augmented", aug.size()},
                                {"final", merged.size()}});
            write_run_manifest(mg_output, "merge",
                               {{"seed", mg_seed}, {"augmented", mg_aug},
                                {"records", merged.size()}});
            return 0;
        }

        if (cmd_run->parsed()) {
            PipelineConfig cfg;
            if (!ra_config.empty()) cfg = load_config_file(ra_config);
            if (!ra_preset.empty()) cfg = preset(ra_preset);
            if (!ra_alpha.empty()) cfg.alpha = parse_threshold(ra_alpha, true);
            if (!ra_beta.empty()) cfg.beta = parse_threshold(ra_beta, false);
            if (cmd_run->count("--seed-budget")) cfg.seed_budget = ra_seed_budget;
            if (cmd_run->count("--augmented-budget")) cfg.augmented_budget = ra_budget;
            if (!ra_scorer.empty()) cfg.scorer_url = ra_scorer;
            if (!ra_embedder.empty()) cfg.embedder_url = ra_embedder;
            if (!ra_responses.empty()) cfg.responses_path = ra_responses;
            if (!ra_pool.empty()) cfg.augmented_pool_mode = pool_mode_from_string(ra_pool);
            if (ra_include_seed) cfg.exclude_seed_from_augmented = false;
            if (cmd_run->count("--embed-dim")) cfg.embed_dim = ra_dim;
            if (cmd_run->count("--local-seed")) cfg.local_seed = ra_local_seed;
            if (cmd_run->count("--jobs")) cfg.jobs = ra_jobs;
            if (ra_skip) cfg.skip_failures = true;

            if (ra_dry) {
                json resolved = json::parse(config_to_json(cfg));
                if (!ra_preset.empty()) resolved["preset"] = ra_preset;
                std::cout << resolved.dump(2) << "\n";
                return 0;
            }
            if (ra_input.empty())
                throw CLI::ValidationError("--input is required unless --dry-run");

            auto raw = load_jsonl(ra_input);
            Pipeline pipeline(cfg, ra_out_dir);
            auto final_ds = pipeline.run_all(raw);
            write_jsonl(final_ds, (fs::path(ra_out_dir) / "final.jsonl").string());
            log_event("run-all", {{"raw", raw.size()}, {"final", final_ds.size()},
                                  {"stages_recomputed", pipeline.stages_recomputed()}});
            return 0;
        }

        if (cmd_judge->parsed()) {
            auto instructions = load_jsonl(jd_instructions);
            auto resp_a = load_response_map(jd_a);
            auto resp_b = load_response_map(jd_b);
            EndpointConfig ep;
            ep.base_url = jd_url;
            HttpJudge judge_client(ep);
            auto report = run_match(instructions, resp_a, resp_b, judge_client);
            std::ofstream out(jd_output, std::ios::binary | std::ios::trunc);
            out << match_report_json(report);
            log_event("judge", {{"win", report.wins}, {"tie", report.ties},
                                {"lose", report.losses},
                                {"winning_score", report.score}});
            write_run_manifest(jd_output, "judge",
                               {{"instructions", jd_instructions},
                                {"judge_url", jd_url}, {"total", report.total},
                                {"winning_score", report.score}});
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        log_event("usage-error", {{"message", e.what()}});
        return kExitUsage;
    } catch (const ContractError& e) {
        log_event("usage-error", {{"message", e.what()}});
        return kExitUsage;
    } catch (const StageError& e) {
        log_event("stage-error", {{"stage", e.stage()}, {"message", e.what()}});
        return kExitRuntime;
    } catch (const std::exception& e) {
        log_event("error", {{"message", e.what()}});
        return kExitRuntime;
    }
    return kExitUsage;
}
