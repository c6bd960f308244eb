#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "curator/embedding.hpp"
#include "curator/judge.hpp"
#include "curator/scoring.hpp"

namespace curator {

/// Connection parameters shared by all remote backends.
struct EndpointConfig {
    std::string base_url;
    std::chrono::seconds timeout{30};
    int max_retries = 2;       // additional attempts after the first
    size_t batch_size = 32;
    int in_flight = 1;         // bounded concurrency across batches
};

/// POST {base}/score with {"items":[{"instruction","input","response"},...]},
/// expects {"scores":[number,...]} aligned to items. Batched with bounded
/// concurrency; results reassembled in input order.
class HttpScorer : public Scorer {
public:
    explicit HttpScorer(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    std::vector<double> score(const std::vector<ScoreItem>& items) override;
    std::string identity() const override { return "http:" + cfg_.base_url; }

private:
    EndpointConfig cfg_;
};

/// POST {base}/embed with {"texts":[str,...]}, expects
/// {"embeddings":[[number,...],...]} aligned and dimension-consistent.
class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override { return "http:" + cfg_.base_url; }

private:
    EndpointConfig cfg_;
};

/// POST {base}/judge with {"instruction","response_1","response_2"},
/// expects {"score_1":number,"score_2":number}.
class HttpJudge : public JudgeClient {
public:
    explicit HttpJudge(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    std::pair<double, double> judge(const std::string& instruction,
                                    const std::string& response_1,
                                    const std::string& response_2) override;

private:
    EndpointConfig cfg_;
};

}  // namespace curator
