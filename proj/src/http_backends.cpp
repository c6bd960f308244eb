#include "curator/http_backends.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace curator {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base) {
    auto scheme_end = base.find("://");
    size_t path_start =
        base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base, ""};
    std::string prefix = base.substr(path_start);
    if (prefix == "/") prefix.clear();
    return {base.substr(0, path_start), prefix};
}

json post_json(const EndpointConfig& cfg, const std::string& route, const json& body,
               const std::string& stage) {
    auto url = parse_base_url(cfg.base_url);
    httplib::Client client(url.host_port);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        auto res = client.Post(url.path_prefix + route, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw StageError(stage, std::string("unparseable response body: ") + e.what());
        }
    }
    throw StageError(stage, route + " failed after " + std::to_string(cfg.max_retries + 1) +
                                " attempts (" + last_error + ")");
}

// Runs one task per batch with at most in_flight worker threads; slot order
// in the output is fixed by batch index regardless of scheduling.
void for_each_batch(size_t total, size_t batch_size, int in_flight,
                    const std::function<void(size_t batch_index, size_t begin, size_t end)>& work) {
    if (total == 0) return;
    size_t batches = (total + batch_size - 1) / batch_size;
    if (in_flight <= 1 || batches == 1) {
        for (size_t b = 0; b < batches; ++b)
            work(b, b * batch_size, std::min(total, (b + 1) * batch_size));
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            size_t b = next.fetch_add(1);
            if (b >= batches) return;
            try {
                work(b, b * batch_size, std::min(total, (b + 1) * batch_size));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    size_t workers = std::min<size_t>(static_cast<size_t>(in_flight), batches);
    for (size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<double> HttpScorer::score(const std::vector<ScoreItem>& items) {
    std::vector<double> out(items.size());
    for_each_batch(items.size(), cfg_.batch_size, cfg_.in_flight,
                   [&](size_t, size_t begin, size_t end) {
        json body;
        body["items"] = json::array();
        for (size_t i = begin; i < end; ++i)
            body["items"].push_back({{"instruction", items[i].instruction},
                                     {"input", items[i].input},
                                     {"response", items[i].response}});
        json reply;
        try {
            reply = post_json(cfg_, "/score", body, "scoring");
        } catch (const StageError& e) {
            throw BackendItemError("scoring", begin, e.what());
        }
        if (!reply.contains("scores") || !reply["scores"].is_array() ||
            reply["scores"].size() != end - begin)
            throw StageError("scoring", "scores array misaligned with items");
        for (size_t i = begin; i < end; ++i) {
            double v = reply["scores"][i - begin].get<double>();
            if (!std::isfinite(v)) throw BackendItemError("scoring", i, "non-finite score");
            out[i] = v;
        }
    });
    return out;
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out(texts.size());
    std::atomic<size_t> seen_dim{0};
    for_each_batch(texts.size(), cfg_.batch_size, cfg_.in_flight,
                   [&](size_t, size_t begin, size_t end) {
        json body;
        body["texts"] = json::array();
        for (size_t i = begin; i < end; ++i) body["texts"].push_back(texts[i]);
        json reply = post_json(cfg_, "/embed", body, "embedding");
        if (!reply.contains("embeddings") || !reply["embeddings"].is_array() ||
            reply["embeddings"].size() != end - begin)
            throw StageError("embedding", "embeddings array misaligned with texts");
        for (size_t i = begin; i < end; ++i) {
            auto v = reply["embeddings"][i - begin].get<std::vector<double>>();
            size_t expect = seen_dim.load();
            if (expect == 0) {
                seen_dim.compare_exchange_strong(expect, v.size());
                expect = seen_dim.load();
            }
            if (v.size() != expect)
                throw StageError("embedding", "dimension mismatch across batches: " +
                                                  std::to_string(v.size()) + " vs " +
                                                  std::to_string(expect));
            out[i] = std::move(v);
        }
    });
    return out;
}

std::pair<double, double> HttpJudge::judge(const std::string& instruction,
                                           const std::string& response_1,
                                           const std::string& response_2) {
    json body = {{"instruction", instruction},
                 {"response_1", response_1},
                 {"response_2", response_2}};
    json reply = post_json(cfg_, "/judge", body, "judge");
    if (!reply.contains("score_1") || !reply.contains("score_2"))
        throw StageError("judge", "response missing score_1/score_2");
    return {reply["score_1"].get<double>(), reply["score_2"].get<double>()};
}

}  // namespace curator
