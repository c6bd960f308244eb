#include <atomic>
#include <thread>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include "curator/http_backends.hpp"

using namespace curator;
using nlohmann::json;

namespace {

/// In-process stub backend speaking the scorer/embedder/judge wire
/// protocols.
struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> score_calls{0};
    std::atomic<int> fail_first_n{0};

    StubServer() {
        server.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            ++score_calls;
            if (fail_first_n.fetch_sub(1) > 0) {
                res.status = 500;
                return;
            }
            auto body = json::parse(req.body);
            json scores = json::array();
            for (const auto& item : body.at("items"))
                scores.push_back(
                    static_cast<double>(item.at("instruction").get<std::string>().size()) -
                    static_cast<double>(item.at("response").get<std::string>().size()));
            res.set_content(json{{"scores", scores}}.dump(), "application/json");
        });
        // always answers a single score, regardless of item count
        server.Post("/misaligned/score", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"scores", {1.0}}}.dump(), "application/json");
        });
        server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            auto body = json::parse(req.body);
            json rows = json::array();
            for (const auto& text : body.at("texts")) {
                auto s = text.get<std::string>();
                rows.push_back({static_cast<double>(s.size()), 1.0, 0.0});
            }
            res.set_content(json{{"embeddings", rows}}.dump(), "application/json");
        });
        server.Post("/judge", [](const httplib::Request& req, httplib::Response& res) {
            auto body = json::parse(req.body);
            double s1 = std::min<size_t>(10, 1 + body.at("response_1").get<std::string>().size() % 10);
            double s2 = std::min<size_t>(10, 1 + body.at("response_2").get<std::string>().size() % 10);
            res.set_content(json{{"score_1", s1}, {"score_2", s2}}.dump(),
                            "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    EndpointConfig endpoint() const {
        EndpointConfig ep;
        ep.base_url = "http://127.0.0.1:" + std::to_string(port);
        ep.timeout = std::chrono::seconds(5);
        return ep;
    }
};

}  // namespace

TEST_CASE("HttpScorer round-trips the wire protocol in order") {
    StubServer stub;
    auto ep = stub.endpoint();
    ep.batch_size = 2;
    HttpScorer scorer(ep);

    std::vector<ScoreItem> items;
    for (int i = 0; i < 5; ++i)
        items.push_back({std::string(10 + i, 'x'), "", std::string(3, 'y')});
    auto scores = scorer.score(items);
    REQUIRE(scores.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(scores[i] == doctest::Approx(10 + i - 3));
}

TEST_CASE("HttpScorer retries transient failures, then succeeds") {
    StubServer stub;
    stub.fail_first_n = 2;
    auto ep = stub.endpoint();
    ep.max_retries = 3;
    HttpScorer scorer(ep);
    auto scores = scorer.score({{std::string("hello"), "", std::string("hi")}});
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == doctest::Approx(3.0));
    CHECK(stub.score_calls.load() == 3);
}

TEST_CASE("HttpScorer gives up after retries with a stage error") {
    StubServer stub;
    stub.fail_first_n = 100;
    auto ep = stub.endpoint();
    ep.max_retries = 1;
    HttpScorer scorer(ep);
    CHECK_THROWS_AS(scorer.score({{std::string("a"), "", std::string("b")}}), StageError);
    CHECK(stub.score_calls.load() == 2);
}

TEST_CASE("HttpScorer rejects misaligned score arrays (and honors URL path prefixes)") {
    StubServer stub;
    auto ep = stub.endpoint();
    ep.base_url += "/misaligned";
    HttpScorer scorer(ep);
    CHECK_THROWS_AS(scorer.score({{std::string("a"), "", std::string("b")},
                                  {std::string("c"), "", std::string("d")}}),
                    StageError);
}

TEST_CASE("HttpEmbedder round-trips aligned, dimension-consistent vectors") {
    StubServer stub;
    auto ep = stub.endpoint();
    ep.batch_size = 2;
    ep.in_flight = 3;
    HttpEmbedder embedder(ep);
    std::vector<std::string> texts = {"a", "bb", "ccc", "dddd", "eeeee"};
    auto rows = embedder.embed(texts);
    REQUIRE(rows.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        REQUIRE(rows[i].size() == 3);
        CHECK(rows[i][0] == doctest::Approx(static_cast<double>(i + 1)));
    }
}

TEST_CASE("HttpJudge round-trips score pairs") {
    StubServer stub;
    HttpJudge judge(stub.endpoint());
    auto [s1, s2] = judge.judge("instr", std::string(4, 'a'), std::string(7, 'b'));
    CHECK(s1 == doctest::Approx(5.0));
    CHECK(s2 == doctest::Approx(8.0));
}
