#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "reldata/providers.hpp"
#include "reldata/scoring.hpp"
#include "support.hpp"

using namespace reldata;

namespace {

// In-process fake provider service backed by the mock providers.
class FakeService {
public:
    FakeService() {
        server_.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            const auto body = nlohmann::json::parse(req.body);
            MockTranslator t;
            const auto out = t.translate({body["text"], body["source_lang"], body["target_lang"]});
            res.set_content(nlohmann::json{{"text", out.text}}.dump(), "application/json");
        });
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            const auto body = nlohmann::json::parse(req.body);
            std::vector<std::vector<double>> vectors;
            for (const auto& t : body["texts"]) {
                auto v = MockEmbedder{8}.embed_one(t.get<std::string>());
                for (auto& x : v) x *= 3.0;  // the client must renormalize
                vectors.push_back(v);
            }
            if (mismatch) vectors.back().push_back(1.0);
            res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        });
        auto score = [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            const int n = ++score_calls;
            if (n <= fail_first) {
                res.status = fail_status;
                return;
            }
            if (non_finite) {
                res.set_content(R"({"logp_yes": 1e999, "logp_no": 0})", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            MockScorer s;
            const auto p = s.score({parse_task(body["task"].get<std::string>()), body["query"], body["candidate"],
                                    body["language"]});
            res.set_content(nlohmann::json{{"logp_yes", p.logp_yes}, {"logp_no", p.logp_no}}.dump(),
                            "application/json");
        };
        server_.Post("/score", score);
        server_.Post("/score-qi", score);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread{[this] { server_.listen_after_bind(); }};
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }

    std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    std::vector<std::string> paths() {
        std::lock_guard lock{mutex_};
        return paths_;
    }
    std::vector<std::string> auth() {
        std::lock_guard lock{mutex_};
        return auth_;
    }

    std::atomic<int> score_calls{0};
    int fail_first = 0;
    int fail_status = 503;
    bool non_finite = false;
    bool mismatch = false;

private:
    void record(const httplib::Request& req) {
        std::lock_guard lock{mutex_};
        paths_.push_back(req.path);
        auth_.push_back(req.get_header_value("Authorization"));
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mutex_;
    std::vector<std::string> paths_;
    std::vector<std::string> auth_;
};

HttpEndpoints fast_endpoints(const FakeService& svc) {
    HttpEndpoints ep;
    ep.translate_url = svc.url();
    ep.embed_url = svc.url();
    ep.score_url = svc.url();
    ep.retry.initial_backoff = std::chrono::milliseconds{1};
    ep.timeout = std::chrono::milliseconds{2000};
    return ep;
}

}  // namespace

TEST_CASE("http translator posts the documented payload with the bearer token") {
    FakeService svc;
    auto ep = fast_endpoints(svc);
    ep.token = "t0k";
    HttpTranslator t{ep};
    CHECK(t.translate({"zapatos rojos", "es", "de"}).text == "\xE2\x9F\xA6" "de\xE2\x9F\xA7 zapatos rojos");
    CHECK(svc.paths() == std::vector<std::string>{"/translate"});
    CHECK(svc.auth() == std::vector<std::string>{"Bearer t0k"});
}

TEST_CASE("http embedder batches requests and renormalizes") {
    FakeService svc;
    HttpEmbedder e{fast_endpoints(svc), 2};
    const std::vector<std::string> texts{"a b", "c d", "e f", "g h", "i j"};
    const auto vectors = e.embed(texts);
    REQUIRE(vectors.size() == 5);
    CHECK(svc.paths().size() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto want = MockEmbedder{8}.embed_one(texts[i]);
        for (std::size_t d = 0; d < 8; ++d) CHECK(vectors[i][d] == doctest::Approx(want[d]).epsilon(1e-12));
    }
}

TEST_CASE("http embedder rejects a dimension mismatch within a batch") {
    FakeService svc;
    svc.mismatch = true;
    HttpEmbedder e{fast_endpoints(svc), 4};
    CHECK_THROWS_AS(e.embed(std::vector<std::string>{"a", "b"}), ProviderError);
}

TEST_CASE("http scorer reproduces the mock bit for bit and routes per task") {
    FakeService svc;
    auto ep = fast_endpoints(svc);
    ep.score_url_qi = svc.url("/score-qi");
    HttpScorer http{ep};
    MockScorer mock;
    const ScoreRequest qc{Task::QC, "red shoes", "red dress", "en"};
    const ScoreRequest qi{Task::QI, "blue lamp", "Nordvik blue lamp", "fr"};
    CHECK(http.score(qc).logp_yes == mock.score(qc).logp_yes);
    CHECK(http.score(qi).logp_no == mock.score(qi).logp_no);
    CHECK(svc.paths() == std::vector<std::string>{"/score", "/score-qi"});
}

TEST_CASE("transient failures are retried with backoff, then succeed") {
    FakeService svc;
    svc.fail_first = 2;
    std::vector<std::pair<int, long long>> retries;
    HttpScorer http{fast_endpoints(svc), [&](int attempt, int, const std::string&, std::chrono::milliseconds d) {
                        retries.emplace_back(attempt, d.count());
                    }};
    CHECK_NOTHROW(http.score({Task::QC, "a", "a", "en"}));
    CHECK(svc.score_calls == 3);
    CHECK(retries == std::vector<std::pair<int, long long>>{{1, 1}, {2, 2}});
}

TEST_CASE("persistent 5xx gives up after three attempts") {
    FakeService svc;
    svc.fail_first = 100;
    HttpScorer http{fast_endpoints(svc)};
    CHECK_THROWS_AS(http.score({Task::QC, "a", "a", "en"}), ProviderError);
    CHECK(svc.score_calls == 3);
}

TEST_CASE("client errors are not retried") {
    FakeService svc;
    svc.fail_first = 100;
    svc.fail_status = 400;
    HttpScorer http{fast_endpoints(svc)};
    CHECK_THROWS_AS(http.score({Task::QC, "a", "a", "en"}), ProviderError);
    CHECK(svc.score_calls == 1);
}

TEST_CASE("non-finite scores are a hard error") {
    FakeService svc;
    svc.non_finite = true;
    HttpScorer http{fast_endpoints(svc)};
    CHECK_THROWS_AS(http.score({Task::QC, "a", "a", "en"}), ProviderError);
}

TEST_CASE("unreachable endpoints surface as provider errors") {
    HttpEndpoints ep;
    ep.score_url = "http://127.0.0.1:" + std::to_string(testsupport::closed_port());
    ep.retry.initial_backoff = std::chrono::milliseconds{1};
    int retries = 0;
    HttpScorer http{ep, [&](int, int, const std::string&, std::chrono::milliseconds) { ++retries; }};
    CHECK_THROWS_AS(http.score({Task::QC, "a", "a", "en"}), ProviderError);
    CHECK(retries == 2);
}

TEST_CASE("malformed endpoint configuration is a config error") {
    HttpEndpoints ep;
    HttpScorer missing{ep};
    CHECK_THROWS_AS(missing.score({Task::QC, "a", "a", "en"}), ConfigError);
    ep.score_url = "https://secure.example";
    HttpScorer https{ep};
    CHECK_THROWS_AS(https.score({Task::QC, "a", "a", "en"}), ConfigError);
    ep.score_url = "scorer:8000";
    HttpScorer bare{ep};
    CHECK_THROWS_AS(bare.score({Task::QC, "a", "a", "en"}), ConfigError);
}

TEST_CASE("batch scoring over http keeps input order under concurrency") {
    FakeService svc;
    HttpScorer http{fast_endpoints(svc)};
    MockScorer mock;
    std::vector<RelevanceRecord> records;
    for (int i = 0; i < 60; ++i) {
        records.push_back(testsupport::make_record(Task::QC, "q" + std::to_string(i % 7) + " shoes",
                                                   "shoes " + std::to_string(i % 5), i % 2));
    }
    const auto over_http = score_records(records, http, 8, true);
    const auto local = score_records(records, mock, 1, true);
    REQUIRE(over_http.scored.size() == local.scored.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(over_http.scored[i].id == records[i].id);
        CHECK(over_http.scored[i].p_yes == local.scored[i].p_yes);
    }
}
