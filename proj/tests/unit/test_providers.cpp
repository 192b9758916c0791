#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "reldata/fixtures.hpp"
#include "reldata/providers.hpp"

using namespace reldata;

namespace {

// Reference trigram embedder written without the library's helpers. Inputs
// are expected to be lowercase and already in NFC.
std::vector<double> reference_embedding(const std::string& text, std::size_t dim = 64) {
    std::vector<std::string> cps{"\xE2\x90\x82"};
    for (std::size_t i = 0; i < text.size();) {
        const auto lead = static_cast<unsigned char>(text[i]);
        const std::size_t len = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
        cps.push_back(text.substr(i, len));
        i += len;
    }
    cps.emplace_back("\xE2\x90\x83");
    std::vector<double> v(dim, 0.0);
    for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
        std::uint64_t h = 14695981039346656037ULL;
        for (const char c : cps[i] + cps[i + 1] + cps[i + 2]) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        v[h % dim] += 1.0;
    }
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("mock translator follows its contract") {
    MockTranslator t;
    CHECK(t.translate({"wireless headphones", "en", "de"}).text == "\xE2\x9F\xA6" "de\xE2\x9F\xA7 wireless headphones");
    CHECK(t.translate({"casque sans fil", "fr", "pl"}).text == "\xE2\x9F\xA6" "pl\xE2\x9F\xA7 casque sans fil");
    CHECK_THROWS_AS(t.translate({"", "en", "de"}), DataError);
    CHECK_THROWS_AS(t.translate({"x", "de", "de"}), DataError);
}

TEST_CASE("mock embedder matches an independent re-implementation") {
    MockEmbedder e;
    for (const std::string text : {"abc", "xyz", "red shoes", "electronics > audio devices > headphones",
                                    "\xC3\xA9t\xC3\xA9", "\xEA\xB5\xAC\xEB\xA7\xA4"}) {
        const auto got = e.embed_one(text);
        const auto want = reference_embedding(text);
        REQUIRE(got.size() == 64);
        for (std::size_t i = 0; i < 64; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    const auto a = e.embed_one("abc");
    const auto b = e.embed_one("xyz");
    const auto ra = reference_embedding("abc");
    const auto rb = reference_embedding("xyz");
    double oracle = 0.0;
    for (std::size_t i = 0; i < 64; ++i) oracle += ra[i] * rb[i];
    CHECK(std::abs(dot(a, b) - oracle) <= 1e-12);
}

TEST_CASE("mock embedder normalizes case and composition before hashing") {
    MockEmbedder e;
    CHECK(e.embed_one("Red SHOES") == e.embed_one("red shoes"));
    CHECK(e.embed_one("Caf\x65\xCC\x81") == e.embed_one("caf\xC3\xA9"));
}

TEST_CASE("mock embedder output is unit length and deterministic") {
    MockEmbedder e;
    const auto titles = fixtures::item_titles(500);
    const auto first = e.embed(titles);
    const auto second = e.embed(titles);
    REQUIRE(first.size() == titles.size());
    CHECK(first == second);
    for (const auto& v : first) CHECK(std::abs(norm_of(v) - 1.0) <= 1e-9);
    CHECK_THROWS_AS((void)e.embed_one(""), DataError);
    CHECK_THROWS_AS(MockEmbedder{0}, ConfigError);
    CHECK(MockEmbedder{16}.embed_one("abc").size() == 16);
}

TEST_CASE("mock scorer uses token Jaccard with epsilon floors") {
    MockScorer s;
    SUBCASE("full overlap") {
        const auto p = s.score({Task::QC, "red shoes", "red shoes", "en"});
        CHECK(p.logp_yes == std::log(1.0 + 1e-6));
        CHECK(p.logp_yes == doctest::Approx(1e-6).epsilon(1e-6));
        CHECK(p.logp_no == std::log(1e-6));
    }
    SUBCASE("disjoint tokens") {
        const auto p = s.score({Task::QC, "red shoes", "garden hose", "en"});
        CHECK(p.logp_yes == std::log(1e-6));
        CHECK(p.logp_no == std::log(1.0 + 1e-6));
    }
    SUBCASE("one shared token of three") {
        const auto p = s.score({Task::QC, "red shoes", "red dress", "en"});
        CHECK(p.logp_yes == doctest::Approx(std::log(1.0 / 3.0 + 1e-6)).epsilon(1e-12));
        CHECK(MockScorer::jaccard("red shoes", "red dress") == 1.0 / 3.0);
    }
    SUBCASE("case and repeated tokens do not matter") {
        CHECK(MockScorer::jaccard("Red red SHOES", "shoes red") == 1.0);
    }
    CHECK_THROWS_AS(s.score({Task::QC, " ", "x", "en"}), DataError);
}

TEST_CASE("l2_normalize rejects zero and non-finite vectors") {
    std::vector<double> v{3.0, 4.0};
    l2_normalize(v);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(l2_normalize(zero), DataError);
    std::vector<double> bad{1.0, std::nan("")};
    CHECK_THROWS_AS(l2_normalize(bad), DataError);
}

TEST_CASE("provider mode parsing") {
    CHECK(parse_provider_mode("mock") == ProviderMode::Mock);
    CHECK(parse_provider_mode("http") == ProviderMode::Http);
    CHECK_THROWS_AS(parse_provider_mode("grpc"), ConfigError);
}

TEST_CASE("mock mode ignores provider environment variables") {
    ::setenv("PROVIDER_TRANSLATE_URL", "http://127.0.0.1:1", 1);
    ::setenv("PROVIDER_EMBED_URL", "not a url", 1);
    ::setenv("PROVIDER_SCORE_URL", "http://127.0.0.1:1", 1);
    auto set = ProviderSet::make(ProviderMode::Mock, HttpEndpoints::from_environment());
    CHECK(set.translator->translate({"x", "en", "de"}).text == "\xE2\x9F\xA6" "de\xE2\x9F\xA7 x");
    CHECK(set.embedder->embed(std::vector<std::string>{"abc"}).size() == 1);
    CHECK(std::isfinite(set.scorer->score({Task::QI, "a", "b", "en"}).logp_yes));
    ::unsetenv("PROVIDER_TRANSLATE_URL");
    ::unsetenv("PROVIDER_EMBED_URL");
    ::unsetenv("PROVIDER_SCORE_URL");
}

TEST_CASE("endpoints come from the environment and can be overlaid") {
    ::setenv("PROVIDER_SCORE_URL", "http://scorer:8000", 1);
    ::setenv("PROVIDER_TOKEN", "secret", 1);
    auto env = HttpEndpoints::from_environment();
    CHECK(env.score_url == "http://scorer:8000");
    CHECK(env.token == "secret");
    HttpEndpoints base;
    base.score_url = "http://other";
    base.embed_url = "http://embed";
    base.overlay(env);
    CHECK(base.score_url == "http://scorer:8000");
    CHECK(base.embed_url == "http://embed");
    ::unsetenv("PROVIDER_SCORE_URL");
    ::unsetenv("PROVIDER_TOKEN");
}
