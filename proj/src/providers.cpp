#include "reldata/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "reldata/hashing.hpp"
#include "reldata/text.hpp"

namespace reldata {

void l2_normalize(std::span<double> values) {
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("embedding contains a non-finite value");
        sum += v * v;
    }
    if (sum == 0.0) throw DataError("cannot normalize a zero vector");
    const double norm = std::sqrt(sum);
    for (double& v : values) v /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

TranslationResult MockTranslator::translate(const TranslationRequest& request) {
    if (request.text.empty()) throw DataError("translation text is empty");
    if (request.source_language == request.target_language) {
        throw DataError("source and target language are both '" + request.target_language + "'");
    }
    return {"⟦" + request.target_language + "⟧ " + request.text};
}

MockEmbedder::MockEmbedder(std::size_t dimension) : dimension_{dimension} {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

EmbeddingVector MockEmbedder::embed_one(std::string_view input) const {
    if (input.empty()) throw DataError("cannot embed empty text");
    auto points = text::code_points(text::nfc_lower(input));
    points.insert(points.begin(), "␂");
    points.emplace_back("␃");
    EmbeddingVector v(dimension_, 0.0);
    for (std::size_t i = 0; i + 2 < points.size(); ++i) {
        const std::string trigram = points[i] + points[i + 1] + points[i + 2];
        v[fnv1a64(trigram) % dimension_] += 1.0;
    }
    l2_normalize(v);
    return v;
}

std::vector<EmbeddingVector> MockEmbedder::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

double MockScorer::jaccard(std::string_view query, std::string_view candidate) {
    const auto q = text::split_whitespace(text::nfc_lower(query));
    const auto c = text::split_whitespace(text::nfc_lower(candidate));
    const std::set<std::string> a(q.begin(), q.end());
    const std::set<std::string> b(c.begin(), c.end());
    std::size_t common = 0;
    for (const auto& t : a) common += b.count(t);
    const std::size_t unite = a.size() + b.size() - common;
    return unite == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unite);
}

ScorePair MockScorer::score(const ScoreRequest& request) {
    if (text::trim(request.query).empty() || text::trim(request.candidate).empty()) {
        throw DataError("score request needs non-empty query and candidate");
    }
    const double s = jaccard(request.query, request.candidate);
    return {std::log(s + kEpsilon), std::log(1.0 - s + kEpsilon)};
}

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string{v} : std::string{};
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url, std::string_view default_path) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("provider URL lacks a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") throw ConfigError("only http:// provider URLs are supported: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
        out.path = std::string{default_path};
    } else {
        out.origin = url.substr(0, path_start);
        out.path = url.substr(path_start);
        if (out.path == "/") out.path = std::string{default_path};
    }
    return out;
}

nlohmann::json post_json(const HttpEndpoints& ep, const std::string& url, std::string_view default_path,
                         const nlohmann::json& body) {
    if (url.empty()) {
        throw ConfigError("no provider URL configured for " + std::string{default_path});
    }
    const auto target = parse_url(url, default_path);
    httplib::Client client{target.origin};
    const auto seconds = ep.timeout.count() / 1000;
    const auto micros = (ep.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Headers headers;
    if (!ep.token.empty()) headers.emplace("Authorization", "Bearer " + ep.token);
    auto response = client.Post(target.path, headers, body.dump(), "application/json");
    if (!response) {
        throw TransientProviderError("POST " + target.origin + target.path + ": " +
                                     httplib::to_string(response.error()));
    }
    if (response->status >= 500 || response->status == 429) {
        throw TransientProviderError("POST " + target.origin + target.path + ": HTTP " +
                                     std::to_string(response->status));
    }
    if (response->status != 200) {
        throw ProviderError("POST " + target.origin + target.path + ": HTTP " +
                            std::to_string(response->status));
    }
    try {
        return nlohmann::json::parse(response->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError("POST " + target.path + ": malformed JSON response: " + e.what());
    }
}

}  // namespace

HttpEndpoints HttpEndpoints::from_environment() {
    HttpEndpoints ep;
    ep.translate_url = env_or_empty("PROVIDER_TRANSLATE_URL");
    ep.embed_url = env_or_empty("PROVIDER_EMBED_URL");
    ep.score_url = env_or_empty("PROVIDER_SCORE_URL");
    ep.score_url_qc = env_or_empty("PROVIDER_SCORE_URL_QC");
    ep.score_url_qi = env_or_empty("PROVIDER_SCORE_URL_QI");
    ep.token = env_or_empty("PROVIDER_TOKEN");
    return ep;
}

void HttpEndpoints::overlay(const HttpEndpoints& o) {
    auto take = [](std::string& mine, const std::string& theirs) {
        if (!theirs.empty()) mine = theirs;
    };
    take(translate_url, o.translate_url);
    take(embed_url, o.embed_url);
    take(score_url, o.score_url);
    take(score_url_qc, o.score_url_qc);
    take(score_url_qi, o.score_url_qi);
    take(token, o.token);
}

RetryingCaller::RetryingCaller(RetryPolicy policy, RetryLogger logger)
    : policy_{policy}, logger_{std::move(logger)} {
    if (policy_.max_attempts < 1) throw ConfigError("retry policy needs at least one attempt");
}

void RetryingCaller::sleep_before(int attempt, const std::string& error) const {
    const double scale = std::pow(policy_.backoff_multiplier, attempt - 1);
    const auto delay = std::chrono::milliseconds{
        static_cast<long long>(static_cast<double>(policy_.initial_backoff.count()) * scale)};
    if (logger_) logger_(attempt, policy_.max_attempts, error, delay);
    std::this_thread::sleep_for(delay);
}

HttpTranslator::HttpTranslator(HttpEndpoints endpoints, RetryLogger logger)
    : endpoints_{std::move(endpoints)}, caller_{endpoints_.retry, std::move(logger)} {}

TranslationResult HttpTranslator::translate(const TranslationRequest& request) {
    if (request.text.empty()) throw DataError("translation text is empty");
    const nlohmann::json body{{"text", request.text},
                              {"source_lang", request.source_language},
                              {"target_lang", request.target_language}};
    const auto reply = caller_("translate", [&] {
        return post_json(endpoints_, endpoints_.translate_url, "/translate", body);
    });
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw ProviderError("translate: response lacks 'text'");
    }
    auto translated = reply["text"].get<std::string>();
    if (text::trim(translated).empty()) throw ProviderError("translate: empty response");
    return {std::move(translated)};
}

HttpEmbedder::HttpEmbedder(HttpEndpoints endpoints, std::size_t batch_size, RetryLogger logger)
    : endpoints_{std::move(endpoints)},
      batch_size_{std::max<std::size_t>(batch_size, 1)},
      caller_{endpoints_.retry, std::move(logger)} {}

std::vector<EmbeddingVector> HttpEmbedder::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::optional<std::size_t> dimension;
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const auto chunk = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        for (const auto& t : chunk) {
            if (t.empty()) throw DataError("cannot embed empty text");
        }
        const nlohmann::json body{{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}};
        const auto reply = caller_("embed", [&] {
            return post_json(endpoints_, endpoints_.embed_url, "/embed", body);
        });
        if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
            throw ProviderError("embed: response lacks 'vectors'");
        }
        const auto& vectors = reply["vectors"];
        if (vectors.size() != chunk.size()) {
            throw ProviderError("embed: expected " + std::to_string(chunk.size()) + " vectors, got " +
                                std::to_string(vectors.size()));
        }
        for (const auto& row : vectors) {
            EmbeddingVector v;
            try {
                v = row.get<EmbeddingVector>();
            } catch (const nlohmann::json::exception&) {
                throw ProviderError("embed: vector is not a list of numbers");
            }
            if (!dimension) dimension = v.size();
            if (v.size() != *dimension || v.empty()) {
                throw ProviderError("embed: dimension mismatch within batch");
            }
            l2_normalize(v);
            out.push_back(std::move(v));
        }
    }
    return out;
}

HttpScorer::HttpScorer(HttpEndpoints endpoints, RetryLogger logger)
    : endpoints_{std::move(endpoints)}, caller_{endpoints_.retry, std::move(logger)} {}

ScorePair HttpScorer::score(const ScoreRequest& request) {
    const auto& per_task = request.task == Task::QC ? endpoints_.score_url_qc : endpoints_.score_url_qi;
    const auto& url = per_task.empty() ? endpoints_.score_url : per_task;
    const nlohmann::json body{{"task", to_string(request.task)},
                              {"query", request.query},
                              {"candidate", request.candidate},
                              {"language", request.language}};
    const auto reply = caller_("score", [&] { return post_json(endpoints_, url, "/score", body); });
    if (!reply.is_object() || !reply.contains("logp_yes") || !reply.contains("logp_no") ||
        !reply["logp_yes"].is_number() || !reply["logp_no"].is_number()) {
        throw ProviderError("score: response lacks numeric logp_yes/logp_no");
    }
    ScorePair pair{reply["logp_yes"].get<double>(), reply["logp_no"].get<double>()};
    if (!std::isfinite(pair.logp_yes) || !std::isfinite(pair.logp_no)) {
        throw ProviderError("score: service returned non-finite log-scores");
    }
    return pair;
}

ProviderMode parse_provider_mode(std::string_view text) {
    if (text == "mock") return ProviderMode::Mock;
    if (text == "http") return ProviderMode::Http;
    throw ConfigError("unknown provider mode '" + std::string{text} + "' (expected mock or http)");
}

ProviderSet ProviderSet::make(ProviderMode mode, const HttpEndpoints& endpoints, RetryLogger logger) {
    ProviderSet set;
    set.mode = mode;
    if (mode == ProviderMode::Mock) {
        set.translator = std::make_unique<MockTranslator>();
        set.embedder = std::make_unique<MockEmbedder>();
        set.scorer = std::make_unique<MockScorer>();
    } else {
        set.translator = std::make_unique<HttpTranslator>(endpoints, logger);
        set.embedder = std::make_unique<HttpEmbedder>(endpoints, 64, logger);
        set.scorer = std::make_unique<HttpScorer>(endpoints, logger);
    }
    return set;
}

}  // namespace reldata
