#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reldata/types.hpp"

namespace reldata {

struct TranslationRequest {
    std::string text;
    std::string source_language;
    std::string target_language;
};

struct TranslationResult {
    std::string text;
};

using EmbeddingVector = std::vector<double>;

/// Raw log-domain scores of the "yes" and "no" answer tokens.
struct ScorePair {
    double logp_yes = 0.0;
    double logp_no = 0.0;
};

struct ScoreRequest {
    Task task = Task::QC;
    std::string query;
    std::string candidate;
    std::string language;
};

/// Scales `values` to unit L2 norm in place. Throws DataError on a zero or
/// non-finite vector.
void l2_normalize(std::span<double> values);

double dot(std::span<const double> a, std::span<const double> b);

// All providers must tolerate concurrent calls.

class Translator {
public:
    virtual ~Translator() = default;
    virtual TranslationResult translate(const TranslationRequest& request) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One unit-normalized vector per text, all of the same dimension.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual ScorePair score(const ScoreRequest& request) = 0;
};

/// Returns "⟦<target>⟧ " + text.
class MockTranslator final : public Translator {
public:
    TranslationResult translate(const TranslationRequest& request) override;
};

/// Character-trigram hashing embedder. Text is NFC-normalized and lowercased,
/// padded as U+2402 text U+2403, and each code-point trigram's UTF-8 bytes
/// are hashed with FNV-1a 64; bucket = hash mod dimension gets +1. The
/// counts are then L2-normalized.
class MockEmbedder final : public Embedder {
public:
    static constexpr std::size_t kDefaultDimension = 64;

    explicit MockEmbedder(std::size_t dimension = kDefaultDimension);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    [[nodiscard]] EmbeddingVector embed_one(std::string_view text) const;
    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
};

/// Token-overlap scorer: s = Jaccard of lowercased whitespace tokens,
/// logp_yes = ln(s + 1e-6), logp_no = ln(1 - s + 1e-6).
class MockScorer final : public RelevanceScorer {
public:
    static constexpr double kEpsilon = 1e-6;

    ScorePair score(const ScoreRequest& request) override;
    [[nodiscard]] static double jaccard(std::string_view query, std::string_view candidate);
};

/// Retry schedule for remote providers.
struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{100};
    double backoff_multiplier = 2.0;
};

struct HttpEndpoints {
    std::string translate_url;
    std::string embed_url;
    std::string score_url;
    /// Optional per-task scorer endpoints; fall back to score_url.
    std::string score_url_qc;
    std::string score_url_qi;
    std::string token;
    std::chrono::milliseconds timeout{10000};
    RetryPolicy retry;

    /// Reads PROVIDER_TRANSLATE_URL, PROVIDER_EMBED_URL, PROVIDER_SCORE_URL,
    /// PROVIDER_SCORE_URL_QC, PROVIDER_SCORE_URL_QI and PROVIDER_TOKEN.
    static HttpEndpoints from_environment();
    /// Non-empty fields of `overrides` replace ours.
    void overlay(const HttpEndpoints& overrides);
};

/// Called before each retry with (attempt, max_attempts, error, delay).
using RetryLogger =
    std::function<void(int, int, const std::string&, std::chrono::milliseconds)>;

/// Runs `call` under the retry policy. After the last failed attempt a
/// ProviderError is thrown. Non-retryable ProviderErrors (bad payloads)
/// propagate immediately.
class RetryingCaller {
public:
    explicit RetryingCaller(RetryPolicy policy, RetryLogger logger = {});

    template <typename Fn>
    auto operator()(std::string_view what, Fn&& call) const -> decltype(call());

    [[nodiscard]] const RetryPolicy& policy() const noexcept { return policy_; }

private:
    void sleep_before(int attempt, const std::string& error) const;

    RetryPolicy policy_;
    RetryLogger logger_;
};

/// Transport failures (connection refused, timeouts, 5xx) are retried;
/// other errors are not.
class TransientProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

template <typename Fn>
auto RetryingCaller::operator()(std::string_view what, Fn&& call) const -> decltype(call()) {
    for (int attempt = 1;; ++attempt) {
        try {
            return call();
        } catch (const TransientProviderError& e) {
            if (attempt >= policy_.max_attempts) {
                throw ProviderError(std::string{what} + " failed after " +
                                    std::to_string(attempt) + " attempts: " + e.what());
            }
            sleep_before(attempt, e.what());
        }
    }
}

class HttpTranslator final : public Translator {
public:
    explicit HttpTranslator(HttpEndpoints endpoints, RetryLogger logger = {});
    TranslationResult translate(const TranslationRequest& request) override;

private:
    HttpEndpoints endpoints_;
    RetryingCaller caller_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEndpoints endpoints, std::size_t batch_size = 64,
                          RetryLogger logger = {});
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    HttpEndpoints endpoints_;
    std::size_t batch_size_;
    RetryingCaller caller_;
};

class HttpScorer final : public RelevanceScorer {
public:
    explicit HttpScorer(HttpEndpoints endpoints, RetryLogger logger = {});
    ScorePair score(const ScoreRequest& request) override;

private:
    HttpEndpoints endpoints_;
    RetryingCaller caller_;
};

enum class ProviderMode { Mock, Http };

ProviderMode parse_provider_mode(std::string_view text);

/// Owns one provider of each kind. Mock mode never constructs a network client.
struct ProviderSet {
    std::unique_ptr<Translator> translator;
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<RelevanceScorer> scorer;
    ProviderMode mode = ProviderMode::Mock;

    static ProviderSet make(ProviderMode mode, const HttpEndpoints& endpoints = {},
                            RetryLogger logger = {});
};

}  // namespace reldata
