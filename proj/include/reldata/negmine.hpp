#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/parallel.hpp"
#include "reldata/providers.hpp"

namespace reldata {

/// All category paths (QC) or item titles (QI). Candidate ids are positions
/// in catalog order.
class CandidateCatalog {
public:
    CandidateCatalog(Task task, std::vector<std::string> texts);

    /// One candidate per line; blank lines ignored, repeated texts keep the first.
    static CandidateCatalog load(const std::filesystem::path& path, Task task);
    /// Distinct candidates of `records` for the task, sorted bytewise.
    static CandidateCatalog from_records(const std::vector<RelevanceRecord>& records, Task task);

    void save(const std::filesystem::path& path) const;

    [[nodiscard]] Task task() const noexcept { return task_; }
    [[nodiscard]] std::size_t size() const noexcept { return texts_.size(); }
    [[nodiscard]] const std::string& text(std::size_t id) const { return texts_.at(id); }
    [[nodiscard]] const std::vector<std::string>& texts() const noexcept { return texts_; }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& text) const;

private:
    Task task_;
    std::vector<std::string> texts_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Row-major matrix of unit vectors aligned with catalog order. Immutable
/// after construction and safe for concurrent readers.
class EmbeddingIndex {
public:
    EmbeddingIndex(std::size_t dimension, std::vector<double> rows);

    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] std::size_t size() const noexcept {
        return dimension_ == 0 ? 0 : data_.size() / dimension_;
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dimension_, dimension_};
    }

private:
    std::size_t dimension_;
    std::vector<double> data_;
};

/// Embeds every catalog entry in batches. Throws DataError for an empty
/// catalog or a vector that cannot be normalized.
EmbeddingIndex build_index(const CandidateCatalog& catalog, Embedder& embedder,
                           std::size_t batch_size = 256);

struct Neighbor {
    std::size_t id = 0;
    double cosine = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Descending cosine, ties by ascending id.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) noexcept {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
}

/// Exact top-k by full scan and partial sort. Requires 1 <= k <= size (minus
/// one when excluding); throws ConfigError otherwise and DataError on a
/// dimension mismatch.
std::vector<Neighbor> top_k_similar(const EmbeddingIndex& index, std::span<const double> query,
                                    std::size_t k, std::optional<std::size_t> exclude = std::nullopt);

/// Same contract as top_k_similar, computed with a bounded heap.
std::vector<Neighbor> top_k_similar_heap(const EmbeddingIndex& index, std::span<const double> query,
                                         std::size_t k,
                                         std::optional<std::size_t> exclude = std::nullopt);

/// (normalized query, candidate) pairs labeled positive anywhere in a corpus.
class PositivePairSet {
public:
    void add(std::string_view query, std::string_view candidate);
    [[nodiscard]] bool contains(std::string_view query, std::string_view candidate) const;
    [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }

    static PositivePairSet from_records(const std::vector<RelevanceRecord>& records);

private:
    static std::string key(std::string_view query, std::string_view candidate);
    std::unordered_set<std::string> pairs_;
};

struct NegativeMiningConfig {
    std::size_t k_min = 20;
    std::size_t k_max = 50;
    /// Negatives per positive. The total per run is round(ratio * positives);
    /// fractional remainders go to the positives with the lowest seeds.
    double ratio = 1.0;
    std::uint64_t master_seed = 0;
    /// Empty: negatives keep the positive's query and language. Otherwise one
    /// translated negative set per target language other than the positive's.
    std::vector<std::string> target_languages;

    /// Throws ConfigError unless 1 <= k_min <= k_max <= catalog_size - 1.
    void validate(std::size_t catalog_size) const;
};

/// Provenance of one mined negative, enough to recompute its top-K set.
struct MiningTrace {
    std::string negative_id;
    std::string source_id;
    std::size_t source_candidate = 0;
    std::size_t k = 0;
    std::size_t chosen_candidate = 0;
    std::size_t ordinal = 0;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct MiningReport {
    std::size_t positives = 0;
    std::size_t requested = 0;
    std::size_t mined = 0;
    /// Positive/target draws whose top-K set was empty after exclusions.
    std::size_t skipped = 0;
    std::size_t translation_failures = 0;
    std::map<std::string, std::size_t> per_language;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct MiningResult {
    std::vector<RelevanceRecord> negatives;
    std::vector<MiningTrace> traces;
    MiningReport report;
};

/// For each positive (label 1) and each draw: K is drawn uniformly from
/// [k_min, k_max], the top-K neighbours of the positive's candidate are
/// retrieved (the candidate itself excluded), candidates forming a known
/// positive pair with the negative's query are removed, and one of the rest
/// is picked uniformly. Output is sorted by (source id, target, ordinal).
MiningResult mine_hard_negatives(const std::vector<RelevanceRecord>& positives,
                                 const CandidateCatalog& catalog, const EmbeddingIndex& index,
                                 Translator* translator, const NegativeMiningConfig& config,
                                 const PositivePairSet& exclusion,
                                 std::size_t in_flight = kDefaultInFlight);

}  // namespace reldata
