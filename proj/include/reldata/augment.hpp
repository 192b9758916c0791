#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/parallel.hpp"
#include "reldata/providers.hpp"

namespace reldata {

/// How source records are drawn for each target language.
///   Uniform  - uniformly over every source-language record.
///   Weighted - the quota is split evenly across source languages, then
///              drawn uniformly within each language.
enum class SourcePolicy { Uniform, Weighted };

SourcePolicy parse_source_policy(std::string_view text);
std::string_view to_string(SourcePolicy policy);

struct AugmentPlan {
    Task task = Task::QC;
    std::set<std::string> target_languages;
    std::size_t per_language_quota = 1;
    SourcePolicy source_policy = SourcePolicy::Uniform;
    std::uint64_t master_seed = 0;
};

/// Languages of `eval_languages` with no training record. When `task` is
/// given, only that task's training counts are considered.
std::set<std::string> missing_languages(const CorpusStats& train_stats,
                                        const std::set<std::string>& eval_languages,
                                        std::optional<Task> task = std::nullopt);

/// Mean record count over the languages present in `records` for the task,
/// rounded to the nearest integer (at least 1).
std::size_t default_quota(const std::vector<RelevanceRecord>& records, Task task);

struct AugmentReport {
    std::size_t requested = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    std::size_t duplicates_removed = 0;
    std::map<std::string, std::size_t> per_language;
    /// Targets that already have training data.
    std::vector<std::string> targets_already_present;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct AugmentResult {
    std::vector<RelevanceRecord> records;
    AugmentReport report;
};

/// Translates queries of Original training records into each target
/// language, copying candidate and label verbatim. Selection is without
/// replacement: each (source, target) pair gets a seed derived from the
/// master seed, and the quota lowest-seed sources are taken. Output is
/// sorted by (seed, source id). Provider failures skip the record and are
/// counted; a quota larger than the source pool emits every source and warns.
AugmentResult augment_by_translation(const std::vector<RelevanceRecord>& records,
                                     const AugmentPlan& plan, Translator& translator,
                                     std::size_t in_flight = kDefaultInFlight);

}  // namespace reldata
