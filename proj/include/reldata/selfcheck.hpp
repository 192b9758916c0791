#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/parallel.hpp"
#include "reldata/providers.hpp"

namespace reldata {

enum class FilterAction { Remove, FlagOnly };

FilterAction parse_filter_action(std::string_view text);
std::string_view to_string(FilterAction action);

struct FilterConfig {
    /// Confidence threshold; must lie in (0.5, 1].
    double tau = 0.9;
    FilterAction action = FilterAction::Remove;

    void validate() const;
};

/// label 0 with p_yes >= tau, or label 1 with p_yes <= 1 - tau.
bool contradicts(int label, double p_yes, double tau) noexcept;

struct FilterVerdict {
    std::string id;
    Task task = Task::QC;
    std::string language;
    Origin origin = Origin::Original;
    int label = 0;
    /// Absent when the scorer failed on this record.
    std::optional<double> p_yes;
    bool contradiction = false;
    bool removed = false;

    [[nodiscard]] bool scored() const noexcept { return p_yes.has_value(); }
    /// How strongly the model disagrees with the label, in [0, 1].
    [[nodiscard]] double disagreement() const noexcept;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct FilterResult {
    std::vector<RelevanceRecord> kept;
    std::vector<FilterVerdict> verdicts;
};

/// Single scoring pass over all records; verdicts are in input order.
/// Records the scorer cannot judge are kept with an unscored verdict.
FilterResult validate_corpus(const std::vector<RelevanceRecord>& records, RelevanceScorer& scorer,
                             const FilterConfig& config, std::size_t in_flight = kDefaultInFlight);

/// Re-judges existing scores under another config without rescoring.
FilterResult apply_verdicts(const std::vector<RelevanceRecord>& records,
                            std::span<const FilterVerdict> scored_verdicts,
                            const FilterConfig& config);

struct FilterSummary {
    struct Cell {
        std::size_t kept = 0;
        std::size_t removed = 0;
        std::size_t flagged = 0;
        std::size_t unscored = 0;
    };

    Cell totals;
    std::map<std::string, Cell> by_task;
    std::map<std::string, Cell> by_language;
    std::map<std::string, Cell> by_origin;
    /// Most confident contradictions first.
    std::vector<FilterVerdict> top_contradictions;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

FilterSummary filter_report(std::span<const FilterVerdict> verdicts, std::size_t top_n = 20);

}  // namespace reldata
