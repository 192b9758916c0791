#include "reldata/selfcheck.hpp"

#include <algorithm>

#include "reldata/scoring.hpp"

namespace reldata {

FilterAction parse_filter_action(std::string_view text) {
    if (text == "remove") return FilterAction::Remove;
    if (text == "flag" || text == "flag-only" || text == "flag_only") return FilterAction::FlagOnly;
    throw ConfigError("unknown filter action '" + std::string{text} + "' (expected remove or flag)");
}

std::string_view to_string(FilterAction action) {
    return action == FilterAction::Remove ? "remove" : "flag";
}

void FilterConfig::validate() const {
    if (!(tau > 0.5 && tau <= 1.0)) {
        throw ConfigError("confidence threshold tau must lie in (0.5, 1], got " + std::to_string(tau));
    }
}

bool contradicts(int label, double p_yes, double tau) noexcept {
    return (label == 0 && p_yes >= tau) || (label == 1 && p_yes <= 1.0 - tau);
}

double FilterVerdict::disagreement() const noexcept {
    if (!p_yes) return 0.0;
    return label == 1 ? 1.0 - *p_yes : *p_yes;
}

nlohmann::ordered_json FilterVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["task"] = to_string(task);
    j["language"] = language;
    j["origin"] = to_string(origin);
    j["label"] = label;
    if (p_yes) {
        j["p_yes"] = *p_yes;
    } else {
        j["p_yes"] = nullptr;
    }
    j["contradiction"] = contradiction;
    j["removed"] = removed;
    return j;
}

namespace {

FilterVerdict judge(const RelevanceRecord& r, std::optional<double> p_yes, const FilterConfig& config) {
    FilterVerdict v;
    v.id = r.id;
    v.task = r.task;
    v.language = r.language;
    v.origin = r.origin;
    v.label = r.label;
    v.p_yes = p_yes;
    v.contradiction = p_yes && contradicts(r.label, *p_yes, config.tau);
    v.removed = v.contradiction && config.action == FilterAction::Remove;
    return v;
}

FilterResult assemble(const std::vector<RelevanceRecord>& records, std::vector<FilterVerdict> verdicts) {
    FilterResult result;
    result.kept.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!verdicts[i].removed) result.kept.push_back(records[i]);
    }
    result.verdicts = std::move(verdicts);
    return result;
}

}  // namespace

FilterResult validate_corpus(const std::vector<RelevanceRecord>& records, RelevanceScorer& scorer,
                             const FilterConfig& config, std::size_t in_flight) {
    config.validate();
    std::vector<std::optional<double>> scores(records.size());
    parallel_for(records.size(), in_flight, [&](std::size_t i) {
        const auto& r = records[i];
        try {
            scores[i] = normalize_yes(scorer.score({r.task, r.query, r.candidate, r.language}));
        } catch (const ProviderError&) {
        } catch (const DataError&) {
        }
    });
    std::vector<FilterVerdict> verdicts;
    verdicts.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) verdicts.push_back(judge(records[i], scores[i], config));
    return assemble(records, std::move(verdicts));
}

FilterResult apply_verdicts(const std::vector<RelevanceRecord>& records,
                            std::span<const FilterVerdict> scored_verdicts, const FilterConfig& config) {
    config.validate();
    if (scored_verdicts.size() != records.size()) throw DataError("verdicts do not align with records");
    std::vector<FilterVerdict> verdicts;
    verdicts.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        verdicts.push_back(judge(records[i], scored_verdicts[i].p_yes, config));
    }
    return assemble(records, std::move(verdicts));
}

nlohmann::ordered_json FilterSummary::to_json() const {
    auto cell = [](const Cell& c) {
        return nlohmann::ordered_json{{"kept", c.kept},
                                      {"removed", c.removed},
                                      {"flagged", c.flagged},
                                      {"unscored", c.unscored}};
    };
    auto table = [&](const std::map<std::string, Cell>& m) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [k, c] : m) j[k] = cell(c);
        return j;
    };
    nlohmann::ordered_json j;
    j["totals"] = cell(totals);
    j["by_task"] = table(by_task);
    j["by_language"] = table(by_language);
    j["by_origin"] = table(by_origin);
    auto& top = j["top_contradictions"] = nlohmann::ordered_json::array();
    for (const auto& v : top_contradictions) top.push_back(v.to_json());
    j["warnings"] = warnings;
    return j;
}

FilterSummary filter_report(std::span<const FilterVerdict> verdicts, std::size_t top_n) {
    FilterSummary s;
    auto bump = [](FilterSummary::Cell& c, const FilterVerdict& v) {
        if (!v.scored()) ++c.unscored;
        if (v.contradiction) ++c.flagged;
        if (v.removed) {
            ++c.removed;
        } else {
            ++c.kept;
        }
    };
    std::vector<FilterVerdict> contradictions;
    for (const auto& v : verdicts) {
        bump(s.totals, v);
        bump(s.by_task[std::string{to_string(v.task)}], v);
        bump(s.by_language[v.language], v);
        bump(s.by_origin[std::string{to_string(v.origin)}], v);
        if (v.contradiction) contradictions.push_back(v);
    }
    std::stable_sort(contradictions.begin(), contradictions.end(),
                     [](const FilterVerdict& a, const FilterVerdict& b) {
                         if (a.disagreement() != b.disagreement()) return a.disagreement() > b.disagreement();
                         return a.id < b.id;
                     });
    if (contradictions.size() > top_n) contradictions.resize(top_n);
    s.top_contradictions = std::move(contradictions);
    if (!verdicts.empty() && s.totals.kept == 0) {
        s.warnings.push_back("WARNING: every record was removed; check the scorer and tau");
    }
    if (s.totals.unscored > 0) {
        s.warnings.push_back(std::to_string(s.totals.unscored) + " records could not be scored and were kept");
    }
    return s;
}

}  // namespace reldata
