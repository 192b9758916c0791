#include "reldata/augment.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "reldata/hashing.hpp"

namespace reldata {

SourcePolicy parse_source_policy(std::string_view text) {
    if (text == "uniform") return SourcePolicy::Uniform;
    if (text == "weighted") return SourcePolicy::Weighted;
    throw ConfigError("unknown source policy '" + std::string{text} + "' (expected uniform or weighted)");
}

std::string_view to_string(SourcePolicy policy) {
    return policy == SourcePolicy::Uniform ? "uniform" : "weighted";
}

std::set<std::string> missing_languages(const CorpusStats& train_stats,
                                        const std::set<std::string>& eval_languages,
                                        std::optional<Task> task) {
    const auto present = train_stats.languages(task);
    std::set<std::string> missing;
    for (const auto& lang : eval_languages) {
        if (!present.contains(lang)) missing.insert(lang);
    }
    return missing;
}

std::size_t default_quota(const std::vector<RelevanceRecord>& records, Task task) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        if (r.task == task) ++counts[r.language];
    }
    if (counts.empty()) return 1;
    std::size_t total = 0;
    for (const auto& [lang, n] : counts) total += n;
    const double mean = static_cast<double>(total) / static_cast<double>(counts.size());
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(mean)));
}

nlohmann::ordered_json AugmentReport::to_json() const {
    nlohmann::ordered_json j;
    j["requested"] = requested;
    j["successes"] = successes;
    j["failures"] = failures;
    j["duplicates_removed"] = duplicates_removed;
    j["per_language"] = per_language;
    j["targets_already_present"] = targets_already_present;
    j["warnings"] = warnings;
    return j;
}

namespace {

struct Draw {
    std::uint64_t seed = 0;
    std::size_t source = 0;  // index into the records vector
    std::string target;
};

bool draw_less(const Draw& a, const Draw& b, const std::vector<RelevanceRecord>& records) {
    if (a.seed != b.seed) return a.seed < b.seed;
    const auto& ida = records[a.source].id;
    const auto& idb = records[b.source].id;
    if (ida != idb) return ida < idb;
    return a.target < b.target;
}

}  // namespace

AugmentResult augment_by_translation(const std::vector<RelevanceRecord>& records,
                                     const AugmentPlan& plan, Translator& translator,
                                     std::size_t in_flight) {
    if (plan.per_language_quota < 1) throw ConfigError("augmentation quota must be at least 1");
    AugmentResult result;
    auto& report = result.report;

    std::set<std::string> present;
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.task != plan.task) continue;
        present.insert(r.language);
        if (r.origin == Origin::Original) sources.push_back(i);
    }
    for (const auto& t : plan.target_languages) {
        if (present.contains(t)) report.targets_already_present.push_back(t);
    }
    if (!report.targets_already_present.empty()) {
        report.warnings.push_back("some targets already have training data");
    }

    std::vector<Draw> draws;
    for (const auto& target : plan.target_languages) {
        std::vector<Draw> pool;
        for (std::size_t idx : sources) {
            if (records[idx].language == target) continue;
            pool.push_back({derive_seed(plan.master_seed, records[idx].id + '\x1f' + target), idx, target});
        }
        std::sort(pool.begin(), pool.end(),
                  [&](const Draw& a, const Draw& b) { return draw_less(a, b, records); });
        const std::size_t quota = plan.per_language_quota;
        if (pool.size() < quota) {
            report.warnings.push_back("target " + target + ": quota " + std::to_string(quota) +
                                      " exceeds " + std::to_string(pool.size()) +
                                      " available sources; emitting all");
        }
        std::vector<Draw> chosen;
        if (plan.source_policy == SourcePolicy::Uniform || pool.size() <= quota) {
            chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(quota, pool.size())));
        } else {
            std::map<std::string, std::vector<Draw>> by_language;
            for (const auto& d : pool) by_language[records[d.source].language].push_back(d);
            const std::size_t share = quota / by_language.size();
            std::size_t extra = quota % by_language.size();
            std::vector<bool> taken(records.size(), false);
            for (auto& [lang, list] : by_language) {
                const std::size_t want = share + (extra > 0 ? 1 : 0);
                if (extra > 0) --extra;
                for (std::size_t k = 0; k < std::min(want, list.size()); ++k) {
                    chosen.push_back(list[k]);
                    taken[list[k].source] = true;
                }
            }
            // Languages short of their share are topped up from the global order.
            for (const auto& d : pool) {
                if (chosen.size() >= quota) break;
                if (!taken[d.source]) {
                    chosen.push_back(d);
                    taken[d.source] = true;
                }
            }
        }
        draws.insert(draws.end(), chosen.begin(), chosen.end());
    }
    std::sort(draws.begin(), draws.end(),
              [&](const Draw& a, const Draw& b) { return draw_less(a, b, records); });
    report.requested = draws.size();

    std::vector<std::optional<RelevanceRecord>> slots(draws.size());
    parallel_for(draws.size(), in_flight, [&](std::size_t i) {
        const auto& src = records[draws[i].source];
        try {
            auto translated = translator.translate({src.query, src.language, draws[i].target});
            RelevanceRecord out;
            out.task = src.task;
            out.query = std::move(translated.text);
            out.language = draws[i].target;
            out.candidate = src.candidate;
            out.label = src.label;
            out.origin = Origin::Translated;
            out.source_id = src.id;
            out.id = record_content_id(out.task, out.query, out.candidate, out.label);
            validate_record(out);
            slots[i] = std::move(out);
        } catch (const ProviderError&) {
        } catch (const DataError&) {
        }
    });

    std::unordered_set<std::string> seen;
    for (auto& slot : slots) {
        if (!slot) {
            ++report.failures;
            continue;
        }
        if (!seen.insert(slot->id).second) {
            ++report.duplicates_removed;
            continue;
        }
        ++report.per_language[slot->language];
        result.records.push_back(std::move(*slot));
    }
    report.successes = result.records.size();
    if (report.failures > 0) {
        report.warnings.push_back(std::to_string(report.failures) + " translations failed");
    }
    return result;
}

}  // namespace reldata
