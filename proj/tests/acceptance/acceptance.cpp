// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/augment.hpp"
#include "reldata/cli.hpp"
#include "reldata/evalreport.hpp"
#include "reldata/fixtures.hpp"
#include "reldata/hashing.hpp"
#include "reldata/negmine.hpp"
#include "reldata/pipeline.hpp"
#include "reldata/scoring.hpp"
#include "reldata/selfcheck.hpp"
#include "support.hpp"

using namespace reldata;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail << what;
        ok = ok && cond;
    }
};

fs::path g_data_dir;

// Arithmetic on the published per-task F1 scores.
void criterion_1(Check& c) {
    c.expect(format_half_up(average_f1(0.8965, 0.8897)) == "0.8931", "avg(0.8965, 0.8897) != 0.8931");
    c.expect(format_half_up(average_f1(0.8896, 0.8833)) == "0.8865", "avg(0.8896, 0.8833) != 0.8865");
}

void criterion_2(Check& c) {
    SplitMix64 rng{20250601};
    double worst_sum = 0.0, worst_shift = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double a = (rng.unit() - 0.5) * 200.0;
        const double b = (rng.unit() - 0.5) * 200.0;
        const double shift = (rng.unit() - 0.5) * 2000.0;
        const double p_yes = normalize_yes({a, b});
        const double p_no = normalize_yes({b, a});
        worst_sum = std::max(worst_sum, std::abs(p_yes + p_no - 1.0));
        worst_shift = std::max(worst_shift, std::abs(normalize_yes({a + shift, b + shift}) - p_yes));
        if (normalize_yes({a, a}) != 0.5) c.expect(false, "equal inputs did not give 0.5");
    }
    c.expect(worst_sum <= 1e-12, "complement error " + std::to_string(worst_sum));
    c.expect(worst_shift <= 1e-12, "shift error " + std::to_string(worst_shift));
    for (const double a : {-1000.0, 0.0, 1000.0}) {
        for (const double b : {-1000.0, 0.0, 1000.0}) {
            c.expect(std::isfinite(normalize_yes({a, b})), "non-finite result at extreme inputs");
        }
    }
    if (c.ok) c.detail << "max complement error " << worst_sum << ", max shift error " << worst_shift;
}

void criterion_3(Check& c) {
    fixtures::SyntheticSpec spec;
    spec.languages = {"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar"};
    spec.records_per_language = 100;
    spec.seed = 31;
    const auto corpus = fixtures::synthetic_corpus(spec).records;
    MockScorer scorer;
    const auto rows = score_records(corpus, scorer, 8, true).scored;
    c.expect(rows.size() == 1000, "expected 1000 scored records");
    const auto grid = threshold_grid(0.01);
    const auto result = calibrate_threshold(rows, 0.01);

    // Independent sweep: fresh counts per threshold, first maximum wins.
    double best_t = 0.0, best_f = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = static_cast<double>(i) / 100.0;
        long tp = 0, fp = 0, fn = 0;
        for (const auto& r : rows) {
            const bool yes = r.p_yes >= t;
            tp += yes && *r.label == 1;
            fp += yes && *r.label == 0;
            fn += !yes && *r.label == 1;
        }
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rc = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f = p + rc > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
        if (f > best_f) {
            best_f = f;
            best_t = t;
        }
    }
    c.expect(result.best_threshold == best_t, "threshold differs from brute force");
    c.expect(result.best_f1 == best_f, "F1 differs from brute force");
    c.expect(std::find(grid.begin(), grid.end(), 0.4) != grid.end(), "0.4 not on the grid");
    c.expect(std::find(grid.begin(), grid.end(), 0.2) != grid.end(), "0.2 not on the grid");
    c.detail << (c.ok ? "t=" + format_half_up(best_t, 2) + " f1=" + format_half_up(best_f) : "");
}

void criterion_4(Check& c) {
    SplitMix64 rng{4444};
    constexpr std::size_t dim = 64;
    std::size_t comparisons = 0;
    for (int catalog = 0; catalog < 20; ++catalog) {
        const std::size_t n = 60 + rng.below(1941);
        std::vector<double> data;
        data.reserve(n * dim);
        for (std::size_t i = 0; i < n * dim; ++i) data.push_back(rng.unit() * 2.0 - 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::span<double> row{data.data() + i * dim, dim};
            std::vector<double> v(row.begin(), row.end());
            l2_normalize(v);
            std::copy(v.begin(), v.end(), row.begin());
        }
        const EmbeddingIndex index{dim, data};
        std::vector<double> q(dim);
        for (auto& x : q) x = rng.unit() * 2.0 - 1.0;
        l2_normalize(q);

        std::vector<std::pair<double, std::size_t>> brute;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += data[i * dim + d] * q[d];
            brute.emplace_back(s, i);
        }
        std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (const std::size_t k : {std::size_t{1}, std::size_t{20}, std::size_t{50}, n - 1}) {
            const auto got = top_k_similar(index, q, k);
            bool same = got.size() == k;
            for (std::size_t i = 0; same && i < k; ++i) same = got[i].id == brute[i].second;
            c.expect(same, "catalog " + std::to_string(catalog) + " k=" + std::to_string(k) + " differs");
            ++comparisons;
        }
    }
    c.detail << (c.ok ? std::to_string(comparisons) + " comparisons" : "");
}

std::string serialize(const std::vector<RelevanceRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

void criterion_5(Check& c) {
    fixtures::SyntheticSpec spec;
    spec.languages = {"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar"};
    spec.records_per_language = 500;
    spec.positive_ratio = 1.0;
    spec.catalog_size = 2000;
    spec.seed = 55;
    const auto corpus = fixtures::synthetic_corpus(spec);
    c.expect(corpus.records.size() == 5000, "fixture does not hold 5000 positives");
    const CandidateCatalog catalog{Task::QC, corpus.catalog};
    MockEmbedder embedder;
    const auto index = build_index(catalog, embedder);
    const auto exclusion = PositivePairSet::from_records(corpus.records);
    NegativeMiningConfig cfg;
    cfg.master_seed = 5;
    const auto first = mine_hard_negatives(corpus.records, catalog, index, nullptr, cfg, exclusion);
    const auto second = mine_hard_negatives(corpus.records, catalog, index, nullptr, cfg, exclusion, 3);

    std::size_t bad_label = 0, outside = 0, excluded = 0;
    for (std::size_t i = 0; i < first.negatives.size(); ++i) {
        const auto& neg = first.negatives[i];
        const auto& tr = first.traces[i];
        bad_label += neg.label != 0;
        excluded += exclusion.contains(neg.query, neg.candidate);
        // Recompute the top-K set by brute force.
        const auto src = index.row(tr.source_candidate);
        const double chosen = dot(index.row(tr.chosen_candidate), src);
        std::size_t ahead = 0;
        for (std::size_t j = 0; j < index.size(); ++j) {
            if (j == tr.source_candidate || j == tr.chosen_candidate) continue;
            const double s = dot(index.row(j), src);
            ahead += s > chosen || (s == chosen && j < tr.chosen_candidate);
        }
        outside += tr.chosen_candidate == tr.source_candidate || ahead >= tr.k;
        outside += neg.candidate != catalog.text(tr.chosen_candidate);
    }
    const auto& rep = first.report;
    c.expect(bad_label == 0, std::to_string(bad_label) + " negatives not labelled 0");
    c.expect(outside == 0, std::to_string(outside) + " negatives outside their top-K set");
    c.expect(excluded == 0, std::to_string(excluded) + " negatives in the exclusion set");
    c.expect(rep.requested == 5000, "requested " + std::to_string(rep.requested) + " != 5000");
    c.expect(rep.mined + rep.skipped == 5000 && first.negatives.size() == rep.mined, "ratio not met");
    c.expect(serialize(first.negatives) == serialize(second.negatives), "same-seed runs differ");
    c.detail << (c.ok ? std::to_string(rep.mined) + " mined, " + std::to_string(rep.skipped) + " skipped" : "");
}

void criterion_6(Check& c) {
    fixtures::SyntheticSpec spec;
    spec.records_per_language = 200;
    const auto corpus = fixtures::synthetic_corpus(spec).records;
    std::unordered_map<std::string, const RelevanceRecord*> by_id;
    for (const auto& r : corpus) by_id[r.id] = &r;
    const auto missing = missing_languages(compute_stats(corpus, "train"),
                                           {"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar"});
    c.expect(missing == std::set<std::string>{"ar", "de", "it", "pl"}, "unexpected missing languages");
    AugmentPlan plan;
    plan.target_languages = missing;
    plan.per_language_quota = 250;
    plan.master_seed = 6;
    MockTranslator translator;
    const auto result = augment_by_translation(corpus, plan, translator);
    std::map<std::string, std::size_t> per_lang;
    std::size_t mismatched = 0;
    for (const auto& r : result.records) {
        if (r.origin != Origin::Translated || !r.source_id) {
            ++mismatched;
            continue;
        }
        ++per_lang[r.language];
        const auto* src = by_id.at(*r.source_id);
        mismatched += r.candidate != src->candidate || r.label != src->label;
    }
    for (const auto& lang : missing) {
        c.expect(per_lang[lang] == 250, lang + " has " + std::to_string(per_lang[lang]) + " records");
    }
    c.expect(mismatched == 0, std::to_string(mismatched) + " records differ from their source");
    c.detail << (c.ok ? "4 x 250 translated records" : "");
}

std::set<std::string> removed_ids(const FilterResult& r) {
    std::set<std::string> out;
    for (const auto& v : r.verdicts) {
        if (v.removed) out.insert(v.id);
    }
    return out;
}

void criterion_7(Check& c) {
    std::vector<RelevanceRecord> records;
    for (int i = 0; i < 1000; ++i) {
        const std::string w = "sku" + std::to_string(i);
        records.push_back(i % 2 == 0 ? testsupport::make_record(Task::QC, w + " shoes", w + " shoes", 1)
                                     : testsupport::make_record(Task::QC, w + " lamp", "garden hose", 0));
    }
    SplitMix64 rng{77};
    std::set<std::string> flipped;
    while (flipped.size() < 100) {
        auto& r = records[rng.below(records.size())];
        if (flipped.contains(r.id)) continue;
        r.label = 1 - r.label;
        flipped.insert(r.id);
    }
    MockScorer scorer;
    FilterConfig at90;
    const auto r90 = validate_corpus(records, scorer, at90);
    FilterConfig at95;
    at95.tau = 0.95;
    const auto r95 = apply_verdicts(records, r90.verdicts, at95);
    const auto removed90 = removed_ids(r90);
    const auto removed95 = removed_ids(r95);
    c.expect(removed90 == flipped, "removed set at 0.9 has " + std::to_string(removed90.size()) + " ids");
    c.expect(std::includes(removed90.begin(), removed90.end(), removed95.begin(), removed95.end()),
             "removed(0.95) not contained in removed(0.9)");
    c.detail << (c.ok ? "100/100 flipped ids removed" : "");
}

void criterion_8(Check& c) {
    const auto hand = f1_positive({3, 1, 1, 0});
    c.expect(hand.f1 == 0.75 && hand.precision == 0.75 && hand.recall == 0.75, "tp=3 fp=1 fn=1 is not 0.75");
    const auto zero = f1_positive({0, 0, 0, 5});
    c.expect(zero.f1 == 0.0 && zero.degenerate(), "all-zero fixture not 0 with flag");

    SplitMix64 rng{8};
    std::vector<Prediction> preds;
    const std::vector<std::string> langs{"en", "de", "ja"};
    for (int i = 0; i < 600; ++i) {
        const int label = rng.unit() < 0.4;
        preds.push_back({Task::QC, langs[rng.below(3)], label, rng.unit() < (label ? 0.7 : 0.2) ? 1 : 0});
    }
    ConfusionCounts summed;
    for (const auto& [lang, g] : per_language_breakdown(preds)) summed += g.counts;
    c.expect(summed == evaluate_group(preds).counts, "per-language confusions do not sum to overall");
}

void criterion_9(Check& c) {
    testsupport::TempDir dir{"accept-e2e"};
    auto config = PipelineConfig::load(g_data_dir / "pipeline.toml");
    config.workdir = dir / "first";
    const auto a = run_pipeline(config);
    config.workdir = dir / "second";
    const auto b = run_pipeline(config);
    const auto ha = a.stage_hashes();
    const auto hb = b.stage_hashes();
    c.expect(ha == hb, "stage hashes differ between runs");
    c.expect(ha.size() == a.stages.size(), "some stage has no hash");
    c.expect(a.ledger.balanced() && b.ledger.balanced(), "ledger does not balance");
    const auto& l = a.ledger;
    c.detail << (c.ok ? std::to_string(ha.size()) + " stages; " + std::to_string(l.input) + " + " +
                            std::to_string(l.augmented) + " + " + std::to_string(l.negatives) + " - " +
                            std::to_string(l.filtered) + " - " + std::to_string(l.deduped) + " = " +
                            std::to_string(l.output)
                      : "");
}

void criterion_10(Check& c) {
    // Published dataset statistics, in thousands.
    using Row = std::map<std::string, int>;
    const std::map<std::pair<std::string, std::string>, Row> table{
        {{"qc", "train"}, {{"en", 50}, {"fr", 50}, {"es", 50}, {"ko", 50}, {"pt", 50}, {"ja", 50}}},
        {{"qc", "dev"}, {{"en", 10}, {"fr", 10}, {"es", 10}, {"ko", 10}, {"pt", 10}, {"ja", 10},
                         {"de", 10}, {"it", 10}, {"pl", 10}, {"ar", 10}}},
        {{"qc", "test"}, {{"en", 10}, {"fr", 10}, {"es", 10}, {"ko", 10}, {"pt", 10}, {"ja", 10},
                          {"de", 10}, {"it", 10}, {"pl", 10}, {"ar", 10}}},
        {{"qi", "train"}, {{"en", 40}, {"fr", 40}, {"es", 40}, {"ko", 45}, {"pt", 40}, {"ja", 45}, {"th", 40}}},
        {{"qi", "dev"}, {{"en", 10}, {"fr", 5}, {"es", 5}, {"ko", 5}, {"pt", 5}, {"ja", 5}, {"de", 5},
                         {"it", 5}, {"pl", 5}, {"ar", 5}, {"th", 5}, {"vi", 5}, {"id", 5}}},
        {{"qi", "test"}, {{"en", 10}, {"fr", 10}, {"es", 10}, {"ko", 10}, {"pt", 10}, {"ja", 10}, {"de", 10},
                          {"it", 10}, {"pl", 10}, {"ar", 10}, {"th", 10}, {"vi", 10}, {"id", 10}}},
    };
    const std::vector<std::string> columns{"en", "fr", "es", "ko", "pt", "ja", "de",
                                           "it", "pl", "ar", "th", "vi", "id"};

    testsupport::TempDir dir{"accept-table"};
    nlohmann::json inputs{{"inputs", nlohmann::json::array()}};
    for (const auto& layout : fixtures::competition_layout()) {
        const auto name = std::string{to_string(layout.task)} + "_" + layout.split + ".jsonl";
        write_corpus(fixtures::layout_corpus(layout), dir / name);
        inputs["inputs"].push_back({{"split", layout.split}, {"path", name}});
    }
    testsupport::write_file(dir / "inputs.json", inputs.dump());
    std::ostringstream out, err;
    const int code = cli::dispatch({"--json", "stats", "--manifest", (dir / "inputs.json").string()}, out, err);
    c.expect(code == 0, "stats exited with " + std::to_string(code) + ": " + err.str());
    if (code != 0) return;
    const auto j = nlohmann::json::parse(out.str());
    std::size_t cells = 0, matched = 0;
    for (const auto& row : j["rows"]) {
        const auto key = std::make_pair(row["task"].get<std::string>(), row["split"].get<std::string>());
        const auto it = table.find(key);
        c.expect(it != table.end(), "unexpected row " + key.first + "/" + key.second);
        if (it == table.end()) continue;
        for (const auto& lang : columns) {
            const auto want = it->second.contains(lang) ? it->second.at(lang) * 1000 : 0;
            const auto got = row["counts"].value(lang, 0);
            ++cells;
            matched += got == want;
            c.expect(got == want, key.first + "/" + key.second + "/" + lang + " = " + std::to_string(got));
        }
    }
    c.expect(cells == table.size() * columns.size(), "missing rows");
    c.detail << (c.ok ? std::to_string(matched) + "/" + std::to_string(cells) + " cells match" : "");
}

}  // namespace

int main(int argc, char** argv) {
    g_data_dir = argc > 1 ? fs::path{argv[1]} : fs::path{"data"};
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"average F1 arithmetic", criterion_1},
        {"two-token normalization", criterion_2},
        {"threshold calibration", criterion_3},
        {"top-k oracle equivalence", criterion_4},
        {"negative mining soundness", criterion_5},
        {"augmentation contract", criterion_6},
        {"filtering exactness", criterion_7},
        {"F1 conventions", criterion_8},
        {"end-to-end reproducibility", criterion_9},
        {"stats fidelity", criterion_10},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(check);
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail << "exception: " << e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        failures += check.ok ? 0 : 1;
        std::cout << (check.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
                  << ms.count() << " ms)";
        if (!check.detail.str().empty()) std::cout << ": " << check.detail.str();
        std::cout << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
