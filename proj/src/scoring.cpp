#include "reldata/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "reldata/evalreport.hpp"
#include "reldata/parallel.hpp"
#include "reldata/text.hpp"

namespace reldata {

double normalize_yes(const ScorePair& score) {
    if (!std::isfinite(score.logp_yes) || !std::isfinite(score.logp_no)) {
        throw DataError("log-scores must be finite");
    }
    const double m = std::max(score.logp_yes, score.logp_no);
    const double e_yes = std::exp(score.logp_yes - m);
    const double e_no = std::exp(score.logp_no - m);
    return e_yes / (e_yes + e_no);
}

nlohmann::ordered_json to_json(const ScoredRecord& s) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["task"] = to_string(s.task);
    j["language"] = s.language;
    if (s.label) {
        j["label"] = *s.label;
    } else {
        j["label"] = nullptr;
    }
    j["logp_yes"] = s.logp_yes;
    j["logp_no"] = s.logp_no;
    j["p_yes"] = s.p_yes;
    return j;
}

ScoredRecord scored_from_json(const nlohmann::json& o) {
    if (!o.is_object()) throw DataError("scored line is not a JSON object");
    ScoredRecord s;
    try {
        s.id = o.value("id", std::string{});
        s.task = parse_task(o.at("task").get<std::string>());
        s.language = normalize_language(o.value("language", std::string{}));
        if (const auto it = o.find("label"); it != o.end() && !it->is_null()) {
            const int label = it->get<int>();
            if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
            s.label = label;
        }
        const bool has_logs = o.contains("logp_yes") && o.contains("logp_no");
        if (has_logs) {
            s.logp_yes = o.at("logp_yes").get<double>();
            s.logp_no = o.at("logp_no").get<double>();
        }
        if (const auto it = o.find("p_yes"); it != o.end() && !it->is_null()) {
            s.p_yes = it->get<double>();
        } else if (has_logs) {
            s.p_yes = normalize_yes({s.logp_yes, s.logp_no});
        } else {
            throw DataError("scored record needs p_yes or logp_yes/logp_no");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string{"malformed scored record: "} + e.what());
    }
    if (!(s.p_yes >= 0.0 && s.p_yes <= 1.0)) throw DataError("p_yes outside [0,1]");
    return s;
}

std::vector<ScoredRecord> load_scored(const std::filesystem::path& path) {
    std::ifstream in{path};
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<ScoredRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(scored_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::size_t write_scored(std::span<const ScoredRecord> scored, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& s : scored) out << to_json(s).dump() << '\n';
    out.flush();
    if (!out) throw DataError("write failed for " + path.string());
    return scored.size();
}

ScoringRun score_records(std::span<const RelevanceRecord> records, RelevanceScorer& scorer,
                         std::size_t in_flight, bool fail_fast) {
    std::vector<std::optional<ScoredRecord>> slots(records.size());
    parallel_for(records.size(), in_flight, [&](std::size_t i) {
        const auto& r = records[i];
        try {
            const auto pair = scorer.score({r.task, r.query, r.candidate, r.language});
            ScoredRecord s;
            s.id = r.id;
            s.task = r.task;
            s.language = r.language;
            s.label = r.label;
            s.logp_yes = pair.logp_yes;
            s.logp_no = pair.logp_no;
            s.p_yes = normalize_yes(pair);
            slots[i] = std::move(s);
        } catch (const ProviderError&) {
            if (fail_fast) throw;
        }
    });
    ScoringRun run;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) {
            run.scored.push_back(std::move(*slots[i]));
        } else {
            run.failed.push_back(records[i].id);
        }
    }
    return run;
}

std::vector<double> threshold_grid(double step) {
    if (!(step > 0.0 && step <= 0.5)) throw ConfigError("grid step must lie in (0, 0.5]");
    std::vector<double> grid;
    const double inverse = 1.0 / step;
    const double n = std::round(inverse);
    if (std::fabs(inverse - n) < 1e-9) {
        const auto count = static_cast<long long>(n);
        for (long long i = 0; i <= count; ++i) {
            grid.push_back(static_cast<double>(i) / static_cast<double>(count));
        }
    } else {
        for (long long i = 0;; ++i) {
            const double t = static_cast<double>(i) * step;
            if (t >= 1.0) break;
            grid.push_back(t);
        }
        grid.push_back(1.0);
    }
    return grid;
}

CalibrationResult sweep_thresholds(std::span<const ScoredRecord> scored,
                                   std::span<const double> thresholds) {
    if (scored.empty()) throw DataError("calibration needs at least one scored record");
    if (thresholds.empty()) throw DataError("calibration needs at least one threshold");
    std::vector<double> pos;
    std::vector<double> neg;
    for (const auto& s : scored) {
        if (!s.label) throw DataError("record " + s.id + " has no label");
        (*s.label == 1 ? pos : neg).push_back(s.p_yes);
    }
    if (pos.empty()) throw DataError("no positive labels: F1 is undefined at every threshold");
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    auto at_or_above = [](const std::vector<double>& sorted, double t) {
        return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
    };
    CalibrationResult result;
    result.task = scored.front().task;
    result.sweep.reserve(thresholds.size());
    bool have_best = false;
    for (double t : thresholds) {
        ConfusionCounts c;
        c.tp = at_or_above(pos, t);
        c.fn = pos.size() - c.tp;
        c.fp = at_or_above(neg, t);
        c.tn = neg.size() - c.fp;
        const double f1 = f1_positive(c).f1;
        result.sweep.push_back({t, f1});
        const bool better = !have_best || f1 > result.best_f1 ||
                            (f1 == result.best_f1 && t < result.best_threshold);
        if (better) {
            result.best_f1 = f1;
            result.best_threshold = t;
            have_best = true;
        }
    }
    return result;
}

CalibrationResult calibrate_threshold(std::span<const ScoredRecord> scored, double grid_step,
                                      CalibrationMode mode) {
    std::vector<double> thresholds;
    if (mode == CalibrationMode::Grid) {
        thresholds = threshold_grid(grid_step);
    } else {
        thresholds.push_back(0.0);
        for (const auto& s : scored) thresholds.push_back(s.p_yes);
        thresholds.push_back(1.0);
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    }
    return sweep_thresholds(scored, thresholds);
}

nlohmann::ordered_json CalibrationResult::to_json() const {
    nlohmann::ordered_json j;
    j["task"] = to_string(task);
    j["best_threshold"] = best_threshold;
    j["best_f1"] = best_f1;
    auto& points = j["sweep"] = nlohmann::ordered_json::array();
    for (const auto& p : sweep) points.push_back({{"threshold", p.threshold}, {"f1", p.f1}});
    return j;
}

std::string CalibrationResult::sweep_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "task,threshold,f1\n";
    for (const auto& p : sweep) out << to_string(task) << ',' << p.threshold << ',' << p.f1 << '\n';
    return out.str();
}

}  // namespace reldata
