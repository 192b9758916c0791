#include "reldata/evalreport.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace reldata {

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) {
        throw DataError("predictions (" + std::to_string(preds.size()) + ") and labels (" +
                        std::to_string(labels.size()) + ") differ in length");
    }
    if (preds.empty()) throw DataError("confusion needs at least one pair");
    ConfusionCounts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == 1;
        const bool l = labels[i] == 1;
        if (p && l) {
            ++c.tp;
        } else if (p) {
            ++c.fp;
        } else if (l) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

PositiveClassMetrics f1_positive(const ConfusionCounts& c) {
    PositiveClassMetrics m;
    const auto tp = static_cast<double>(c.tp);
    if (c.tp + c.fp == 0) {
        m.precision_degenerate = true;
    } else {
        m.precision = tp / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn == 0) {
        m.recall_degenerate = true;
    } else {
        m.recall = tp / static_cast<double>(c.tp + c.fn);
    }
    if (m.precision + m.recall == 0.0) {
        m.f1_degenerate = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

double average_f1(double f1_qc, double f1_qi) { return (f1_qc + f1_qi) / 2.0; }

std::string format_half_up(double value, int places) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.12f", std::fabs(value));
    std::string digits{buffer};
    const auto dot = digits.find('.');
    std::string whole = digits.substr(0, dot);
    std::string frac = digits.substr(dot + 1);
    const bool round_up = frac[static_cast<std::size_t>(places)] >= '5';
    frac.resize(static_cast<std::size_t>(places));
    std::string number = whole + frac;
    if (round_up) {
        int i = static_cast<int>(number.size()) - 1;
        for (; i >= 0; --i) {
            if (number[static_cast<std::size_t>(i)] == '9') {
                number[static_cast<std::size_t>(i)] = '0';
            } else {
                ++number[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) number.insert(number.begin(), '1');
    }
    const auto split = number.size() - static_cast<std::size_t>(places);
    std::string out = number.substr(0, split);
    if (places > 0) out += "." + number.substr(split);
    const bool is_zero = out.find_first_not_of("0.") == std::string::npos;
    if (value < 0 && !is_zero) out.insert(out.begin(), '-');
    return out;
}

GroupMetrics evaluate_group(std::span<const Prediction> predictions) {
    GroupMetrics g;
    for (const auto& p : predictions) {
        const bool pred = p.pred == 1;
        const bool label = p.label == 1;
        if (pred && label) {
            ++g.counts.tp;
        } else if (pred) {
            ++g.counts.fp;
        } else if (label) {
            ++g.counts.fn;
        } else {
            ++g.counts.tn;
        }
    }
    g.metrics = f1_positive(g.counts);
    g.no_positives = g.counts.tp + g.counts.fn == 0;
    return g;
}

std::map<std::string, GroupMetrics> per_language_breakdown(std::span<const Prediction> predictions) {
    std::map<std::string, std::vector<Prediction>> by_language;
    for (const auto& p : predictions) by_language[p.language].push_back(p);
    std::map<std::string, GroupMetrics> out;
    for (const auto& [lang, group] : by_language) out.emplace(lang, evaluate_group(group));
    return out;
}

EvalReport build_report(std::span<const Prediction> predictions,
                        const std::map<Task, double>& thresholds) {
    std::map<Task, std::vector<Prediction>> by_task;
    for (const auto& p : predictions) by_task[p.task].push_back(p);
    EvalReport report;
    for (const auto& [task, group] : by_task) {
        TaskReport tr;
        tr.overall = evaluate_group(group);
        tr.per_language = per_language_breakdown(group);
        if (const auto it = thresholds.find(task); it != thresholds.end()) tr.threshold = it->second;
        report.tasks.emplace(task, std::move(tr));
    }
    const auto qc = report.tasks.find(Task::QC);
    const auto qi = report.tasks.find(Task::QI);
    if (qc != report.tasks.end() && qi != report.tasks.end()) {
        report.f1_avg = average_f1(qc->second.overall.metrics.f1, qi->second.overall.metrics.f1);
    }
    return report;
}

nlohmann::ordered_json to_json(const GroupMetrics& g) {
    nlohmann::ordered_json j;
    j["tp"] = g.counts.tp;
    j["fp"] = g.counts.fp;
    j["fn"] = g.counts.fn;
    j["tn"] = g.counts.tn;
    j["precision"] = g.metrics.precision;
    j["recall"] = g.metrics.recall;
    j["f1"] = g.metrics.f1;
    j["f1_display"] = format_half_up(g.metrics.f1);
    j["degenerate"] = g.metrics.degenerate();
    j["no_positives"] = g.no_positives;
    return j;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    auto& tasks_json = j["tasks"] = nlohmann::ordered_json::object();
    for (const auto& [task, tr] : tasks) {
        nlohmann::ordered_json t;
        t["overall"] = reldata::to_json(tr.overall);
        if (tr.threshold) {
            t["threshold"] = *tr.threshold;
        } else {
            t["threshold"] = nullptr;
        }
        auto& langs = t["per_language"] = nlohmann::ordered_json::object();
        for (const auto& [lang, g] : tr.per_language) langs[lang] = reldata::to_json(g);
        tasks_json[std::string{to_string(task)}] = std::move(t);
    }
    if (f1_avg) {
        j["f1_avg"] = *f1_avg;
        j["f1_avg_display"] = format_half_up(*f1_avg);
    } else {
        j["f1_avg"] = nullptr;
    }
    if (!provenance.empty()) j["provenance"] = provenance;
    return j;
}

std::string EvalReport::render_table() const {
    std::ostringstream out;
    auto row = [&](const std::string& task, const std::string& group, const GroupMetrics& g) {
        out << std::left << std::setw(5) << task << std::setw(10) << group << std::right
            << std::setw(8) << g.counts.tp << std::setw(8) << g.counts.fp << std::setw(8)
            << g.counts.fn << std::setw(8) << g.counts.tn << std::setw(11)
            << format_half_up(g.metrics.precision) << std::setw(9) << format_half_up(g.metrics.recall)
            << std::setw(9) << format_half_up(g.metrics.f1);
        if (g.no_positives) out << "  (no positives)";
        out << '\n';
    };
    out << std::left << std::setw(5) << "task" << std::setw(10) << "group" << std::right
        << std::setw(8) << "tp" << std::setw(8) << "fp" << std::setw(8) << "fn" << std::setw(8)
        << "tn" << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9) << "f1"
        << '\n';
    for (const auto& [task, tr] : tasks) {
        const std::string name{to_string(task)};
        row(name, "overall", tr.overall);
        for (const auto& [lang, g] : tr.per_language) row(name, lang, g);
        if (tr.threshold) out << std::left << std::setw(5) << name << "threshold " << format_half_up(*tr.threshold, 2) << '\n';
    }
    if (f1_avg) out << "f1_avg " << format_half_up(*f1_avg) << '\n';
    return out.str();
}

}  // namespace reldata
