#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/types.hpp"

namespace reldata {

/// Binary confusion counts with label 1 as the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) noexcept {
        return a += b;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws DataError on length mismatch or empty input.
ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels);

/// Precision, recall and F1 on the positive class. A zero denominator yields
/// 0 for that metric and sets the matching degenerate flag.
struct PositiveClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;

    [[nodiscard]] bool degenerate() const noexcept {
        return precision_degenerate || recall_degenerate || f1_degenerate;
    }
};

PositiveClassMetrics f1_positive(const ConfusionCounts& counts);

/// Mean of the two task F1 scores.
double average_f1(double f1_qc, double f1_qi);

/// Decimal rounding half-up at `places` digits, e.g. 0.88645 -> "0.8865".
/// The value is first fixed to 12 decimals so binary representation noise
/// (0.88645 is stored as 0.886449999...) does not defeat the tie rule.
std::string format_half_up(double value, int places = 4);

/// One evaluated pair.
struct Prediction {
    Task task = Task::QC;
    std::string language;
    int label = 0;
    int pred = 0;
};

struct GroupMetrics {
    ConfusionCounts counts;
    PositiveClassMetrics metrics;
    /// No positive labels in this group.
    bool no_positives = false;
};

GroupMetrics evaluate_group(std::span<const Prediction> predictions);

/// Positive-class metrics within each language partition.
std::map<std::string, GroupMetrics> per_language_breakdown(std::span<const Prediction> predictions);

struct TaskReport {
    GroupMetrics overall;
    std::map<std::string, GroupMetrics> per_language;
    std::optional<double> threshold;
};

struct EvalReport {
    std::map<Task, TaskReport> tasks;
    /// Present only when both tasks were evaluated.
    std::optional<double> f1_avg;
    /// Record counts per origin, when the caller supplies them.
    std::map<std::string, std::size_t> provenance;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] std::string render_table() const;
};

/// Builds a report from predictions of one or both tasks. Metrics are micro
/// over all pairs of a task; per-language cells are diagnostics.
EvalReport build_report(std::span<const Prediction> predictions,
                        const std::map<Task, double>& thresholds = {});

nlohmann::ordered_json to_json(const GroupMetrics& group);

}  // namespace reldata
