#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/providers.hpp"
#include "reldata/types.hpp"

namespace reldata {

/// Two-way softmax over the yes/no log-scores:
///   p_yes = exp(a) / (exp(a) + exp(b)),
/// evaluated with the larger score subtracted so neither exponent overflows.
/// Throws DataError on non-finite input.
double normalize_yes(const ScorePair& score);

/// 1 iff p_yes >= threshold.
inline int decide(double p_yes, double threshold) noexcept { return p_yes >= threshold ? 1 : 0; }

struct ScoredRecord {
    std::string id;
    Task task = Task::QC;
    std::string language;
    std::optional<int> label;
    double logp_yes = 0.0;
    double logp_no = 0.0;
    double p_yes = 0.0;
};

nlohmann::ordered_json to_json(const ScoredRecord& scored);
ScoredRecord scored_from_json(const nlohmann::json& object);

std::vector<ScoredRecord> load_scored(const std::filesystem::path& path);
std::size_t write_scored(std::span<const ScoredRecord> scored, const std::filesystem::path& path);

struct ScoringRun {
    std::vector<ScoredRecord> scored;
    /// Ids of records the provider could not score.
    std::vector<std::string> failed;
};

/// Scores every record with at most `in_flight` concurrent requests. Output
/// order is input order. With `fail_fast` the first provider failure is
/// rethrown; otherwise failed records are listed and excluded.
ScoringRun score_records(std::span<const RelevanceRecord> records, RelevanceScorer& scorer,
                         std::size_t in_flight, bool fail_fast);

struct SweepPoint {
    double threshold = 0.0;
    double f1 = 0.0;
};

enum class CalibrationMode { Grid, ExactCutPoints };

struct CalibrationResult {
    Task task = Task::QC;
    double best_threshold = 0.0;
    double best_f1 = 0.0;
    std::vector<SweepPoint> sweep;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] std::string sweep_csv() const;
};

/// {0, step, 2*step, ..., 1}. When 1/step is (numerically) an integer n the
/// points are i/n, so 0.4 and 0.2 are the exact doubles of those literals.
std::vector<double> threshold_grid(double step);

/// Positive-class F1 at each threshold. The best point is the maximum F1,
/// ties going to the smallest threshold. Throws DataError when no record
/// has a positive label or a record lacks a label.
CalibrationResult sweep_thresholds(std::span<const ScoredRecord> scored,
                                   std::span<const double> thresholds);

/// Grid mode sweeps threshold_grid(grid_step); exact mode sweeps every
/// distinct p_yes value plus 0 and 1.
CalibrationResult calibrate_threshold(std::span<const ScoredRecord> scored, double grid_step = 0.01,
                                      CalibrationMode mode = CalibrationMode::Grid);

}  // namespace reldata
