#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/augment.hpp"
#include "reldata/corpus.hpp"
#include "reldata/negmine.hpp"
#include "reldata/providers.hpp"
#include "reldata/selfcheck.hpp"

namespace reldata {

struct StageToggles {
    bool augment = false;
    bool negatives = false;
    bool filter = false;
    /// Calibrate the decision threshold on the dev set.
    bool calibrate = false;
};

/// Declarative description of a run. Loaded from TOML (see README for the
/// schema) or from the "config" block of a previous run's manifest.
struct PipelineConfig {
    Task task = Task::QC;
    std::uint64_t seed = 0;
    std::filesystem::path workdir;
    std::filesystem::path train_path;
    std::optional<std::filesystem::path> dev_path;
    std::optional<std::filesystem::path> catalog_path;
    std::optional<std::filesystem::path> template_path;
    ParseMode parse_mode = ParseMode::Strict;
    std::size_t in_flight = kDefaultInFlight;

    ProviderMode provider_mode = ProviderMode::Mock;
    HttpEndpoints endpoints;

    StageToggles stages;

    std::set<std::string> augment_targets;
    std::optional<std::size_t> augment_quota;
    SourcePolicy augment_policy = SourcePolicy::Uniform;

    std::size_t k_min = 20;
    std::size_t k_max = 50;
    double negative_ratio = 1.0;
    std::vector<std::string> negative_targets;

    FilterConfig filter;

    double grid_step = 0.01;
    /// Used when calibration is off.
    double default_threshold = 0.5;

    /// Relative paths are resolved against `base_dir`. A missing seed is a
    /// ConfigError.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    /// TOML file, or a manifest JSON whose "config" block is reused.
    static PipelineConfig load(const std::filesystem::path& path);

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    /// Checks that every enabled stage has what it needs.
    void validate() const;
};

struct ArtifactRecord {
    std::string name;
    std::string path;  // relative to the workdir
    std::string hash;
    std::size_t records = 0;
};

struct StageRecord {
    std::string name;
    std::string status = "ok";
    nlohmann::ordered_json config;
    std::vector<ArtifactRecord> inputs;
    std::vector<ArtifactRecord> outputs;
    std::map<std::string, double> counts;
};

/// |output| = |input| + |augmented| + |negatives| - |filtered| - |deduped|.
struct CorpusLedger {
    std::size_t input = 0;
    std::size_t augmented = 0;
    std::size_t negatives = 0;
    std::size_t filtered = 0;
    std::size_t deduped = 0;
    std::size_t output = 0;

    [[nodiscard]] bool balanced() const noexcept {
        return input + augmented + negatives == output + filtered + deduped;
    }
};

struct RunManifest {
    std::string status = "ok";
    std::string error;
    nlohmann::ordered_json config;
    std::vector<StageRecord> stages;
    std::vector<ArtifactRecord> outputs;
    CorpusLedger ledger;
    std::optional<double> dev_f1;
    std::optional<double> threshold;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    static RunManifest load(const std::filesystem::path& path);

    /// Stage name -> combined hash of its output artifacts.
    [[nodiscard]] std::map<std::string, std::string> stage_hashes() const;
    [[nodiscard]] const StageRecord* find_stage(std::string_view name) const;
};

using ProgressLogger = std::function<void(const std::string&)>;

/// Runs ingest, then the enabled stages in the fixed order augment,
/// negatives, filter, then evaluation on the dev set when one is given.
/// Every artifact and <workdir>/manifest.json are written. On failure the
/// manifest is written with status "failed" and the error is rethrown.
/// `providers` overrides the providers built from the config.
RunManifest run_pipeline(const PipelineConfig& config, ProviderSet* providers = nullptr,
                         const ProgressLogger& log = {});

struct AblationRow {
    std::string name;
    StageToggles toggles;
    RunManifest manifest;
};

struct AblationResult {
    std::vector<AblationRow> rows;

    [[nodiscard]] std::string render_table() const;
    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Runs every on/off combination of the named toggles ("augment",
/// "negatives", "filter", "calibrate"), each in <workdir>/<name>.
AblationResult ablation_matrix(const PipelineConfig& base, const std::vector<std::string>& toggles,
                               ProviderSet* providers = nullptr, const ProgressLogger& log = {});

}  // namespace reldata
