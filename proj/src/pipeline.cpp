#include "reldata/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <toml.hpp>

#include "reldata/evalreport.hpp"
#include "reldata/hashing.hpp"
#include "reldata/scoring.hpp"

namespace reldata {

namespace fs = std::filesystem;

namespace {

nlohmann::json toml_to_json(const toml::node& node) {
    if (const auto* table = node.as_table()) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [key, value] : *table) j[std::string{key.str()}] = toml_to_json(value);
        return j;
    }
    if (const auto* array = node.as_array()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& value : *array) j.push_back(toml_to_json(value));
        return j;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    throw ConfigError("unsupported TOML value (dates and times are not used in configs)");
}

template <typename T>
T get_or(const nlohmann::json& table, const char* key, T fallback) {
    if (!table.is_object()) return fallback;
    const auto it = table.find(key);
    if (it == table.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string{"config key '"} + key + "' has the wrong type");
    }
}

const nlohmann::json& section(const nlohmann::json& j, const char* name) {
    static const nlohmann::json empty = nlohmann::json::object();
    const auto it = j.find(name);
    if (it == j.end()) return empty;
    if (!it->is_object()) throw ConfigError(std::string{"config section ["} + name + "] must be a table");
    return *it;
}

std::optional<fs::path> optional_path(const nlohmann::json& table, const char* key, const fs::path& base) {
    const auto value = get_or<std::string>(table, key, "");
    if (value.empty()) return std::nullopt;
    const fs::path p{value};
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::size_t count_lines(const fs::path& path) {
    std::ifstream in{path};
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

nlohmann::ordered_json artifact_json(const ArtifactRecord& a) {
    return {{"name", a.name}, {"path", a.path}, {"hash", a.hash}, {"records", a.records}};
}

ArtifactRecord artifact_from_json(const nlohmann::json& j) {
    return {j.value("name", std::string{}), j.value("path", std::string{}),
            j.value("hash", std::string{}), j.value("records", std::size_t{0})};
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void write_jsonl(const fs::path& path, const std::vector<nlohmann::ordered_json>& rows) {
    std::string content;
    for (const auto& r : rows) content += r.dump() + "\n";
    write_text(path, content);
}

class RunContext {
public:
    RunContext(const PipelineConfig& config, RunManifest& manifest)
        : config_{config}, manifest_{manifest} {}

    ArtifactRecord artifact(const std::string& name, const fs::path& absolute, std::optional<std::size_t> records = {}) const {
        ArtifactRecord a;
        a.name = name;
        const auto rel = absolute.lexically_relative(config_.workdir);
        a.path = rel.empty() || rel.native().starts_with("..") ? absolute.string() : rel.generic_string();
        a.hash = hash_file(absolute);
        a.records = records ? *records : count_lines(absolute);
        return a;
    }

    fs::path path(const std::string& rel) const { return config_.workdir / rel; }

private:
    const PipelineConfig& config_;
    RunManifest& manifest_;
};

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("pipeline config must be a table");
    PipelineConfig c;
    const auto task = get_or<std::string>(j, "task", "");
    if (task.empty()) throw ConfigError("config needs 'task'");
    try {
        c.task = parse_task(task);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    if (!j.contains("seed") || j["seed"].is_null()) throw ConfigError("config needs 'seed' (all randomness derives from it)");
    if (j["seed"].is_number_unsigned() || j["seed"].is_number_integer()) {
        const auto raw = j["seed"].get<long long>();
        if (raw < 0 && !j["seed"].is_number_unsigned()) throw ConfigError("seed must be non-negative");
        c.seed = j["seed"].get<std::uint64_t>();
    } else {
        throw ConfigError("seed must be an integer");
    }
    const auto workdir = get_or<std::string>(j, "workdir", "run");
    c.workdir = fs::path{workdir}.is_absolute() ? fs::path{workdir} : (base_dir / workdir).lexically_normal();
    c.in_flight = get_or<std::size_t>(j, "concurrency", kDefaultInFlight);
    if (c.in_flight == 0) throw ConfigError("concurrency must be positive");
    const auto mode = get_or<std::string>(j, "parse_mode", "strict");
    if (mode == "strict") {
        c.parse_mode = ParseMode::Strict;
    } else if (mode == "lenient") {
        c.parse_mode = ParseMode::Lenient;
    } else {
        throw ConfigError("parse_mode must be strict or lenient");
    }

    const auto& inputs = section(j, "inputs");
    const auto train = optional_path(inputs, "train", base_dir);
    if (!train) throw ConfigError("config needs [inputs] train");
    c.train_path = *train;
    c.dev_path = optional_path(inputs, "dev", base_dir);
    c.catalog_path = optional_path(inputs, "catalog", base_dir);
    c.template_path = optional_path(inputs, "template", base_dir);

    const auto& providers = section(j, "providers");
    c.provider_mode = parse_provider_mode(get_or<std::string>(providers, "mode", "mock"));
    c.endpoints.translate_url = get_or<std::string>(providers, "translate_url", "");
    c.endpoints.embed_url = get_or<std::string>(providers, "embed_url", "");
    c.endpoints.score_url = get_or<std::string>(providers, "score_url", "");
    c.endpoints.score_url_qc = get_or<std::string>(providers, "score_url_qc", "");
    c.endpoints.score_url_qi = get_or<std::string>(providers, "score_url_qi", "");
    c.endpoints.token = get_or<std::string>(providers, "token", "");

    const auto& stages = section(j, "stages");
    c.stages.augment = get_or<bool>(stages, "augment", false);
    c.stages.negatives = get_or<bool>(stages, "negatives", false);
    c.stages.filter = get_or<bool>(stages, "filter", false);
    c.stages.calibrate = get_or<bool>(stages, "calibrate", false);

    const auto& augment = section(j, "augment");
    for (const auto& t : get_or<std::vector<std::string>>(augment, "targets", {})) {
        c.augment_targets.insert(normalize_language(t));
    }
    if (augment.contains("quota") && !augment["quota"].is_null()) {
        const auto q = get_or<long long>(augment, "quota", 0);
        if (q < 1) throw ConfigError("[augment] quota must be at least 1");
        c.augment_quota = static_cast<std::size_t>(q);
    }
    c.augment_policy = parse_source_policy(get_or<std::string>(augment, "policy", "uniform"));

    const auto& negatives = section(j, "negatives");
    c.k_min = get_or<std::size_t>(negatives, "k_min", 20);
    c.k_max = get_or<std::size_t>(negatives, "k_max", 50);
    c.negative_ratio = get_or<double>(negatives, "ratio", 1.0);
    for (const auto& t : get_or<std::vector<std::string>>(negatives, "targets", {})) {
        c.negative_targets.push_back(normalize_language(t));
    }

    const auto& filter = section(j, "filter");
    c.filter.tau = get_or<double>(filter, "tau", 0.9);
    c.filter.action = parse_filter_action(get_or<std::string>(filter, "action", "remove"));

    const auto& evaluate = section(j, "evaluate");
    c.grid_step = get_or<double>(evaluate, "grid_step", 0.01);
    c.default_threshold = get_or<double>(evaluate, "threshold", 0.5);
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    const auto base = fs::absolute(path).parent_path();
    if (path.extension() == ".json") {
        std::ifstream in{path};
        if (!in) throw ConfigError("cannot read config " + path.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        // A manifest carries its resolved config; paths in it are absolute.
        if (j.contains("config")) return from_json(j["config"], base);
        return from_json(j, base);
    }
    toml::table table;
    try {
        table = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << path.string() << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(msg.str());
    }
    return from_json(toml_to_json(table), base);
}

nlohmann::ordered_json PipelineConfig::to_json() const {
    nlohmann::ordered_json j;
    j["task"] = to_string(task);
    j["seed"] = seed;
    j["workdir"] = workdir.string();
    j["concurrency"] = in_flight;
    j["parse_mode"] = parse_mode == ParseMode::Strict ? "strict" : "lenient";
    auto& inputs = j["inputs"];
    inputs["train"] = train_path.string();
    if (dev_path) inputs["dev"] = dev_path->string();
    if (catalog_path) inputs["catalog"] = catalog_path->string();
    if (template_path) inputs["template"] = template_path->string();
    // The token is deliberately not persisted.
    j["providers"] = {{"mode", provider_mode == ProviderMode::Mock ? "mock" : "http"},
                      {"translate_url", endpoints.translate_url},
                      {"embed_url", endpoints.embed_url},
                      {"score_url", endpoints.score_url},
                      {"score_url_qc", endpoints.score_url_qc},
                      {"score_url_qi", endpoints.score_url_qi}};
    j["stages"] = {{"augment", stages.augment},
                   {"negatives", stages.negatives},
                   {"filter", stages.filter},
                   {"calibrate", stages.calibrate}};
    nlohmann::ordered_json augment;
    augment["targets"] = augment_targets;
    if (augment_quota) {
        augment["quota"] = *augment_quota;
    } else {
        augment["quota"] = nullptr;
    }
    augment["policy"] = to_string(augment_policy);
    j["augment"] = augment;
    j["negatives"] = {{"k_min", k_min}, {"k_max", k_max}, {"ratio", negative_ratio}, {"targets", negative_targets}};
    j["filter"] = {{"tau", filter.tau}, {"action", to_string(filter.action)}};
    j["evaluate"] = {{"grid_step", grid_step}, {"threshold", default_threshold}};
    return j;
}

void PipelineConfig::validate() const {
    if (stages.filter) filter.validate();
    if (stages.negatives) {
        if (k_min < 1 || k_min > k_max) throw ConfigError("[negatives] needs 1 <= k_min <= k_max");
        if (!(negative_ratio >= 0.0)) throw ConfigError("[negatives] ratio must be non-negative");
    }
    if (stages.augment && augment_targets.empty() && !dev_path) {
        throw ConfigError("augment needs [augment] targets or an [inputs] dev set to derive them from");
    }
    if (stages.calibrate && !dev_path) throw ConfigError("calibrate needs an [inputs] dev set");
    threshold_grid(grid_step);
    if (!(default_threshold >= 0.0 && default_threshold <= 1.0)) {
        throw ConfigError("[evaluate] threshold must lie in [0, 1]");
    }
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    j["config"] = config;
    auto& stages_json = j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json sj;
        sj["name"] = s.name;
        sj["status"] = s.status;
        sj["config"] = s.config;
        auto& in = sj["inputs"] = nlohmann::ordered_json::array();
        for (const auto& a : s.inputs) in.push_back(artifact_json(a));
        auto& out = sj["outputs"] = nlohmann::ordered_json::array();
        for (const auto& a : s.outputs) out.push_back(artifact_json(a));
        sj["counts"] = s.counts;
        stages_json.push_back(std::move(sj));
    }
    auto& outs = j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& a : outputs) outs.push_back(artifact_json(a));
    j["ledger"] = {{"input", ledger.input},         {"augmented", ledger.augmented},
                   {"negatives", ledger.negatives}, {"filtered", ledger.filtered},
                   {"deduped", ledger.deduped},     {"output", ledger.output},
                   {"balanced", ledger.balanced()}};
    j["dev_f1"] = dev_f1 ? nlohmann::ordered_json(*dev_f1) : nlohmann::ordered_json(nullptr);
    j["threshold"] = threshold ? nlohmann::ordered_json(*threshold) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json hashes = nlohmann::ordered_json::object();
    for (const auto& [name, h] : stage_hashes()) hashes[name] = h;
    j["stage_hashes"] = hashes;
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.status = j.value("status", std::string{"ok"});
    m.error = j.value("error", std::string{});
    m.config = j.value("config", nlohmann::ordered_json::object());
    for (const auto& sj : j.value("stages", nlohmann::json::array())) {
        StageRecord s;
        s.name = sj.value("name", std::string{});
        s.status = sj.value("status", std::string{"ok"});
        s.config = sj.value("config", nlohmann::ordered_json::object());
        for (const auto& a : sj.value("inputs", nlohmann::json::array())) s.inputs.push_back(artifact_from_json(a));
        for (const auto& a : sj.value("outputs", nlohmann::json::array())) s.outputs.push_back(artifact_from_json(a));
        const auto counts = sj.value("counts", nlohmann::json::object());
        for (const auto& [k, v] : counts.items()) s.counts[k] = v.get<double>();
        m.stages.push_back(std::move(s));
    }
    for (const auto& a : j.value("outputs", nlohmann::json::array())) m.outputs.push_back(artifact_from_json(a));
    const auto ledger = j.value("ledger", nlohmann::json::object());
    m.ledger.input = ledger.value("input", std::size_t{0});
    m.ledger.augmented = ledger.value("augmented", std::size_t{0});
    m.ledger.negatives = ledger.value("negatives", std::size_t{0});
    m.ledger.filtered = ledger.value("filtered", std::size_t{0});
    m.ledger.deduped = ledger.value("deduped", std::size_t{0});
    m.ledger.output = ledger.value("output", std::size_t{0});
    if (j.contains("dev_f1") && j["dev_f1"].is_number()) m.dev_f1 = j["dev_f1"].get<double>();
    if (j.contains("threshold") && j["threshold"].is_number()) m.threshold = j["threshold"].get<double>();
    return m;
}

RunManifest RunManifest::load(const fs::path& path) {
    std::ifstream in{path};
    if (!in) throw DataError("cannot read manifest " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::string> RunManifest::stage_hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& s : stages) {
        std::uint64_t h = kFnvOffsetBasis;
        for (const auto& a : s.outputs) {
            h = fnv1a64(a.name, h);
            h = fnv1a64(a.hash, h);
        }
        out[s.name] = to_hex64(h);
    }
    return out;
}

const StageRecord* RunManifest::find_stage(std::string_view name) const {
    for (const auto& s : stages) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

RunManifest run_pipeline(const PipelineConfig& config, ProviderSet* providers, const ProgressLogger& log) {
    config.validate();
    RunManifest manifest;
    manifest.config = config.to_json();
    const auto manifest_path = config.workdir / "manifest.json";
    auto say = [&](const std::string& msg) {
        if (log) log(msg);
    };

    ProviderSet owned;
    if (providers == nullptr) {
        owned = ProviderSet::make(config.provider_mode, config.endpoints);
        providers = &owned;
    }

    fs::create_directories(config.workdir);
    RunContext ctx{config, manifest};
    auto& ledger = manifest.ledger;
    std::vector<RelevanceRecord> corpus;
    std::vector<RelevanceRecord> universe;  // every record seen, for provenance checks

    auto run_stage = [&](const std::string& name, const std::function<void(StageRecord&)>& body) {
        StageRecord stage;
        stage.name = name;
        say("stage " + name);
        try {
            body(stage);
        } catch (...) {
            stage.status = "failed";
            manifest.stages.push_back(std::move(stage));
            throw;
        }
        manifest.stages.push_back(std::move(stage));
    };

    const auto tmpl = [&] {
        if (!config.template_path) return InstructionTemplate::default_for(config.task);
        std::ifstream in{*config.template_path};
        if (!in) throw ConfigError("cannot read template " + config.template_path->string());
        return InstructionTemplate::from_json(nlohmann::json::parse(in));
    }();

    try {
        run_stage("ingest", [&](StageRecord& stage) {
            stage.config = {{"parse_mode", config.parse_mode == ParseMode::Strict ? "strict" : "lenient"}};
            auto loaded = load_corpus(config.train_path, config.task, config.parse_mode);
            stage.inputs.push_back(ctx.artifact("train", config.train_path, loaded.report.lines_read));
            ledger.input = loaded.records.size();
            auto deduped = dedup(loaded.records);
            ledger.deduped += deduped.removed;
            corpus = std::move(deduped.records);
            universe = corpus;
            const auto corpus_path = ctx.path("ingest/corpus.jsonl");
            write_corpus(corpus, corpus_path);
            stage.outputs.push_back(ctx.artifact("corpus", corpus_path, corpus.size()));
            auto stats = compute_stats(corpus, "train");
            if (config.dev_path) {
                const auto dev = load_corpus(*config.dev_path, config.task, config.parse_mode);
                stats.merge(compute_stats(dev.records, "dev"));
            }
            const auto stats_path = ctx.path("ingest/stats.json");
            write_json(stats_path, stats.to_json());
            stage.outputs.push_back(ctx.artifact("stats", stats_path, 0));
            stage.counts["loaded"] = static_cast<double>(loaded.records.size());
            stage.counts["skipped_lines"] = static_cast<double>(loaded.report.skipped.size());
            stage.counts["deduped"] = static_cast<double>(deduped.removed);
            stage.counts["label_conflicts"] = static_cast<double>(deduped.conflicts.size());
            stage.counts["unknown_languages"] = static_cast<double>(loaded.report.unknown_languages.size());
        });

        if (config.stages.augment) {
            run_stage("augment", [&](StageRecord& stage) {
                AugmentPlan plan;
                plan.task = config.task;
                plan.master_seed = config.seed;
                plan.source_policy = config.augment_policy;
                plan.target_languages = config.augment_targets;
                if (plan.target_languages.empty()) {
                    const auto dev = load_corpus(*config.dev_path, config.task, config.parse_mode);
                    std::set<std::string> eval_langs;
                    for (const auto& r : dev.records) eval_langs.insert(r.language);
                    plan.target_languages = missing_languages(compute_stats(corpus, "train"), eval_langs, config.task);
                }
                plan.per_language_quota = config.augment_quota ? *config.augment_quota : default_quota(corpus, config.task);
                stage.config = {{"targets", plan.target_languages},
                                {"quota", plan.per_language_quota},
                                {"policy", to_string(plan.source_policy)},
                                {"seed", plan.master_seed}};
                auto result = augment_by_translation(corpus, plan, *providers->translator, config.in_flight);
                const auto aug_path = ctx.path("augment/augmented.jsonl");
                write_corpus(result.records, aug_path);
                write_json(ctx.path("augment/report.json"), result.report.to_json());
                ledger.augmented += result.records.size();
                std::vector<RelevanceRecord> merged = corpus;
                merged.insert(merged.end(), result.records.begin(), result.records.end());
                universe.insert(universe.end(), result.records.begin(), result.records.end());
                auto deduped = dedup(merged);
                ledger.deduped += deduped.removed;
                corpus = std::move(deduped.records);
                const auto corpus_path = ctx.path("augment/corpus.jsonl");
                write_corpus(corpus, corpus_path);
                stage.outputs.push_back(ctx.artifact("augmented", aug_path, result.records.size()));
                stage.outputs.push_back(ctx.artifact("report", ctx.path("augment/report.json"), 0));
                stage.outputs.push_back(ctx.artifact("corpus", corpus_path, corpus.size()));
                stage.counts["requested"] = static_cast<double>(result.report.requested);
                stage.counts["augmented"] = static_cast<double>(result.records.size());
                stage.counts["failures"] = static_cast<double>(result.report.failures);
                stage.counts["deduped"] = static_cast<double>(deduped.removed);
                for (const auto& [lang, n] : result.report.per_language) {
                    stage.counts["language:" + lang] = static_cast<double>(n);
                }
            });
        }

        if (config.stages.negatives) {
            run_stage("negatives", [&](StageRecord& stage) {
                const auto catalog = config.catalog_path ? CandidateCatalog::load(*config.catalog_path, config.task)
                                                         : CandidateCatalog::from_records(corpus, config.task);
                if (config.catalog_path) {
                    stage.inputs.push_back(ctx.artifact("catalog", *config.catalog_path, catalog.size()));
                }
                NegativeMiningConfig mining;
                mining.k_min = config.k_min;
                mining.k_max = config.k_max;
                mining.ratio = config.negative_ratio;
                mining.master_seed = config.seed;
                mining.target_languages = config.negative_targets;
                stage.config = {{"k_min", mining.k_min}, {"k_max", mining.k_max},
                                {"ratio", mining.ratio}, {"targets", mining.target_languages},
                                {"catalog_size", catalog.size()}, {"seed", mining.master_seed}};
                const auto index = build_index(catalog, *providers->embedder);
                std::vector<RelevanceRecord> positives;
                for (const auto& r : corpus) {
                    if (r.label == 1) positives.push_back(r);
                }
                const auto exclusion = PositivePairSet::from_records(corpus);
                auto result = mine_hard_negatives(positives, catalog, index, providers->translator.get(), mining,
                                                  exclusion, config.in_flight);
                const auto neg_path = ctx.path("negatives/negatives.jsonl");
                write_corpus(result.negatives, neg_path);
                std::vector<nlohmann::ordered_json> traces;
                for (const auto& t : result.traces) traces.push_back(t.to_json());
                write_jsonl(ctx.path("negatives/traces.jsonl"), traces);
                write_json(ctx.path("negatives/report.json"), result.report.to_json());
                ledger.negatives += result.negatives.size();
                std::vector<RelevanceRecord> merged = corpus;
                merged.insert(merged.end(), result.negatives.begin(), result.negatives.end());
                universe.insert(universe.end(), result.negatives.begin(), result.negatives.end());
                auto deduped = dedup(merged);
                ledger.deduped += deduped.removed;
                corpus = std::move(deduped.records);
                const auto corpus_path = ctx.path("negatives/corpus.jsonl");
                write_corpus(corpus, corpus_path);
                stage.outputs.push_back(ctx.artifact("negatives", neg_path, result.negatives.size()));
                stage.outputs.push_back(ctx.artifact("traces", ctx.path("negatives/traces.jsonl"), result.traces.size()));
                stage.outputs.push_back(ctx.artifact("report", ctx.path("negatives/report.json"), 0));
                stage.outputs.push_back(ctx.artifact("corpus", corpus_path, corpus.size()));
                stage.counts["positives"] = static_cast<double>(result.report.positives);
                stage.counts["requested"] = static_cast<double>(result.report.requested);
                stage.counts["mined"] = static_cast<double>(result.report.mined);
                stage.counts["skipped"] = static_cast<double>(result.report.skipped);
                stage.counts["deduped"] = static_cast<double>(deduped.removed);
            });
        }

        if (config.stages.filter) {
            run_stage("filter", [&](StageRecord& stage) {
                stage.config = {{"tau", config.filter.tau}, {"action", to_string(config.filter.action)}};
                // Training file for the filter model, trained outside this tool.
                const auto pre_path = ctx.path("filter/train_for_filter_model.jsonl");
                emit_training_file(corpus, tmpl, pre_path);
                auto result = validate_corpus(corpus, *providers->scorer, config.filter, config.in_flight);
                const auto summary = filter_report(result.verdicts);
                std::vector<nlohmann::ordered_json> verdicts;
                for (const auto& v : result.verdicts) verdicts.push_back(v.to_json());
                write_jsonl(ctx.path("filter/verdicts.jsonl"), verdicts);
                write_json(ctx.path("filter/report.json"), summary.to_json());
                const std::size_t removed = corpus.size() - result.kept.size();
                ledger.filtered += removed;
                corpus = std::move(result.kept);
                const auto corpus_path = ctx.path("filter/corpus.jsonl");
                write_corpus(corpus, corpus_path);
                stage.outputs.push_back(ctx.artifact("train_for_filter_model", pre_path));
                stage.outputs.push_back(ctx.artifact("verdicts", ctx.path("filter/verdicts.jsonl"), verdicts.size()));
                stage.outputs.push_back(ctx.artifact("report", ctx.path("filter/report.json"), 0));
                stage.outputs.push_back(ctx.artifact("corpus", corpus_path, corpus.size()));
                stage.counts["flagged"] = static_cast<double>(summary.totals.flagged);
                stage.counts["removed"] = static_cast<double>(removed);
                stage.counts["unscored"] = static_cast<double>(summary.totals.unscored);
            });
        }

        const auto final_corpus = ctx.path("final/corpus.jsonl");
        write_corpus(corpus, final_corpus);
        const auto final_train = ctx.path("final/train_sft.jsonl");
        emit_training_file(corpus, tmpl, final_train);
        manifest.outputs.push_back(ctx.artifact("corpus", final_corpus, corpus.size()));
        manifest.outputs.push_back(ctx.artifact("train_sft", final_train, corpus.size()));
        ledger.output = corpus.size();
        if (!ledger.balanced()) throw DataError("corpus ledger does not balance");
        if (const auto missing = unresolved_sources(corpus, universe); !missing.empty()) {
            throw DataError("record " + missing.front() + " has an unresolved source_id");
        }

        if (config.dev_path) {
            run_stage("evaluate", [&](StageRecord& stage) {
                const auto dev = load_corpus(*config.dev_path, config.task, config.parse_mode);
                stage.inputs.push_back(ctx.artifact("dev", *config.dev_path, dev.report.lines_read));
                auto scoring = score_records(dev.records, *providers->scorer, config.in_flight, true);
                const auto scored_path = ctx.path("evaluate/scored.jsonl");
                write_scored(scoring.scored, scored_path);
                stage.outputs.push_back(ctx.artifact("scored", scored_path, scoring.scored.size()));
                double threshold = config.default_threshold;
                if (config.stages.calibrate) {
                    const auto calib = calibrate_threshold(scoring.scored, config.grid_step);
                    threshold = calib.best_threshold;
                    write_json(ctx.path("evaluate/calib.json"), calib.to_json());
                    write_text(ctx.path("evaluate/sweep.csv"), calib.sweep_csv());
                    stage.outputs.push_back(ctx.artifact("calibration", ctx.path("evaluate/calib.json"), 0));
                    stage.outputs.push_back(ctx.artifact("sweep", ctx.path("evaluate/sweep.csv")));
                }
                std::vector<Prediction> preds;
                preds.reserve(scoring.scored.size());
                for (const auto& s : scoring.scored) {
                    preds.push_back({s.task, s.language, s.label.value_or(0), decide(s.p_yes, threshold)});
                }
                auto report = build_report(preds, {{config.task, threshold}});
                for (const auto& r : corpus) ++report.provenance[std::string{to_string(r.origin)}];
                write_json(ctx.path("evaluate/report.json"), report.to_json());
                stage.outputs.push_back(ctx.artifact("report", ctx.path("evaluate/report.json"), 0));
                stage.config = {{"calibrated", config.stages.calibrate}, {"grid_step", config.grid_step}};
                const double f1 = report.tasks.at(config.task).overall.metrics.f1;
                stage.counts["threshold"] = threshold;
                stage.counts["f1"] = f1;
                manifest.threshold = threshold;
                manifest.dev_f1 = f1;
            });
        }
    } catch (const std::exception& e) {
        manifest.status = "failed";
        manifest.error = e.what();
        write_json(manifest_path, manifest.to_json());
        throw;
    }
    write_json(manifest_path, manifest.to_json());
    return manifest;
}

namespace {

std::string combo_name(const std::vector<std::string>& toggles, unsigned mask) {
    std::string name;
    for (std::size_t i = 0; i < toggles.size(); ++i) {
        if ((mask >> i) & 1U) name += (name.empty() ? "" : "+") + toggles[i];
    }
    return name.empty() ? "base" : name;
}

bool* toggle_slot(StageToggles& t, const std::string& name) {
    if (name == "augment") return &t.augment;
    if (name == "negatives") return &t.negatives;
    if (name == "filter") return &t.filter;
    if (name == "calibrate" || name == "threshold") return &t.calibrate;
    return nullptr;
}

}  // namespace

AblationResult ablation_matrix(const PipelineConfig& base, const std::vector<std::string>& toggles,
                               ProviderSet* providers, const ProgressLogger& log) {
    if (toggles.empty()) throw ConfigError("ablation needs at least one toggle");
    if (toggles.size() > 8) throw ConfigError("ablation supports at most 8 toggles");
    for (const auto& t : toggles) {
        StageToggles probe;
        if (toggle_slot(probe, t) == nullptr) throw ConfigError("unknown toggle '" + t + "'");
    }
    AblationResult result;
    for (unsigned mask = 0; mask < (1U << toggles.size()); ++mask) {
        PipelineConfig cfg = base;
        for (std::size_t i = 0; i < toggles.size(); ++i) *toggle_slot(cfg.stages, toggles[i]) = ((mask >> i) & 1U) != 0;
        const auto name = combo_name(toggles, mask);
        cfg.workdir = base.workdir / name;
        if (log) log("ablation run " + name);
        result.rows.push_back({name, cfg.stages, run_pipeline(cfg, providers, log)});
    }
    const auto table = result.render_table();
    fs::create_directories(base.workdir);
    write_text(base.workdir / "ablation.md", table);
    write_json(base.workdir / "ablation.json", result.to_json());
    return result;
}

namespace {

struct RowSummary {
    std::size_t records = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t languages = 0;
};

RowSummary summarize(const RunManifest& m, const fs::path& workdir) {
    RowSummary s;
    const auto corpus = load_corpus(workdir / "final/corpus.jsonl", std::nullopt).records;
    std::set<std::string> langs;
    for (const auto& r : corpus) {
        ++(r.label == 1 ? s.positives : s.negatives);
        langs.insert(r.language);
    }
    s.records = m.ledger.output;
    s.languages = langs.size();
    return s;
}

}  // namespace

std::string AblationResult::render_table() const {
    std::ostringstream out;
    out << "| run | augment | negatives | filter | calibrate | records | positives | negatives | positive ratio | languages | threshold | dev F1 |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    auto flag = [](bool b) { return b ? "on" : "off"; };
    for (const auto& row : rows) {
        const auto workdir = fs::path{row.manifest.config.value("workdir", std::string{})};
        const auto s = summarize(row.manifest, workdir);
        const double ratio = s.records == 0 ? 0.0 : static_cast<double>(s.positives) / static_cast<double>(s.records);
        out << "| " << row.name << " | " << flag(row.toggles.augment) << " | " << flag(row.toggles.negatives)
            << " | " << flag(row.toggles.filter) << " | " << flag(row.toggles.calibrate) << " | " << s.records
            << " | " << s.positives << " | " << s.negatives << " | " << format_half_up(ratio) << " | "
            << s.languages << " | " << (row.manifest.threshold ? format_half_up(*row.manifest.threshold, 2) : "-")
            << " | " << (row.manifest.dev_f1 ? format_half_up(*row.manifest.dev_f1) : "-") << " |\n";
    }
    return out.str();
}

nlohmann::ordered_json AblationResult::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        const auto workdir = fs::path{row.manifest.config.value("workdir", std::string{})};
        const auto s = summarize(row.manifest, workdir);
        nlohmann::ordered_json r;
        r["name"] = row.name;
        r["toggles"] = {{"augment", row.toggles.augment},
                        {"negatives", row.toggles.negatives},
                        {"filter", row.toggles.filter},
                        {"calibrate", row.toggles.calibrate}};
        r["records"] = s.records;
        r["positives"] = s.positives;
        r["negatives"] = s.negatives;
        r["languages"] = s.languages;
        r["ledger"] = {{"input", row.manifest.ledger.input},
                       {"augmented", row.manifest.ledger.augmented},
                       {"negatives", row.manifest.ledger.negatives},
                       {"filtered", row.manifest.ledger.filtered},
                       {"deduped", row.manifest.ledger.deduped},
                       {"output", row.manifest.ledger.output}};
        r["threshold"] = row.manifest.threshold ? nlohmann::ordered_json(*row.manifest.threshold) : nlohmann::ordered_json(nullptr);
        r["dev_f1"] = row.manifest.dev_f1 ? nlohmann::ordered_json(*row.manifest.dev_f1) : nlohmann::ordered_json(nullptr);
        r["stage_hashes"] = row.manifest.stage_hashes();
        j.push_back(std::move(r));
    }
    return j;
}

}  // namespace reldata
