#include "reldata/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "reldata/augment.hpp"
#include "reldata/corpus.hpp"
#include "reldata/evalreport.hpp"
#include "reldata/negmine.hpp"
#include "reldata/pipeline.hpp"
#include "reldata/providers.hpp"
#include "reldata/scoring.hpp"
#include "reldata/selfcheck.hpp"
#include "reldata/text.hpp"

namespace reldata::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string provider = "mock";
    int verbosity = 0;
    bool strict = false;
    bool lenient = false;
    bool json = false;
    std::size_t concurrency = kDefaultInFlight;
    std::string workdir;
};

class Context {
public:
    Context(const GlobalOptions& g, std::ostream& out, std::ostream& err) : g_{g}, out_{out} {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
        sink->set_pattern("[%l] %v");
        log_ = std::make_shared<spdlog::logger>("reldata", sink);
        log_->set_level(g.verbosity >= 1 ? spdlog::level::debug : spdlog::level::info);
    }

    const GlobalOptions& g() const { return g_; }
    std::ostream& out() const { return out_; }
    spdlog::logger& log() const { return *log_; }

    std::uint64_t seed() const { return g_.seed.value_or(0); }
    ParseMode parse_mode() const { return g_.lenient ? ParseMode::Lenient : ParseMode::Strict; }
    std::size_t in_flight() const {
        if (g_.concurrency == 0) throw ConfigError("--concurrency must be positive");
        return g_.concurrency;
    }

    RetryLogger retry_logger() const {
        return [log = log_](int attempt, int max_attempts, const std::string& error, std::chrono::milliseconds delay) {
            log->warn("provider call failed (attempt {}/{}): {}; retrying in {} ms", attempt, max_attempts, error,
                      delay.count());
        };
    }

    ProviderSet providers(HttpEndpoints endpoints = {}) const {
        const auto mode = parse_provider_mode(g_.provider);
        if (mode == ProviderMode::Http) endpoints.overlay(HttpEndpoints::from_environment());
        return ProviderSet::make(mode, endpoints, retry_logger());
    }

    LoadResult load(const std::string& path, std::optional<Task> task) const {
        auto result = load_corpus(path, task, parse_mode());
        for (const auto& issue : result.report.skipped) {
            log_->warn("{}:{}: skipped: {}", path, issue.line, issue.message);
        }
        for (const auto& lang : result.report.unknown_languages) {
            log_->warn("{}: language code '{}' is not ISO-639-1", path, lang);
        }
        return result;
    }

    void print_json(const nlohmann::ordered_json& j) const { out_ << j.dump(2) << "\n"; }

private:
    const GlobalOptions& g_;
    std::ostream& out_;
    std::shared_ptr<spdlog::logger> log_;
};

Task task_option(const std::string& text) {
    try {
        return parse_task(text);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& part : text::split(text, ",")) {
        const auto trimmed = text::trim(part);
        if (!trimmed.empty()) out.push_back(normalize_language(trimmed));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

std::string counts_table(const std::map<std::string, std::size_t>& counts, const std::string& heading) {
    std::ostringstream out;
    out << std::left << std::setw(10) << heading << "records\n";
    for (const auto& [k, n] : counts) out << std::left << std::setw(10) << k << n << "\n";
    return out.str();
}

// stats ---------------------------------------------------------------------

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string manifest;
    std::string task;
    bool csv = false;
};

int run_stats(const Context& ctx, const StatsArgs& a) {
    std::vector<std::pair<std::string, fs::path>> sources;
    for (const auto& spec : a.inputs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            sources.emplace_back("train", spec);
        } else {
            sources.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
        }
    }
    if (!a.manifest.empty()) {
        std::ifstream in{a.manifest};
        if (!in) throw DataError("cannot read " + a.manifest);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(a.manifest + ": " + e.what());
        }
        const auto base = fs::absolute(a.manifest).parent_path();
        for (const auto& entry : j.value("inputs", nlohmann::json::array())) {
            fs::path p{entry.at("path").get<std::string>()};
            if (p.is_relative()) p = base / p;
            sources.emplace_back(entry.at("split").get<std::string>(), p);
        }
    }
    if (sources.empty()) throw ConfigError("stats needs --in or --manifest");
    std::optional<Task> task;
    if (!a.task.empty()) task = task_option(a.task);
    CorpusStats stats;
    for (const auto& [split, path] : sources) {
        stats.merge(compute_stats(ctx.load(path.string(), task).records, split));
    }
    if (ctx.g().json) {
        ctx.print_json(stats.to_json());
    } else if (a.csv) {
        ctx.out() << stats.to_csv();
    } else {
        ctx.out() << stats.render_table();
    }
    return kExitOk;
}

// augment -------------------------------------------------------------------

struct AugmentArgs {
    std::string task = "qc";
    std::string targets;
    std::optional<std::size_t> quota;
    std::string policy = "uniform";
    std::string in;
    std::string out;
    std::string report;
};

int run_augment(const Context& ctx, const AugmentArgs& a) {
    AugmentPlan plan;
    plan.task = task_option(a.task);
    const auto targets = split_list(a.targets);
    plan.target_languages = {targets.begin(), targets.end()};
    if (plan.target_languages.empty()) throw ConfigError("--targets needs at least one language");
    plan.source_policy = parse_source_policy(a.policy);
    plan.master_seed = ctx.seed();
    const auto records = ctx.load(a.in, plan.task).records;
    plan.per_language_quota = a.quota ? *a.quota : default_quota(records, plan.task);
    if (plan.per_language_quota == 0) throw ConfigError("--quota must be at least 1");
    auto providers = ctx.providers();
    const auto result = augment_by_translation(records, plan, *providers.translator, ctx.in_flight());
    write_corpus(result.records, a.out);
    for (const auto& w : result.report.warnings) ctx.log().warn("{}", w);
    auto report = result.report.to_json();
    if (!a.report.empty()) write_json(a.report, report);
    if (ctx.g().json) {
        ctx.print_json(report);
    } else {
        ctx.out() << "requested " << result.report.requested << ", translated " << result.report.successes
                  << ", failed " << result.report.failures << "\n"
                  << counts_table(result.report.per_language, "language");
    }
    return kExitOk;
}

// mine-negatives --------------------------------------------------------------

struct MineArgs {
    std::string task = "qc";
    std::string catalog;
    std::string in;
    std::string out;
    std::size_t k_min = 20;
    std::size_t k_max = 50;
    double ratio = 1.0;
    std::string targets;
    std::string traces;
    std::string report;
};

int run_mine(const Context& ctx, const MineArgs& a) {
    const auto task = task_option(a.task);
    const auto records = ctx.load(a.in, task).records;
    const auto catalog = a.catalog.empty() ? CandidateCatalog::from_records(records, task)
                                           : CandidateCatalog::load(a.catalog, task);
    NegativeMiningConfig config;
    config.k_min = a.k_min;
    config.k_max = a.k_max;
    config.ratio = a.ratio;
    config.master_seed = ctx.seed();
    config.target_languages = split_list(a.targets);
    config.validate(catalog.size());
    auto providers = ctx.providers();
    const auto index = build_index(catalog, *providers.embedder);
    std::vector<RelevanceRecord> positives;
    std::copy_if(records.begin(), records.end(), std::back_inserter(positives),
                 [](const RelevanceRecord& r) { return r.label == 1; });
    const auto exclusion = PositivePairSet::from_records(records);
    const auto result = mine_hard_negatives(positives, catalog, index, providers.translator.get(), config, exclusion,
                                            ctx.in_flight());
    write_corpus(result.negatives, a.out);
    if (!a.traces.empty()) {
        std::string lines;
        for (const auto& t : result.traces) lines += t.to_json().dump() + "\n";
        write_text(a.traces, lines);
    }
    auto report = result.report.to_json();
    if (!a.report.empty()) write_json(a.report, report);
    if (ctx.g().json) {
        ctx.print_json(report);
    } else {
        ctx.out() << "positives " << result.report.positives << ", requested " << result.report.requested
                  << ", mined " << result.report.mined << ", skipped " << result.report.skipped << "\n"
                  << counts_table(result.report.per_language, "language");
    }
    return kExitOk;
}

// filter ----------------------------------------------------------------------

struct FilterArgs {
    std::string task;
    std::string in;
    std::string out;
    double tau = 0.9;
    std::string action = "remove";
    std::string report;
    std::string verdicts;
};

std::string render_filter_summary(const FilterSummary& s) {
    std::ostringstream out;
    auto row = [&](const std::string& name, const FilterSummary::Cell& c) {
        out << std::left << std::setw(22) << name << std::right << std::setw(9) << c.kept << std::setw(9)
            << c.removed << std::setw(9) << c.flagged << std::setw(10) << c.unscored << "\n";
    };
    out << std::left << std::setw(22) << "group" << std::right << std::setw(9) << "kept" << std::setw(9)
        << "removed" << std::setw(9) << "flagged" << std::setw(10) << "unscored" << "\n";
    row("total", s.totals);
    for (const auto& [k, c] : s.by_task) row("task:" + k, c);
    for (const auto& [k, c] : s.by_language) row("language:" + k, c);
    for (const auto& [k, c] : s.by_origin) row("origin:" + k, c);
    return out.str();
}

int run_filter(const Context& ctx, const FilterArgs& a) {
    FilterConfig config;
    config.tau = a.tau;
    config.action = parse_filter_action(a.action);
    config.validate();
    std::optional<Task> task;
    if (!a.task.empty()) task = task_option(a.task);
    const auto records = ctx.load(a.in, task).records;
    auto providers = ctx.providers();
    const auto result = validate_corpus(records, *providers.scorer, config, ctx.in_flight());
    write_corpus(result.kept, a.out);
    const auto summary = filter_report(result.verdicts);
    for (const auto& w : summary.warnings) ctx.log().warn("{}", w);
    if (!a.report.empty()) write_json(a.report, summary.to_json());
    if (!a.verdicts.empty()) {
        std::string lines;
        for (const auto& v : result.verdicts) lines += v.to_json().dump() + "\n";
        write_text(a.verdicts, lines);
    }
    if (ctx.g().json) {
        ctx.print_json(summary.to_json());
    } else {
        ctx.out() << render_filter_summary(summary);
    }
    return kExitOk;
}

// score -----------------------------------------------------------------------

struct ScoreArgs {
    std::string task;
    std::string in;
    std::string out;
    bool keep_going = false;
};

int run_score(const Context& ctx, const ScoreArgs& a) {
    std::optional<Task> task;
    if (!a.task.empty()) task = task_option(a.task);
    const auto records = ctx.load(a.in, task).records;
    auto providers = ctx.providers();
    const auto run = score_records(records, *providers.scorer, ctx.in_flight(), !a.keep_going);
    write_scored(run.scored, a.out);
    for (const auto& id : run.failed) ctx.log().warn("record {} could not be scored", id);
    nlohmann::ordered_json summary{{"scored", run.scored.size()}, {"failed", run.failed.size()}};
    if (ctx.g().json) {
        ctx.print_json(summary);
    } else {
        ctx.out() << "scored " << run.scored.size() << ", failed " << run.failed.size() << "\n";
    }
    return kExitOk;
}

// calibrate -------------------------------------------------------------------

struct CalibrateArgs {
    std::string in;
    std::string out;
    std::string csv;
    double grid_step = 0.01;
    std::string mode = "grid";
};

int run_calibrate(const Context& ctx, const CalibrateArgs& a) {
    CalibrationMode mode = CalibrationMode::Grid;
    if (a.mode == "exact") {
        mode = CalibrationMode::ExactCutPoints;
    } else if (a.mode != "grid") {
        throw ConfigError("--mode must be grid or exact");
    }
    threshold_grid(a.grid_step);
    const auto scored = load_scored(a.in);
    if (scored.empty()) throw DataError(a.in + " has no scored records");
    const auto task = scored.front().task;
    if (std::any_of(scored.begin(), scored.end(), [&](const ScoredRecord& s) { return s.task != task; })) {
        throw DataError("calibrate expects records of a single task; split the file per task");
    }
    const auto result = calibrate_threshold(scored, a.grid_step, mode);
    write_json(a.out, result.to_json());
    if (!a.csv.empty()) write_text(a.csv, result.sweep_csv());
    if (ctx.g().json) {
        ctx.print_json({{"task", to_string(task)},
                        {"best_threshold", result.best_threshold},
                        {"best_f1", result.best_f1},
                        {"points", result.sweep.size()}});
    } else {
        ctx.out() << "task " << to_string(task) << ": best threshold " << format_half_up(result.best_threshold, 2)
                  << ", F1 " << format_half_up(result.best_f1) << " over " << result.sweep.size() << " points\n";
    }
    return kExitOk;
}

// evaluate --------------------------------------------------------------------

struct EvaluateArgs {
    std::string task;
    std::vector<std::string> preds;
    std::optional<double> threshold;
    std::vector<std::string> calib;
    std::string provenance;
    std::string out;
};

int run_evaluate(const Context& ctx, const EvaluateArgs& a) {
    std::optional<Task> only;
    if (!a.task.empty()) only = task_option(a.task);
    std::map<Task, double> thresholds;
    for (const auto& path : a.calib) {
        std::ifstream in{path};
        if (!in) throw DataError("cannot read " + path);
        try {
            const auto j = nlohmann::json::parse(in);
            thresholds[parse_task(j.at("task").get<std::string>())] = j.at("best_threshold").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ": " + e.what());
        }
    }
    const double fallback = a.threshold.value_or(0.5);
    if (!(fallback >= 0.0 && fallback <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");

    std::vector<Prediction> predictions;
    bool used_scores = false;
    for (const auto& path : a.preds) {
        std::ifstream in{path};
        if (!in) throw DataError("cannot read " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                if (!j.contains("task") && only) j["task"] = std::string{to_string(*only)};
                Prediction p;
                if (j.contains("pred")) {
                    p.task = parse_task(j.at("task").get<std::string>());
                    p.language = normalize_language(j.value("language", std::string{}));
                    p.label = j.at("label").get<int>();
                    p.pred = j.at("pred").get<int>();
                    if ((p.label != 0 && p.label != 1) || (p.pred != 0 && p.pred != 1)) {
                        throw DataError("label and pred must be 0 or 1");
                    }
                } else {
                    const auto s = scored_from_json(j);
                    if (!s.label) throw DataError("record has no label");
                    used_scores = true;
                    const auto it = thresholds.find(s.task);
                    p = {s.task, s.language, *s.label, decide(s.p_yes, it == thresholds.end() ? fallback : it->second)};
                }
                if (only && p.task != *only) continue;
                predictions.push_back(std::move(p));
            } catch (const std::exception& e) {
                throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    if (predictions.empty()) throw DataError("no predictions to evaluate");
    std::map<Task, double> used;
    if (used_scores) {
        for (const auto& p : predictions) {
            const auto it = thresholds.find(p.task);
            used[p.task] = it == thresholds.end() ? fallback : it->second;
        }
    }
    auto report = build_report(predictions, used);
    if (!a.provenance.empty()) {
        for (const auto& r : ctx.load(a.provenance, std::nullopt).records) ++report.provenance[std::string{to_string(r.origin)}];
    }
    if (!a.out.empty()) write_json(a.out, report.to_json());
    if (ctx.g().json) {
        ctx.print_json(report.to_json());
    } else {
        ctx.out() << report.render_table();
    }
    return kExitOk;
}

// emit-train ------------------------------------------------------------------

struct EmitArgs {
    std::string task = "qc";
    std::string in;
    std::string out;
    std::string templ;
};

int run_emit(const Context& ctx, const EmitArgs& a) {
    const auto task = task_option(a.task);
    auto tmpl = InstructionTemplate::default_for(task);
    if (!a.templ.empty()) {
        std::ifstream in{a.templ};
        if (!in) throw ConfigError("cannot read template " + a.templ);
        try {
            tmpl = InstructionTemplate::from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(a.templ + ": " + e.what());
        }
    }
    const auto records = ctx.load(a.in, task).records;
    const auto n = emit_training_file(records, tmpl, a.out);
    if (ctx.g().json) {
        ctx.print_json({{"records", n}});
    } else {
        ctx.out() << "wrote " << n << " training lines\n";
    }
    return kExitOk;
}

// run / ablate ----------------------------------------------------------------

PipelineConfig load_config(const Context& ctx, const std::string& path) {
    if (path.empty()) throw ConfigError("--config is required");
    auto config = PipelineConfig::load(path);
    if (ctx.g().seed) config.seed = *ctx.g().seed;
    if (ctx.g().strict || ctx.g().lenient) config.parse_mode = ctx.parse_mode();
    config.provider_mode = parse_provider_mode(ctx.g().provider);
    config.in_flight = ctx.in_flight();
    if (!ctx.g().workdir.empty()) config.workdir = fs::absolute(ctx.g().workdir);
    config.validate();
    return config;
}

std::string render_manifest(const RunManifest& m) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "stage" << "outputs\n";
    for (const auto& s : m.stages) {
        out << std::left << std::setw(12) << s.name;
        bool first = true;
        for (const auto& a : s.outputs) {
            out << (first ? "" : ", ") << a.name << "=" << a.records;
            first = false;
        }
        out << "\n";
    }
    const auto& l = m.ledger;
    out << "ledger: input " << l.input << " + augmented " << l.augmented << " + negatives " << l.negatives
        << " - filtered " << l.filtered << " - deduped " << l.deduped << " = output " << l.output
        << (l.balanced() ? " (balanced)" : " (UNBALANCED)") << "\n";
    if (m.threshold) out << "threshold " << format_half_up(*m.threshold, 2) << "\n";
    if (m.dev_f1) out << "dev F1 " << format_half_up(*m.dev_f1) << "\n";
    return out.str();
}

int run_run(const Context& ctx, const std::string& config_path) {
    const auto config = load_config(ctx, config_path);
    auto providers = ctx.providers(config.endpoints);
    const auto manifest = run_pipeline(config, &providers, [&](const std::string& msg) { ctx.log().info("{}", msg); });
    if (ctx.g().json) {
        ctx.print_json(manifest.to_json());
    } else {
        ctx.out() << render_manifest(manifest);
    }
    return kExitOk;
}

int run_report(const Context& ctx, const std::string& path) {
    const auto manifest = RunManifest::load(fs::is_directory(path) ? fs::path{path} / "manifest.json" : fs::path{path});
    if (ctx.g().json) {
        ctx.print_json(manifest.to_json());
    } else {
        if (manifest.status != "ok") ctx.out() << "status " << manifest.status << ": " << manifest.error << "\n";
        ctx.out() << render_manifest(manifest);
    }
    return manifest.status == "ok" ? kExitOk : kExitData;
}

int run_ablate(const Context& ctx, const std::string& config_path, const std::string& toggles) {
    const auto config = load_config(ctx, config_path);
    std::vector<std::string> names;
    for (const auto& t : text::split(toggles, ",")) {
        const auto trimmed = text::trim(t);
        if (!trimmed.empty()) names.emplace_back(trimmed);
    }
    auto providers = ctx.providers(config.endpoints);
    const auto result =
        ablation_matrix(config, names, &providers, [&](const std::string& msg) { ctx.log().debug("{}", msg); });
    if (ctx.g().json) {
        ctx.print_json(result.to_json());
    } else {
        ctx.out() << result.render_table();
    }
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multilingual relevance data pipeline", "reldata"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "Pipeline config (TOML, or a previous manifest.json)");
    app.add_option("--seed", g.seed, "Master seed for every random choice");
    app.add_option("--provider", g.provider, "Provider backend")->check(CLI::IsMember({"mock", "http"}));
    app.add_flag("-v,--verbose", g.verbosity, "More log output");
    auto* strict = app.add_flag("--strict", g.strict, "Abort on the first malformed input line (default)");
    app.add_flag("--lenient", g.lenient, "Skip malformed input lines")->excludes(strict);
    app.add_flag("--json", g.json, "Machine-readable output");
    app.add_option("--concurrency", g.concurrency, "Maximum in-flight provider requests");

    std::function<int(const Context&)> action;

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "Per-language record counts");
    c_stats->add_option("--in", stats.inputs, "Corpus file, optionally as split=path");
    c_stats->add_option("--manifest", stats.manifest, "JSON file listing {split, path} inputs");
    c_stats->add_option("--task", stats.task, "Only this task");
    c_stats->add_flag("--csv", stats.csv, "CSV output");
    c_stats->callback([&] { action = [&](const Context& c) { return run_stats(c, stats); }; });

    AugmentArgs augment;
    auto* c_aug = app.add_subcommand("augment", "Translate queries into missing languages");
    c_aug->add_option("--task", augment.task)->check(CLI::IsMember({"qc", "qi"}));
    c_aug->add_option("--targets", augment.targets, "Comma-separated target languages")->required();
    c_aug->add_option("--quota", augment.quota, "Records per target language (default: mean per language)");
    c_aug->add_option("--policy", augment.policy)->check(CLI::IsMember({"uniform", "weighted"}));
    c_aug->add_option("--in", augment.in)->required();
    c_aug->add_option("--out", augment.out)->required();
    c_aug->add_option("--report", augment.report, "Write the run report here");
    c_aug->callback([&] { action = [&](const Context& c) { return run_augment(c, augment); }; });

    MineArgs mine;
    auto* c_mine = app.add_subcommand("mine-negatives", "Mine semantic hard negatives");
    c_mine->add_option("--task", mine.task)->check(CLI::IsMember({"qc", "qi"}));
    c_mine->add_option("--catalog", mine.catalog, "One candidate per line (default: candidates of --in)");
    c_mine->add_option("--in", mine.in)->required();
    c_mine->add_option("--out", mine.out)->required();
    c_mine->add_option("--k-min", mine.k_min);
    c_mine->add_option("--k-max", mine.k_max);
    c_mine->add_option("--ratio", mine.ratio, "Negatives per positive");
    c_mine->add_option("--targets", mine.targets, "Translate negatives into these languages");
    c_mine->add_option("--traces", mine.traces, "Write per-negative traces here");
    c_mine->add_option("--report", mine.report);
    c_mine->callback([&] { action = [&](const Context& c) { return run_mine(c, mine); }; });

    FilterArgs filter;
    auto* c_filter = app.add_subcommand("filter", "Drop records the scorer confidently contradicts");
    c_filter->add_option("--task", filter.task)->check(CLI::IsMember({"qc", "qi"}));
    c_filter->add_option("--in", filter.in)->required();
    c_filter->add_option("--out", filter.out)->required();
    c_filter->add_option("--tau", filter.tau, "Confidence threshold in (0.5, 1]");
    c_filter->add_option("--action", filter.action)->check(CLI::IsMember({"remove", "flag"}));
    c_filter->add_option("--report", filter.report);
    c_filter->add_option("--verdicts", filter.verdicts, "Write per-record verdicts here");
    c_filter->callback([&] { action = [&](const Context& c) { return run_filter(c, filter); }; });

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Score records with the relevance provider");
    c_score->add_option("--task", score.task)->check(CLI::IsMember({"qc", "qi"}));
    c_score->add_option("--in", score.in)->required();
    c_score->add_option("--out", score.out)->required();
    c_score->add_flag("--keep-going", score.keep_going, "Skip records the provider fails on");
    c_score->callback([&] { action = [&](const Context& c) { return run_score(c, score); }; });

    CalibrateArgs calib;
    auto* c_calib = app.add_subcommand("calibrate", "Pick the F1-maximising decision threshold");
    c_calib->add_option("--in", calib.in, "Scored records of one task")->required();
    c_calib->add_option("--out", calib.out)->required();
    c_calib->add_option("--csv", calib.csv, "Write the sweep curve as CSV");
    c_calib->add_option("--grid-step", calib.grid_step);
    c_calib->add_option("--mode", calib.mode)->check(CLI::IsMember({"grid", "exact"}));
    c_calib->callback([&] { action = [&](const Context& c) { return run_calibrate(c, calib); }; });

    EvaluateArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "Positive-class precision, recall and F1");
    c_eval->add_option("--task", eval.task)->check(CLI::IsMember({"qc", "qi"}));
    c_eval->add_option("--preds", eval.preds, "Scored or predicted records")->required();
    c_eval->add_option("--threshold", eval.threshold, "Threshold for tasks without --calib (default 0.5)");
    c_eval->add_option("--calib", eval.calib, "calib.json from the calibrate command");
    c_eval->add_option("--provenance", eval.provenance, "Training corpus for origin counts");
    c_eval->add_option("--out", eval.out);
    c_eval->callback([&] { action = [&](const Context& c) { return run_evaluate(c, eval); }; });

    auto* c_run = app.add_subcommand("run", "Run the configured pipeline");
    c_run->add_option("--workdir", g.workdir, "Override the configured working directory");
    c_run->callback([&] { action = [&](const Context& c) { return run_run(c, g.config); }; });

    std::string toggles = "augment,negatives,filter";
    auto* c_ablate = app.add_subcommand("ablate", "Run every on/off combination of stage toggles");
    c_ablate->add_option("--workdir", g.workdir, "Override the configured working directory");
    c_ablate->add_option("--toggles", toggles, "Comma-separated: augment, negatives, filter, calibrate");
    c_ablate->callback([&] { action = [&](const Context& c) { return run_ablate(c, g.config, toggles); }; });

    std::string report_path;
    auto* c_report = app.add_subcommand("report", "Summarize a finished run");
    c_report->add_option("manifest", report_path, "manifest.json or its run directory")->required();
    c_report->callback([&] { action = [&](const Context& c) { return run_report(c, report_path); }; });

    EmitArgs emit;
    auto* c_emit = app.add_subcommand("emit-train", "Write the instruction-tuning file");
    c_emit->add_option("--task", emit.task)->check(CLI::IsMember({"qc", "qi"}));
    c_emit->add_option("--in", emit.in)->required();
    c_emit->add_option("--out", emit.out)->required();
    c_emit->add_option("--template", emit.templ, "JSON template with instruction/input/output_yes/output_no");
    c_emit->callback([&] { action = [&](const Context& c) { return run_emit(c, emit); }; });

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    if (args.empty()) {
        err << app.help();
        return kExitUsage;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    Context ctx{g, out, err};
    try {
        return action(ctx);
    } catch (const ConfigError& e) {
        ctx.log().error("{}", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        ctx.log().error("{}", e.what());
        return kExitData;
    } catch (const ProviderError& e) {
        ctx.log().error("{}", e.what());
        return kExitProvider;
    } catch (const fs::filesystem_error& e) {
        ctx.log().error("{}", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        ctx.log().error("unexpected failure: {}", e.what());
        return kExitData;
    }
}

}  // namespace reldata::cli
