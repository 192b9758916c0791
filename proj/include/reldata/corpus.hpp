#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "reldata/types.hpp"

namespace reldata {

/// One labeled (query, candidate) pair. For QC the candidate is a category
/// path, for QI an item title. label is 1 for relevant, 0 for irrelevant.
struct RelevanceRecord {
    std::string id;
    Task task = Task::QC;
    std::string query;
    std::string language;
    std::string candidate;
    int label = 0;
    Origin origin = Origin::Original;
    std::optional<std::string> source_id;

    friend bool operator==(const RelevanceRecord&, const RelevanceRecord&) = default;
};

/// Content id: hex FNV-1a of task, query, candidate and label.
std::string record_content_id(Task task, std::string_view query, std::string_view candidate,
                              int label);

/// Throws DataError when a record breaks a field invariant (empty text,
/// label outside {0,1}, origin/source_id mismatch). Cross-record source
/// resolution is checked separately by unresolved_sources().
void validate_record(const RelevanceRecord& record);

nlohmann::ordered_json to_json(const RelevanceRecord& record);

/// Parses one corpus line object. `default_task` fills in a missing task;
/// a present task that disagrees with it is rejected.
RelevanceRecord record_from_json(const nlohmann::json& object, std::optional<Task> default_task);

/// Taxonomy path such as "Electronics > Audio Devices > Headphones".
class CategoryPath {
public:
    static constexpr std::string_view kSeparator = " > ";

    explicit CategoryPath(std::vector<std::string> segments);

    static CategoryPath parse(std::string_view rendered);

    [[nodiscard]] std::string render() const;
    [[nodiscard]] const std::vector<std::string>& segments() const noexcept { return segments_; }

    friend bool operator==(const CategoryPath&, const CategoryPath&) = default;

private:
    std::vector<std::string> segments_;
};

enum class ParseMode { Strict, Lenient };

struct LineIssue {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct LoadReport {
    std::size_t lines_read = 0;
    std::size_t records_loaded = 0;
    std::vector<LineIssue> skipped;
    std::set<std::string> unknown_languages;
};

struct LoadResult {
    std::vector<RelevanceRecord> records;
    LoadReport report;
};

/// Reads a line-delimited corpus file. Blank lines are ignored. In strict
/// mode the first malformed line throws DataError naming its line number;
/// in lenient mode it is skipped and recorded in the report.
LoadResult load_corpus(const std::filesystem::path& path, std::optional<Task> task,
                       ParseMode mode = ParseMode::Strict);

/// Writes records one JSON object per line; returns the count written.
std::size_t write_corpus(const std::vector<RelevanceRecord>& records,
                         const std::filesystem::path& path);

/// Lowercases a language code. Codes outside ISO-639-1 are still accepted.
std::string normalize_language(std::string_view code);
bool is_known_language(std::string_view code);

struct LabelConflict {
    Task task = Task::QC;
    std::string query;
    std::string candidate;
};

struct DedupResult {
    std::vector<RelevanceRecord> records;
    std::size_t removed = 0;
    /// Pairs that appear with both labels. Both records are kept.
    std::vector<LabelConflict> conflicts;
};

/// Keeps the first record per (task, query, candidate, label), preserving order.
DedupResult dedup(const std::vector<RelevanceRecord>& records);

/// Ids of non-original records whose source_id is not among `universe`'s ids.
std::vector<std::string> unresolved_sources(const std::vector<RelevanceRecord>& records,
                                            const std::vector<RelevanceRecord>& universe);

struct LabelCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;

    [[nodiscard]] std::size_t total() const noexcept { return positive + negative; }
    /// positive / total, or 0 for an empty cell.
    [[nodiscard]] double positive_ratio() const noexcept {
        return total() == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(total());
    }
};

/// Record counts per (task, split, language) and label balance per
/// (task, language). Stats for several splits are combined with merge().
struct CorpusStats {
    std::map<std::tuple<Task, std::string, std::string>, std::size_t> counts;
    std::map<std::pair<Task, std::string>, LabelCounts> labels;

    void merge(const CorpusStats& other);

    [[nodiscard]] std::size_t count(Task task, std::string_view split,
                                    std::string_view language) const;
    [[nodiscard]] std::size_t split_total(Task task, std::string_view split) const;
    /// Languages with a nonzero count for the task (any split when split is empty).
    [[nodiscard]] std::set<std::string> languages(std::optional<Task> task = std::nullopt,
                                                  std::string_view split = {}) const;
    /// Column order: the competition languages first, then the rest alphabetically.
    [[nodiscard]] std::vector<std::string> column_order() const;

    /// Rows task x split, languages as columns; absent cells shown as "--".
    [[nodiscard]] std::string render_table() const;
    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] std::string to_csv() const;
};

CorpusStats compute_stats(const std::vector<RelevanceRecord>& records, std::string_view split_name);

/// Prompt template for supervised fine-tuning files. The instruction and
/// input strings may reference {query}, {candidate} and {language}; every
/// placeholder must appear in at least one of them.
struct InstructionTemplate {
    std::string instruction;
    std::string input;
    std::string output_yes = "yes";
    std::string output_no = "no";

    static InstructionTemplate default_for(Task task);
    static InstructionTemplate from_json(const nlohmann::json& object);
    /// Throws ConfigError if a placeholder is missing.
    void validate() const;
};

/// Writes one {"instruction","input","output"} line per record.
std::size_t emit_training_file(const std::vector<RelevanceRecord>& records,
                               const InstructionTemplate& tmpl,
                               const std::filesystem::path& path);

}  // namespace reldata
