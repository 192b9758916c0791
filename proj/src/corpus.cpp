#include "reldata/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "reldata/hashing.hpp"
#include "reldata/text.hpp"

namespace reldata {

namespace {

constexpr std::string_view kIso6391[] = {
    "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az", "ba", "be", "bg",
    "bh", "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce", "ch", "co", "cr", "cs", "cu", "cv",
    "cy", "da", "de", "dv", "dz", "ee", "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi",
    "fj", "fo", "fr", "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr",
    "ht", "hu", "hy", "hz", "ia", "id", "ie", "ig", "ii", "ik", "io", "is", "it", "iu", "ja",
    "jv", "ka", "kg", "ki", "kj", "kk", "kl", "km", "kn", "ko", "kr", "ks", "ku", "kv", "kw",
    "ky", "la", "lb", "lg", "li", "ln", "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml",
    "mn", "mr", "ms", "mt", "my", "na", "nb", "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv",
    "ny", "oc", "oj", "om", "or", "os", "pa", "pi", "pl", "ps", "pt", "qu", "rm", "rn", "ro",
    "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk", "sl", "sm", "sn", "so", "sq", "sr",
    "ss", "st", "su", "sv", "sw", "ta", "te", "tg", "th", "ti", "tk", "tl", "tn", "to", "tr",
    "ts", "tt", "tw", "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo", "wa", "wo", "xh", "yi",
    "yo", "za", "zh", "zu"};
static_assert(std::is_sorted(std::begin(kIso6391), std::end(kIso6391)));

// Column order of the competition's language breakdown.
constexpr std::array<std::string_view, 13> kCompetitionLanguages = {
    "en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar", "th", "vi", "id"};

std::string require_string(const nlohmann::json& object, const char* key) {
    const auto it = object.find(key);
    if (it == object.end()) throw DataError(std::string{"missing field '"} + key + "'");
    if (!it->is_string()) throw DataError(std::string{"field '"} + key + "' must be a string");
    return it->get<std::string>();
}

int parse_label(const nlohmann::json& value) {
    if (value.is_number_integer()) {
        const auto v = value.get<long long>();
        if (v == 0 || v == 1) return static_cast<int>(v);
    } else if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s == "0") return 0;
        if (s == "1") return 1;
    } else if (value.is_boolean()) {
        return value.get<bool>() ? 1 : 0;
    }
    throw DataError("label must be 0 or 1");
}

}  // namespace

std::string record_content_id(Task task, std::string_view query, std::string_view candidate,
                              int label) {
    std::string key;
    key.reserve(query.size() + candidate.size() + 8);
    key += to_string(task);
    key += '\x1f';
    key += query;
    key += '\x1f';
    key += candidate;
    key += '\x1f';
    key += label == 1 ? '1' : '0';
    return to_hex64(fnv1a64(key));
}

void validate_record(const RelevanceRecord& r) {
    if (text::trim(r.query).empty()) throw DataError("query is empty");
    if (text::trim(r.candidate).empty()) throw DataError("candidate is empty");
    if (r.label != 0 && r.label != 1) throw DataError("label must be 0 or 1");
    if (r.language.empty()) throw DataError("language is empty");
    if (r.origin == Origin::Original && r.source_id) {
        throw DataError("original record must not carry source_id");
    }
    if (r.origin != Origin::Original && (!r.source_id || r.source_id->empty())) {
        throw DataError("derived record requires source_id");
    }
}

nlohmann::ordered_json to_json(const RelevanceRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["task"] = to_string(r.task);
    j["query"] = r.query;
    j["language"] = r.language;
    j["candidate"] = r.candidate;
    j["label"] = r.label;
    j["origin"] = to_string(r.origin);
    if (r.source_id) j["source_id"] = *r.source_id;
    return j;
}

RelevanceRecord record_from_json(const nlohmann::json& object, std::optional<Task> default_task) {
    if (!object.is_object()) throw DataError("line is not a JSON object");
    RelevanceRecord r;
    if (const auto it = object.find("task"); it != object.end()) {
        if (!it->is_string()) throw DataError("field 'task' must be a string");
        r.task = parse_task(it->get<std::string>());
        if (default_task && *default_task != r.task) {
            throw DataError("task '" + std::string{to_string(r.task)} + "' does not match expected '" +
                            std::string{to_string(*default_task)} + "'");
        }
    } else if (default_task) {
        r.task = *default_task;
    } else {
        throw DataError("missing field 'task'");
    }
    r.query = std::string{text::trim(require_string(object, "query"))};
    r.candidate = std::string{text::trim(require_string(object, "candidate"))};
    r.language = normalize_language(require_string(object, "language"));
    const auto label = object.find("label");
    if (label == object.end()) throw DataError("missing field 'label'");
    r.label = parse_label(*label);
    if (const auto it = object.find("origin"); it != object.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'origin' must be a string");
        r.origin = parse_origin(it->get<std::string>());
    }
    if (const auto it = object.find("source_id"); it != object.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'source_id' must be a string");
        r.source_id = it->get<std::string>();
    }
    if (const auto it = object.find("id"); it != object.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'id' must be a string");
        r.id = it->get<std::string>();
    }
    validate_record(r);
    if (r.id.empty()) r.id = record_content_id(r.task, r.query, r.candidate, r.label);
    return r;
}

CategoryPath::CategoryPath(std::vector<std::string> segments) : segments_{std::move(segments)} {
    if (segments_.empty()) throw DataError("category path needs at least one segment");
    for (const auto& s : segments_) {
        if (s.empty()) throw DataError("category path segment is empty");
    }
}

CategoryPath CategoryPath::parse(std::string_view rendered) {
    return CategoryPath{text::split(rendered, kSeparator)};
}

std::string CategoryPath::render() const {
    std::string out;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (i > 0) out += kSeparator;
        out += segments_[i];
    }
    return out;
}

LoadResult load_corpus(const std::filesystem::path& path, std::optional<Task> task,
                       ParseMode mode) {
    std::ifstream in{path};
    if (!in) throw DataError("cannot read corpus file " + path.string());
    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        ++result.report.lines_read;
        try {
            const auto object = nlohmann::json::parse(line);
            auto record = record_from_json(object, task);
            if (!is_known_language(record.language)) {
                result.report.unknown_languages.insert(record.language);
            }
            result.records.push_back(std::move(record));
        } catch (const std::exception& e) {
            if (mode == ParseMode::Strict) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
            result.report.skipped.push_back({line_no, e.what()});
        }
    }
    result.report.records_loaded = result.records.size();
    return result;
}

std::size_t write_corpus(const std::vector<RelevanceRecord>& records,
                         const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    out.flush();
    if (!out) throw DataError("write failed for " + path.string());
    return records.size();
}

std::string normalize_language(std::string_view code) {
    std::string out{text::trim(code)};
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_known_language(std::string_view code) {
    return std::binary_search(std::begin(kIso6391), std::end(kIso6391), code);
}

DedupResult dedup(const std::vector<RelevanceRecord>& records) {
    DedupResult result;
    result.records.reserve(records.size());
    std::unordered_set<std::string> seen;
    // (task, query, candidate) -> labels observed
    std::unordered_map<std::string, unsigned> labels_by_pair;
    std::vector<std::pair<std::string, LabelConflict>> pair_order;
    for (const auto& r : records) {
        std::string pair_key;
        pair_key += to_string(r.task);
        pair_key += '\x1f';
        pair_key += r.query;
        pair_key += '\x1f';
        pair_key += r.candidate;
        std::string key = pair_key + '\x1f' + (r.label == 1 ? '1' : '0');
        if (!seen.insert(std::move(key)).second) {
            ++result.removed;
            continue;
        }
        auto [it, inserted] = labels_by_pair.try_emplace(pair_key, 0U);
        if (inserted) pair_order.push_back({pair_key, {r.task, r.query, r.candidate}});
        it->second |= (r.label == 1 ? 2U : 1U);
        result.records.push_back(r);
    }
    for (const auto& [key, pair] : pair_order) {
        if (labels_by_pair[key] == 3U) result.conflicts.push_back(pair);
    }
    return result;
}

std::vector<std::string> unresolved_sources(const std::vector<RelevanceRecord>& records,
                                            const std::vector<RelevanceRecord>& universe) {
    std::unordered_set<std::string> ids;
    for (const auto& r : universe) ids.insert(r.id);
    std::vector<std::string> missing;
    for (const auto& r : records) {
        if (r.origin == Origin::Original) continue;
        if (!r.source_id || !ids.contains(*r.source_id)) missing.push_back(r.id);
    }
    return missing;
}

void CorpusStats::merge(const CorpusStats& other) {
    for (const auto& [key, n] : other.counts) counts[key] += n;
    for (const auto& [key, lc] : other.labels) {
        auto& mine = labels[key];
        mine.positive += lc.positive;
        mine.negative += lc.negative;
    }
}

std::size_t CorpusStats::count(Task task, std::string_view split, std::string_view language) const {
    const auto it = counts.find({task, std::string{split}, std::string{language}});
    return it == counts.end() ? 0 : it->second;
}

std::size_t CorpusStats::split_total(Task task, std::string_view split) const {
    std::size_t total = 0;
    for (const auto& [key, n] : counts) {
        if (std::get<0>(key) == task && std::get<1>(key) == split) total += n;
    }
    return total;
}

std::set<std::string> CorpusStats::languages(std::optional<Task> task, std::string_view split) const {
    std::set<std::string> out;
    for (const auto& [key, n] : counts) {
        if (n == 0) continue;
        if (task && std::get<0>(key) != *task) continue;
        if (!split.empty() && std::get<1>(key) != split) continue;
        out.insert(std::get<2>(key));
    }
    return out;
}

std::vector<std::string> CorpusStats::column_order() const {
    const auto present = languages();
    std::vector<std::string> order;
    for (auto lang : kCompetitionLanguages) {
        if (present.contains(std::string{lang})) order.emplace_back(lang);
    }
    for (const auto& lang : present) {
        if (std::find(kCompetitionLanguages.begin(), kCompetitionLanguages.end(), lang) ==
            kCompetitionLanguages.end()) {
            order.push_back(lang);
        }
    }
    return order;
}

namespace {

// Rows in (task, split) order with the conventional train/dev/test ordering.
std::vector<std::pair<Task, std::string>> stat_rows(const CorpusStats& stats) {
    auto rank = [](const std::string& split) {
        if (split == "train") return 0;
        if (split == "dev") return 1;
        if (split == "test") return 2;
        return 3;
    };
    std::vector<std::pair<Task, std::string>> rows;
    for (const auto& [key, n] : stats.counts) {
        std::pair<Task, std::string> row{std::get<0>(key), std::get<1>(key)};
        if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        if (rank(a.second) != rank(b.second)) return rank(a.second) < rank(b.second);
        return a.second < b.second;
    });
    return rows;
}

}  // namespace

std::string CorpusStats::render_table() const {
    const auto columns = column_order();
    const auto rows = stat_rows(*this);
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"task", "split"};
    header.insert(header.end(), columns.begin(), columns.end());
    header.emplace_back("total");
    grid.push_back(header);
    for (const auto& [task, split] : rows) {
        std::vector<std::string> line{std::string{to_string(task)}, split};
        for (const auto& lang : columns) {
            const auto n = count(task, split, lang);
            line.push_back(n == 0 ? "--" : std::to_string(n));
        }
        line.push_back(std::to_string(split_total(task, split)));
        grid.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            if (c > 0) out << "  ";
            if (c < 2) {
                out << std::left << std::setw(static_cast<int>(widths[c])) << grid[r][c];
            } else {
                out << std::right << std::setw(static_cast<int>(widths[c])) << grid[r][c];
            }
        }
        out << '\n';
        if (r == 0) {
            std::size_t total_width = 0;
            for (auto w : widths) total_width += w + 2;
            out << std::string(total_width - 2, '-') << '\n';
        }
    }
    if (!labels.empty()) {
        out << "\nlabel balance (all splits)\n";
        for (const auto& [key, lc] : labels) {
            out << "  " << to_string(key.first) << ' ' << key.second << ": positive " << lc.positive
                << ", negative " << lc.negative << ", positive ratio " << std::fixed
                << std::setprecision(4) << lc.positive_ratio() << '\n';
            out.unsetf(std::ios::floatfield);
        }
    }
    return out.str();
}

nlohmann::ordered_json CorpusStats::to_json() const {
    nlohmann::ordered_json j;
    const auto columns = column_order();
    j["languages"] = columns;
    auto& rows_json = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& [task, split] : stat_rows(*this)) {
        nlohmann::ordered_json row;
        row["task"] = to_string(task);
        row["split"] = split;
        nlohmann::ordered_json cells = nlohmann::ordered_json::object();
        for (const auto& lang : columns) cells[lang] = count(task, split, lang);
        row["counts"] = std::move(cells);
        row["total"] = split_total(task, split);
        rows_json.push_back(std::move(row));
    }
    auto& balance = j["label_balance"] = nlohmann::ordered_json::array();
    for (const auto& [key, lc] : labels) {
        balance.push_back({{"task", to_string(key.first)},
                           {"language", key.second},
                           {"positive", lc.positive},
                           {"negative", lc.negative},
                           {"positive_ratio", lc.positive_ratio()}});
    }
    return j;
}

std::string CorpusStats::to_csv() const {
    const auto columns = column_order();
    std::ostringstream out;
    out << "task,split";
    for (const auto& lang : columns) out << ',' << lang;
    out << ",total\n";
    for (const auto& [task, split] : stat_rows(*this)) {
        out << to_string(task) << ',' << split;
        for (const auto& lang : columns) out << ',' << count(task, split, lang);
        out << ',' << split_total(task, split) << '\n';
    }
    return out.str();
}

CorpusStats compute_stats(const std::vector<RelevanceRecord>& records, std::string_view split_name) {
    CorpusStats stats;
    for (const auto& r : records) {
        ++stats.counts[{r.task, std::string{split_name}, r.language}];
        auto& lc = stats.labels[{r.task, r.language}];
        if (r.label == 1) {
            ++lc.positive;
        } else {
            ++lc.negative;
        }
    }
    return stats;
}

InstructionTemplate InstructionTemplate::default_for(Task task) {
    InstructionTemplate t;
    if (task == Task::QC) {
        t.instruction =
            "Decide whether the product category path is relevant to the user's search query. "
            "The query is written in language '{language}'. Answer \"yes\" or \"no\".";
        t.input = "Query: {query}\nCategory path: {candidate}";
    } else {
        t.instruction =
            "Decide whether the product title matches the user's search intent, tolerating "
            "spelling variations. The query is written in language '{language}'. "
            "Answer \"yes\" or \"no\".";
        t.input = "Query: {query}\nItem title: {candidate}";
    }
    return t;
}

InstructionTemplate InstructionTemplate::from_json(const nlohmann::json& object) {
    InstructionTemplate t;
    t.instruction = object.value("instruction", std::string{});
    t.input = object.value("input", std::string{});
    t.output_yes = object.value("output_yes", std::string{"yes"});
    t.output_no = object.value("output_no", std::string{"no"});
    t.validate();
    return t;
}

void InstructionTemplate::validate() const {
    for (std::string_view placeholder : {"{query}", "{candidate}", "{language}"}) {
        if (instruction.find(placeholder) == std::string::npos &&
            input.find(placeholder) == std::string::npos) {
            throw ConfigError("template is missing placeholder " + std::string{placeholder});
        }
    }
    if (output_yes.empty() || output_no.empty()) throw ConfigError("template outputs must be non-empty");
}

namespace {

std::string fill(std::string_view pattern, const RelevanceRecord& r) {
    std::string out;
    out.reserve(pattern.size() + r.query.size() + r.candidate.size());
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto rest = pattern.substr(i);
            if (rest.starts_with("{query}")) {
                out += r.query;
                i += 7;
                continue;
            }
            if (rest.starts_with("{candidate}")) {
                out += r.candidate;
                i += 11;
                continue;
            }
            if (rest.starts_with("{language}")) {
                out += r.language;
                i += 10;
                continue;
            }
        }
        out.push_back(pattern[i++]);
    }
    return out;
}

}  // namespace

std::size_t emit_training_file(const std::vector<RelevanceRecord>& records,
                               const InstructionTemplate& tmpl,
                               const std::filesystem::path& path) {
    tmpl.validate();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["instruction"] = fill(tmpl.instruction, r);
        j["input"] = fill(tmpl.input, r);
        j["output"] = r.label == 1 ? tmpl.output_yes : tmpl.output_no;
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw DataError("write failed for " + path.string());
    return records.size();
}

}  // namespace reldata
