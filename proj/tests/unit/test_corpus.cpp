#include <doctest.h>

#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/fixtures.hpp"
#include "reldata/hashing.hpp"
#include "support.hpp"

using namespace reldata;
using testsupport::make_record;
using testsupport::TempDir;

TEST_CASE("content ids are stable and field-sensitive") {
    const auto a = record_content_id(Task::QC, "red shoes", "Fashion > Shoes", 1);
    CHECK(a.size() == 16);
    CHECK(a == record_content_id(Task::QC, "red shoes", "Fashion > Shoes", 1));
    CHECK(a != record_content_id(Task::QC, "red shoes", "Fashion > Shoes", 0));
    CHECK(a != record_content_id(Task::QI, "red shoes", "Fashion > Shoes", 1));
    // The field separator keeps ("ab", "c") apart from ("a", "bc").
    CHECK(record_content_id(Task::QC, "ab", "c", 1) != record_content_id(Task::QC, "a", "bc", 1));
}

TEST_CASE("record_from_json fills defaults and normalizes fields") {
    const auto j = nlohmann::json::parse(
        R"({"query":"  red shoes ","language":"DE","candidate":"Fashion > Shoes","label":"1"})");
    const auto r = record_from_json(j, Task::QC);
    CHECK(r.task == Task::QC);
    CHECK(r.query == "red shoes");
    CHECK(r.language == "de");
    CHECK(r.label == 1);
    CHECK(r.origin == Origin::Original);
    CHECK_FALSE(r.source_id.has_value());
    CHECK(r.id == record_content_id(Task::QC, "red shoes", "Fashion > Shoes", 1));
}

TEST_CASE("record_from_json rejects broken records") {
    auto parse = [](const char* text) { return record_from_json(nlohmann::json::parse(text), Task::QC); };
    CHECK_THROWS_AS(parse(R"({"query":" ","language":"en","candidate":"c","label":1})"), DataError);
    CHECK_THROWS_AS(parse(R"({"query":"q","language":"en","candidate":"c","label":2})"), DataError);
    CHECK_THROWS_AS(parse(R"({"query":"q","language":"en","candidate":"c"})"), DataError);
    CHECK_THROWS_AS(parse(R"({"task":"qi","query":"q","language":"en","candidate":"c","label":1})"), DataError);
    CHECK_THROWS_AS(parse(R"({"query":"q","language":"en","candidate":"c","label":1,"origin":"translated"})"),
                    DataError);
    CHECK_THROWS_AS(
        parse(R"({"query":"q","language":"en","candidate":"c","label":1,"origin":"original","source_id":"x"})"),
        DataError);
    CHECK_THROWS_AS(record_from_json(nlohmann::json::parse(R"({"query":"q","language":"en","candidate":"c","label":1})"),
                                     std::nullopt),
                    DataError);
}

TEST_CASE("load_corpus on an empty file returns nothing") {
    TempDir dir{"corpus-empty"};
    testsupport::write_file(dir / "empty.jsonl", "");
    const auto result = load_corpus(dir / "empty.jsonl", Task::QC);
    CHECK(result.records.empty());
    CHECK(result.report.lines_read == 0);
}

TEST_CASE("load_corpus reads one well-formed line as an original record") {
    TempDir dir{"corpus-one"};
    testsupport::write_file(dir / "one.jsonl",
                            R"({"task":"qc","query":"q","language":"en","candidate":"A > B","label":1})" "\n");
    const auto result = load_corpus(dir / "one.jsonl", Task::QC);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].origin == Origin::Original);
}

TEST_CASE("lenient mode skips a malformed line and reports it; strict mode names the line") {
    TempDir dir{"corpus-lenient"};
    testsupport::write_file(dir / "mixed.jsonl",
                            R"({"query":"a","language":"en","candidate":"c","label":1})" "\n"
                            "{not json\n"
                            R"({"query":"b","language":"fr","candidate":"c","label":0})" "\n");
    const auto lenient = load_corpus(dir / "mixed.jsonl", Task::QC, ParseMode::Lenient);
    CHECK(lenient.records.size() == 2);
    REQUIRE(lenient.report.skipped.size() == 1);
    CHECK(lenient.report.skipped[0].line == 2);
    try {
        load_corpus(dir / "mixed.jsonl", Task::QC, ParseMode::Strict);
        FAIL("strict load should throw");
    } catch (const DataError& e) {
        CHECK(std::string{e.what()}.find(":2:") != std::string::npos);
    }
    CHECK_THROWS_AS(load_corpus(dir / "absent.jsonl", Task::QC), DataError);
}

TEST_CASE("unknown language codes are kept and reported") {
    TempDir dir{"corpus-lang"};
    testsupport::write_file(dir / "x.jsonl", R"({"query":"a","language":"xx","candidate":"c","label":1})" "\n");
    const auto result = load_corpus(dir / "x.jsonl", Task::QC);
    CHECK(result.records.size() == 1);
    CHECK(result.report.unknown_languages == std::set<std::string>{"xx"});
    CHECK(is_known_language("de"));
    CHECK_FALSE(is_known_language("xx"));
}

TEST_CASE("write then load round-trips every field") {
    TempDir dir{"corpus-roundtrip"};
    auto corpus = fixtures::synthetic_corpus({Task::QI, {"en", "ja"}, 40, 0.4, 100, 3}).records;
    auto derived = corpus.front();
    derived.origin = Origin::Translated;
    derived.source_id = corpus.front().id;
    derived.query = "\xE2\x9F\xA6" "de\xE2\x9F\xA7 " + derived.query;
    derived.language = "de";
    derived.id = record_content_id(derived.task, derived.query, derived.candidate, derived.label);
    corpus.push_back(derived);
    CHECK(write_corpus(corpus, dir / "c.jsonl") == corpus.size());
    const auto loaded = load_corpus(dir / "c.jsonl", Task::QI).records;
    CHECK(loaded == corpus);
}

TEST_CASE("dedup keeps first occurrences and flags label conflicts") {
    const auto a = make_record(Task::QC, "q1", "c1", 1);
    const auto b = make_record(Task::QC, "q2", "c2", 0);
    SUBCASE("duplicate-free input is unchanged") {
        const auto out = dedup({a, b});
        CHECK(out.records == std::vector<RelevanceRecord>{a, b});
        CHECK(out.removed == 0);
    }
    SUBCASE("byte-identical records collapse") {
        const auto out = dedup({a, b, a});
        CHECK(out.records == std::vector<RelevanceRecord>{a, b});
        CHECK(out.removed == 1);
    }
    SUBCASE("both labels of one pair are kept and reported") {
        const auto flipped = make_record(Task::QC, "q1", "c1", 0);
        const auto out = dedup({a, flipped});
        CHECK(out.records.size() == 2);
        REQUIRE(out.conflicts.size() == 1);
        CHECK(out.conflicts[0].query == "q1");
        CHECK(out.conflicts[0].candidate == "c1");
    }
}

TEST_CASE("dedup is idempotent") {
    auto corpus = fixtures::synthetic_corpus({Task::QC, {"en"}, 80, 0.5, 30, 5}).records;
    corpus.insert(corpus.end(), corpus.begin(), corpus.begin() + 20);
    const auto once = dedup(corpus).records;
    const auto twice = dedup(once);
    CHECK(twice.records == once);
    CHECK(twice.removed == 0);
}

TEST_CASE("unresolved_sources finds dangling provenance links") {
    const auto src = make_record(Task::QC, "q", "c", 1);
    auto child = make_record(Task::QC, "q2", "c", 1, "de");
    child.origin = Origin::Translated;
    child.source_id = src.id;
    CHECK(unresolved_sources({src, child}, {src}).empty());
    child.source_id = "nope";
    CHECK(unresolved_sources({child}, {src}) == std::vector<std::string>{child.id});
}

TEST_CASE("category paths render and parse") {
    const CategoryPath p{{"Electronics", "Audio Devices", "Headphones"}};
    CHECK(p.render() == "Electronics > Audio Devices > Headphones");
    CHECK(CategoryPath::parse(p.render()) == p);
    for (const auto& rendered : fixtures::category_paths(300)) {
        CHECK(CategoryPath::parse(rendered).render() == rendered);
    }
    CHECK_THROWS_AS(CategoryPath{{}}, DataError);
    CHECK_THROWS_AS(CategoryPath::parse("A >  > B"), DataError);
}

TEST_CASE("compute_stats counts per task, split and language") {
    SUBCASE("empty input") {
        const auto s = compute_stats({}, "train");
        CHECK(s.counts.empty());
        CHECK(s.split_total(Task::QC, "train") == 0);
    }
    SUBCASE("positive ratio by hand") {
        std::vector<RelevanceRecord> records;
        for (int i = 0; i < 3; ++i) records.push_back(make_record(Task::QC, "p" + std::to_string(i), "c", 1, "de"));
        records.push_back(make_record(Task::QC, "n", "c", 0, "de"));
        const auto s = compute_stats(records, "train");
        const auto& lc = s.labels.at({Task::QC, "de"});
        CHECK(lc.positive == 3);
        CHECK(lc.negative == 1);
        CHECK(lc.positive_ratio() == 0.75);
    }
    SUBCASE("totals equal partition sizes") {
        const auto records = fixtures::synthetic_corpus({Task::QI, {"en", "fr", "th"}, 50, 0.3, 60, 2}).records;
        const auto s = compute_stats(records, "train");
        CHECK(s.split_total(Task::QI, "train") == records.size());
        CHECK(s.count(Task::QI, "train", "th") == 50);
        CHECK(s.languages(Task::QI) == std::set<std::string>{"en", "fr", "th"});
    }
}

TEST_CASE("stats table, json and csv agree") {
    auto stats = compute_stats(fixtures::layout_corpus({Task::QC, "train", {{"en", 12}, {"de", 3}}}), "train");
    stats.merge(compute_stats(fixtures::layout_corpus({Task::QC, "dev", {{"en", 4}, {"ar", 2}}}), "dev"));
    CHECK(stats.column_order() == std::vector<std::string>{"en", "de", "ar"});
    const auto j = stats.to_json();
    REQUIRE(j["rows"].size() == 2);
    CHECK(j["rows"][0]["split"] == "train");
    CHECK(j["rows"][0]["counts"]["en"] == 12);
    CHECK(j["rows"][0]["counts"]["ar"] == 0);
    CHECK(j["rows"][1]["total"] == 6);
    const auto table = stats.render_table();
    CHECK(table.find("train") != std::string::npos);
    CHECK(table.find("--") != std::string::npos);
    CHECK(stats.to_csv() == "task,split,en,de,ar,total\nqc,train,12,3,0,15\nqc,dev,4,0,2,6\n");
}

TEST_CASE("column order puts competition languages first") {
    CorpusStats s;
    s.counts[{Task::QI, "train", "zz"}] = 1;
    s.counts[{Task::QI, "train", "id"}] = 1;
    s.counts[{Task::QI, "train", "en"}] = 1;
    s.counts[{Task::QI, "train", "aa"}] = 1;
    CHECK(s.column_order() == std::vector<std::string>{"en", "id", "aa", "zz"});
}

TEST_CASE("training file emission") {
    TempDir dir{"corpus-emit"};
    const auto tmpl = InstructionTemplate::default_for(Task::QC);
    SUBCASE("label 1 becomes yes, label 0 becomes no") {
        const std::vector<RelevanceRecord> records{make_record(Task::QC, "red shoes", "Fashion > Shoes", 1),
                                                   make_record(Task::QC, "red shoes", "Garden > Hoses", 0)};
        CHECK(emit_training_file(records, tmpl, dir / "t.jsonl") == 2);
        const auto lines = testsupport::read_lines(dir / "t.jsonl");
        REQUIRE(lines.size() == 2);
        const auto first = nlohmann::json::parse(lines[0]);
        CHECK(first["output"] == "yes");
        CHECK(nlohmann::json::parse(lines[1])["output"] == "no");
        CHECK(first["input"].get<std::string>().find("red shoes") != std::string::npos);
        CHECK(first["input"].get<std::string>().find("Fashion > Shoes") != std::string::npos);
        CHECK(first["instruction"].get<std::string>().find("'en'") != std::string::npos);
    }
    SUBCASE("empty list gives an empty file") {
        CHECK(emit_training_file({}, tmpl, dir / "e.jsonl") == 0);
        CHECK(testsupport::read_file(dir / "e.jsonl").empty());
    }
    SUBCASE("five records give five lines") {
        const auto records = fixtures::synthetic_corpus({Task::QC, {"en"}, 5, 0.5, 20, 1}).records;
        CHECK(emit_training_file(records, tmpl, dir / "f.jsonl") == 5);
        CHECK(testsupport::read_lines(dir / "f.jsonl").size() == 5);
    }
    SUBCASE("templates missing a placeholder are rejected") {
        InstructionTemplate bad;
        bad.instruction = "Is {candidate} relevant?";
        bad.input = "{query}";
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        CHECK_THROWS_AS(emit_training_file({}, bad, dir / "g.jsonl"), ConfigError);
        CHECK_THROWS_AS(InstructionTemplate::from_json(nlohmann::json::parse(R"({"instruction":"{query}"})")),
                        ConfigError);
    }
}
