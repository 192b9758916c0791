#include "reldata/fixtures.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string_view>
#include <unordered_set>

#include "reldata/hashing.hpp"
#include "reldata/text.hpp"

namespace reldata::fixtures {

namespace {

constexpr std::array<std::string_view, 10> kTop = {
    "Electronics", "Home & Kitchen", "Fashion", "Sports & Outdoors", "Beauty",
    "Toys & Games", "Automotive", "Garden", "Office Supplies", "Pet Supplies"};

constexpr std::array<std::string_view, 10> kMiddle = {
    "Audio Devices", "Accessories", "Storage", "Lighting", "Tools",
    "Cleaning", "Travel Gear", "Kids", "Seasonal", "Smart Devices"};

constexpr std::array<std::string_view, 24> kLeaf = {
    "Headphones", "Speakers", "Cables", "Chargers", "Lamps", "Backpacks", "Bottles",
    "Mats", "Brushes", "Gloves", "Jackets", "Shoes", "Watches", "Cases", "Stands",
    "Batteries", "Filters", "Hoses", "Pumps", "Blankets", "Pillows", "Mugs", "Knives", "Tents"};

constexpr std::array<std::string_view, 12> kBrands = {
    "Nordvik", "Solano", "Kirra", "Altura", "Brisk", "Corvo",
    "Duma", "Elkin", "Fenna", "Galt", "Hollis", "Ivara"};

constexpr std::array<std::string_view, 12> kAdjectives = {
    "wireless", "portable", "compact", "waterproof", "foldable", "ergonomic",
    "rechargeable", "lightweight", "heavy-duty", "adjustable", "insulated", "magnetic"};

constexpr std::array<std::string_view, 10> kModifiers = {
    "cheap", "best", "new", "sale", "mini", "pro", "large", "black", "white", "set"};

const std::map<std::string, std::string, std::less<>>& intent_words() {
    static const std::map<std::string, std::string, std::less<>> words{
        {"en", "buy"},    {"fr", "acheter"}, {"es", "comprar"}, {"ko", "구매"},
        {"pt", "compre"}, {"ja", "購入"},    {"de", "kaufen"},  {"it", "comprare"},
        {"pl", "kupić"},  {"ar", "شراء"},    {"th", "ซื้อ"},    {"vi", "mua"},
        {"id", "beli"}};
    return words;
}

std::string lower_ascii(std::string_view s) {
    std::string out{s};
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace

std::vector<SplitLayout> competition_layout() {
    using Counts = std::vector<std::pair<std::string, std::size_t>>;
    auto uniform = [](std::initializer_list<const char*> langs, std::size_t n) {
        Counts c;
        for (const char* l : langs) c.emplace_back(l, n);
        return c;
    };
    const auto qc_eval = {"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar"};
    return {
        {Task::QC, "train", uniform({"en", "fr", "es", "ko", "pt", "ja"}, 50000)},
        {Task::QC, "dev", uniform(qc_eval, 10000)},
        {Task::QC, "test", uniform(qc_eval, 10000)},
        {Task::QI, "train",
         Counts{{"en", 40000}, {"fr", 40000}, {"es", 40000}, {"ko", 45000},
                {"pt", 40000}, {"ja", 45000}, {"th", 40000}}},
        {Task::QI, "dev",
         Counts{{"en", 10000}, {"fr", 5000}, {"es", 5000}, {"ko", 5000}, {"pt", 5000},
                {"ja", 5000},  {"de", 5000}, {"it", 5000}, {"pl", 5000}, {"ar", 5000},
                {"th", 5000},  {"vi", 5000}, {"id", 5000}}},
        {Task::QI, "test",
         uniform({"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar", "th", "vi", "id"},
                 10000)},
    };
}

std::vector<RelevanceRecord> layout_corpus(const SplitLayout& layout, double scale) {
    std::vector<RelevanceRecord> out;
    const auto catalog = layout.task == Task::QC ? category_paths(200) : item_titles(200);
    for (const auto& [lang, full] : layout.counts) {
        const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(full) * scale));
        for (std::size_t i = 0; i < n; ++i) {
            RelevanceRecord r;
            r.task = layout.task;
            r.language = lang;
            r.query = intent_word(lang) + " " + layout.split + " " + std::to_string(i);
            r.candidate = catalog[i % catalog.size()];
            r.label = i % 3 == 0 ? 1 : 0;
            r.id = record_content_id(r.task, r.query, r.candidate, r.label);
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<std::string> category_paths(std::size_t count) {
    const std::size_t capacity = kTop.size() * kMiddle.size() * kLeaf.size();
    if (count > capacity) count = capacity;
    std::vector<std::string> out;
    out.reserve(count);
    // Stride through leaves first so small catalogs still span every top level.
    for (std::size_t i = 0; i < count; ++i) {
        const auto top = kTop[i % kTop.size()];
        const auto mid = kMiddle[(i / kTop.size()) % kMiddle.size()];
        const auto leaf = kLeaf[(i / (kTop.size() * kMiddle.size())) % kLeaf.size()];
        out.push_back(std::string{top} + " > " + std::string{mid} + " > " + std::string{leaf});
    }
    return out;
}

std::vector<std::string> item_titles(std::size_t count) {
    const std::size_t capacity = kBrands.size() * kAdjectives.size() * kLeaf.size();
    if (count > capacity) count = capacity;
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto brand = kBrands[i % kBrands.size()];
        const auto adjective = kAdjectives[(i / kBrands.size()) % kAdjectives.size()];
        const auto leaf = kLeaf[(i / (kBrands.size() * kAdjectives.size())) % kLeaf.size()];
        out.push_back(std::string{brand} + " " + std::string{adjective} + " " + lower_ascii(leaf));
    }
    return out;
}

std::string intent_word(const std::string& language) {
    const auto& words = intent_words();
    const auto it = words.find(language);
    return it == words.end() ? "buy-" + language : it->second;
}

SyntheticCorpus synthetic_corpus(const SyntheticSpec& spec) {
    SyntheticCorpus corpus;
    corpus.catalog = spec.task == Task::QC ? category_paths(spec.catalog_size) : item_titles(spec.catalog_size);
    if (corpus.catalog.size() < 2) throw ConfigError("synthetic catalog needs at least two entries");
    SplitMix64 rng{spec.seed};
    std::unordered_set<std::string> ids;
    for (const auto& lang : spec.languages) {
        std::size_t made = 0;
        std::size_t attempts = 0;
        while (made < spec.records_per_language) {
            if (++attempts > spec.records_per_language * 50) {
                throw ConfigError("synthetic corpus spec too dense to generate unique records");
            }
            const auto own = rng.below(corpus.catalog.size());
            const auto words = text::split_whitespace(lower_ascii(corpus.catalog[own]));
            std::vector<std::string> content;
            for (const auto& w : words) {
                if (w != ">" && w != "&") content.push_back(w);
            }
            std::string query = intent_word(lang);
            // One or two words of the entry, plus an optional modifier.
            const auto take = 1 + rng.below(2);
            for (std::size_t t = 0; t < take; ++t) query += " " + content[rng.below(content.size())];
            if (rng.unit() < 0.5) query += " " + std::string{kModifiers[rng.below(kModifiers.size())]};
            query += " " + std::to_string(made % 97);

            const bool positive = rng.unit() < spec.positive_ratio;
            std::size_t cand = own;
            if (!positive) {
                cand = rng.below(corpus.catalog.size() - 1);
                if (cand >= own) ++cand;
            }
            RelevanceRecord r;
            r.task = spec.task;
            r.language = lang;
            r.query = query;
            r.candidate = corpus.catalog[cand];
            r.label = positive ? 1 : 0;
            r.id = record_content_id(r.task, r.query, r.candidate, r.label);
            if (!ids.insert(r.id).second) continue;
            corpus.records.push_back(std::move(r));
            ++made;
        }
    }
    return corpus;
}

}  // namespace reldata::fixtures
