#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reldata/corpus.hpp"

// Deterministic synthetic data for tests, demos and the packaged sample
// corpus. Nothing here touches a provider.
namespace reldata::fixtures {

struct SplitLayout {
    Task task = Task::QC;
    std::string split;
    std::vector<std::pair<std::string, std::size_t>> counts;  // language -> records
};

/// Per-language record counts of the public competition dataset
/// (QC/QI x train/dev/test).
std::vector<SplitLayout> competition_layout();

/// Records whose per-language counts follow `layout` (scaled and rounded).
/// Content is filler; labels alternate so that about a third are positive.
std::vector<RelevanceRecord> layout_corpus(const SplitLayout& layout, double scale = 1.0);

/// "Top > Middle > Leaf" category paths, enumerated deterministically.
std::vector<std::string> category_paths(std::size_t count);

/// Product titles such as "Nordvik wireless headphones pro".
std::vector<std::string> item_titles(std::size_t count);

/// A short purchase-intent word in the given language ("buy", "kaufen", ...).
std::string intent_word(const std::string& language);

struct SyntheticSpec {
    Task task = Task::QC;
    std::vector<std::string> languages{"en", "fr", "es", "ko", "pt", "ja"};
    std::size_t records_per_language = 100;
    double positive_ratio = 0.35;
    std::size_t catalog_size = 600;
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    std::vector<std::string> catalog;
    std::vector<RelevanceRecord> records;
};

/// Queries built from the words of a catalog entry plus a language intent
/// word. Positives pair a query with its own entry; negatives with another
/// entry. Record ids are unique.
SyntheticCorpus synthetic_corpus(const SyntheticSpec& spec);

}  // namespace reldata::fixtures
