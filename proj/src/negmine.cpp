#include "reldata/negmine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "reldata/hashing.hpp"
#include "reldata/text.hpp"

namespace reldata {

CandidateCatalog::CandidateCatalog(Task task, std::vector<std::string> texts) : task_{task} {
    texts_.reserve(texts.size());
    for (auto& t : texts) {
        if (text::trim(t).empty()) throw DataError("catalog entry is empty");
        if (index_.try_emplace(t, texts_.size()).second) texts_.push_back(std::move(t));
    }
}

CandidateCatalog CandidateCatalog::load(const std::filesystem::path& path, Task task) {
    std::ifstream in{path};
    if (!in) throw DataError("cannot read catalog " + path.string());
    std::vector<std::string> texts;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto trimmed = text::trim(line);
        if (!trimmed.empty()) texts.emplace_back(trimmed);
    }
    return CandidateCatalog{task, std::move(texts)};
}

CandidateCatalog CandidateCatalog::from_records(const std::vector<RelevanceRecord>& records, Task task) {
    std::vector<std::string> texts;
    for (const auto& r : records) {
        if (r.task == task) texts.push_back(r.candidate);
    }
    std::sort(texts.begin(), texts.end());
    texts.erase(std::unique(texts.begin(), texts.end()), texts.end());
    return CandidateCatalog{task, std::move(texts)};
}

void CandidateCatalog::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& t : texts_) out << t << '\n';
}

std::optional<std::size_t> CandidateCatalog::find(const std::string& text) const {
    const auto it = index_.find(text);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

EmbeddingIndex::EmbeddingIndex(std::size_t dimension, std::vector<double> rows)
    : dimension_{dimension}, data_{std::move(rows)} {
    if (dimension_ == 0) throw DataError("embedding dimension must be positive");
    if (data_.size() % dimension_ != 0) throw DataError("embedding matrix is ragged");
}

EmbeddingIndex build_index(const CandidateCatalog& catalog, Embedder& embedder, std::size_t batch_size) {
    if (catalog.size() == 0) throw DataError("cannot index an empty catalog");
    batch_size = std::max<std::size_t>(batch_size, 1);
    std::vector<double> data;
    std::size_t dimension = 0;
    const auto& texts = catalog.texts();
    for (std::size_t start = 0; start < texts.size(); start += batch_size) {
        const std::span<const std::string> chunk{texts.data() + start,
                                                 std::min(batch_size, texts.size() - start)};
        auto vectors = embedder.embed(chunk);
        if (vectors.size() != chunk.size()) throw ProviderError("embedder returned wrong vector count");
        for (auto& v : vectors) {
            if (dimension == 0) {
                dimension = v.size();
                data.reserve(dimension * texts.size());
            }
            if (v.size() != dimension || dimension == 0) {
                throw ProviderError("embedder returned inconsistent dimensions");
            }
            l2_normalize(v);
            data.insert(data.end(), v.begin(), v.end());
        }
    }
    return EmbeddingIndex{dimension, std::move(data)};
}

namespace {

void check_query(const EmbeddingIndex& index, std::span<const double> query, std::size_t k,
                 std::optional<std::size_t> exclude) {
    if (query.size() != index.dimension()) {
        throw DataError("query dimension " + std::to_string(query.size()) + " does not match index " +
                        std::to_string(index.dimension()));
    }
    const bool excluding = exclude && *exclude < index.size();
    const std::size_t available = index.size() - (excluding ? 1 : 0);
    if (k < 1 || k > available) {
        throw ConfigError("k=" + std::to_string(k) + " outside [1, " + std::to_string(available) + "]");
    }
}

}  // namespace

std::vector<Neighbor> top_k_similar(const EmbeddingIndex& index, std::span<const double> query,
                                    std::size_t k, std::optional<std::size_t> exclude) {
    check_query(index, query, k, exclude);
    std::vector<Neighbor> all;
    all.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (exclude && *exclude == i) continue;
        all.push_back({i, dot(index.row(i), query)});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      neighbor_before);
    all.resize(k);
    return all;
}

std::vector<Neighbor> top_k_similar_heap(const EmbeddingIndex& index, std::span<const double> query,
                                         std::size_t k, std::optional<std::size_t> exclude) {
    check_query(index, query, k, exclude);
    // Max-heap under neighbor_before: top() is the worst retained neighbour.
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&neighbor_before)> heap{
        neighbor_before};
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (exclude && *exclude == i) continue;
        const Neighbor n{i, dot(index.row(i), query)};
        if (heap.size() < k) {
            heap.push(n);
        } else if (neighbor_before(n, heap.top())) {
            heap.pop();
            heap.push(n);
        }
    }
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = out.size(); i > 0; --i) {
        out[i - 1] = heap.top();
        heap.pop();
    }
    return out;
}

std::string PositivePairSet::key(std::string_view query, std::string_view candidate) {
    std::string k = text::normalize_query(query);
    k += '\x1f';
    k += candidate;
    return k;
}

void PositivePairSet::add(std::string_view query, std::string_view candidate) {
    pairs_.insert(key(query, candidate));
}

bool PositivePairSet::contains(std::string_view query, std::string_view candidate) const {
    return pairs_.contains(key(query, candidate));
}

PositivePairSet PositivePairSet::from_records(const std::vector<RelevanceRecord>& records) {
    PositivePairSet set;
    for (const auto& r : records) {
        if (r.label == 1) set.add(r.query, r.candidate);
    }
    return set;
}

void NegativeMiningConfig::validate(std::size_t catalog_size) const {
    if (k_min < 1) throw ConfigError("k_min must be at least 1");
    if (k_min > k_max) throw ConfigError("k_min exceeds k_max");
    if (catalog_size == 0 || k_max > catalog_size - 1) {
        throw ConfigError("k_max=" + std::to_string(k_max) + " needs a catalog of at least " +
                          std::to_string(k_max + 1) + " entries, got " + std::to_string(catalog_size));
    }
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw ConfigError("ratio must be a non-negative number");
}

nlohmann::ordered_json MiningTrace::to_json() const {
    return {{"negative_id", negative_id}, {"source_id", source_id},
            {"source_candidate", source_candidate}, {"k", k},
            {"chosen_candidate", chosen_candidate}, {"ordinal", ordinal}};
}

nlohmann::ordered_json MiningReport::to_json() const {
    nlohmann::ordered_json j;
    j["positives"] = positives;
    j["requested"] = requested;
    j["mined"] = mined;
    j["skipped"] = skipped;
    j["translation_failures"] = translation_failures;
    j["per_language"] = per_language;
    return j;
}

namespace {

struct Job {
    std::size_t positive = 0;   // index into positives
    std::size_t candidate = 0;  // catalog id of the positive's candidate
    std::string target;
    std::uint64_t seed = 0;
    std::size_t count = 0;
};

struct JobOutput {
    std::vector<RelevanceRecord> records;
    std::vector<MiningTrace> traces;
    std::size_t skipped = 0;
    bool translation_failed = false;
};

}  // namespace

MiningResult mine_hard_negatives(const std::vector<RelevanceRecord>& positives,
                                 const CandidateCatalog& catalog, const EmbeddingIndex& index,
                                 Translator* translator, const NegativeMiningConfig& config,
                                 const PositivePairSet& exclusion, std::size_t in_flight) {
    config.validate(catalog.size());
    if (index.size() != catalog.size()) throw DataError("index and catalog sizes differ");

    std::vector<Job> jobs;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const auto& p = positives[i];
        if (p.task != catalog.task()) continue;
        if (p.label != 1) throw DataError("record " + p.id + " is not a positive");
        const auto cand = catalog.find(p.candidate);
        if (!cand) throw DataError("candidate of record " + p.id + " is not in the catalog");
        if (config.target_languages.empty()) {
            jobs.push_back({i, *cand, p.language, derive_seed(config.master_seed, p.id + '\x1f' + p.language), 0});
            continue;
        }
        for (const auto& t : config.target_languages) {
            if (t == p.language) continue;
            if (translator == nullptr) throw ConfigError("cross-language mining needs a translator");
            jobs.push_back({i, *cand, t, derive_seed(config.master_seed, p.id + '\x1f' + t), 0});
        }
    }

    MiningResult result;
    auto& report = result.report;
    for (const auto& p : positives) report.positives += p.task == catalog.task() ? 1 : 0;

    // Exact total round(ratio * jobs); remainder to the lowest job seeds.
    const auto whole = static_cast<std::size_t>(std::floor(config.ratio));
    const auto total = static_cast<std::size_t>(std::llround(config.ratio * static_cast<double>(jobs.size())));
    for (auto& j : jobs) j.count = whole;
    std::size_t remainder = total - std::min(total, whole * jobs.size());
    if (remainder > 0) {
        std::vector<std::size_t> order(jobs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (jobs[a].seed != jobs[b].seed) return jobs[a].seed < jobs[b].seed;
            return positives[jobs[a].positive].id < positives[jobs[b].positive].id;
        });
        for (std::size_t i = 0; i < remainder && i < order.size(); ++i) ++jobs[order[i]].count;
    }
    for (const auto& j : jobs) report.requested += j.count;

    // Top-k_max neighbour lists per distinct source candidate; any top-K with
    // K <= k_max is a prefix because the order is total.
    std::vector<std::size_t> distinct;
    for (const auto& j : jobs) distinct.push_back(j.candidate);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::vector<Neighbor>> lists(distinct.size());
    parallel_for(distinct.size(), in_flight, [&](std::size_t i) {
        lists[i] = top_k_similar(index, index.row(distinct[i]), config.k_max, distinct[i]);
    });
    auto neighbours_of = [&](std::size_t cand) -> const std::vector<Neighbor>& {
        const auto it = std::lower_bound(distinct.begin(), distinct.end(), cand);
        return lists[static_cast<std::size_t>(it - distinct.begin())];
    };

    std::vector<JobOutput> outputs(jobs.size());
    parallel_for(jobs.size(), in_flight, [&](std::size_t ji) {
        const auto& job = jobs[ji];
        auto& out = outputs[ji];
        if (job.count == 0) return;
        const auto& p = positives[job.positive];
        std::string query = p.query;
        if (job.target != p.language) {
            try {
                query = translator->translate({p.query, p.language, job.target}).text;
            } catch (const ProviderError&) {
                out.translation_failed = true;
                return;
            }
        }
        SplitMix64 rng{job.seed};
        const auto& neighbours = neighbours_of(job.candidate);
        std::vector<std::size_t> used;
        for (std::size_t ordinal = 0; ordinal < job.count; ++ordinal) {
            const std::size_t k = config.k_min + rng.below(config.k_max - config.k_min + 1);
            std::vector<std::size_t> pool;
            for (std::size_t n = 0; n < k; ++n) {
                const auto id = neighbours[n].id;
                if (std::find(used.begin(), used.end(), id) != used.end()) continue;
                if (exclusion.contains(query, catalog.text(id))) continue;
                pool.push_back(id);
            }
            if (pool.empty()) {
                ++out.skipped;
                continue;
            }
            const auto chosen = pool[rng.below(pool.size())];
            used.push_back(chosen);
            RelevanceRecord neg;
            neg.task = p.task;
            neg.query = query;
            neg.language = job.target;
            neg.candidate = catalog.text(chosen);
            neg.label = 0;
            neg.origin = Origin::SyntheticNegative;
            neg.source_id = p.id;
            neg.id = record_content_id(neg.task, neg.query, neg.candidate, 0);
            out.traces.push_back({neg.id, p.id, job.candidate, k, chosen, ordinal});
            out.records.push_back(std::move(neg));
        }
    });

    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ida = positives[jobs[a].positive].id;
        const auto& idb = positives[jobs[b].positive].id;
        if (ida != idb) return ida < idb;
        if (jobs[a].target != jobs[b].target) return jobs[a].target < jobs[b].target;
        return a < b;
    });
    for (std::size_t ji : order) {
        auto& out = outputs[ji];
        report.skipped += out.skipped;
        if (out.translation_failed) {
            ++report.translation_failures;
            report.skipped += jobs[ji].count;
        }
        for (auto& r : out.records) {
            ++report.per_language[r.language];
            result.negatives.push_back(std::move(r));
        }
        for (auto& t : out.traces) result.traces.push_back(std::move(t));
    }
    report.mined = result.negatives.size();
    return result;
}

}  // namespace reldata
