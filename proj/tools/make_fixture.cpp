// Writes the packaged sample corpus or a corpus shaped like the public
// competition splits.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reldata/corpus.hpp"
#include "reldata/fixtures.hpp"

namespace fs = std::filesystem;
using namespace reldata;

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    for (const auto& l : lines) out << l << "\n";
}

constexpr const char* kSampleConfig = R"(# Sample pipeline over the packaged synthetic QC corpus.
task = "qc"
seed = 20240607
workdir = "run"

[inputs]
train = "train.jsonl"
dev = "dev.jsonl"
catalog = "categories.txt"

[providers]
mode = "mock"

[stages]
augment = true
negatives = true
filter = true
calibrate = true

[augment]
# Empty: every dev language missing from train.
targets = []
quota = 100
policy = "uniform"

[negatives]
k_min = 20
k_max = 50
ratio = 1.0

[filter]
tau = 0.9
action = "remove"

[evaluate]
grid_step = 0.01
threshold = 0.5
)";

void write_sample(const fs::path& dir) {
    fs::create_directories(dir);
    fixtures::SyntheticSpec train;
    train.task = Task::QC;
    train.records_per_language = 100;
    train.seed = 11;
    const auto train_corpus = fixtures::synthetic_corpus(train);

    fixtures::SyntheticSpec dev = train;
    dev.languages = {"en", "fr", "es", "ko", "pt", "ja", "de", "it", "pl", "ar"};
    dev.records_per_language = 40;
    dev.seed = 12;
    const auto dev_corpus = fixtures::synthetic_corpus(dev);

    write_lines(dir / "categories.txt", train_corpus.catalog);
    write_corpus(train_corpus.records, dir / "train.jsonl");
    write_corpus(dev_corpus.records, dir / "dev.jsonl");
    std::ofstream{dir / "pipeline.toml", std::ios::trunc} << kSampleConfig;
}

void write_layout(const fs::path& dir, double scale) {
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    auto& inputs = manifest["inputs"] = nlohmann::ordered_json::array();
    for (const auto& layout : fixtures::competition_layout()) {
        const auto name = std::string{to_string(layout.task)} + "_" + layout.split + ".jsonl";
        write_corpus(fixtures::layout_corpus(layout, scale), dir / name);
        inputs.push_back({{"split", layout.split}, {"path", name}});
    }
    std::ofstream{dir / "inputs.json", std::ios::trunc} << manifest.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate fixture corpora", "make_fixture"};
    app.require_subcommand(1);
    std::string out;
    double scale = 1.0;
    auto* sample = app.add_subcommand("sample", "Packaged synthetic QC corpus, catalog and config");
    sample->add_option("out", out)->required();
    auto* layout_cmd = app.add_subcommand("layout", "Per-language counts of the competition splits");
    layout_cmd->add_option("out", out)->required();
    layout_cmd->add_option("--scale", scale)->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    try {
        if (*sample) write_sample(out);
        if (*layout_cmd) write_layout(out, scale);
    } catch (const std::exception& e) {
        std::cerr << "make_fixture: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
