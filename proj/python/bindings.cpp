#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "reldata/cli.hpp"
#include "reldata/corpus.hpp"
#include "reldata/evalreport.hpp"
#include "reldata/negmine.hpp"
#include "reldata/pipeline.hpp"
#include "reldata/providers.hpp"
#include "reldata/scoring.hpp"

namespace py = pybind11;
using namespace reldata;

namespace {

std::vector<ScoredRecord> to_scored(const std::vector<double>& p_yes, const std::vector<int>& labels) {
    if (p_yes.size() != labels.size()) throw DataError("p_yes and labels differ in length");
    std::vector<ScoredRecord> rows(p_yes.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].id = std::to_string(i);
        rows[i].p_yes = p_yes[i];
        rows[i].label = labels[i];
    }
    return rows;
}

EmbeddingIndex to_index(const std::vector<std::vector<double>>& matrix) {
    if (matrix.empty()) throw DataError("empty matrix");
    const auto dim = matrix.front().size();
    std::vector<double> data;
    data.reserve(matrix.size() * dim);
    for (auto row : matrix) {
        if (row.size() != dim) throw DataError("ragged matrix");
        l2_normalize(row);
        data.insert(data.end(), row.begin(), row.end());
    }
    return EmbeddingIndex{dim, std::move(data)};
}

}  // namespace

PYBIND11_MODULE(_reldata, m) {
    m.doc() = "Native core of the reldata relevance-data toolkit";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ProviderError>(m, "ProviderError", PyExc_RuntimeError);

    m.def("normalize_yes", [](double logp_yes, double logp_no) { return normalize_yes({logp_yes, logp_no}); },
          py::arg("logp_yes"), py::arg("logp_no"));
    m.def("decide", &decide, py::arg("p_yes"), py::arg("threshold"));
    m.def("threshold_grid", &threshold_grid, py::arg("step") = 0.01);
    m.def("average_f1", &average_f1, py::arg("f1_qc"), py::arg("f1_qi"));
    m.def("format_half_up", &format_half_up, py::arg("value"), py::arg("digits") = 4);

    m.def(
        "f1_positive",
        [](std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
            const auto r = f1_positive({tp, fp, fn, tn});
            py::dict d;
            d["precision"] = r.precision;
            d["recall"] = r.recall;
            d["f1"] = r.f1;
            d["degenerate"] = r.degenerate();
            return d;
        },
        py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn") = 0);

    m.def(
        "calibrate",
        [](const std::vector<double>& p_yes, const std::vector<int>& labels, double grid_step, const std::string& mode) {
            const auto rows = to_scored(p_yes, labels);
            CalibrationMode cm = CalibrationMode::Grid;
            if (mode == "exact") {
                cm = CalibrationMode::ExactCutPoints;
            } else if (mode != "grid") {
                throw ConfigError("mode must be grid or exact");
            }
            return calibrate_threshold(rows, grid_step, cm).to_json().dump();
        },
        py::arg("p_yes"), py::arg("labels"), py::arg("grid_step") = 0.01, py::arg("mode") = "grid");

    m.def(
        "embed", [](const std::vector<std::string>& texts, std::size_t dim) { return MockEmbedder{dim}.embed(texts); },
        py::arg("texts"), py::arg("dim") = 64);

    m.def(
        "top_k",
        [](const std::vector<std::vector<double>>& matrix, std::vector<double> query, std::size_t k,
           std::optional<std::size_t> exclude) {
            const auto index = to_index(matrix);
            l2_normalize(query);
            std::vector<std::pair<std::size_t, double>> out;
            for (const auto& n : top_k_similar(index, query, k, exclude)) out.emplace_back(n.id, n.cosine);
            return out;
        },
        py::arg("matrix"), py::arg("query"), py::arg("k"), py::arg("exclude") = py::none());

    m.def(
        "load_corpus",
        [](const std::filesystem::path& path, std::optional<std::string> task) {
            std::optional<Task> t;
            if (task) t = parse_task(*task);
            std::vector<std::string> lines;
            for (const auto& r : load_corpus(path, t).records) lines.push_back(to_json(r).dump());
            return lines;
        },
        py::arg("path"), py::arg("task") = py::none());

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> workdir) {
            auto config = PipelineConfig::load(config_path);
            if (workdir) config.workdir = *workdir;
            config.validate();
            py::gil_scoped_release release;
            return run_pipeline(config).to_json().dump();
        },
        py::arg("config"), py::arg("workdir") = py::none());

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
