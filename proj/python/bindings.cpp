#include "emergent/cluster.hpp"
#include "emergent/corpus_io.hpp"
#include "emergent/lexstyle.hpp"
#include "emergent/metrics.hpp"
#include "emergent/reduce.hpp"
#include "emergent/report.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace emergent;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) {
        throw std::invalid_argument("expected a 2-d array");
    }
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

reduce::Metric metric_of(const std::string& name) {
    const auto m = reduce::parse_metric(name);
    if (!m) throw ConfigError("unknown metric '" + name + "'");
    return *m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Emerging-topic detection by cumulative outlier tracking";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_ValueError);
    py::register_exception<report::PartialRunError>(m, "PartialRunError", PyExc_RuntimeError);

    m.def(
        "fit_layout",
        [](const Array& points, std::size_t target_dim, std::size_t n_neighbors, double min_dist,
           std::size_t n_epochs, const std::string& metric, std::uint64_t seed) {
            reduce::ReduceParams p;
            p.target_dim = target_dim;
            p.n_neighbors = n_neighbors;
            p.min_dist = min_dist;
            p.n_epochs = n_epochs;
            p.metric = metric_of(metric);
            p.seed = seed;
            const auto pts = to_matrix(points);
            Matrix layout;
            {
                py::gil_scoped_release release;
                layout = reduce::fit_layout(pts, p);
            }
            return to_array(layout);
        },
        py::arg("points"), py::arg("target_dim") = 2, py::arg("n_neighbors") = 15, py::arg("min_dist") = 0.1,
        py::arg("n_epochs") = 200, py::arg("metric") = "cosine", py::arg("seed") = 42);

    m.def(
        "trustworthiness",
        [](const Array& original, const Array& layout, std::size_t k) {
            return reduce::trustworthiness(to_matrix(original), to_matrix(layout), k);
        },
        py::arg("original"), py::arg("layout"), py::arg("k") = 15);

    m.def(
        "hdbscan",
        [](const Array& points, std::size_t min_cluster_size, std::size_t min_samples) {
            const auto r = cluster::hdbscan(to_matrix(points), {min_cluster_size, min_samples});
            return py::make_tuple(r.labels, r.glosh);
        },
        py::arg("points"), py::arg("min_cluster_size") = 5, py::arg("min_samples") = 5,
        "Returns (labels, glosh); label -1 marks an outlier.");

    m.def(
        "silhouette",
        [](const Array& points, const std::vector<int>& labels) { return metrics::silhouette(to_matrix(points), labels); },
        py::arg("points"), py::arg("labels"), "None when fewer than two clusters remain after dropping -1.");

    m.def("band", [](double s) { return std::string(metrics::to_string(metrics::band(s))); });
    m.def("rescale", &metrics::rescale, py::arg("x"));

    m.def(
        "kruskal_wallis",
        [](const std::vector<std::vector<double>>& groups) -> py::object {
            const auto r = lexstyle::kruskal_wallis(groups);
            if (!r) return py::none();
            return py::make_tuple(r->statistic, r->p_value);
        },
        py::arg("groups"));
    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) -> py::object {
            const auto r = lexstyle::spearman(x, y);
            if (!r) return py::none();
            return py::make_tuple(r->rho, r->p_value);
        },
        py::arg("x"), py::arg("y"));
    m.def(
        "tokenize",
        [](const std::string& text, const std::string& lang) {
            std::vector<std::string> out;
            for (const auto& t : lexstyle::tokenize(text, lang)) out.push_back(t.text);
            return out;
        },
        py::arg("text"), py::arg("lang") = "en");
    m.def("yules_k", &lexstyle::yules_k, py::arg("words"));
    m.def("entropy_bits", &lexstyle::entropy_bits, py::arg("words"));
    m.def("flesch_kincaid", &lexstyle::flesch_kincaid, py::arg("words"), py::arg("sentences"), py::arg("syllables"));

    m.def(
        "synthesize",
        [](const std::filesystem::path& scenario, std::uint64_t seed, const std::filesystem::path& out) {
            const auto data = corpus_io::generate_synthetic(corpus_io::load_scenario(scenario), seed);
            std::filesystem::create_directories(out / "embeddings");
            corpus_io::save_corpus(data.corpus, out / "corpus.jsonl");
            const auto ids = corpus_io::doc_ids(data.corpus);
            py::dict embeddings;
            for (const auto& [model, emb] : data.embeddings) {
                const auto path = out / "embeddings" / (model + ".emb");
                corpus_io::write_embeddings_binary(path, ids, emb.matrix);
                embeddings[py::str(model)] = path;
            }
            return py::make_tuple(out / "corpus.jsonl", embeddings, data.precursor_ids);
        },
        py::arg("scenario"), py::arg("seed"), py::arg("out"),
        "Writes corpus.jsonl and one embedding file per pseudo-model; returns (corpus, embeddings, precursor ids).");

    m.def(
        "run",
        [](const std::filesystem::path& config, const std::filesystem::path& out) {
            const auto c = report::load_config(config);
            py::gil_scoped_release release;
            report::run_pipeline(c, out);
        },
        py::arg("config"), py::arg("out"));
}
