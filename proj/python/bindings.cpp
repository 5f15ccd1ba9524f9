#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ntclust/assignment.hpp"
#include "ntclust/data_io.hpp"
#include "ntclust/learning.hpp"
#include "ntclust/measures.hpp"
#include "ntclust/metrics.hpp"

namespace py = pybind11;

namespace {

nt::Partition to_partition(const std::vector<int>& labels) {
    nt::Partition p;
    p.labels = labels;
    return p;
}

}  // namespace

PYBIND11_MODULE(_ntclust, m) {
    m.doc() = "Clustering with jointly learned nonlinear transforms";

    py::register_exception<nt::config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<nt::data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<nt::numeric_error>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<nt::HyperParams>(m, "HyperParams")
        .def(py::init<>())
        .def_readwrite("lambda0", &nt::HyperParams::lambda0)
        .def_readwrite("lambda1", &nt::HyperParams::lambda1)
        .def_readwrite("lambda2", &nt::HyperParams::lambda2)
        .def_readwrite("lambda3", &nt::HyperParams::lambda3)
        .def_readwrite("lambda4", &nt::HyperParams::lambda4)
        .def_readwrite("lambdaE", &nt::HyperParams::lambdaE)
        .def_readwrite("M", &nt::HyperParams::M)
        .def_readwrite("C_d", &nt::HyperParams::C_d)
        .def_readwrite("C_s", &nt::HyperParams::C_s)
        .def_readwrite("iterations", &nt::HyperParams::iterations)
        .def_readwrite("batch_fraction", &nt::HyperParams::batch_fraction)
        .def_readwrite("rho_online", &nt::HyperParams::rho_online)
        .def_readwrite("eps", &nt::HyperParams::eps)
        .def_readwrite("seed", &nt::HyperParams::seed)
        .def("validate", &nt::HyperParams::validate);

    py::class_<nt::TransformModel>(m, "TransformModel")
        .def(py::init([](const nt::Mat& a, const std::vector<nt::Vec>& taus,
                         const std::vector<nt::Vec>& nus, bool identity_mode) {
                 nt::TransformModel t;
                 t.A = a;
                 t.params.taus = taus;
                 t.params.nus = nus;
                 t.identity_mode = identity_mode;
                 return t;
             }),
             py::arg("A"), py::arg("taus"), py::arg("nus"), py::arg("identity_mode") = false)
        .def_readonly("A", &nt::TransformModel::A)
        .def_readonly("identity_mode", &nt::TransformModel::identity_mode)
        .def_property_readonly("taus",
                               [](const nt::TransformModel& t) { return t.params.taus; })
        .def_property_readonly("nus", [](const nt::TransformModel& t) { return t.params.nus; });

    py::class_<nt::FitReport>(m, "FitReport")
        .def_readonly("assignment_changes", &nt::FitReport::assignment_changes)
        .def_readonly("seconds", &nt::FitReport::seconds)
        .def_readonly("termination", &nt::FitReport::termination)
        .def_property_readonly("objectives", [](const nt::FitReport& r) {
            std::vector<double> out;
            out.reserve(r.objectives.size());
            for (const auto& o : r.objectives) out.push_back(o.total);
            return out;
        })
        .def_property_readonly("breakdowns", [](const nt::FitReport& r) {
            py::list out;
            for (const auto& o : r.objectives) {
                py::dict d;
                d["nt_error"] = o.nt_error;
                d["adjustment"] = o.adjustment;
                d["discrimination"] = o.discrimination;
                d["sparsity"] = o.sparsity;
                d["spread"] = o.spread;
                d["map_prior"] = o.map_prior;
                d["total"] = o.total;
                out.append(d);
            }
            return out;
        });

    py::class_<nt::FitResult>(m, "FitResult")
        .def_readonly("model", &nt::FitResult::model)
        .def_readonly("report", &nt::FitResult::report)
        .def_property_readonly("labels", [](const nt::FitResult& r) {
            std::vector<int> labels;
            labels.reserve(r.assignments.size());
            for (const auto& a : r.assignments) labels.push_back(a.flat_index);
            return labels;
        });

    m.def(
        "fit",
        [](const nt::Mat& x, const nt::HyperParams& hyper, bool identity,
           const nt::TransformModel* initial) {
            return nt::fit(x, hyper, initial, identity);
        },
        py::arg("x"), py::arg("hyper") = nt::HyperParams{}, py::arg("identity") = false,
        py::arg("initial") = nullptr,
        "Train on X with samples as columns.");

    m.def(
        "assign",
        [](const nt::TransformModel& model, const nt::Mat& x, const nt::HyperParams& hyper,
           bool collapse_similarity) {
            if (x.rows() != model.A.cols())
                throw nt::dimension_error("assign: data dimension does not match the model");
            const nt::Mat q = model.identity_mode ? x : nt::Mat(model.A * x);
            const auto assignments = nt::assign_batch(q, model.params, hyper);
            std::vector<int> labels;
            labels.reserve(assignments.size());
            nt::Mat y(q.rows(), q.cols());
            for (Eigen::Index i = 0; i < q.cols(); ++i) {
                labels.push_back(collapse_similarity ? assignments[i].j1 : assignments[i].flat_index);
                y.col(i) = assignments[i].y;
            }
            return py::make_tuple(labels, y);
        },
        py::arg("model"), py::arg("x"), py::arg("hyper") = nt::HyperParams{},
        py::arg("collapse_similarity") = false,
        "Assign samples; returns (labels, representations).");

    m.def(
        "synth_clusters",
        [](int clusters, int dim, int per_cluster, double spread, std::uint64_t seed) {
            auto [data, labels] = nt::synth_clusters(clusters, dim, per_cluster, spread, seed);
            return py::make_tuple(data, labels.labels);
        },
        py::arg("clusters"), py::arg("dim"), py::arg("per_cluster"), py::arg("spread") = 1.0,
        py::arg("seed") = 0);

    m.def("standardize", &nt::standardize, py::arg("x"));

    m.def(
        "cluster_accuracy",
        [](const std::vector<int>& pred, const std::vector<int>& truth) {
            return nt::cluster_accuracy(to_partition(pred), to_partition(truth));
        },
        py::arg("pred"), py::arg("truth"));
    m.def(
        "nmi",
        [](const std::vector<int>& pred, const std::vector<int>& truth) {
            return nt::nmi(to_partition(pred), to_partition(truth));
        },
        py::arg("pred"), py::arg("truth"));
    m.def("conditioning", &nt::conditioning, py::arg("a"));
    m.def("coherence", &nt::coherence, py::arg("a"));
    m.def(
        "knn_classify",
        [](const nt::Mat& train_repr, const std::vector<int>& train_labels, const nt::Mat& test_repr,
           int k) { return nt::knn_classify(train_repr, to_partition(train_labels), test_repr, k).labels; },
        py::arg("train_repr"), py::arg("train_labels"), py::arg("test_repr"), py::arg("k"));

    m.def(
        "save_model",
        [](const nt::TransformModel& model, const nt::HyperParams& hyper, const std::string& path) {
            nt::save_model(model, hyper, path);
        },
        py::arg("model"), py::arg("hyper"), py::arg("path"));
    m.def(
        "load_model",
        [](const std::string& path) {
            nt::HyperParams hyper;
            nt::TransformModel model = nt::load_model(path, &hyper);
            return py::make_tuple(model, hyper);
        },
        py::arg("path"));
    m.def(
        "save_matrix",
        [](const nt::Mat& matrix, const std::string& path, const std::string& format) {
            nt::save_matrix(matrix, path,
                            format == "csv" ? nt::MatrixFormat::csv : nt::MatrixFormat::binary);
        },
        py::arg("matrix"), py::arg("path"), py::arg("format") = "binary");
    m.def(
        "load_matrix",
        [](const std::string& path, const std::string& format) {
            return nt::load_matrix(path,
                                   format == "csv" ? nt::MatrixFormat::csv : nt::MatrixFormat::binary);
        },
        py::arg("path"), py::arg("format") = "binary");
}
