#include "cropd/oracles.hpp"
#include "cropd/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace cropd;

namespace {

nlohmann::json json_from_str(const std::string& s) { return nlohmann::json::parse(s); }

ThreatModel threat_from_kwargs(const std::string& norm, double eps, int64_t steps, double step_size) {
    ThreatModel tm;
    tm.p = norm == "l2" ? Norm::L2 : Norm::Linf;
    tm.epsilon = eps;
    tm.steps = steps;
    tm.step_size = step_size;
    return tm;
}

}  // namespace

PYBIND11_MODULE(_cropd, m) {
    m.doc() = "Robust pre-processing lab bindings";
    m.attr("__version__") = kToolVersion;

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<StageError>(m, "StageError");

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def_readonly("inputs", &LabeledDataset::inputs)
        .def_property_readonly("labels",
                               [](const LabeledDataset& d) {
                                   std::vector<int32_t> out(d.labels.data(), d.labels.data() + d.labels.size());
                                   return out;
                               })
        .def_readonly("shape", &LabeledDataset::shape)
        .def_readonly("num_classes", &LabeledDataset::num_classes)
        .def_readonly("name", &LabeledDataset::name)
        .def_readonly("split", &LabeledDataset::split)
        .def("size", &LabeledDataset::size)
        .def("dim", &LabeledDataset::dim);

    m.def("make_synthetic_gaussian", &make_synthetic_gaussian, py::arg("n"), py::arg("d"), py::arg("k"),
          py::arg("separation"), py::arg("seed"));
    m.def("make_separated_discrete", &make_separated_discrete, py::arg("n"), py::arg("d"), py::arg("epsilon"),
          py::arg("seed"));
    m.def("save_tensor_dataset", &save_tensor_dataset, py::arg("dataset"), py::arg("dir"));
    m.def("load_tensor_dataset", &load_tensor_dataset, py::arg("dir"));

    py::class_<ThreatModel>(m, "ThreatModel")
        .def(py::init(&threat_from_kwargs), py::arg("norm") = "inf", py::arg("epsilon") = 8.0 / 255.0,
             py::arg("steps") = 1, py::arg("step_size") = 8.0 / 255.0)
        .def_readwrite("epsilon", &ThreatModel::epsilon)
        .def_readwrite("steps", &ThreatModel::steps)
        .def_readwrite("step_size", &ThreatModel::step_size);
    py::enum_<Norm>(m, "Norm").value("L2", Norm::L2).value("Linf", Norm::Linf);
    m.def("fgsm_preset", &ThreatModel::fgsm_preset, py::arg("eps"), py::arg("norm") = Norm::Linf);
    m.def("pgd10_preset", &ThreatModel::pgd10_preset, py::arg("eps"), py::arg("norm") = Norm::Linf);
    m.def("pgd20_preset", &ThreatModel::pgd20_preset, py::arg("eps"), py::arg("norm") = Norm::Linf);

    m.def(
        "fgsm",
        [](const std::function<std::pair<double, Matrix>(const Matrix&)>& loss, const Matrix& x,
           const ThreatModel& tm) { return fgsm(loss, x, tm); },
        py::arg("loss_grad"), py::arg("x"), py::arg("threat_model"));
    m.def(
        "pgd",
        [](const std::function<std::pair<double, Matrix>(const Matrix&)>& loss, const Matrix& x,
           const ThreatModel& tm) { return pgd(loss, x, tm); },
        py::arg("loss_grad"), py::arg("x"), py::arg("threat_model"));

    m.def(
        "contrastive_loss",
        [](const Matrix& anchors, const Matrix& positives, double tau) {
            return batch_contrastive_loss({anchors, positives, tau});
        },
        py::arg("anchors"), py::arg("positives"), py::arg("tau") = 0.5);
    m.def(
        "naive_contrastive_loss",
        [](const Matrix& anchors, const Matrix& positives, double tau) {
            return oracles::naive_contrastive(anchors, positives, tau);
        },
        py::arg("anchors"), py::arg("positives"), py::arg("tau") = 0.5);

    py::class_<WitnessReport>(m, "WitnessReport")
        .def_readonly("clean_recon", &WitnessReport::clean_recon)
        .def_readonly("adv_recon", &WitnessReport::adv_recon)
        .def_readonly("clean_ce", &WitnessReport::clean_ce)
        .def_readonly("adv_ce", &WitnessReport::adv_ce)
        .def_readonly("epsilon", &WitnessReport::epsilon)
        .def_readonly("delta", &WitnessReport::delta);
    m.def("proposition1_witness", &proposition1_witness, py::arg("n"), py::arg("d"), py::arg("epsilon"),
          py::arg("delta"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_static("from_json_str", [](const std::string& s) { return ExperimentConfig::from_json(json_from_str(s)); })
        .def_static("from_file", &ExperimentConfig::from_file)
        .def_static("defaults_str", []() { return ExperimentConfig::defaults().dump(2); })
        .def("apply_override", &ExperimentConfig::apply_override)
        .def("serialize", &ExperimentConfig::serialize)
        .def("hash", &ExperimentConfig::hash)
        .def("stage_hash", &ExperimentConfig::stage_hash);

    m.def(
        "run_experiment",
        [](const ExperimentConfig& cfg) { return run_experiment(cfg, nullptr).dump(); }, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_suite",
        [](const std::vector<std::filesystem::path>& configs, int parallelism) {
            auto records = run_suite(configs, parallelism);
            std::vector<std::string> out;
            for (const auto& r : records) out.push_back(r.dump());
            return out;
        },
        py::arg("configs"), py::arg("parallelism") = 1, py::call_guard<py::gil_scoped_release>());
}
