#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "risnoma/dataset_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/evaluation.hpp"
#include "risnoma/precoding.hpp"
#include "risnoma/risnet.hpp"
#include "risnoma/run_config.hpp"
#include "risnoma/training.hpp"

namespace py = pybind11;
using namespace risnoma;

namespace {

// Keyword arguments become `key = value` overrides on a default RunConfig.
RunConfig config_from(const py::kwargs& overrides) {
    RunConfig config;
    for (const auto& [key, value] : overrides) {
        std::string text = py::str(value);
        if (py::isinstance<py::bool_>(value)) text = value.cast<bool>() ? "true" : "false";
        config.set(key.cast<std::string>(), text);
    }
    return config;
}

py::dict report_summary(const EvalReport& r) {
    py::dict d;
    d["mean_power_qd_only"] = r.mean_power_qd_only;
    d["mean_power_all_penalized"] = r.mean_power_all_penalized;
    d["qd_percentage"] = r.qd_percentage;
    d["trial_count"] = r.trial_count;
    py::list powers, qd;
    for (const SampleRecord& rec : r.records) {
        powers.append(rec.power);
        qd.append(rec.is_qd);
    }
    d["power"] = powers;
    d["is_qd"] = qd;
    return d;
}

py::array_t<double> to_numpy(const grad::Tensor& t) {
    py::array_t<double> out({t.rows(), t.cols()});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

grad::Tensor from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ConfigurationError("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return grad::Tensor(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

} // namespace

PYBIND11_MODULE(_risnoma, m) {
    m.doc() = "RIS phase optimization with closed-form NOMA precoding";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());

    py::class_<SinrTargets>(m, "SinrTargets")
        .def(py::init([](double rate1, double rate2, double noise_power) {
                 SinrTargets t{rate1, rate2, noise_power};
                 t.validate();
                 return t;
             }),
             py::arg("rate1") = 1.0, py::arg("rate2") = 1.0, py::arg("noise_power") = 1.0)
        .def_readwrite("rate1", &SinrTargets::rate1)
        .def_readwrite("rate2", &SinrTargets::rate2)
        .def_readwrite("noise_power", &SinrTargets::noise_power)
        .def("sinr", &SinrTargets::sinr, py::arg("user"));

    m.def(
        "optimal_precoding",
        [](const CVector& h1, const CVector& h2, const SinrTargets& targets, bool strict) {
            const PrecodingSolution s =
                optimal_precoding(h1, h2, targets, strict ? PrecodingMode::Strict : PrecodingMode::Training);
            py::dict d;
            d["w1"] = s.w1;
            d["w2"] = s.w2;
            d["power"] = s.power;
            d["q"] = s.qd.q_value;
            d["is_qd"] = s.qd.is_qd;
            d["cos_sq_psi"] = s.qd.cos_sq_psi;
            d["s1"] = s.sinr.s1;
            d["s21"] = s.sinr.s21;
            d["s22"] = s.sinr.s22;
            return d;
        },
        py::arg("h1"), py::arg("h2"), py::arg("targets") = SinrTargets{}, py::arg("strict") = true);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("size", &Dataset::size)
        .def_property_readonly("bs_antennas", &Dataset::bs_antennas)
        .def_property_readonly("ris_elements", &Dataset::ris_elements)
        .def_property_readonly("seed", &Dataset::seed)
        .def_property_readonly("bs_ris", &Dataset::bs_ris)
        .def("head", &Dataset::head, py::arg("count"))
        .def("slice", &Dataset::slice, py::arg("begin"), py::arg("count"))
        .def("features", [](const Dataset& d, std::size_t i) { return to_numpy(extract_features(d.sample(i)).gamma); },
             py::arg("index"))
        .def("__len__", &Dataset::size)
        .def("__eq__", &Dataset::operator==);

    m.def(
        "generate_dataset",
        [](std::size_t samples, std::uint64_t seed, const py::kwargs& overrides) {
            return generate_synthetic_dataset(config_from(overrides).geometry, samples, seed);
        },
        py::arg("samples"), py::arg("seed"));
    m.def("read_dataset", &read_dataset, py::arg("path"));
    m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("path"));

    py::class_<RisnetParams>(m, "RisnetParams")
        .def_property_readonly("count", &RisnetParams::count)
        .def_property_readonly("layers", [](const RisnetParams& p) { return p.config.layers; })
        .def("__eq__", &RisnetParams::operator==)
        .def("forward", [](const RisnetParams& p, const py::array_t<double>& gamma) {
            return forward(p, ChannelFeature{from_numpy(gamma)});
        });

    m.def("param_count", [](std::size_t layers, std::size_t local_dim, std::size_t global_dim) {
        return param_count(RisnetConfig{layers, local_dim, global_dim});
    }, py::arg("layers") = 8, py::arg("local_dim") = 16, py::arg("global_dim") = 16);
    m.def(
        "init_params",
        [](std::uint64_t seed, std::size_t layers, std::size_t local_dim, std::size_t global_dim) {
            return init_params(RisnetConfig{layers, local_dim, global_dim}, seed);
        },
        py::arg("seed"), py::arg("layers") = 8, py::arg("local_dim") = 16, py::arg("global_dim") = 16);
    m.def("read_checkpoint", &read_checkpoint, py::arg("path"));
    m.def("write_checkpoint", &write_checkpoint, py::arg("params"), py::arg("path"));

    m.def(
        "train",
        [](const Dataset& dataset, const py::kwargs& overrides) {
            const RunConfig config = config_from(overrides);
            config.network.validate();
            config.training.validate();
            TrainingResult result;
            {
                py::gil_scoped_release release;
                result = train(dataset, config.network, config.training);
            }
            py::list history;
            for (const IterationRecord& r : result.history.records) {
                history.append(py::dict(py::arg("iteration") = r.iteration, py::arg("mean_loss") = r.mean_loss,
                                        py::arg("mean_power") = r.mean_power,
                                        py::arg("qd_fraction") = r.qd_fraction));
            }
            return py::make_tuple(result.params, history);
        },
        py::arg("dataset"));

    m.def(
        "evaluate",
        [](const RisnetParams& params, const Dataset& dataset, const py::kwargs& overrides) {
            const RunConfig config = config_from(overrides);
            EvaluationOptions options;
            options.targets = config.training.objective.targets;
            options.reorder_users = config.training.objective.reorder_users;
            options.threads = config.training.threads;
            return report_summary(evaluate(params, dataset, options));
        },
        py::arg("params"), py::arg("dataset"));

    m.def(
        "evaluate_baseline",
        [](const Dataset& dataset, std::size_t trials, std::uint64_t seed, const py::kwargs& overrides) {
            const RunConfig config = config_from(overrides);
            EvaluationOptions options;
            options.targets = config.training.objective.targets;
            options.reorder_users = config.training.objective.reorder_users;
            options.threads = config.training.threads;
            return report_summary(evaluate_baseline(dataset, trials, seed, options));
        },
        py::arg("dataset"), py::arg("trials"), py::arg("seed"));
}
