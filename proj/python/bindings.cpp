#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qdyn/checkpoint.hpp"
#include "qdyn/cli.hpp"
#include "qdyn/commands.hpp"
#include "qdyn/finite_diff.hpp"
#include "qdyn/rollout.hpp"
#include "qdyn/run_config.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

qdyn::Tensor tensor_from_array(const py::array_t<double>& arr) {
    const auto buf = arr.request();
    if (buf.ndim == 1) {
        std::vector<double> data(static_cast<size_t>(buf.shape[0]));
        auto view = arr.unchecked<1>();
        for (py::ssize_t i = 0; i < buf.shape[0]; ++i) {
            data[static_cast<size_t>(i)] = view(i);
        }
        return qdyn::Tensor(1, static_cast<int>(buf.shape[0]), std::move(data));
    }
    if (buf.ndim != 2) {
        throw qdyn::ShapeError("expected a 1-d or 2-d array");
    }
    std::vector<double> data(static_cast<size_t>(buf.shape[0] * buf.shape[1]));
    auto view = arr.unchecked<2>();
    for (py::ssize_t i = 0; i < buf.shape[0]; ++i) {
        for (py::ssize_t j = 0; j < buf.shape[1]; ++j) {
            data[static_cast<size_t>(i * buf.shape[1] + j)] = view(i, j);
        }
    }
    return qdyn::Tensor(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]),
                        std::move(data));
}

py::array_t<double> array_from_tensor(const qdyn::Tensor& t) {
    py::array_t<double> arr({t.rows(), t.cols()});
    auto view = arr.mutable_unchecked<2>();
    for (int i = 0; i < t.rows(); ++i) {
        for (int j = 0; j < t.cols(); ++j) {
            view(i, j) = t.at(i, j);
        }
    }
    return arr;
}

std::vector<double> as_vector(const py::array_t<double>& arr) {
    const auto buf = arr.request();
    if (buf.ndim != 1) {
        throw qdyn::ShapeError("expected a 1-d array");
    }
    auto view = arr.unchecked<1>();
    std::vector<double> out(static_cast<size_t>(buf.shape[0]));
    for (py::ssize_t i = 0; i < buf.shape[0]; ++i) {
        out[static_cast<size_t>(i)] = view(i);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Transformer forecaster for spin-boson population dynamics";

    py::register_exception<qdyn::ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<qdyn::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<qdyn::NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<qdyn::ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("window_len", &qdyn::ModelConfig::window_len)
        .def_readwrite("d_p", &qdyn::ModelConfig::d_p)
        .def_readwrite("n_heads", &qdyn::ModelConfig::n_heads)
        .def_readwrite("n_layers", &qdyn::ModelConfig::n_layers)
        .def_readwrite("ffn_hidden", &qdyn::ModelConfig::ffn_hidden)
        .def_readwrite("reduce_dim", &qdyn::ModelConfig::reduce_dim)
        .def_readwrite("fc1", &qdyn::ModelConfig::fc1)
        .def_readwrite("fc2", &qdyn::ModelConfig::fc2)
        .def_readwrite("ln_eps", &qdyn::ModelConfig::ln_eps)
        .def_readwrite("pe_base", &qdyn::ModelConfig::pe_base)
        .def_readwrite("dt", &qdyn::ModelConfig::dt)
        .def("__repr__",
             [](const qdyn::ModelConfig& cfg) { return "ModelConfig(" + qdyn::describe(cfg) + ")"; });

    py::class_<qdyn::TransformerForecaster>(m, "TransformerForecaster")
        .def_readonly("cfg", &qdyn::TransformerForecaster::cfg)
        .def("param", [](const qdyn::TransformerForecaster& model,
                         const std::string& name) { return array_from_tensor(model.at(name)); })
        .def("param_names",
             [](const qdyn::TransformerForecaster& model) {
                 std::vector<std::string> names;
                 for (const auto& [name, _] : model.params) {
                     names.push_back(name);
                 }
                 return names;
             })
        .def("forward",
             [](const qdyn::TransformerForecaster& model, const py::array_t<double>& x,
                const py::array_t<double>& t) {
                 return qdyn::forward(model, as_vector(x), as_vector(t));
             },
             "x"_a, "t"_a)
        .def("rollout",
             [](const qdyn::TransformerForecaster& model, const py::array_t<double>& seed_x,
                const py::array_t<double>& seed_t, int horizon) {
                 const auto result =
                     qdyn::rollout(model, as_vector(seed_x), as_vector(seed_t), horizon);
                 return py::make_tuple(py::array(py::cast(result.predicted_times)),
                                       py::array(py::cast(result.predicted)));
             },
             "seed_x"_a, "seed_t"_a, "horizon"_a);

    m.def("count_params", &qdyn::count_params, "cfg"_a);
    m.def("init_params", &qdyn::init_params, "cfg"_a, "seed"_a);
    m.def(
        "positional_encoding",
        [](const py::array_t<double>& times, int d_p, double base) {
            return array_from_tensor(
                qdyn::positional_encoding(as_vector(times), {d_p, base}));
        },
        "times"_a, "d_p"_a = 64, "base"_a = 1000.0);
    m.def(
        "embed",
        [](const py::array_t<double>& x, const py::array_t<double>& t,
           const py::array_t<double>& w, const py::array_t<double>& b, int d_p, double base) {
            return array_from_tensor(qdyn::embed(as_vector(x), as_vector(t),
                                                 tensor_from_array(w), tensor_from_array(b),
                                                 {d_p, base}));
        },
        "x"_a, "t"_a, "w"_a, "b"_a, "d_p"_a = 64, "base"_a = 1000.0);

    m.def(
        "generate_surrogate",
        [](double epsilon, double lambda, double omega_c, double beta, double dt, int points,
           std::optional<std::uint64_t> noise_seed, std::optional<double> gamma,
           std::optional<double> gamma_phi) {
            qdyn::TrajectoryMeta meta;
            meta.epsilon = epsilon;
            meta.lambda = lambda;
            meta.omega_c = omega_c;
            meta.beta = beta;
            qdyn::SurrogateOptions options;
            options.gamma = gamma;
            options.gamma_phi = gamma_phi;
            const auto traj = qdyn::generate_surrogate(meta, dt, points, noise_seed, options);
            return py::make_tuple(py::array(py::cast(traj.times)),
                                  py::array(py::cast(traj.values)));
        },
        "epsilon"_a, "lambda_"_a, "omega_c"_a, "beta"_a, "dt"_a = 0.1, "points"_a = 201,
        "noise_seed"_a = std::nullopt, "gamma"_a = std::nullopt, "gamma_phi"_a = std::nullopt);

    m.def(
        "window_slice",
        [](const py::array_t<double>& times, const py::array_t<double>& values, int slice_len,
           double dt) {
            qdyn::Trajectory traj;
            traj.times = as_vector(times);
            traj.values = as_vector(values);
            traj.dt = dt;
            traj.source = "external";
            const qdyn::SlicerConfig cfg{traj.points(), slice_len, dt};
            py::list out;
            for (const auto& s : qdyn::window_slice(traj, cfg)) {
                out.append(py::make_tuple(py::array(py::cast(s.x)), py::array(py::cast(s.t)),
                                          s.y));
            }
            return out;
        },
        "times"_a, "values"_a, "slice_len"_a, "dt"_a = 0.1);

    m.def("mae",
          [](const py::array_t<double>& a, const py::array_t<double>& b) {
              return qdyn::mae(as_vector(a), as_vector(b));
          });
    m.def("mse_loss",
          [](const py::array_t<double>& a, const py::array_t<double>& b) {
              return qdyn::mse_loss(as_vector(a), as_vector(b));
          });

    m.def("load_checkpoint",
          [](const std::filesystem::path& path) { return qdyn::load_checkpoint(path).to_model(); },
          "path"_a);
    m.def("load_trajectory",
          [](const std::filesystem::path& path) {
              const auto traj = qdyn::load_trajectory(path);
              return py::make_tuple(py::array(py::cast(traj.times)),
                                    py::array(py::cast(traj.values)));
          },
          "path"_a);
    m.def("run_cli", &qdyn::run_cli, "args"_a,
          "Invoke a CLI subcommand in-process; returns the exit code");
}
