#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "depthguard/attack.hpp"
#include "depthguard/config.hpp"
#include "depthguard/data.hpp"
#include "depthguard/defense.hpp"
#include "depthguard/metrics.hpp"
#include "depthguard/network.hpp"
#include "depthguard/pipeline.hpp"

namespace py = pybind11;
using namespace depthguard;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Tensor& t) {
  const std::vector<double> v = t.values();
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const Array& a, Dtype dtype) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from_values(std::move(shape), std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                             dtype);
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["config"] = r.config_id;
  d["attack"] = r.attack;
  d["eps"] = r.eps;
  d["iters"] = r.iters;
  d["rmse"] = r.rmse;
  d["rel"] = r.rel;
  d["log10"] = r.log10;
  d["d1"] = r.delta1;
  d["d2"] = r.delta2;
  d["d3"] = r.delta3;
  d["n"] = r.n_samples;
  return d;
}

RunConfig make_config(const std::optional<std::filesystem::path>& path, const std::map<std::string, std::string>& set) {
  RunConfig cfg = path ? RunConfig::load(*path) : RunConfig{};
  for (const auto& [k, v] : set) cfg.set(k, v);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_depthguard, m) {
  m.doc() = "Adversarial attacks and saliency-mask defense for a toy monocular depth network";

  static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = py::reinterpret_borrow<py::object>(error_type.ptr());
      py::object err = cls(std::string(to_string(e.code())) + ": " + e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("provenance", [](const Dataset& d) { return d.provenance; })
      .def("image", [](const Dataset& d, std::size_t i) { return to_numpy(d.records.at(i).image); })
      .def("depth", [](const Dataset& d, std::size_t i) { return to_numpy(d.records.at(i).depth); })
      .def("scene_seed", [](const Dataset& d, std::size_t i) { return d.records.at(i).scene_seed; })
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(p, d); });

  m.def("synth_generate", &synth_generate, py::arg("seed"), py::arg("n"), py::arg("height") = 64,
        py::arg("width") = 48);
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("split", &split, py::arg("dataset"), py::arg("train_fraction"), py::arg("seed"));

  py::class_<ParameterStore>(m, "Network")
      .def_property_readonly("role", [](const ParameterStore& p) { return std::string(to_string(p.spec().role)); })
      .def_property_readonly("tag", [](const ParameterStore& p) { return std::string(to_string(p.tag)); })
      .def_property_readonly("epoch", [](const ParameterStore& p) { return p.epoch; })
      .def_property_readonly("input_shape", [](const ParameterStore& p) { return p.spec().input_shape(); })
      .def_property_readonly("output_shape", [](const ParameterStore& p) { return p.spec().output_shape(); })
      .def("parameter_count", &ParameterStore::parameter_count)
      .def("checkpoint_bytes",
           [](const ParameterStore& p) {
             const auto b = encode_checkpoint(p);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def("save", [](const ParameterStore& p, const std::filesystem::path& path) { save_checkpoint(p, path); });

  m.def(
      "build_network",
      [](const std::string& role, std::uint64_t seed, std::size_t height, std::size_t width,
         std::vector<std::size_t> widths) {
        if (role == "depth") return build_network(depth_spec(height, width, std::move(widths)), seed);
        if (role == "saliency") return build_network(saliency_spec(height, width, std::move(widths)), seed);
        fail(ErrorCode::invalid_argument, "role must be 'depth' or 'saliency', got '" + role + "'");
      },
      py::arg("role"), py::arg("seed"), py::arg("height") = 64, py::arg("width") = 48,
      py::arg("widths") = std::vector<std::size_t>{8, 16, 32});
  m.def("load_checkpoint", py::overload_cast<const std::filesystem::path&>(&load_checkpoint), py::arg("path"));

  m.def(
      "predict_depth",
      [](const ParameterStore& n, const Array& image) {
        return to_numpy(forward_depth(n.frozen(), from_numpy(image, n.spec().dtype)));
      },
      py::arg("network"), py::arg("image"));
  m.def(
      "predict_saliency",
      [](const ParameterStore& g, const Array& image) {
        return to_numpy(forward_saliency(g.frozen(), from_numpy(image, g.spec().dtype)));
      },
      py::arg("network"), py::arg("image"));

  m.def(
      "attack",
      [](const ParameterStore& n, const Array& image, const Array& depth, double eps, std::size_t iters,
         const std::string& loss, const std::optional<ParameterStore>& saliency) {
        AttackConfig cfg;
        cfg.eps = eps;
        cfg.iters = iters;
        cfg.objective = parse_loss_kind(loss);
        const Tensor x = from_numpy(image, n.spec().dtype), y = from_numpy(depth, n.spec().dtype);
        if (saliency) {
          cfg.target = AttackTarget::composite_c;
          return to_numpy(attack_composite(n.frozen(), saliency->frozen(), x, y, cfg).x_star);
        }
        return to_numpy(ifgsm(plain_model(n.frozen()), x, y, cfg).x_star);
      },
      py::arg("network"), py::arg("image"), py::arg("depth"), py::arg("eps"), py::arg("iters") = 10,
      py::arg("loss") = "l1", py::arg("saliency") = py::none());

  m.def(
      "metrics",
      [](const Array& prediction, const Array& truth) {
        return report_dict(image_metrics(from_numpy(prediction, Dtype::f64), from_numpy(truth, Dtype::f64)));
      },
      py::arg("prediction"), py::arg("truth"));

  m.def(
      "reproduce",
      [](const std::filesystem::path& workdir, std::uint64_t seed, const std::optional<std::filesystem::path>& config,
         const std::map<std::string, std::string>& set) {
        ReproduceResult r;
        {
          py::gil_scoped_release release;
          r = reproduce(make_config(config, set), workdir, seed);
        }
        py::dict out;
        py::list t1, t2;
        for (const auto& row : r.table1) t1.append(report_dict(row));
        for (const auto& row : r.table2) t2.append(report_dict(row));
        out["table1"] = t1;
        out["table2"] = t2;
        return out;
      },
      py::arg("workdir"), py::arg("seed") = 7, py::arg("config") = py::none(),
      py::arg("set") = std::map<std::string, std::string>{});
}
