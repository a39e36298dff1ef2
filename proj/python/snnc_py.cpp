// Copyright 2026 The snnc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "snnc/calibration.hpp"
#include "snnc/engine.hpp"
#include "snnc/error.hpp"
#include "snnc/iat.hpp"
#include "snnc/io.hpp"
#include "snnc/model_store.hpp"
#include "snnc/pipeline.hpp"
#include "snnc/search.hpp"

namespace py = pybind11;
using namespace snnc;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t) {
  FloatArray out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict plan_dict(const LayerPlan& p) {
  py::dict d;
  d["kind"] = std::string(to_string(p.kind));
  d["values"] = p.values;
  d["s_sum"] = p.s_sum;
  d["e_sum"] = p.e_sum;
  d["feasible"] = p.feasible;
  return d;
}

}  // namespace

PYBIND11_MODULE(_snnc, m) {
  m.doc() = "ANN-to-SNN conversion toolkit";

  py::register_exception<Error>(m, "SnncError", PyExc_RuntimeError);

  py::class_<LayerSnnConfig>(m, "LayerConfig")
      .def(py::init([](float v_th, int rho, int phi) { return LayerSnnConfig{v_th, rho, phi}; }), py::arg("v_th"),
           py::arg("rho") = 1, py::arg("phi") = 1)
      .def_readwrite("v_th", &LayerSnnConfig::v_th)
      .def_readwrite("rho", &LayerSnnConfig::rho)
      .def_readwrite("phi", &LayerSnnConfig::phi)
      .def("threshold", &LayerSnnConfig::threshold)
      .def("__repr__", [](const LayerSnnConfig& c) {
        return "LayerConfig(v_th=" + std::to_string(c.v_th) + ", rho=" + std::to_string(c.rho) +
               ", phi=" + std::to_string(c.phi) + ")";
      });

  py::class_<ModelGraph>(m, "Model")
      .def_property_readonly("input_shape", [](const ModelGraph& g) { return g.input_shape; })
      .def_property_readonly("class_count", [](const ModelGraph& g) { return g.class_count; })
      .def_property_readonly("spiking_layers", [](const ModelGraph& g) { return g.spiking_layers().size(); })
      .def("forward", [](const ModelGraph& g, const FloatArray& x) { return to_array(forward(g, to_tensor(x))); })
      .def("digest", [](const ModelGraph& g) { return model_digest(g); });

  m.def("load_model", &load_model, py::arg("path"));
  m.def("load_configs", [](const std::filesystem::path& p) { return configs_from_json(read_file_text(p)); },
        py::arg("path"));

  m.def("clip_floor", py::overload_cast<float, std::size_t, float, int>(&clip_floor), py::arg("x"),
        py::arg("timesteps"), py::arg("v_th"), py::arg("phi") = 1);

  m.def(
      "step",
      [](const FloatArray& v, const FloatArray& current, const LayerSnnConfig& cfg) {
        const auto r = step_layer(NeuronState{Tensor(to_tensor(v).shape()), to_tensor(v)}, to_tensor(current), cfg);
        return py::make_tuple(to_array(r.emitted), to_array(r.state.v));
      },
      py::arg("v"), py::arg("current"), py::arg("config"),
      "One IF update; returns (emitted amplitude, membrane after reset).");

  m.def(
      "run_snn",
      [](const ModelGraph& g, const std::vector<LayerSnnConfig>& configs, const FloatArray& batch,
         std::size_t timesteps) {
        const auto r = run_snn(g, configs, to_tensor(batch), timesteps);
        py::dict d;
        d["scores"] = to_array(r.scores);
        d["spike_count"] = r.stats.spike_count;
        d["layer_spikes"] = r.stats.layer_spikes;
        return d;
      },
      py::arg("model"), py::arg("configs"), py::arg("batch"), py::arg("timesteps"));

  m.def("entropy", [](const std::vector<double>& p) { return entropy(p); }, py::arg("p"));
  m.def(
      "confidence",
      [](const std::vector<float>& scores, const std::string& mode) {
        return confidence(scores, parse_confidence_mode(mode));
      },
      py::arg("scores"), py::arg("mode") = "entropy");
  m.def(
      "kl_divergence", [](const std::vector<double>& p, const std::vector<double>& q) { return kl_divergence(p, q); },
      py::arg("p"), py::arg("q"));
  m.def(
      "energy",
      [](double spikes, double mu) { return energy_of_counts(std::vector<double>{spikes}, EnergyModel{mu}); },
      py::arg("spikes"), py::arg("mu") = EnergyModel{}.mu);
  m.def(
      "exit_boundaries",
      [](std::vector<double> mean_entropy, double alpha_base, double beta, double delta) {
        return make_exit_policy(std::move(mean_entropy), alpha_base, beta, delta).alpha;
      },
      py::arg("mean_entropy"), py::arg("alpha_base") = 0.7, py::arg("beta") = 0.2, py::arg("delta") = 1.0);

  m.def(
      "pareto_search",
      [](const std::string& table_csv, double cap) {
        const auto table = table_from_csv(table_csv);
        const auto budget = table.kind == ParamKind::phi ? SearchBudget::energy(cap) : SearchBudget::sensitivity(cap);
        return plan_dict(pareto_search(table, budget));
      },
      py::arg("table_csv"), py::arg("cap"), "Budgeted plan from a sensitivity table in CSV form.");

  m.def("default_config", [] { return RunConfig{}.to_json(); });
  m.def(
      "check_config", [](const std::string& text) { return RunConfig::from_json(text).to_json(); }, py::arg("text"),
      "Validates a JSON run config and returns it with defaults filled in.");
}
