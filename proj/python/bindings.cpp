#include "losp/config.hpp"
#include "losp/experiment.hpp"
#include "losp/fft.hpp"
#include "losp/hankel.hpp"
#include "losp/label_oracle.hpp"
#include "losp/metrics.hpp"
#include "losp/parallel.hpp"
#include "losp/phantom.hpp"
#include "losp/prompt_net.hpp"
#include "losp/solver.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace losp;

namespace {

RankPolicy make_policy(std::string const &policy, int rank, std::string const &weights)
{
  if (policy == "fixed") {
    return FixedRank{rank};
  }
  if (policy == "oracle") {
    return OracleRank{};
  }
  if (policy == "learned") {
    if (weights.empty()) {
      throw ConfigError("the learned policy needs a weights file");
    }
    return LearnedRank{load_weights(weights)};
  }
  throw ConfigError("unknown rank policy '" + policy + "'");
}

py::dict reconstruct_instance(Instance const &in, RunConfig const &cfg, std::optional<std::string> policy,
                              std::optional<int> rank, std::optional<std::string> variant,
                              std::optional<std::string> weights)
{
  SolverConfig c = solver_config(cfg);
  c.log_objective = false;
  c.policy = make_policy(policy.value_or(cfg.solver.policy), rank.value_or(cfg.solver.rank),
                         weights.value_or(cfg.solver.weights));
  if (variant) {
    c.variant = solver_variant_from_string(*variant);
  }
  SolverResult r;
  {
    py::gil_scoped_release release;
    r = run_solver(in, c);
  }
  py::dict out;
  out["X"] = r.X;
  out["image"] = shot_combine(r.X);
  out["psnr"] = recon_psnr(in, r.X);
  out["ranks_ro"] = r.ranks_ro;
  out["ranks_pe"] = r.ranks_pe;
  std::vector<double> primal;
  for (auto const &l : r.logs) {
    primal.push_back(l.primal_residual);
  }
  out["primal_residual"] = primal;
  return out;
}

} // namespace

PYBIND11_MODULE(_losp, m)
{
  m.doc() = "Multi-shot DWI reconstruction core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("set_thread_count", &set_thread_count, py::arg("n"));

  py::class_<Phantom>(m, "Phantom")
      .def_readonly("size_ro", &Phantom::size_ro)
      .def_readonly("size_pe", &Phantom::size_pe)
      .def_readonly("magnitude", &Phantom::magnitude)
      .def_property_readonly("labels", &Phantom::labels)
      .def_property_readonly("n_regions", [](Phantom const &p) { return p.regions.size(); });

  m.def(
      "generate_phantom",
      [](int size_ro, int size_pe, int n_regions, std::uint64_t seed) {
        return generate_phantom(size_ro, size_pe, n_regions, seed);
      },
      py::arg("size_ro") = 64, py::arg("size_pe") = 64, py::arg("n_regions") = 6, py::arg("seed") = 0);

  m.def("fft2c", py::overload_cast<CxImage const &>(&fft2c), py::arg("image"));
  m.def("ifft2c", py::overload_cast<CxImage const &>(&ifft2c), py::arg("kspace"));

  py::enum_<HankelLayout>(m, "HankelLayout")
      .value("ComplexShotConcat", HankelLayout::ComplexShotConcat)
      .value("RealImagSplit", HankelLayout::RealImagSplit);

  py::class_<HankelSpec>(m, "HankelSpec")
      .def(py::init([](int window, int length, int n_shots, HankelLayout layout) {
             HankelSpec s{window, length, n_shots, layout};
             s.validate();
             return s;
           }),
           py::arg("window"), py::arg("length"), py::arg("n_shots") = 1,
           py::arg("layout") = HankelLayout::ComplexShotConcat)
      .def_readonly("window", &HankelSpec::window)
      .def_readonly("length", &HankelSpec::length)
      .def_readonly("n_shots", &HankelSpec::n_shots)
      .def_property_readonly("rows", &HankelSpec::rows)
      .def_property_readonly("cols", &HankelSpec::cols)
      .def_property_readonly("max_rank", &HankelSpec::max_rank);

  m.def(
      "lift", [](ShotSignals const &s, HankelSpec const &spec) { return lift(s, spec); }, py::arg("signals"),
      py::arg("spec"));
  m.def("adjoint", &adjoint, py::arg("matrix"), py::arg("spec"));
  m.def(
      "truncate_svd",
      [](CxMatrix const &matrix, int r) {
        Truncation t = truncate_svd(matrix, r);
        return py::make_tuple(t.matrix, t.singular_values);
      },
      py::arg("matrix"), py::arg("rank"));
  m.def("energy_rank", &energy_rank, py::arg("singular_values"), py::arg("fraction") = 0.99);
  m.def(
      "hsvd_recover",
      [](ShotSignals const &s, int r, HankelSpec const &spec) { return hsvd_recover(s, r, spec); },
      py::arg("signals"), py::arg("rank"), py::arg("spec"));
  m.def(
      "optimal_rank",
      [](ShotSignals const &noisy, ShotSignals const &clean, HankelSpec const &spec) {
        RankSweep s = optimal_rank(noisy, clean, spec);
        return py::make_tuple(s.best_rank, s.psnr);
      },
      py::arg("noisy"), py::arg("clean"), py::arg("spec"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("seed", &RunConfig::seed)
      .def_property(
          "iterations", [](RunConfig const &c) { return c.solver.iterations; },
          [](RunConfig &c, int n) { c.solver.iterations = n; })
      .def_property(
          "snr_db", [](RunConfig const &c) { return c.encoding.snr_db; },
          [](RunConfig &c, double v) { c.encoding.snr_db = v; })
      .def("to_json", [](RunConfig const &c) { return nlohmann::json(c).dump(); });
  m.def("load_config", &load_run_config, py::arg("path"));

  py::class_<Instance>(m, "Instance")
      .def_readonly("phantom", &Instance::phantom)
      .def_readonly("ground_truth", &Instance::ground_truth)
      .def_readonly("reference", &Instance::reference);
  m.def(
      "make_instance",
      [](RunConfig const &cfg, std::optional<std::uint64_t> seed) {
        return make_instance(experiment_setup(cfg), seed.value_or(cfg.seed));
      },
      py::arg("config"), py::arg("seed") = py::none());
  m.def("zero_filled_psnr", &zero_filled_psnr, py::arg("instance"));
  m.def("reconstruct", &reconstruct_instance, py::arg("instance"), py::arg("config"), py::arg("policy") = py::none(),
        py::arg("rank") = py::none(), py::arg("variant") = py::none(), py::arg("weights") = py::none(),
        "Runs the ADMM solver on an instance; unset options come from the config.");
  m.def("shot_combine", &shot_combine, py::arg("shots"));
  m.def(
      "adc_fit",
      [](std::vector<RealImage> const &signals, std::vector<double> const &b) { return adc_fit(signals, b); },
      py::arg("signals"), py::arg("b_values"));
}
