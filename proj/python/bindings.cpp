// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "optoqst/cli/experiment.hpp"
#include "optoqst/cli/schema.hpp"
#include "optoqst/error.hpp"
#include "optoqst/polariton.hpp"
#include "optoqst/protocols.hpp"

namespace py = pybind11;
using namespace optoqst;

namespace {

CellParams cell(double omega_m, double delta_p, double G, double kappa, double gamma) {
  CellParams p;
  p.omega_m = omega_m;
  p.delta_p = delta_p;
  p.G = G;
  p.kappa = kappa;
  p.gamma = gamma;
  p.validate();
  return p;
}

HopConvention convention(const std::string& name) {
  if (name == "polariton_chain") return HopConvention::kPolaritonChain;
  if (name == "as_printed") return HopConvention::kAsPrinted;
  throw InvalidArgument("unknown hop convention '" + name + "'");
}

py::object cell_value(const cli::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return py::float_(*d);
  return py::str(std::get<std::string>(c));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compiled core of optoqst.";
  m.attr("__version__") = OPTOQST_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<InstabilityError>(m, "InstabilityError", base.ptr());
  py::register_exception<DimensionLimitError>(m, "DimensionLimitError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def(
      "polariton_frequencies",
      [](double omega_m, double delta_p, double G, double kappa, double gamma) {
        const auto f = polariton_frequencies(cell(omega_m, delta_p, G, kappa, gamma));
        return py::make_tuple(f.omega_minus, f.omega_plus);
      },
      py::arg("omega_m"), py::arg("delta_p"), py::arg("G"), py::arg("kappa") = 0.0, py::arg("gamma") = 0.0,
      "Closed-form (Omega_-, Omega_+) in the units of the inputs.");
  m.def(
      "symplectic_oracle",
      [](double omega_m, double delta_p, double G, double kappa, double gamma) {
        const auto f = symplectic_oracle(cell(omega_m, delta_p, G, kappa, gamma));
        return py::make_tuple(f.omega_minus, f.omega_plus);
      },
      py::arg("omega_m"), py::arg("delta_p"), py::arg("G"), py::arg("kappa") = 0.0, py::arg("gamma") = 0.0);
  m.def(
      "stability_bound",
      [](double omega_m, double kappa, double gamma) { return stability_bound(cell(omega_m, -omega_m, 0.0, kappa, gamma)); },
      py::arg("omega_m"), py::arg("kappa") = 0.0, py::arg("gamma") = 0.0);
  m.def(
      "pst_profile",
      [](int N, double J, const std::string& conv) {
        const auto plan = pst_profile(N, J, convention(conv));
        py::dict d;
        d["hops"] = plan.hops;
        d["tau"] = plan.tau();
        return d;
      },
      py::arg("num_cells"), py::arg("J"), py::arg("convention") = "polariton_chain",
      "Photon hops and transfer time of the PST profile.");

  m.def(
      "validate_config",
      [](const std::string& text) {
        return cli::validate_against(nlohmann::json::parse(text), cli::experiment_schema());
      },
      py::arg("config_json"), "Schema violations of a config given as JSON text; empty when valid.");
  m.def("experiment_schema", [] { return cli::experiment_schema().dump(); });

  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out_dir,
         int threads, bool force_dim, bool gnuplot_script, bool write_files) {
        cli::RunOptions o;
        o.out_dir = out_dir;
        o.threads = threads;
        o.force_dim = force_dim;
        o.gnuplot_script = gnuplot_script;
        o.write_files = write_files;
        cli::CommandResult r;
        {
          py::gil_scoped_release release;
          r = cli::run_command(command, config, o);
        }
        py::list rows;
        for (const auto& row : r.table.rows) {
          py::list out;
          for (const auto& c : row) out.append(cell_value(c));
          rows.append(out);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["summary"] = r.summary;
        d["columns"] = r.table.columns;
        d["rows"] = rows;
        d["metadata_json"] = r.metadata.is_null() ? std::string("null") : r.metadata.dump();
        std::vector<std::string> files;
        for (const auto& f : r.files) files.push_back(f.string());
        d["files"] = files;
        return d;
      },
      py::arg("command"), py::arg("config"), py::arg("out_dir") = ".", py::arg("threads") = 1,
      py::arg("force_dim") = false, py::arg("gnuplot_script") = false, py::arg("write_files") = true,
      "Run a tool subcommand; errors are mapped to exit codes as on the command line.");
}
