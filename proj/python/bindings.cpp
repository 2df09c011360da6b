#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "desense/de.hpp"
#include "desense/decoder.hpp"
#include "desense/degree_dist.hpp"
#include "desense/design.hpp"
#include "desense/ensembles.hpp"
#include "desense/graph.hpp"
#include "desense/haar.hpp"
#include "desense/shrinkage.hpp"

namespace py = pybind11;
using namespace desense;

namespace {

DETrace de_run_regular(const RegularEnsembleSpec& spec, const PriorModel& prior,
                       const DEConfig& config) {
  return de_run(
      de_initial_state(prior),
      [&](DEStateRegular s) { return de_step_regular(s, spec, prior, config); }, config);
}

DETrace de_run_preferential(const PreferentialEnsembleSpec& spec, const PriorModel& prior_H,
                            const PriorModel& prior_L, const DEConfig& config) {
  return de_run(
      de_initial_state(prior_H, prior_L),
      [&](DEStatePreferential s) {
        return de_step_preferential(s, spec, prior_H, prior_L, config);
      },
      config);
}

Mat mat_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Mat();
  Mat m(long(rows.size()), long(rows[0].size()));
  for (long r = 0; r < m.rows; ++r) {
    if (long(rows[r].size()) != m.cols) throw std::invalid_argument("ragged matrix rows");
    for (long c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> mat_to_rows(const Mat& m) {
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (long r = 0; r < m.rows; ++r)
    for (long c = 0; c < m.cols; ++c) out[r][c] = m.at(r, c);
  return out;
}

}  // namespace

PYBIND11_MODULE(pydesense, mod) {
  mod.doc() = "Sparse sensing-matrix design: density evolution, ensemble design, "
              "graph sampling, message-passing decoding and Haar transforms.";

  py::class_<GeneratingPolynomial>(mod, "GeneratingPolynomial")
      .def(py::init<>())
      .def_static("single", &GeneratingPolynomial::single, py::arg("degree"))
      .def_static("from_pairs", &GeneratingPolynomial::from_pairs, py::arg("pairs"))
      .def_static("parse", &GeneratingPolynomial::parse, py::arg("text"))
      .def_readwrite("coeff", &GeneratingPolynomial::coeff)
      .def("max_degree", &GeneratingPolynomial::max_degree)
      .def("fraction", &GeneratingPolynomial::fraction, py::arg("degree"))
      .def("mean", &GeneratingPolynomial::mean)
      .def("mean_inv", &GeneratingPolynomial::mean_inv)
      .def("mean_isqrt", &GeneratingPolynomial::mean_isqrt)
      .def("mean_sqrt", &GeneratingPolynomial::mean_sqrt)
      .def("check", &GeneratingPolynomial::check, py::arg("forbid_degree_one") = false)
      .def("valid", &GeneratingPolynomial::valid, py::arg("forbid_degree_one") = false)
      .def("serialize", &GeneratingPolynomial::serialize)
      .def("__repr__", [](const GeneratingPolynomial& p) {
        return "GeneratingPolynomial(" + p.serialize() + ")";
      });

  mod.def("mean_degree", &mean_degree, py::arg("poly"));
  mod.def("rate_ratio", &rate_ratio, py::arg("lambda_"), py::arg("rho"));

  py::enum_<PriorKind>(mod, "PriorKind")
      .value("SpikeDiscrete", PriorKind::SpikeDiscrete)
      .value("Laplacian", PriorKind::Laplacian)
      .value("Gaussian", PriorKind::Gaussian)
      .value("SparseGaussian", PriorKind::SparseGaussian)
      .value("Tabulated", PriorKind::Tabulated);

  py::class_<PriorModel>(mod, "PriorModel")
      .def_static("spike_discrete", &PriorModel::spike_discrete, py::arg("sparsity"),
                  py::arg("amplitude"))
      .def_static("laplacian", &PriorModel::laplacian, py::arg("beta"))
      .def_static("gaussian", &PriorModel::gaussian, py::arg("variance"))
      .def_static("sparse_gaussian", &PriorModel::sparse_gaussian, py::arg("sparsity"),
                  py::arg("mean"), py::arg("variance"))
      .def_static("tabulated", &PriorModel::tabulated, py::arg("grid"), py::arg("density"))
      .def_readonly("kind", &PriorModel::kind)
      .def_readonly("sparsity", &PriorModel::sparsity)
      .def_readonly("amplitude", &PriorModel::amplitude)
      .def_readonly("beta", &PriorModel::beta)
      .def_readonly("mean", &PriorModel::mean)
      .def_readonly("variance", &PriorModel::variance)
      .def("first_moment", &PriorModel::first_moment)
      .def("second_moment", &PriorModel::second_moment)
      .def("moment_var", &PriorModel::moment_var);

  mod.def("tabulate_prior", &tabulate_prior, py::arg("prior"), py::arg("points") = 2001);
  mod.def("beta_from_sparsity", &beta_from_sparsity, py::arg("n"), py::arg("k"), py::arg("c0"));
  mod.def("beta_from_rate", &beta_from_rate, py::arg("k_over_n"), py::arg("c0"));
  mod.def("default_sensing_scale", &default_sensing_scale, py::arg("rho"));

  py::class_<RegularEnsembleSpec>(mod, "RegularEnsembleSpec")
      .def(py::init<>())
      .def_readwrite("lambda_", &RegularEnsembleSpec::lambda)
      .def_readwrite("rho", &RegularEnsembleSpec::rho)
      .def_readwrite("n", &RegularEnsembleSpec::n)
      .def_readwrite("m", &RegularEnsembleSpec::m)
      .def_readwrite("sensing_scale_A", &RegularEnsembleSpec::sensing_scale_A)
      .def("check", &RegularEnsembleSpec::check);

  py::class_<PreferentialEnsembleSpec>(mod, "PreferentialEnsembleSpec")
      .def(py::init<>())
      .def_readwrite("lambda_H", &PreferentialEnsembleSpec::lambda_H)
      .def_readwrite("lambda_L", &PreferentialEnsembleSpec::lambda_L)
      .def_readwrite("rho_H", &PreferentialEnsembleSpec::rho_H)
      .def_readwrite("rho_L", &PreferentialEnsembleSpec::rho_L)
      .def_readwrite("n_H", &PreferentialEnsembleSpec::n_H)
      .def_readwrite("n_L", &PreferentialEnsembleSpec::n_L)
      .def_readwrite("m", &PreferentialEnsembleSpec::m)
      .def_readwrite("sensing_scale_A", &PreferentialEnsembleSpec::sensing_scale_A)
      .def("check", &PreferentialEnsembleSpec::check);

  mod.def("prox_soft", &prox_soft, py::arg("u"), py::arg("t"));
  mod.def("prox_soft_deriv", &prox_soft_deriv, py::arg("u"), py::arg("t"));
  auto shrink_pair = [](ShrinkOut s) { return py::make_tuple(s.mean, s.var); };
  mod.def("h_laplacian", [shrink_pair](double mu, double v, double beta) {
    return shrink_pair(h_laplacian(mu, v, beta));
  }, py::arg("mu"), py::arg("v"), py::arg("beta"));
  mod.def("h_gaussian", [shrink_pair](double mu, double v, double pm, double t2) {
    return shrink_pair(h_gaussian(mu, v, pm, t2));
  }, py::arg("mu"), py::arg("v"), py::arg("prior_mean"), py::arg("tau2"));
  mod.def("h_general_map", [shrink_pair](const PriorModel& tab, double mu, double v) {
    return shrink_pair(h_general_map(tab, mu, v));
  }, py::arg("tabulated"), py::arg("mu"), py::arg("v"));
  mod.def("h_mmse", [shrink_pair](const PriorModel& prior, double mu, double v) {
    return shrink_pair(h_mmse(prior, mu, v));
  }, py::arg("prior"), py::arg("mu"), py::arg("v"));
  mod.def("map_regularizer_beta", &map_regularizer_beta, py::arg("prior"));

  py::enum_<DecoderMode>(mod, "DecoderMode")
      .value("MAP", DecoderMode::MAP)
      .value("MMSE", DecoderMode::MMSE);

  py::class_<DEConfig>(mod, "DEConfig")
      .def(py::init<>())
      .def_readwrite("noise_variance", &DEConfig::noise_variance)
      .def_readwrite("quadrature_order", &DEConfig::quadrature_order)
      .def_readwrite("max_iterations", &DEConfig::max_iterations)
      .def_readwrite("convergence_tolerance", &DEConfig::convergence_tolerance)
      .def_readwrite("decoder_mode", &DEConfig::decoder_mode);

  py::class_<DEStateRegular>(mod, "DEStateRegular")
      .def(py::init<>())
      .def(py::init([](double E, double V) { return DEStateRegular{E, V}; }), py::arg("E"),
           py::arg("V"))
      .def_readwrite("E", &DEStateRegular::E)
      .def_readwrite("V", &DEStateRegular::V)
      .def("__repr__", [](const DEStateRegular& s) {
        std::ostringstream os;
        os << "DEStateRegular(E=" << s.E << ", V=" << s.V << ")";
        return os.str();
      });

  py::class_<DEStatePreferential>(mod, "DEStatePreferential")
      .def(py::init<>())
      .def(py::init([](double EH, double EL, double VH, double VL) {
        return DEStatePreferential{EH, EL, VH, VL};
      }), py::arg("E_H"), py::arg("E_L"), py::arg("V_H"), py::arg("V_L"))
      .def_readwrite("E_H", &DEStatePreferential::E_H)
      .def_readwrite("E_L", &DEStatePreferential::E_L)
      .def_readwrite("V_H", &DEStatePreferential::V_H)
      .def_readwrite("V_L", &DEStatePreferential::V_L);

  mod.def("ensemble_summary", [](const GeneratingPolynomial& l, const GeneratingPolynomial& r) {
    auto s = ensemble_summary(l, r);
    return py::make_tuple(s.a1, s.a2);
  }, py::arg("lambda_"), py::arg("rho"));
  mod.def("de_step_gaussian", &de_step_gaussian, py::arg("state"), py::arg("a1"), py::arg("a2"));
  mod.def("de_step_lasso", &de_step_lasso, py::arg("state"), py::arg("a1"), py::arg("a2"),
          py::arg("beta"), py::arg("prior"));
  mod.def("de_step_regular", &de_step_regular, py::arg("state"), py::arg("spec"),
          py::arg("prior"), py::arg("config"));
  mod.def("de_step_preferential", &de_step_preferential, py::arg("state"), py::arg("spec"),
          py::arg("prior_H"), py::arg("prior_L"), py::arg("config"));

  py::class_<DETrace>(mod, "DETrace")
      .def_readonly("preferential", &DETrace::preferential)
      .def_readonly("states", &DETrace::states)
      .def_readonly("pref_states", &DETrace::pref_states)
      .def_readonly("iterations", &DETrace::iterations)
      .def_readonly("converged", &DETrace::converged)
      .def_readonly("diverged", &DETrace::diverged)
      .def("final_norm", &DETrace::final_norm)
      .def("at_zero", &DETrace::at_zero)
      .def("csv", [](const DETrace& t) {
        std::ostringstream os;
        t.write_csv(os);
        return os.str();
      });

  mod.def("de_run_regular", &de_run_regular, py::arg("spec"), py::arg("prior"),
          py::arg("config"));
  mod.def("de_run_preferential", &de_run_preferential, py::arg("spec"), py::arg("prior_H"),
          py::arg("prior_L"), py::arg("config"));

  py::class_<ConstraintEntry>(mod, "ConstraintEntry")
      .def_readonly("value", &ConstraintEntry::value)
      .def_readonly("bound", &ConstraintEntry::bound)
      .def_readonly("satisfied", &ConstraintEntry::satisfied);

  py::class_<RegularDesignProblem>(mod, "RegularDesignProblem")
      .def(py::init<>())
      .def_readwrite("n", &RegularDesignProblem::n)
      .def_readwrite("k", &RegularDesignProblem::k)
      .def_readwrite("c0", &RegularDesignProblem::c0)
      .def_readwrite("dv_max", &RegularDesignProblem::dv_max)
      .def_readwrite("dc_max", &RegularDesignProblem::dc_max)
      .def_readwrite("prior", &RegularDesignProblem::prior);

  py::class_<PreferentialDesignProblem>(mod, "PreferentialDesignProblem")
      .def(py::init<>())
      .def_readwrite("n_H", &PreferentialDesignProblem::n_H)
      .def_readwrite("n_L", &PreferentialDesignProblem::n_L)
      .def_readwrite("k_H", &PreferentialDesignProblem::k_H)
      .def_readwrite("k_L", &PreferentialDesignProblem::k_L)
      .def_readwrite("dv_max", &PreferentialDesignProblem::dv_max)
      .def_readwrite("dc_H", &PreferentialDesignProblem::dc_H)
      .def_readwrite("dc_L", &PreferentialDesignProblem::dc_L)
      .def_readwrite("beta_H", &PreferentialDesignProblem::beta_H)
      .def_readwrite("beta_L", &PreferentialDesignProblem::beta_L)
      .def_readwrite("T", &PreferentialDesignProblem::T)
      .def("ratio_warning", &PreferentialDesignProblem::ratio_warning);

  py::class_<DesignResult>(mod, "DesignResult")
      .def_readonly("preferential", &DesignResult::preferential)
      .def_readonly("lambda_", &DesignResult::lambda)
      .def_readonly("rho", &DesignResult::rho)
      .def_readonly("lambda_H", &DesignResult::lambda_H)
      .def_readonly("lambda_L", &DesignResult::lambda_L)
      .def_readonly("rho_H", &DesignResult::rho_H)
      .def_readonly("rho_L", &DesignResult::rho_L)
      .def_readonly("m", &DesignResult::m)
      .def_readonly("achieved_rate", &DesignResult::achieved_rate)
      .def_readonly("constraints", &DesignResult::constraints)
      .def_readonly("de_converged", &DesignResult::de_converged)
      .def_readonly("valid", &DesignResult::valid)
      .def_readonly("warning", &DesignResult::warning);

  mod.def("thm1_bounds", &thm1_bounds, py::arg("n"), py::arg("k"), py::arg("c0"));
  mod.def("regular_pair_feasible", &regular_pair_feasible, py::arg("problem"), py::arg("dv"),
          py::arg("dc"));
  mod.def("optimize_regular", &optimize_regular, py::arg("problem"));
  mod.def("init_preferential", &init_preferential, py::arg("problem"));
  mod.def("design_preferential", &design_preferential, py::arg("problem"));
  mod.def("retarget_mean", &retarget_mean, py::arg("poly"), py::arg("target"));
  mod.def("design_to_spec",
          py::overload_cast<const DesignResult&, long>(&design_to_spec), py::arg("result"),
          py::arg("n"));
  mod.def("design_to_spec",
          py::overload_cast<const DesignResult&, long, long>(&design_to_spec),
          py::arg("result"), py::arg("n_H"), py::arg("n_L"));

  py::class_<FactorGraph>(mod, "FactorGraph")
      .def_readonly("n", &FactorGraph::n)
      .def_readonly("m", &FactorGraph::m)
      .def_readonly("n_high", &FactorGraph::n_high)
      .def_readonly("preferential", &FactorGraph::preferential)
      .def_readonly("check_adj", &FactorGraph::check_adj)
      .def_readonly("variable_degree", &FactorGraph::variable_degree)
      .def_readonly("check_degree", &FactorGraph::check_degree)
      .def("partition", [](const FactorGraph& g, long v) { return std::string(1, g.partition(v)); })
      .def("edge_count", &FactorGraph::edge_count);

  mod.def("sample_degree_sequence", &sample_degree_sequence, py::arg("poly"), py::arg("count"),
          py::arg("seed"));
  mod.def("build_graph",
          py::overload_cast<const RegularEnsembleSpec&, uint64_t>(&build_graph), py::arg("spec"),
          py::arg("seed"));
  mod.def("build_graph",
          py::overload_cast<const PreferentialEnsembleSpec&, uint64_t>(&build_graph),
          py::arg("spec"), py::arg("seed"));

  py::class_<SparseSensingMatrix>(mod, "SparseSensingMatrix")
      .def_readonly("m", &SparseSensingMatrix::m)
      .def_readonly("n", &SparseSensingMatrix::n)
      .def_readonly("n_high", &SparseSensingMatrix::n_high)
      .def_readonly("sensing_scale_A", &SparseSensingMatrix::sensing_scale_A)
      .def_readonly("seed", &SparseSensingMatrix::seed)
      .def("magnitude", &SparseSensingMatrix::magnitude)
      .def("apply", &SparseSensingMatrix::apply, py::arg("x"))
      .def("apply_t", &SparseSensingMatrix::apply_t, py::arg("y"))
      .def("triplets", [](const SparseSensingMatrix& mat) {
        std::vector<std::tuple<int, int, int>> out;
        out.reserve(mat.triplets.size());
        for (const auto& t : mat.triplets) out.emplace_back(t.row, t.col, t.sign);
        return out;
      })
      .def("to_text", [](const SparseSensingMatrix& mat) {
        std::ostringstream os;
        mat.write_triplets(os);
        return os.str();
      });

  mod.def("graph_to_matrix", &graph_to_matrix, py::arg("graph"), py::arg("A"), py::arg("seed"));
  mod.def("read_triplets", [](const std::string& text) {
    std::istringstream is(text);
    return read_triplets(is);
  }, py::arg("text"));

  py::class_<RealizationReport>(mod, "RealizationReport")
      .def_readonly("simple", &RealizationReport::simple)
      .def_readonly("degrees_match", &RealizationReport::degrees_match)
      .def_readonly("partition_ok", &RealizationReport::partition_ok)
      .def_readonly("edge_identity", &RealizationReport::edge_identity)
      .def_readonly("edge_count", &RealizationReport::edge_count)
      .def_readonly("multi_edge_pairs", &RealizationReport::multi_edge_pairs)
      .def_readonly("detail", &RealizationReport::detail)
      .def("ok", &RealizationReport::ok);

  mod.def("check_realization",
          py::overload_cast<const FactorGraph&, const RegularEnsembleSpec&>(&check_realization),
          py::arg("graph"), py::arg("spec"));
  mod.def("check_realization",
          py::overload_cast<const FactorGraph&, const PreferentialEnsembleSpec&>(
              &check_realization),
          py::arg("graph"), py::arg("spec"));

  py::class_<DecodeConfig>(mod, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("mode", &DecodeConfig::mode)
      .def_readwrite("max_iterations", &DecodeConfig::max_iterations)
      .def_readwrite("damping", &DecodeConfig::damping)
      .def_readwrite("tolerance", &DecodeConfig::tolerance)
      .def_readwrite("noise_variance", &DecodeConfig::noise_variance);

  py::class_<DecodeResult>(mod, "DecodeResult")
      .def_readonly("estimate", &DecodeResult::estimate)
      .def_readonly("iterations", &DecodeResult::iterations)
      .def_readonly("converged", &DecodeResult::converged)
      .def_readonly("diverged", &DecodeResult::diverged)
      .def_readonly("residual_traj", &DecodeResult::residual_traj)
      .def_readonly("E_traj", &DecodeResult::E_traj)
      .def_readonly("V_traj", &DecodeResult::V_traj)
      .def_readonly("objective_traj", &DecodeResult::objective_traj);

  mod.def("decode",
          [](const std::vector<double>& y, const SparseSensingMatrix& matrix,
             const PriorModel& prior_H, const PriorModel& prior_L, const DecodeConfig& config,
             py::object truth) {
            if (truth.is_none()) return decode(y, matrix, prior_H, prior_L, config);
            auto t = truth.cast<std::vector<double>>();
            return decode(y, matrix, prior_H, prior_L, config, &t);
          },
          py::arg("y"), py::arg("matrix"), py::arg("prior_H"), py::arg("prior_L"),
          py::arg("config"), py::arg("truth") = py::none());
  mod.def("ista_baseline", &ista_baseline, py::arg("y"), py::arg("matrix"), py::arg("beta"),
          py::arg("config"));
  mod.def("error_ratios", &error_ratios, py::arg("estimate"), py::arg("truth"),
          py::arg("n_high"));

  py::class_<Mat>(mod, "Mat")
      .def(py::init<>())
      .def(py::init<long, long, double>(), py::arg("rows"), py::arg("cols"),
           py::arg("fill") = 0.0)
      .def_static("from_rows", &mat_from_rows, py::arg("rows"))
      .def_readonly("rows", &Mat::rows)
      .def_readonly("cols", &Mat::cols)
      .def_readwrite("data", &Mat::data)
      .def("to_rows", [](const Mat& m) { return mat_to_rows(m); });

  py::class_<HaarCoefficients>(mod, "HaarCoefficients")
      .def_readonly("rows", &HaarCoefficients::rows)
      .def_readonly("cols", &HaarCoefficients::cols)
      .def_readonly("levels", &HaarCoefficients::levels)
      .def_readonly("approx", &HaarCoefficients::approx);

  py::class_<PartitionedSignal>(mod, "PartitionedSignal")
      .def_readonly("signal", &PartitionedSignal::signal)
      .def_readonly("n_H", &PartitionedSignal::n_H)
      .def_readonly("n_L", &PartitionedSignal::n_L)
      .def("labels", [](const PartitionedSignal& p) {
        return std::string(p.labels.begin(), p.labels.end());
      });

  mod.def("haar2d_forward", &haar2d_forward, py::arg("image"), py::arg("levels"));
  mod.def("haar2d_inverse", &haar2d_inverse, py::arg("coeffs"));
  mod.def("partition_coefficients", &partition_coefficients, py::arg("coeffs"));
  mod.def("unpartition_coefficients", &unpartition_coefficients, py::arg("signal"),
          py::arg("rows"), py::arg("cols"), py::arg("levels"));
}
