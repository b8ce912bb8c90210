#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "syncleft/cme.hpp"
#include "syncleft/config.hpp"
#include "syncleft/harness.hpp"
#include "syncleft/mean_field.hpp"
#include "syncleft/pbs.hpp"
#include "syncleft/reference_models.hpp"

namespace py = pybind11;
using namespace syncleft;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> joint_probs_2d(const JointPmf& pmf) {
    const auto& w = pmf.window;
    py::array_t<double> arr({static_cast<py::ssize_t>(w.levels()),
                             static_cast<py::ssize_t>(w.width())});
    std::copy(pmf.probs.begin(), pmf.probs.end(), arr.mutable_data());
    return arr;
}

py::array_t<double> concentration_2d(const MeanFieldSolution& mf) {
    py::array_t<double> arr({static_cast<py::ssize_t>(mf.t_grid.size()),
                             static_cast<py::ssize_t>(mf.nx())});
    std::copy(mf.c.begin(), mf.c.end(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_syncleft, m) {
    m.doc() = "Joint neurotransmitter survival / receptor occupancy statistics of a "
              "synaptic channel: mean-field solver, adaptive CME, reference models, "
              "particle-based simulation.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::enum_<PdeScheme>(m, "PdeScheme")
        .value("CRANK_NICOLSON", PdeScheme::CrankNicolson)
        .value("EXPLICIT_EULER", PdeScheme::ExplicitEuler);

    py::enum_<Variable>(m, "Variable").value("N", Variable::N).value("O", Variable::O);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("n0", &ScenarioConfig::n0)
        .def_readwrite("receptors", &ScenarioConfig::receptors)
        .def_readwrite("kappa_a_agg", &ScenarioConfig::kappa_a_agg)
        .def_readwrite("kappa_d", &ScenarioConfig::kappa_d)
        .def_readwrite("kappa_e", &ScenarioConfig::kappa_e)
        .def_readwrite("diffusion", &ScenarioConfig::diffusion)
        .def_readwrite("cleft_width", &ScenarioConfig::cleft_width)
        .def_readwrite("epsilon", &ScenarioConfig::epsilon)
        .def_readwrite("delta_t", &ScenarioConfig::delta_t)
        .def_readwrite("horizon", &ScenarioConfig::horizon)
        .def_readwrite("nx", &ScenarioConfig::nx)
        .def_readwrite("dt_pde", &ScenarioConfig::dt_pde)
        .def_readwrite("pde_scheme", &ScenarioConfig::pde_scheme)
        .def_readwrite("ode_tol", &ScenarioConfig::ode_tol)
        .def_readwrite("sample_times", &ScenarioConfig::sample_times)
        .def("kappa_a0", &ScenarioConfig::kappa_a0)
        .def("interval_count", &ScenarioConfig::interval_count)
        .def("validate", &ScenarioConfig::validate);

    py::class_<BindingRateProfile>(m, "BindingRateProfile")
        .def_static("constant", &BindingRateProfile::constant, py::arg("rate"),
                    py::arg("horizon"))
        .def_property_readonly("t_grid",
                               [](const BindingRateProfile& p) { return to_array(p.t_grid); })
        .def_property_readonly("values",
                               [](const BindingRateProfile& p) { return to_array(p.values); })
        .def_readonly("floor_time", &BindingRateProfile::floor_time);

    py::class_<MeanFieldSolution>(m, "MeanFieldSolution")
        .def_property_readonly("t_grid",
                               [](const MeanFieldSolution& s) { return to_array(s.t_grid); })
        .def_property_readonly("x_grid",
                               [](const MeanFieldSolution& s) { return to_array(s.x_grid); })
        .def_property_readonly("c", &concentration_2d)
        .def_property_readonly("o_mean",
                               [](const MeanFieldSolution& s) { return to_array(s.o_mean); })
        .def_property_readonly("n_mean",
                               [](const MeanFieldSolution& s) { return to_array(s.n_mean); })
        .def_readonly("kappa_profile", &MeanFieldSolution::kappa_profile)
        .def("integrate_c", &MeanFieldSolution::integrate_c, py::arg("time_index"))
        .def("n_at", &MeanFieldSolution::n_at, py::arg("t"))
        .def("o_at", &MeanFieldSolution::o_at, py::arg("t"));

    py::class_<StateWindow>(m, "StateWindow")
        .def(py::init<>())
        .def_readwrite("n_min", &StateWindow::n_min)
        .def_readwrite("n_max", &StateWindow::n_max)
        .def_readwrite("o_min", &StateWindow::o_min)
        .def_readwrite("o_max", &StateWindow::o_max)
        .def_readwrite("interval_index", &StateWindow::interval_index)
        .def("size", &StateWindow::size)
        .def("contains", &StateWindow::contains, py::arg("n"), py::arg("o"));

    py::class_<JointPmf>(m, "JointPmf")
        .def_readonly("window", &JointPmf::window)
        .def_readonly("time", &JointPmf::time)
        .def_property_readonly("probs", &joint_probs_2d)
        .def("mass", &JointPmf::mass)
        .def("at", [](const JointPmf& p, int n, int o) { return p.at(n, o); }, py::arg("n"),
             py::arg("o"));

    py::class_<Moments>(m, "Moments")
        .def_readonly("mean_n", &Moments::mean_n)
        .def_readonly("var_n", &Moments::var_n)
        .def_readonly("mean_o", &Moments::mean_o)
        .def_readonly("var_o", &Moments::var_o)
        .def_readonly("cov_no", &Moments::cov_no)
        .def_readonly("mass", &Moments::mass);

    py::class_<CmeTrajectory>(m, "CmeTrajectory")
        .def_readonly("snapshots", &CmeTrajectory::snapshots)
        .def_readonly("final_full", &CmeTrajectory::final_full)
        .def("at_time", &CmeTrajectory::at_time, py::arg("t"),
             py::return_value_policy::reference_internal);

    py::class_<UnivariatePmf>(m, "UnivariatePmf")
        .def(py::init<>())
        .def_readwrite("min_value", &UnivariatePmf::min_value)
        .def_property(
            "probs", [](const UnivariatePmf& p) { return to_array(p.probs); },
            [](UnivariatePmf& p, const std::vector<double>& v) { p.probs = v; })
        .def("total", &UnivariatePmf::total)
        .def("at_value", &UnivariatePmf::at_value, py::arg("value"))
        .def("mean", &UnivariatePmf::mean)
        .def("variance", &UnivariatePmf::variance);

    py::class_<PbsConfig>(m, "PbsConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &PbsConfig::scenario)
        .def_readwrite("dt_pbs", &PbsConfig::dt_pbs)
        .def_readwrite("trials", &PbsConfig::trials)
        .def_readwrite("seed", &PbsConfig::seed)
        .def_readwrite("threads", &PbsConfig::threads)
        .def("validate", &PbsConfig::validate);

    py::class_<TrialResult>(m, "TrialResult")
        .def_readonly("n_counts", &TrialResult::n_counts)
        .def_readonly("o_counts", &TrialResult::o_counts)
        .def_readonly("boundary_contacts", &TrialResult::boundary_contacts)
        .def_readonly("clamped_contacts", &TrialResult::clamped_contacts);

    py::class_<EmpiricalDistribution>(m, "EmpiricalDistribution")
        .def_readonly("sample_times", &EmpiricalDistribution::sample_times)
        .def_readonly("n_hist", &EmpiricalDistribution::n_hist)
        .def_readonly("o_hist", &EmpiricalDistribution::o_hist)
        .def_readonly("trials", &EmpiricalDistribution::trials)
        .def("clamp_warning", &EmpiricalDistribution::clamp_warning);

    py::class_<LoadedConfig>(m, "LoadedConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &LoadedConfig::scenario)
        .def_readwrite("dt_pbs", &LoadedConfig::dt_pbs)
        .def_readwrite("trials", &LoadedConfig::trials)
        .def_readwrite("seed", &LoadedConfig::seed)
        .def_readwrite("threads", &LoadedConfig::threads)
        .def("pbs_config", &LoadedConfig::pbs_config)
        .def("validate", &LoadedConfig::validate);

    // mean field
    m.def("solve_mean_field", &solve_mean_field, py::arg("config"));
    m.def("binding_rate_profile", &binding_rate_profile, py::arg("solution"), py::arg("config"),
          py::arg("mass_floor") = -1.0);
    m.def("kappa_at", &kappa_at, py::arg("profile"), py::arg("t"));

    // cme engine
    m.def("compute_window", &compute_window, py::arg("k"), py::arg("config"),
          py::arg("meanfield"), py::arg("current_pn"), py::arg("epsilon"));
    m.def("project", &project, py::arg("pmf"), py::arg("target"));
    m.def(
        "run_adaptive",
        [](const ScenarioConfig& config, const MeanFieldSolution& mf,
           std::size_t max_window_states) {
            return run_adaptive(config, mf, AdaptiveOptions{max_window_states});
        },
        py::arg("config"), py::arg("meanfield"), py::arg("max_window_states") = 4'000'000);
    m.def("solve_full_dense", &solve_full_dense, py::arg("config"), py::arg("profile"),
          py::arg("state_cap") = 40'000);
    m.def("marginal_n", &marginal_n, py::arg("pmf"));
    m.def("marginal_o", &marginal_o, py::arg("pmf"));
    m.def("moments", &moments, py::arg("pmf"));

    // reference models
    m.def("binomial_pmf", &binomial_pmf, py::arg("k"), py::arg("n"), py::arg("p"));
    m.def("binomial_cdf", &binomial_cdf, py::arg("k"), py::arg("n"), py::arg("p"));
    m.def("binomial_distribution", &binomial_distribution, py::arg("n"), py::arg("p"));
    m.def("occupancy_model", &occupancy_model, py::arg("meanfield"), py::arg("config"),
          py::arg("t"));
    m.def("survival_model", &survival_model, py::arg("meanfield"), py::arg("config"),
          py::arg("t"));

    // pbs
    m.def("derive_trial_seed", &derive_trial_seed, py::arg("master_seed"),
          py::arg("trial_index"));
    m.def("run_trial", &run_trial, py::arg("config"), py::arg("trial_seed"));
    m.def("run_ensemble", &run_ensemble, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("empirical_pmf", &empirical_pmf, py::arg("dist"), py::arg("t"), py::arg("variable"));

    // harness
    m.def("preset", &preset, py::arg("name"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def("config_hash", &config_hash, py::arg("config"));
    m.def("tvd", &tvd, py::arg("p"), py::arg("q"));
    m.def("expected_sampling_tvd", &expected_sampling_tvd, py::arg("pmf"), py::arg("trials"));
    m.def(
        "run_scenario",
        [](const LoadedConfig& config, const std::filesystem::path& out_dir, bool with_pbs,
           bool write_plot_data, std::size_t max_window_states) {
            RunOptions options;
            options.out_dir = out_dir;
            options.with_pbs = with_pbs;
            options.write_plot_data = write_plot_data;
            options.max_window_states = max_window_states;
            py::gil_scoped_release release;
            return run_scenario(config, options);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("with_pbs") = true,
        py::arg("write_plot_data") = true, py::arg("max_window_states") = 4'000'000);

    py::class_<TvdEntry>(m, "TvdEntry")
        .def_readonly("t_us", &TvdEntry::t_us)
        .def_readonly("variable", &TvdEntry::variable)
        .def_readonly("model_a", &TvdEntry::model_a)
        .def_readonly("model_b", &TvdEntry::model_b)
        .def_readonly("value", &TvdEntry::value);

    py::class_<MomentEntry>(m, "MomentEntry")
        .def_readonly("t_us", &MomentEntry::t_us)
        .def_readonly("variable", &MomentEntry::variable)
        .def_readonly("model", &MomentEntry::model)
        .def_readonly("mean", &MomentEntry::mean)
        .def_readonly("variance", &MomentEntry::variance);

    py::class_<ComparisonReport>(m, "ComparisonReport")
        .def_readonly("config_hash", &ComparisonReport::config_hash)
        .def_readonly("sample_times", &ComparisonReport::sample_times)
        .def_readonly("mass_deficit_final", &ComparisonReport::mass_deficit_final)
        .def_readonly("tvds", &ComparisonReport::tvds)
        .def_readonly("moment_table", &ComparisonReport::moment_table)
        .def_readonly("runtime_seconds", &ComparisonReport::runtime_seconds)
        .def_readonly("pbs_clamp_warning", &ComparisonReport::pbs_clamp_warning);
}
