#include "syncleft/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "syncleft/detail/format.hpp"

namespace syncleft {

namespace {

using detail::format_dec;
using detail::format_sci;

const char* variable_name(Variable v) { return v == Variable::N ? "N" : "O"; }

std::string canonical_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string canonical_config(const LoadedConfig& cfg) {
    const ScenarioConfig& s = cfg.scenario;
    std::ostringstream out;
    out << "N0=" << s.n0 << ";C=" << s.receptors
        << ";kappa_a_agg=" << canonical_double(s.kappa_a_agg)
        << ";kappa_d=" << canonical_double(s.kappa_d)
        << ";kappa_e=" << canonical_double(s.kappa_e) << ";D=" << canonical_double(s.diffusion)
        << ";a=" << canonical_double(s.cleft_width)
        << ";epsilon=" << canonical_double(s.epsilon)
        << ";delta_t=" << canonical_double(s.delta_t)
        << ";horizon=" << canonical_double(s.horizon) << ";nx=" << s.nx
        << ";dt_pde=" << canonical_double(s.dt_pde)
        << ";scheme=" << (s.pde_scheme == PdeScheme::CrankNicolson ? "cn" : "explicit")
        << ";ode_tol=" << canonical_double(s.ode_tol) << ";sample_times=";
    for (double t : s.sample_times) out << canonical_double(t) << ",";
    out << ";dt_pbs=" << canonical_double(cfg.dt_pbs) << ";trials=" << cfg.trials
        << ";seed=" << cfg.seed;
    return out.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot open output file " + path.string());
    return out;
}

void write_meanfield_csv(const MeanFieldSolution& mf, const std::filesystem::path& dir) {
    auto out = open_output(dir / "meanfield.csv");
    out << "t_us,c_at_a_per_um,n_mean,o_mean,kappa_a_per_us\n";
    for (std::size_t ti = 0; ti < mf.t_grid.size(); ++ti) {
        const double kappa = mf.kappa_profile.values.empty() ? 0.0 : mf.kappa_profile.values[ti];
        out << format_dec(mf.t_grid[ti]) << ',' << format_dec(mf.c_boundary(ti)) << ','
            << format_dec(mf.n_mean[ti]) << ',' << format_dec(mf.o_mean[ti]) << ','
            << format_dec(kappa) << '\n';
    }
}

void write_cme_csvs(const ScenarioConfig& config, const CmeTrajectory& traj,
                    const std::filesystem::path& dir) {
    {
        auto out = open_output(dir / "cme_pmf.csv");
        out << "t_us,n,o,prob\n";
        for (double t : config.sample_times) {
            const JointPmf& pmf = traj.at_time(std::min(t, config.horizon));
            for (int n = pmf.window.n_min; n <= pmf.window.n_max; ++n)
                for (int o = pmf.window.o_min; o <= pmf.window.o_max; ++o)
                    out << format_sci(pmf.time) << ',' << n << ',' << o << ','
                        << format_sci(pmf.at(n, o)) << '\n';
        }
    }
    {
        auto out = open_output(dir / "cme_marginals.csv");
        out << "t_us,variable,value,prob\n";
        for (double t : config.sample_times) {
            const JointPmf& pmf = traj.at_time(std::min(t, config.horizon));
            const std::vector<double> pn = marginal_n(pmf);
            const std::vector<double> po = marginal_o(pmf);
            for (std::size_t n = 0; n < pn.size(); ++n)
                out << format_sci(pmf.time) << ",N," << n << ',' << format_sci(pn[n]) << '\n';
            for (std::size_t o = 0; o < po.size(); ++o)
                out << format_sci(pmf.time) << ",O," << o << ',' << format_sci(po[o]) << '\n';
        }
    }
    {
        auto out = open_output(dir / "cme_moments.csv");
        out << "t_us,mean_n,var_n,mean_o,var_o,cov_no,mass\n";
        for (const JointPmf& pmf : traj.snapshots) {
            const Moments m = moments(pmf);
            out << format_sci(pmf.time) << ',' << format_sci(m.mean_n) << ','
                << format_sci(m.var_n) << ',' << format_sci(m.mean_o) << ','
                << format_sci(m.var_o) << ',' << format_sci(m.cov_no) << ','
                << format_sci(m.mass) << '\n';
        }
    }
}

void write_reference_csv(const ScenarioConfig& config, const MeanFieldSolution& mf,
                         const std::filesystem::path& dir) {
    auto out = open_output(dir / "reference_models.csv");
    out << "t_us,model,variable,value,prob\n";
    for (double t : config.sample_times) {
        const double tc = std::min(t, config.horizon);
        const UnivariatePmf survival = survival_model(mf, config, tc);
        for (std::size_t n = 0; n < survival.probs.size(); ++n)
            out << format_sci(tc) << ",binomial_N,N," << n << ',' << format_sci(survival.probs[n])
                << '\n';
        if (config.receptors > 0) {
            const UnivariatePmf occupancy = occupancy_model(mf, config, tc);
            for (std::size_t o = 0; o < occupancy.probs.size(); ++o)
                out << format_sci(tc) << ",binomial_O,O," << o << ','
                    << format_sci(occupancy.probs[o]) << '\n';
        }
    }
}

void write_pbs_csv(const EmpiricalDistribution& dist, const std::filesystem::path& dir) {
    auto out = open_output(dir / "pbs_hist.csv");
    out << "t_us,variable,value,count,trials\n";
    for (std::size_t ti = 0; ti < dist.sample_times.size(); ++ti) {
        for (std::size_t v = 0; v < dist.n_hist[ti].size(); ++v)
            if (dist.n_hist[ti][v] > 0)
                out << format_sci(dist.sample_times[ti]) << ",N," << v << ','
                    << dist.n_hist[ti][v] << ',' << dist.trials << '\n';
        for (std::size_t v = 0; v < dist.o_hist[ti].size(); ++v)
            if (dist.o_hist[ti][v] > 0)
                out << format_sci(dist.sample_times[ti]) << ",O," << v << ','
                    << dist.o_hist[ti][v] << ',' << dist.trials << '\n';
    }
}

UnivariatePmf normalized(UnivariatePmf pmf) {
    const double mass = pmf.total();
    if (mass > 0.0)
        for (double& p : pmf.probs) p /= mass;
    return pmf;
}

double parse_double(const std::string& text, const std::string& where) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(where, "cannot parse number from '" + text + "'");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos != text.size()) throw ConfigError(where, "trailing characters in '" + text + "'");
    return v;
}

long long parse_integer(const std::string& text, const std::string& where) {
    const double v = parse_double(text, where);
    const long long i = static_cast<long long>(std::llround(v));
    if (std::fabs(v - static_cast<double>(i)) > 1e-9)
        throw ConfigError(where, "expected an integer, got '" + text + "'");
    return i;
}

std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

}  // namespace

PbsConfig LoadedConfig::pbs_config() const {
    PbsConfig pbs;
    pbs.scenario = scenario;
    pbs.dt_pbs = dt_pbs;
    pbs.trials = trials;
    pbs.seed = seed;
    pbs.threads = threads;
    return pbs;
}

void LoadedConfig::validate() const { pbs_config().validate(); }

LoadedConfig preset(std::string_view name) {
    LoadedConfig cfg;  // defaults carry the documented geometry assumptions
    ScenarioConfig& s = cfg.scenario;
    if (name == "S0") {
        s.n0 = 1000;
        s.receptors = 203;
        s.kappa_a_agg = 1.52e-5;
        s.kappa_e = 1e-3;
    } else if (name == "S1") {
        s.n0 = 1000;
        s.receptors = 600;
        s.kappa_a_agg = 4.48e-3;
        s.kappa_e = 1e-3;
    } else if (name == "S2") {
        s.n0 = 250;
        s.receptors = 600;
        s.kappa_a_agg = 4.48e-4;
        s.kappa_e = 1e-5;
    } else {
        throw ConfigError("preset", "unknown preset '" + std::string(name) +
                                        "' (expected S0, S1 or S2)");
    }
    s.epsilon = 1e-6;
    s.delta_t = 50.0;
    return cfg;
}

void parse_config_file(const std::filesystem::path& path, LoadedConfig& base,
                       bool warn_missing_geometry) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());

    bool saw_d = false, saw_a = false, saw_kd = false;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scenario" && section != "pde" && section != "cme" &&
                section != "pbs")
                throw ConfigError(where, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;

        ScenarioConfig& s = base.scenario;
        if (section == "scenario") {
            if (key == "N0")
                s.n0 = static_cast<int>(parse_integer(value, field));
            else if (key == "C")
                s.receptors = static_cast<int>(parse_integer(value, field));
            else if (key == "kappa_a_agg")
                s.kappa_a_agg = parse_double(value, field);
            else if (key == "kappa_d") {
                s.kappa_d = parse_double(value, field);
                saw_kd = true;
            } else if (key == "kappa_e")
                s.kappa_e = parse_double(value, field);
            else if (key == "D") {
                s.diffusion = parse_double(value, field);
                saw_d = true;
            } else if (key == "a") {
                s.cleft_width = parse_double(value, field);
                saw_a = true;
            } else
                throw ConfigError(where, "unknown key '" + key + "' in [scenario]");
        } else if (section == "pde") {
            if (key == "nx")
                s.nx = static_cast<int>(parse_integer(value, field));
            else if (key == "dt_pde")
                s.dt_pde = parse_double(value, field);
            else if (key == "scheme") {
                if (value == "cn")
                    s.pde_scheme = PdeScheme::CrankNicolson;
                else if (value == "explicit")
                    s.pde_scheme = PdeScheme::ExplicitEuler;
                else
                    throw ConfigError(where, "scheme must be 'cn' or 'explicit'");
            } else
                throw ConfigError(where, "unknown key '" + key + "' in [pde]");
        } else if (section == "cme") {
            if (key == "epsilon")
                s.epsilon = parse_double(value, field);
            else if (key == "delta_t")
                s.delta_t = parse_double(value, field);
            else if (key == "horizon")
                s.horizon = parse_double(value, field);
            else if (key == "ode_tol")
                s.ode_tol = parse_double(value, field);
            else if (key == "sample_times") {
                std::vector<double> times;
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ','))
                    times.push_back(parse_double(trim(item), field));
                s.sample_times = std::move(times);
            } else
                throw ConfigError(where, "unknown key '" + key + "' in [cme]");
        } else if (section == "pbs") {
            if (key == "dt_pbs")
                base.dt_pbs = parse_double(value, field);
            else if (key == "trials")
                base.trials = static_cast<int>(parse_integer(value, field));
            else if (key == "seed")
                base.seed = static_cast<std::uint64_t>(parse_integer(value, field));
            else if (key == "threads")
                base.threads = static_cast<int>(parse_integer(value, field));
            else
                throw ConfigError(where, "unknown key '" + key + "' in [pbs]");
        } else {
            throw ConfigError(where, "key '" + key + "' outside any section");
        }
    }

    if (warn_missing_geometry) {
        if (!saw_d)
            std::cerr << "note: [scenario] D not set; using default "
                      << base.scenario.diffusion << " um^2/us (assumption)\n";
        if (!saw_a)
            std::cerr << "note: [scenario] a not set; using default " << base.scenario.cleft_width
                      << " um (assumption)\n";
        if (!saw_kd)
            std::cerr << "note: [scenario] kappa_d not set; using default "
                      << base.scenario.kappa_d << " 1/us (assumption)\n";
    }
}

LoadedConfig load_config(const std::filesystem::path& path) {
    LoadedConfig cfg;
    parse_config_file(path, cfg, /*warn_missing_geometry=*/true);
    cfg.validate();
    return cfg;
}

std::string config_hash(const LoadedConfig& config) {
    const std::string canon = canonical_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double tvd(const UnivariatePmf& p, const UnivariatePmf& q) {
    const int lo = std::min(p.min_value, q.min_value);
    const int hi = std::max(p.max_value(), q.max_value());
    double sum = 0.0;
    for (int v = lo; v <= hi; ++v) sum += std::fabs(p.at_value(v) - q.at_value(v));
    return 0.5 * sum;
}

double expected_sampling_tvd(const UnivariatePmf& pmf, int trials) {
    if (trials < 1) throw std::invalid_argument("expected_sampling_tvd: trials must be >= 1");
    const UnivariatePmf norm = normalized(pmf);
    double sum = 0.0;
    for (double p : norm.probs) sum += std::sqrt(std::max(0.0, p * (1.0 - p)) / trials);
    return 0.5 * sum;
}

MeanFieldSolution run_mean_field_stage(const ScenarioConfig& config,
                                       const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    MeanFieldSolution mf = solve_mean_field(config);
    write_meanfield_csv(mf, out_dir);
    return mf;
}

CmeTrajectory run_cme_stage(const ScenarioConfig& config, const MeanFieldSolution& meanfield,
                            const std::filesystem::path& out_dir,
                            std::size_t max_window_states) {
    std::filesystem::create_directories(out_dir);
    AdaptiveOptions opts;
    opts.max_window_states = max_window_states;
    CmeTrajectory traj = run_adaptive(config, meanfield, opts);
    write_cme_csvs(config, traj, out_dir);
    return traj;
}

EmpiricalDistribution run_pbs_stage(const LoadedConfig& config,
                                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    EmpiricalDistribution dist = run_ensemble(config.pbs_config());
    if (dist.clamp_warning())
        std::cerr << "warning: binding probability clamped on "
                  << dist.clamped_contacts << " of " << dist.boundary_contacts
                  << " boundary contacts; reduce dt_pbs\n";
    write_pbs_csv(dist, out_dir);
    return dist;
}

ComparisonReport run_scenario(const LoadedConfig& config, const RunOptions& options) {
    config.validate();
    std::filesystem::create_directories(options.out_dir);
    const ScenarioConfig& sc = config.scenario;

    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point start) {
        return std::chrono::duration<double>(clock::now() - start).count();
    };

    ComparisonReport report;
    report.config_hash = config_hash(config);
    for (double t : sc.sample_times) report.sample_times.push_back(std::min(t, sc.horizon));

    // PBS depends only on the config; run it alongside the deterministic stages.
    std::future<EmpiricalDistribution> pbs_future;
    auto t_pbs_start = clock::now();
    if (options.with_pbs)
        pbs_future = std::async(std::launch::async,
                                [&config] { return run_ensemble(config.pbs_config()); });

    auto t_stage = clock::now();
    const MeanFieldSolution mf = run_mean_field_stage(sc, options.out_dir);
    report.runtime_seconds["mean_field"] = seconds_since(t_stage);

    t_stage = clock::now();
    const CmeTrajectory traj =
        run_cme_stage(sc, mf, options.out_dir, options.max_window_states);
    report.runtime_seconds["cme"] = seconds_since(t_stage);

    write_reference_csv(sc, mf, options.out_dir);
    report.mass_deficit_final = 1.0 - traj.final_full.mass();

    EmpiricalDistribution pbs;
    if (options.with_pbs) {
        pbs = pbs_future.get();
        report.runtime_seconds["pbs"] = seconds_since(t_pbs_start);
        report.pbs_clamp_warning = pbs.clamp_warning();
        if (report.pbs_clamp_warning)
            std::cerr << "warning: binding probability clamped on " << pbs.clamped_contacts
                      << " of " << pbs.boundary_contacts
                      << " boundary contacts; reduce dt_pbs\n";
        write_pbs_csv(pbs, options.out_dir);
    }

    for (double t : report.sample_times) {
        const JointPmf& joint = traj.at_time(t);
        for (Variable var : {Variable::N, Variable::O}) {
            UnivariatePmf cme_pmf;
            cme_pmf.min_value = 0;
            cme_pmf.probs = var == Variable::N ? marginal_n(joint) : marginal_o(joint);

            UnivariatePmf reference = var == Variable::N ? survival_model(mf, sc, t)
                                                         : occupancy_model(mf, sc, t);

            report.series.push_back({t, var, "cme", cme_pmf});
            report.series.push_back({t, var, "binomial", reference});

            report.tvds.push_back({t, var, "cme", "cme", tvd(cme_pmf, cme_pmf)});
            report.moment_table.push_back(
                {t, var, "cme", cme_pmf.mean(), cme_pmf.variance()});
            report.moment_table.push_back(
                {t, var, "binomial", reference.mean(), reference.variance()});

            if (options.with_pbs) {
                const UnivariatePmf empirical = empirical_pmf(pbs, t, var);
                report.series.push_back({t, var, "pbs", empirical});
                report.tvds.push_back({t, var, "cme", "pbs", tvd(cme_pmf, empirical)});
                report.tvds.push_back({t, var, "binomial", "pbs", tvd(reference, empirical)});
                report.moment_table.push_back(
                    {t, var, "pbs", empirical.mean(), empirical.variance()});
                report.sampling_noise.push_back(
                    {t, var, expected_sampling_tvd(cme_pmf, config.trials)});
            }
        }
    }

    // report.json: deterministic payload. runtime.json: wall-clock timings,
    // the one output that differs between runs.
    nlohmann::json doc;
    doc["config_hash"] = report.config_hash;
    doc["canonical_config"] = canonical_config(config);
    doc["mass_deficit_final"] = report.mass_deficit_final;
    doc["sample_times_us"] = report.sample_times;
    doc["pbs_clamp_warning"] = report.pbs_clamp_warning;
    doc["hypergeometric_model"] = "unavailable";
    nlohmann::json tvds = nlohmann::json::array();
    for (const TvdEntry& e : report.tvds)
        tvds.push_back({{"t_us", e.t_us},
                        {"variable", variable_name(e.variable)},
                        {"model_a", e.model_a},
                        {"model_b", e.model_b},
                        {"tvd", e.value}});
    doc["tvd"] = tvds;
    nlohmann::json momentsj = nlohmann::json::array();
    for (const MomentEntry& e : report.moment_table)
        momentsj.push_back({{"t_us", e.t_us},
                            {"variable", variable_name(e.variable)},
                            {"model", e.model},
                            {"mean", e.mean},
                            {"variance", e.variance}});
    doc["moments"] = momentsj;
    nlohmann::json noise = nlohmann::json::array();
    for (const NoiseEntry& e : report.sampling_noise)
        noise.push_back({{"t_us", e.t_us},
                         {"variable", variable_name(e.variable)},
                         {"expected_tvd", e.expected_tvd}});
    doc["pbs_sampling_noise"] = noise;
    open_output(options.out_dir / "report.json") << doc.dump(2) << '\n';

    nlohmann::json runtime;
    for (const auto& [stage, secs] : report.runtime_seconds) runtime[stage] = secs;
    open_output(options.out_dir / "runtime.json") << runtime.dump(2) << '\n';

    if (options.write_plot_data) emit_plot_data(report, options.out_dir / "plot_data.csv");
    return report;
}

void emit_plot_data(const ComparisonReport& report, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    auto out = open_output(path);
    out << "series,variable,t_us,value,prob\n";
    for (const SeriesEntry& s : report.series) {
        for (std::size_t i = 0; i < s.pmf.probs.size(); ++i)
            out << s.model << ',' << variable_name(s.variable) << ',' << format_sci(s.t_us)
                << ',' << (s.pmf.min_value + static_cast<int>(i)) << ','
                << format_sci(s.pmf.probs[i]) << '\n';
    }
}

}  // namespace syncleft
