// dduq: command-line driver for deterministic runs, ensembles and chaos surrogates.
//
// Exit codes: 0 ok, 2 configuration error, 3 solver failure, 4 partial ensemble failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dduq/ensemble.hpp"
#include "dduq/errors.hpp"
#include "dduq/gpc.hpp"
#include "dduq/io/config.hpp"
#include "dduq/io/pipeline.hpp"
#include "dduq/io/surrogate_io.hpp"
#include "dduq/io/vtk.hpp"
#include "dduq/mms.hpp"
#include "dduq/random_fields.hpp"

namespace fs = std::filesystem;
using namespace dduq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitPartial = 4;

struct CommonFlags {
    std::string config;
    std::optional<int> workers;
    bool resume = false;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
};

io::RunConfig load(const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("--config is required for this subcommand");
    io::RunConfig c = io::load_config(f.config);
    if (f.workers) c.workers = *f.workers;
    if (f.resume) c.resume = true;
    if (f.output) c.directory = *f.output;
    if (f.seed) c.seed = *f.seed;
    c.validate();
    return c;
}

bool wants(const io::RunConfig& c, const std::string& fmt) {
    return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

std::string threshold_name(const std::string& prefix, double th) {
    std::ostringstream os;
    os << prefix << th;
    return os.str();
}

void log_err(const std::string& m) { std::cerr << m << '\n'; }

int run_deterministic(const CommonFlags& f) {
    const auto cfg = load(f);
    const auto grids = io::make_grids(cfg);
    const auto problem = io::make_problem(cfg, grids);
    const auto& fine = grids.front();
    const fs::path out(cfg.directory);
    fs::create_directories(out);

    ScenarioSpec spec{std::vector<double>(cfg.dim_theta, 0.0), 1.0, 0, problem_hash(problem)};
    std::ofstream log(out / "convergence.log");
    const auto res = run_scenario(spec, problem, [&](const StepReport& r, const FieldState&) {
        log << format_step_log(r) << '\n';
    });
    if (!res.ok()) {
        std::cerr << "run-deterministic: solver failure: " << res.reason << '\n';
        return kExitSolver;
    }
    const auto coeff = coefficient_fields(problem.field, fine, spec.theta, problem.params);
    for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
        const int step = cfg.snapshot_steps[s];
        if (wants(cfg, "vtk")) {
            auto d = io::vtk_data(fine);
            d.fields = {{"c", res.snapshots[s].c}, {"p", res.snapshots[s].p}, {"phi", coeff.phi}, {"K", coeff.K}};
            io::write_vtk(out / ("deterministic_step" + std::to_string(step) + ".vtk"), d,
                          "deterministic t=" + io::format_double(res.snapshot_times[s]) + " s");
        }
    }
    if (wants(cfg, "csv") && !cfg.probes.empty()) {
        io::CsvWriter csv(out / "probes.csv");
        csv.header({"time_s", "probe", "vertex", "c", "p"});
        for (std::size_t s = 0; s < res.snapshots.size(); ++s)
            for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
                const auto v = io::nearest_vertex(fine, cfg.probes[k]);
                csv.row(res.snapshot_times[s], k, v, res.snapshots[s].c[v], res.snapshots[s].p[v]);
            }
    }
    std::cout << "run-deterministic: " << res.snapshots.size() << " snapshots written to " << out.string() << '\n';
    return kExitOk;
}

void write_stats(const io::RunConfig& cfg, const StructuredGrid& fine, const StatisticsFields& st,
                 const std::string& prefix) {
    const fs::path out(cfg.directory);
    for (std::size_t t = 0; t < st.mean.size(); ++t) {
        const int step = cfg.snapshot_steps[t];
        if (wants(cfg, "vtk")) {
            auto d = io::vtk_data(fine);
            d.fields = {{"mean_c", st.mean[t]}, {"var_c", st.variance[t]}};
            for (std::size_t h = 0; h < st.thresholds.size(); ++h)
                d.fields.push_back({threshold_name("exceed_c_", st.thresholds[h]), st.exceedance[h][t]});
            io::write_vtk(out / (prefix + "_step" + std::to_string(step) + ".vtk"), d,
                          prefix + " statistics t=" + io::format_double(st.snapshot_times[t]) + " s");
        }
    }
    if (wants(cfg, "csv") && !cfg.probes.empty()) {
        io::CsvWriter csv(out / (prefix + "_probes.csv"));
        std::vector<std::string> head{"time_s", "probe", "vertex", "mean_c", "var_c"};
        for (double th : st.thresholds) head.push_back(threshold_name("exceed_c_", th));
        csv.header(head);
        for (std::size_t t = 0; t < st.mean.size(); ++t)
            for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
                const auto v = io::nearest_vertex(fine, cfg.probes[k]);
                std::vector<double> row{st.snapshot_times[t], double(k), double(v), st.mean[t][v], st.variance[t][v]};
                for (std::size_t h = 0; h < st.thresholds.size(); ++h) row.push_back(st.exceedance[h][t][v]);
                csv.row_values(row);
            }
    }
}

struct EnsembleOutcome {
    QuadratureRule rule;
    EnsembleRun run;
};

EnsembleOutcome execute_ensemble(const io::RunConfig& cfg, const ScenarioProblem& problem) {
    EnsembleOutcome o;
    o.rule = io::make_rule(cfg);
    const auto specs = specs_from_rule(o.rule, problem_hash(problem));
    EnsembleOptions opt;
    opt.workers = cfg.workers;
    opt.resume = cfg.resume;
    opt.output_dir = fs::path(cfg.directory) / "scenarios";
    opt.policy = io::ensemble_policy(cfg);
    opt.log = log_err;
    o.run = run_ensemble(specs, problem, opt);
    std::cerr << "ensemble: " << o.run.results.size() << " scenarios, " << o.run.computed << " computed, "
              << o.run.loaded << " resumed, " << o.run.failed << " not ok\n";
    return o;
}

StatsOptions stats_options(const io::RunConfig& cfg, bool skip) {
    StatsOptions so;
    so.thresholds = cfg.thresholds;
    so.skip_failed = skip;
    so.log = log_err;
    return so;
}

int run_ensemble_cmd(const CommonFlags& f) {
    const auto cfg = load(f);
    const auto grids = io::make_grids(cfg);
    const auto problem = io::make_problem(cfg, grids);
    const auto o = execute_ensemble(cfg, problem);
    const bool partial = o.run.failed > 0;
    if (partial && cfg.failure_policy != io::PolicyKind::SkipReweight) {
        std::cerr << "run-ensemble: " << o.run.failed << " scenarios did not complete; statistics not written\n";
        return kExitPartial;
    }
    const auto st = weighted_stats(o.run.results, o.rule.weights, stats_options(cfg, partial));
    write_stats(cfg, grids.front(), st, "stats");
    std::cout << "run-ensemble: statistics over " << st.n_effective << " scenarios written to " << cfg.directory << '\n';
    return partial ? kExitPartial : kExitOk;
}

int stats_cmd(const CommonFlags& f) {
    const auto cfg = load(f);
    const auto grids = io::make_grids(cfg);
    const auto problem = io::make_problem(cfg, grids);
    const auto rule = io::make_rule(cfg);
    const auto specs = specs_from_rule(rule, problem_hash(problem));
    const fs::path dir = fs::path(cfg.directory) / "scenarios";
    std::vector<ScenarioResult> results;
    std::size_t missing = 0;
    for (const auto& s : specs) {
        const auto path = scenario_path(dir, s.scenario_id);
        ScenarioResult r;
        r.scenario_id = s.scenario_id;
        if (fs::exists(path)) {
            r = load_scenario(path);
            if (r.config_hash != s.config_hash || r.theta != s.theta) {
                r.status = ScenarioStatus::Skipped;
                r.reason = "stale file (config hash or theta differ)";
            }
        } else {
            r.reason = "missing file";
        }
        missing += !r.ok();
        results.push_back(std::move(r));
    }
    if (missing > 0 && cfg.failure_policy != io::PolicyKind::SkipReweight) {
        std::cerr << "stats: " << missing << " of " << specs.size() << " scenarios unavailable\n";
        return kExitPartial;
    }
    const auto st = weighted_stats(results, rule.weights, stats_options(cfg, missing > 0));
    write_stats(cfg, grids.front(), st, "stats");
    std::cout << "stats: statistics over " << st.n_effective << " scenarios written to " << cfg.directory << '\n';
    return missing > 0 ? kExitPartial : kExitOk;
}

int gpc_build(const CommonFlags& f) {
    const auto cfg = load(f);
    if (cfg.method != io::Method::Gpc) throw ConfigError("method.kind: gpc-build requires kind = gpc");
    const auto grids = io::make_grids(cfg);
    const auto problem = io::make_problem(cfg, grids);
    const auto set = io::make_index_set(cfg);
    const auto o = execute_ensemble(cfg, problem);
    if (o.run.failed > 0) {
        std::cerr << "gpc-build: " << o.run.failed << " scenarios did not complete; projection needs every node\n";
        return kExitPartial;
    }
    std::vector<SnapshotFields> samples;
    for (const auto& r : o.run.results) {
        SnapshotFields sf;
        for (const auto& s : r.snapshots) sf.push_back(s.c);
        samples.push_back(std::move(sf));
    }
    const auto sur = project(samples, o.rule, set, problem.snapshot_times(), cfg.threads);
    const fs::path out(cfg.directory);
    io::save_surrogate(out / "surrogate.bin", sur, grids.front());
    for (std::size_t t = 0; t < sur.num_times(); ++t) {
        if (!wants(cfg, "vtk")) break;
        auto d = io::vtk_data(grids.front());
        d.fields = {{"mean_c", surrogate_mean(sur, t)}, {"var_c", surrogate_variance(sur, t)}};
        io::write_vtk(out / ("gpc_step" + std::to_string(cfg.snapshot_steps[t]) + ".vtk"), d,
                      "gpc moments t=" + io::format_double(sur.snapshot_times[t]) + " s");
    }
    std::cout << "gpc-build: " << set.size() << " coefficients from " << o.rule.size() << " nodes written to "
              << (out / "surrogate.bin").string() << '\n';
    return kExitOk;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + tok + "'");
        }
    }
    return v;
}

struct EvalFlags {
    std::string surrogate;
    std::string theta;
    std::string probe;
    std::string thresholds;
    std::string quantiles = "0.05,0.5,0.95";
    std::size_t samples = 1000000;
    int time_index = -1;  ///< -1: every snapshot
};

int gpc_eval(const CommonFlags& f, const EvalFlags& e) {
    const fs::path out = f.output ? fs::path(*f.output) : fs::path("out");
    const fs::path path = e.surrogate.empty() ? out / "surrogate.bin" : fs::path(e.surrogate);
    const auto stored = io::load_surrogate(path);
    const auto& s = stored.surrogate;
    const StructuredGrid grid(stored.domain, stored.n, 0);
    if (grid.num_vertices() != s.field_size) throw ConfigError("surrogate: field size does not match its grid");
    if (e.theta.empty() == e.probe.empty()) throw ConfigError("gpc-eval: give exactly one of --theta or --probe");
    std::vector<std::size_t> times;
    if (e.time_index >= 0) {
        if (static_cast<std::size_t>(e.time_index) >= s.num_times()) throw ConfigError("gpc-eval: --time-index out of range");
        times.push_back(e.time_index);
    } else {
        for (std::size_t t = 0; t < s.num_times(); ++t) times.push_back(t);
    }
    fs::create_directories(out);
    if (!e.theta.empty()) {
        const auto theta = parse_list(e.theta);
        if (static_cast<int>(theta.size()) != s.index_set.dim)
            throw ConfigError("gpc-eval: --theta needs " + std::to_string(s.index_set.dim) + " values");
        for (double t : theta)
            if (t < -1.0 || t > 1.0) throw ConfigError("gpc-eval: theta components must lie in [-1,1]");
        auto d = io::vtk_data(grid);
        for (auto t : times) d.fields.push_back({"c_t" + std::to_string(t), surrogate_eval(s, theta, t)});
        io::write_vtk(out / "gpc_eval.vtk", d, "gpc evaluation");
        std::cout << "gpc-eval: wrote " << (out / "gpc_eval.vtk").string() << '\n';
        return kExitOk;
    }
    const auto px = parse_list(e.probe);
    if (static_cast<int>(px.size()) != grid.dim()) throw ConfigError("gpc-eval: --probe needs dim coordinates");
    const auto v = io::nearest_vertex(grid, px);
    const auto thresholds = parse_list(e.thresholds);
    const auto quantiles = parse_list(e.quantiles);
    const std::uint64_t seed = f.seed.value_or(42);
    io::CsvWriter csv(out / "gpc_probe_stats.csv");
    csv.header({"time_s", "kind", "x", "value"});
    for (auto t : times) {
        const auto st = surrogate_sample_stats(s, t, v, e.samples, thresholds, quantiles, seed);
        for (std::size_t k = 0; k < thresholds.size(); ++k)
            csv.row(s.snapshot_times[t], "exceedance", thresholds[k], st.exceedance[k]);
        for (std::size_t k = 0; k < quantiles.size(); ++k)
            csv.row(s.snapshot_times[t], "quantile", quantiles[k], st.quantiles[k]);
        for (std::size_t b = 0; b < st.histogram_density.size(); ++b)
            csv.row(s.snapshot_times[t], "pdf", 0.5 * (st.histogram_edges[b] + st.histogram_edges[b + 1]),
                    st.histogram_density[b]);
        csv.row(s.snapshot_times[t], "mean", 0, st.sample_mean);
        csv.row(s.snapshot_times[t], "variance", 0, st.sample_variance);
    }
    std::cout << "gpc-eval: wrote " << (out / "gpc_probe_stats.csv").string() << " (vertex " << v << ")\n";
    return kExitOk;
}

struct CompareFlags {
    std::string a, b;
    std::string field = "c";
    std::string isovalues = "0.05";
};

int compare_cmd(const CommonFlags& f, const CompareFlags& c) {
    const auto da = io::read_vtk(c.a);
    const auto db = io::read_vtk(c.b);
    if (da.axes != db.axes) throw ConfigError("compare: files are on different grids");
    const auto& fa = da.field(c.field);
    const auto& fb = db.field(c.field);
    std::ostringstream os;
    os << std::setprecision(17) << "field,isovalue,l2_rel,max_abs,jaccard\n";
    for (double iso : parse_list(c.isovalues)) {
        const auto m = compare_fields(fa, fb, iso);
        os << c.field << ',' << iso << ',' << m.l2_rel << ',' << m.max_abs << ',' << m.jaccard << '\n';
    }
    if (f.output) {
        const fs::path p(*f.output);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream(p) << os.str();
    }
    std::cout << os.str();
    return kExitOk;
}

struct ConvergenceFlags {
    int dim = 2;
};

int convergence_cmd(const CommonFlags& f, const ConvergenceFlags& c) {
    MmsSolution m;
    m.dim = c.dim;
    const auto spatial = mms_spatial_study(m, c.dim == 2 ? 3 : 2);
    const auto temporal = mms_temporal_study(m, c.dim == 2 ? 6 : 4);
    std::ostringstream os;
    os << std::setprecision(17) << "study,n,dt,l2_c,l2_p,order_c,order_p\n";
    auto emit = [&](const char* name, const ConvergenceTable& t) {
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            os << name << ',' << t.rows[i].n << ',' << t.rows[i].dt << ',' << t.rows[i].l2_c << ',' << t.rows[i].l2_p;
            if (i > 0) os << ',' << t.order_c[i - 1] << ',' << t.order_p[i - 1];
            else os << ",,";
            os << '\n';
        }
    };
    emit("spatial", spatial);
    emit("temporal", temporal);
    if (f.output) {
        fs::create_directories(*f.output);
        std::ofstream(fs::path(*f.output) / "convergence.csv") << os.str();
    }
    std::cout << os.str();
    std::printf("spatial order c=%.3f p=%.3f\n", spatial.order_c.back(), spatial.order_p.back());
    std::printf("temporal order c=%.3f p=%.3f\n", temporal.order_c.back(), temporal.order_p.back());
    return kExitOk;
}

void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
    auto* opt = sub->add_option("--config", f.config, "JSON run configuration");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--workers", f.workers, "scenario worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--resume", f.resume, "reuse persisted scenario results with a matching config hash");
    sub->add_option("--output", f.output, "output directory (file for compare)");
    sub->add_option("--seed", f.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-driven flow solver with ensemble and polynomial chaos uncertainty quantification"};
    app.require_subcommand(1);
    CommonFlags common;
    EvalFlags eval;
    CompareFlags cmp;
    ConvergenceFlags conv;

    auto* det = app.add_subcommand("run-deterministic", "single run at theta = 0");
    add_common(det, common, true);
    auto* ens = app.add_subcommand("run-ensemble", "scenario ensemble and weighted statistics");
    add_common(ens, common, true);
    auto* build = app.add_subcommand("gpc-build", "ensemble on a quadrature rule and chaos projection");
    add_common(build, common, true);
    auto* ev = app.add_subcommand("gpc-eval", "evaluate or sample a stored surrogate");
    add_common(ev, common, false);
    ev->add_option("--surrogate", eval.surrogate, "surrogate file (default <output>/surrogate.bin)");
    ev->add_option("--theta", eval.theta, "comma-separated point in [-1,1]^M");
    ev->add_option("--probe", eval.probe, "comma-separated probe coordinates");
    ev->add_option("--thresholds", eval.thresholds, "comma-separated exceedance thresholds");
    ev->add_option("--quantiles", eval.quantiles, "comma-separated quantile levels");
    ev->add_option("--samples", eval.samples, "surrogate samples")->check(CLI::PositiveNumber);
    ev->add_option("--time-index", eval.time_index, "snapshot index (default: all)");
    auto* st = app.add_subcommand("stats", "statistics from persisted scenario files");
    add_common(st, common, true);
    auto* cp = app.add_subcommand("compare", "metrics between two VTK fields");
    add_common(cp, common, false);
    cp->add_option("--a", cmp.a, "first VTK file")->required()->check(CLI::ExistingFile);
    cp->add_option("--b", cmp.b, "second VTK file")->required()->check(CLI::ExistingFile);
    cp->add_option("--field", cmp.field, "scalar name");
    cp->add_option("--isovalues", cmp.isovalues, "comma-separated isovalues");
    auto* cv = app.add_subcommand("convergence", "manufactured-solution convergence orders");
    add_common(cv, common, false);
    cv->add_option("--dim", conv.dim, "2 or 3")->check(CLI::IsMember({2, 3}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*det) return run_deterministic(common);
        if (*ens) return run_ensemble_cmd(common);
        if (*build) return gpc_build(common);
        if (*ev) return gpc_eval(common, eval);
        if (*st) return stats_cmd(common);
        if (*cp) return compare_cmd(common, cmp);
        if (*cv) return convergence_cmd(common, conv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidRealizationError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const NonConvergenceError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const ScenarioFailureError& e) {
        std::cerr << "ensemble: " << e.what() << '\n';
        return kExitPartial;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
