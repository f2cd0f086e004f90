#pragma once

/**
 * @file ensemble.hpp
 * @brief Scenario runs at fixed theta, a worker pool over scenarios, and weighted statistics.
 *
 * Every scenario is an independent transient solve. Workers share no mutable
 * state; each persists its own file "scenario_<id>.bin" when an output
 * directory is given. Statistics are reduced in scenario_id order with
 * pairwise summation, so they do not depend on worker count or completion order.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dduq/constitutive.hpp"
#include "dduq/discretization.hpp"
#include "dduq/errors.hpp"
#include "dduq/grid.hpp"
#include "dduq/io/container.hpp"
#include "dduq/random_fields.hpp"
#include "dduq/simulation.hpp"

namespace dduq {

struct ScenarioSpec {
    std::vector<double> theta;
    double weight = 1.0;
    std::int64_t scenario_id = 0;
    std::string config_hash;
};

/// Deterministic inputs shared by all scenarios of a run.
struct ScenarioProblem {
    const GridHierarchy* grids = nullptr;
    PorosityFieldSpec field{};
    FlowParameters params{};
    NewtonConfig newton{};
    LinearSolverConfig linear{};
    double dt = 0.0;              ///< seconds
    int n_steps = 0;
    std::vector<int> snapshot_steps;  ///< step counts, 0 = initial state
    int threads = 1;                  ///< within-scenario threads

    std::vector<double> snapshot_times() const {
        std::vector<double> t;
        for (int s : snapshot_steps) t.push_back(s * dt);
        return t;
    }

    void validate() const {
        if (grids == nullptr || grids->empty()) throw ConfigError("grid: empty hierarchy");
        if (!(dt > 0.0)) throw ConfigError("time: dt must be positive");
        if (n_steps < 1) throw ConfigError("time: n_steps must be >= 1");
        if (snapshot_steps.empty()) throw ConfigError("time: at least one snapshot step is required");
        for (std::size_t i = 0; i < snapshot_steps.size(); ++i) {
            if (snapshot_steps[i] < 0 || snapshot_steps[i] > n_steps)
                throw ConfigError("time: snapshot step outside [0, n_steps]");
            if (i > 0 && snapshot_steps[i] <= snapshot_steps[i - 1])
                throw ConfigError("time: snapshot steps must be strictly increasing");
        }
        field.validate();
        params.validate();
        newton.validate();
        linear.validate();
    }
};

/// Canonical description of a problem; its FNV-1a digest is the config hash.
inline io::json problem_fingerprint(const ScenarioProblem& p) {
    io::json j;
    const auto& g = p.grids->front();
    j["grid"] = {{"descriptor", g.descriptor()},
                 {"levels", p.grids->size()},
                 {"lo", g.domain().lo},
                 {"hi", g.domain().hi}};
    std::vector<int> tags, pins;
    for (auto t : g.tags()) tags.push_back(static_cast<int>(t));
    for (auto v : g.pressure_pins()) pins.push_back(v);
    j["grid"]["tags_digest"] = io::fnv1a_hex(io::json(tags).dump());
    j["grid"]["pins_digest"] = io::fnv1a_hex(io::json(pins).dump());
    const auto& c = p.field.constants;
    j["field"] = {{"kind", to_string(p.field.kind)},
                  {"dim_theta", p.field.dim_theta},
                  {"constants",
                   {c.base, c.paral_amplitude, c.paral_lx, c.paral_ly, c.paral_lz, c.cyl_amplitude, c.cyl_x_scale,
                    c.cyl_x_period, c.cyl_y_period, c.layered_x_period, c.layered_y_period, c.layered_z_period,
                    c.layer_breaks[0], c.layer_breaks[1], c.layer_factors[0], c.layer_factors[1], c.layer_factors[2]}}};
    const auto& f = p.params;
    j["physics"] = {f.rho0, f.rho1, f.mu, f.Dm, f.g, f.gravity_axis, f.phi_mean, f.K_mean};
    j["newton"] = {p.newton.tol_abs, p.newton.tol_rel, p.newton.max_iter, p.newton.ls_max_halvings};
    j["linear"] = {p.linear.krylov_tol_rel, p.linear.krylov_max_iter, p.linear.mg_pre_smooth, p.linear.mg_post_smooth,
                   static_cast<int>(p.linear.mg_coarse)};
    j["time"] = {{"dt", p.dt}, {"n_steps", p.n_steps}, {"snapshots", p.snapshot_steps}};
    j["threads"] = p.threads;
    return j;
}

inline std::string problem_hash(const ScenarioProblem& p) { return io::fnv1a_hex(problem_fingerprint(p).dump()); }

enum class ScenarioStatus { Ok, Failed, Skipped };

inline const char* to_string(ScenarioStatus s) {
    switch (s) {
        case ScenarioStatus::Ok: return "ok";
        case ScenarioStatus::Failed: return "failed";
        case ScenarioStatus::Skipped: return "skipped";
    }
    return "?";
}

struct ScenarioResult {
    std::int64_t scenario_id = 0;
    std::vector<double> theta;
    std::string config_hash;
    std::vector<double> snapshot_times;
    std::vector<FieldState> snapshots;
    std::vector<int> newton_iterations;  ///< per step
    std::vector<int> krylov_iterations;  ///< per step, summed over Newton iterations
    ScenarioStatus status = ScenarioStatus::Skipped;
    std::string reason;
    int failed_step = -1;

    bool ok() const noexcept { return status == ScenarioStatus::Ok; }
};

/// Full transient solve at spec.theta. Failures are reported in the result, not thrown.
inline ScenarioResult run_scenario(const ScenarioSpec& spec, const ScenarioProblem& problem,
                                   const StepCallback& on_step = {}) {
    problem.validate();
    ScenarioResult res;
    res.scenario_id = spec.scenario_id;
    res.theta = spec.theta;
    res.config_hash = spec.config_hash;
    res.snapshot_times = problem.snapshot_times();
    const auto& fine = problem.grids->front();
    int step = 0;
    try {
        SimulationSetup setup;
        setup.grids = problem.grids;
        setup.coeff = coefficient_fields(problem.field, fine, spec.theta, problem.params);
        setup.params = problem.params;
        setup.newton = problem.newton;
        setup.linear = problem.linear;
        setup.threads = problem.threads;
        const TransientSolver solver(std::move(setup));
        FieldState state = initial_state(fine, problem.params);
        auto next = problem.snapshot_steps.begin();
        if (*next == 0) {
            res.snapshots.push_back(state);
            ++next;
        }
        for (step = 1; step <= problem.n_steps; ++step) {
            const StepReport rep = solver.advance(state, problem.dt, step);
            res.newton_iterations.push_back(rep.newton_iterations);
            int kr = 0;
            for (int k : rep.krylov_iterations) kr += k;
            res.krylov_iterations.push_back(kr);
            if (on_step) on_step(rep, state);
            if (next != problem.snapshot_steps.end() && *next == step) {
                res.snapshots.push_back(state);
                ++next;
            }
        }
        res.status = ScenarioStatus::Ok;
    } catch (const InvalidRealizationError& e) {
        res.status = ScenarioStatus::Failed;
        res.reason = std::string("invalid realization: ") + e.what();
        res.snapshots.clear();
    } catch (const NonConvergenceError& e) {
        res.status = ScenarioStatus::Failed;
        res.failed_step = step;
        res.reason = "step " + std::to_string(step) + ": " + e.what();
        res.snapshots.clear();
    }
    return res;
}

// --- persistence ---------------------------------------------------------

inline constexpr const char* kScenarioMagic = "DDUQ-SCENARIO 1";

inline std::filesystem::path scenario_path(const std::filesystem::path& dir, std::int64_t id) {
    return dir / ("scenario_" + std::to_string(id) + ".bin");
}

/// Payload: for each snapshot, c then p over all vertices.
inline void save_scenario(const std::filesystem::path& path, const ScenarioResult& r, const std::string& grid_descriptor) {
    io::json h;
    h["scenario_id"] = r.scenario_id;
    h["theta"] = r.theta;
    h["config_hash"] = r.config_hash;
    h["grid"] = grid_descriptor;
    h["snapshot_times_s"] = r.snapshot_times;
    h["status"] = to_string(r.status);
    h["reason"] = r.reason;
    h["failed_step"] = r.failed_step;
    h["newton_iterations"] = r.newton_iterations;
    h["krylov_iterations"] = r.krylov_iterations;
    const std::size_t nv = r.snapshots.empty() ? 0 : r.snapshots.front().c.size();
    h["num_vertices"] = nv;
    h["num_snapshots"] = r.snapshots.size();
    std::vector<double> payload;
    payload.reserve(2 * nv * r.snapshots.size());
    for (const auto& s : r.snapshots) {
        payload.insert(payload.end(), s.c.begin(), s.c.end());
        payload.insert(payload.end(), s.p.begin(), s.p.end());
    }
    io::write_container(path, kScenarioMagic, std::move(h), payload);
}

inline ScenarioResult load_scenario(const std::filesystem::path& path) {
    const auto ct = io::read_container(path, kScenarioMagic);
    const auto& h = ct.header;
    ScenarioResult r;
    try {
        r.scenario_id = h.at("scenario_id").get<std::int64_t>();
        r.theta = h.at("theta").get<std::vector<double>>();
        r.config_hash = h.at("config_hash").get<std::string>();
        r.snapshot_times = h.at("snapshot_times_s").get<std::vector<double>>();
        const auto st = h.at("status").get<std::string>();
        r.status = st == "ok" ? ScenarioStatus::Ok : st == "failed" ? ScenarioStatus::Failed : ScenarioStatus::Skipped;
        r.reason = h.at("reason").get<std::string>();
        r.failed_step = h.at("failed_step").get<int>();
        r.newton_iterations = h.at("newton_iterations").get<std::vector<int>>();
        r.krylov_iterations = h.at("krylov_iterations").get<std::vector<int>>();
        const auto nv = h.at("num_vertices").get<std::size_t>();
        const auto ns = h.at("num_snapshots").get<std::size_t>();
        if (ct.payload.size() != 2 * nv * ns) throw ConfigError("input: payload size mismatch in " + path.string());
        for (std::size_t s = 0; s < ns; ++s) {
            FieldState f;
            f.t = s < r.snapshot_times.size() ? r.snapshot_times[s] : 0.0;
            const auto base = ct.payload.begin() + static_cast<std::ptrdiff_t>(2 * nv * s);
            f.c.assign(base, base + static_cast<std::ptrdiff_t>(nv));
            f.p.assign(base + static_cast<std::ptrdiff_t>(nv), base + static_cast<std::ptrdiff_t>(2 * nv));
            r.snapshots.push_back(std::move(f));
        }
    } catch (const io::json::exception& e) {
        throw ConfigError("input: malformed scenario header in " + path.string() + ": " + e.what());
    }
    return r;
}

// --- orchestration -------------------------------------------------------

enum class FailurePolicy { Abort, Continue };

struct EnsembleOptions {
    int workers = 1;
    bool resume = false;
    std::optional<std::filesystem::path> output_dir;
    FailurePolicy policy = FailurePolicy::Continue;
    std::function<void(const std::string&)> log = [](const std::string& m) { std::clog << m << '\n'; };
};

struct EnsembleRun {
    std::vector<ScenarioResult> results;  ///< in input order
    std::size_t computed = 0;
    std::size_t loaded = 0;
    std::size_t failed = 0;
};

/// Builds specs from a rule: ids 0..n-1 in node order, all sharing one config hash.
template <class Rule>
std::vector<ScenarioSpec> specs_from_rule(const Rule& rule, const std::string& config_hash) {
    std::vector<ScenarioSpec> out;
    for (std::size_t i = 0; i < rule.size(); ++i)
        out.push_back({rule.nodes[i], rule.weights[i], static_cast<std::int64_t>(i), config_hash});
    return out;
}

inline EnsembleRun run_ensemble(const std::vector<ScenarioSpec>& specs, const ScenarioProblem& problem,
                                const EnsembleOptions& opt = {}) {
    problem.validate();
    if (opt.workers < 1) throw ConfigError("run: workers must be >= 1");
    {
        std::set<std::int64_t> ids;
        for (const auto& s : specs)
            if (!ids.insert(s.scenario_id).second)
                throw UsageError("run_ensemble: duplicate scenario_id " + std::to_string(s.scenario_id));
    }
    if (opt.output_dir) std::filesystem::create_directories(*opt.output_dir);
    const std::string descriptor = problem.grids->front().descriptor();

    EnsembleRun run;
    run.results.resize(specs.size());
    std::vector<std::uint8_t> done(specs.size(), 0);
    if (opt.resume && opt.output_dir) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto path = scenario_path(*opt.output_dir, specs[i].scenario_id);
            if (!std::filesystem::exists(path)) continue;
            try {
                ScenarioResult r = load_scenario(path);
                if (r.ok() && r.config_hash == specs[i].config_hash && r.theta == specs[i].theta &&
                    r.scenario_id == specs[i].scenario_id) {
                    run.results[i] = std::move(r);
                    done[i] = 1;
                    ++run.loaded;
                }
            } catch (const ConfigError& e) {
                if (opt.log) opt.log(std::string("resume: ignoring unreadable file: ") + e.what());
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> computed{0};
    std::mutex log_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            if (done[i]) continue;
            if (stop.load()) {
                run.results[i].scenario_id = specs[i].scenario_id;
                run.results[i].theta = specs[i].theta;
                run.results[i].status = ScenarioStatus::Skipped;
                run.results[i].reason = "not run after an earlier failure (policy abort)";
                continue;
            }
            ScenarioResult r = run_scenario(specs[i], problem);
            computed.fetch_add(1);
            if (opt.output_dir) save_scenario(scenario_path(*opt.output_dir, r.scenario_id), r, descriptor);
            if (!r.ok()) {
                if (opt.policy == FailurePolicy::Abort) stop.store(true);
                if (opt.log) {
                    const std::lock_guard lock(log_mutex);
                    opt.log("scenario " + std::to_string(r.scenario_id) + " failed: " + r.reason);
                }
            }
            run.results[i] = std::move(r);
        }
    };
    const int nw = static_cast<int>(std::min<std::size_t>(opt.workers, std::max<std::size_t>(specs.size(), 1)));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    }
    run.computed = computed.load();
    for (const auto& r : run.results) run.failed += !r.ok();
    return run;
}

// --- statistics ----------------------------------------------------------

enum class Quantity { C, P };

struct StatisticsFields {
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> mean;      ///< [time][dof]
    std::vector<std::vector<double>> variance;  ///< [time][dof], clamped at 0
    std::vector<double> thresholds;
    std::vector<std::vector<std::vector<double>>> exceedance;  ///< [threshold][time][dof]
    std::size_t n_effective = 0;
};

namespace detail {

/// Pairwise sum of term(k) over k in [b, e), evaluated fieldwise.
template <class Term>
std::vector<double> pairwise_sum(std::size_t b, std::size_t e, std::size_t n, const Term& term) {
    if (e - b == 1) return term(b);
    const std::size_t m = b + (e - b) / 2;
    auto left = pairwise_sum(b, m, n, term);
    const auto right = pairwise_sum(m, e, n, term);
    for (std::size_t d = 0; d < n; ++d) left[d] += right[d];
    return left;
}

inline const std::vector<double>& pick(const FieldState& s, Quantity q) { return q == Quantity::C ? s.c : s.p; }

}  // namespace detail

struct StatsOptions {
    Quantity quantity = Quantity::C;
    std::vector<double> thresholds;
    bool skip_failed = false;  ///< drop failed scenarios and renormalize the weights
    std::function<void(const std::string&)> log = [](const std::string& m) { std::clog << m << '\n'; };
};

/// mean = sum w_i c_i, variance = sum w_i (mean - c_i)^2, exceedance = sum w_i [c_i > c*].
inline StatisticsFields weighted_stats(const std::vector<ScenarioResult>& results, const std::vector<double>& weights,
                                       const StatsOptions& opt = {}) {
    if (results.size() != weights.size()) throw UsageError("weighted_stats: result and weight counts differ");
    std::vector<std::size_t> use;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!std::isfinite(weights[i])) throw UsageError("weighted_stats: non-finite weight");
        if (results[i].ok()) {
            use.push_back(i);
        } else if (!opt.skip_failed) {
            throw ScenarioFailureError("weighted_stats: scenario " + std::to_string(results[i].scenario_id) +
                                       " did not complete: " + results[i].reason);
        }
    }
    if (use.empty()) throw ScenarioFailureError("weighted_stats: no completed scenarios");
    std::sort(use.begin(), use.end(),
              [&](std::size_t a, std::size_t b) { return results[a].scenario_id < results[b].scenario_id; });

    std::vector<double> w(use.size());
    for (std::size_t k = 0; k < use.size(); ++k) w[k] = weights[use[k]];
    if (use.size() != results.size()) {
        double s = 0.0;
        for (double x : w) s += x;
        if (!(s > 0.0)) throw ScenarioFailureError("weighted_stats: remaining weights sum to zero");
        for (double& x : w) x /= s;
        if (opt.log)
            opt.log("weighted_stats: skipped " + std::to_string(results.size() - use.size()) +
                    " failed scenarios and renormalized the weights");
    } else {
        double s = 0.0;
        for (double x : w) s += x;
        if (std::abs(s - 1.0) > 1e-10) throw UsageError("weighted_stats: weights must sum to 1");
    }

    const auto& first = results[use.front()];
    const std::size_t nt = first.snapshots.size();
    const std::size_t n = detail::pick(first.snapshots.front(), opt.quantity).size();
    for (std::size_t i : use) {
        if (results[i].snapshots.size() != nt) throw UsageError("weighted_stats: snapshot counts differ");
        for (const auto& s : results[i].snapshots)
            if (detail::pick(s, opt.quantity).size() != n) throw UsageError("weighted_stats: field lengths differ");
    }

    StatisticsFields st;
    st.snapshot_times = first.snapshot_times;
    st.thresholds = opt.thresholds;
    st.n_effective = use.size();
    st.exceedance.assign(opt.thresholds.size(), {});
    for (std::size_t t = 0; t < nt; ++t) {
        auto field = [&](std::size_t k) -> const std::vector<double>& {
            return detail::pick(results[use[k]].snapshots[t], opt.quantity);
        };
        auto mean = detail::pairwise_sum(0, use.size(), n, [&](std::size_t k) {
            std::vector<double> v(field(k));
            for (double& x : v) x *= w[k];
            return v;
        });
        auto var = detail::pairwise_sum(0, use.size(), n, [&](std::size_t k) {
            const auto& f = field(k);
            std::vector<double> v(n);
            for (std::size_t d = 0; d < n; ++d) v[d] = w[k] * (mean[d] - f[d]) * (mean[d] - f[d]);
            return v;
        });
        for (double& x : var) x = std::max(x, 0.0);
        for (std::size_t h = 0; h < opt.thresholds.size(); ++h) {
            const double th = opt.thresholds[h];
            st.exceedance[h].push_back(detail::pairwise_sum(0, use.size(), n, [&](std::size_t k) {
                const auto& f = field(k);
                std::vector<double> v(n);
                for (std::size_t d = 0; d < n; ++d) v[d] = f[d] > th ? w[k] : 0.0;
                return v;
            }));
        }
        st.mean.push_back(std::move(mean));
        st.variance.push_back(std::move(var));
    }
    return st;
}

struct FieldComparison {
    double l2_rel = 0.0;    ///< ||a - b||_2 / ||a||_2 (0 if both vanish, +inf if only a does)
    double max_abs = 0.0;   ///< max_i |a_i - b_i|
    double jaccard = 1.0;   ///< |A and B| / |A or B| for A = {a >= iso}; 1 when both sets are empty
    std::size_t count_a = 0;
    std::size_t count_b = 0;
};

/// Metrics on vertex fields of the same grid; optional weights (e.g. dual volumes) enter the L2 norms.
inline FieldComparison compare_fields(const std::vector<double>& a, const std::vector<double>& b, double isovalue,
                                      const std::vector<double>& weights = {}) {
    if (a.size() != b.size()) throw UsageError("compare_fields: fields live on different grids");
    if (!weights.empty() && weights.size() != a.size()) throw UsageError("compare_fields: weight length mismatch");
    FieldComparison r;
    double num = 0.0, den = 0.0;
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double d = a[i] - b[i];
        num += w * d * d;
        den += w * a[i] * a[i];
        r.max_abs = std::max(r.max_abs, std::abs(d));
        const bool ia = a[i] >= isovalue, ib = b[i] >= isovalue;
        r.count_a += ia;
        r.count_b += ib;
        inter += ia && ib;
        uni += ia || ib;
    }
    if (den > 0.0) r.l2_rel = std::sqrt(num / den);
    else r.l2_rel = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return r;
}

}  // namespace dduq
