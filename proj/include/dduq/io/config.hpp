#pragma once

/**
 * @file config.hpp
 * @brief JSON run configuration with strict key checking.
 *
 * Every section is optional and falls back to the defaults below; any key
 * not listed is rejected with a ConfigError naming the section and key.
 * Times are given in `time.time_unit` ("s" or "yr") and converted to
 * seconds only through RunConfig::dt_seconds().
 */

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dduq/constitutive.hpp"
#include "dduq/errors.hpp"
#include "dduq/gpc.hpp"
#include "dduq/grid.hpp"
#include "dduq/quadrature.hpp"
#include "dduq/random_fields.hpp"
#include "dduq/solvers/bicgstab.hpp"
#include "dduq/solvers/newton.hpp"

namespace dduq::io {

using json = nlohmann::json;

enum class Method { Deterministic, Qmc, Mc, Gpc };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Deterministic: return "deterministic";
        case Method::Qmc: return "qmc";
        case Method::Mc: return "mc";
        case Method::Gpc: return "gpc";
    }
    return "?";
}

enum class PolicyKind { Abort, Continue, SkipReweight };

inline const char* to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::Abort: return "abort";
        case PolicyKind::Continue: return "continue";
        case PolicyKind::SkipReweight: return "skip_reweight";
    }
    return "?";
}

struct PatchConfig {
    std::string type = "central_half";  ///< central_half | rectangle | disk | none
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
    std::array<double, 2> center{0.0, 0.0};
    double radius = 0.0;
};

struct RunConfig {
    // domain
    int dim = 2;
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{600.0, 150.0, 0.0};
    PatchConfig patch{};
    std::string pressure_pins = "top_perimeter";
    // grid
    std::array<int, 3> coarse_n{5, 3, 1};
    int levels = 3;
    // time
    double dt = 0.005;
    int n_steps = 10;
    std::vector<int> snapshot_steps{10};
    std::string time_unit = "yr";
    // physics
    FlowParameters physics{};
    // stochastic
    std::string field = "constant";
    int dim_theta = 0;
    // method
    Method method = Method::Deterministic;
    std::string rule = "gauss_legendre_tensor";
    int rule_size = 5;   ///< points per axis (GL), sample count (qmc/mc)
    int rule_level = 2;  ///< Clenshaw-Curtis / Smolyak level
    int gpc_order = 4;
    std::string truncation = "total_degree";
    // solver
    NewtonConfig newton{};
    LinearSolverConfig linear{};
    int threads = 1;
    // output
    std::string directory = "out";
    std::vector<std::string> formats{"vtk", "csv"};
    std::vector<double> thresholds{};
    std::vector<std::vector<double>> probes{};
    std::vector<double> quantiles{0.05, 0.5, 0.95};
    int samples = 100000;
    double isovalue = 0.05;
    // run
    int workers = 1;
    bool resume = false;
    PolicyKind failure_policy = PolicyKind::Continue;
    std::uint64_t seed = 42;

    double time_factor() const { return time_unit == "yr" ? kSecondsPerYear : 1.0; }
    double dt_seconds() const { return dt * time_factor(); }

    BoxDomain domain() const {
        BoxDomain d;
        d.dim = dim;
        d.lo = lo;
        d.hi = hi;
        return d;
    }

    std::optional<DirichletPatch> dirichlet_patch() const {
        const BoxDomain d = domain();
        if (patch.type == "none") return std::nullopt;
        if (patch.type == "central_half") return DirichletPatch::central_half(d);
        if (patch.type == "rectangle") return DirichletPatch{DirichletPatch::Rectangle{patch.lo, patch.hi}};
        return DirichletPatch{DirichletPatch::Disk{patch.center, patch.radius}};
    }

    PressurePinMode pin_mode() const {
        return pressure_pins == "top_face" ? PressurePinMode::TopFace : PressurePinMode::TopPerimeter;
    }

    PorosityFieldSpec field_spec() const {
        return PorosityFieldSpec::make(porosity_kind_from_string(field), domain(), dim_theta);
    }

    void validate() const {
        domain().validate();
        if (patch.type != "central_half" && patch.type != "rectangle" && patch.type != "disk" && patch.type != "none")
            throw ConfigError("domain.patch.type: expected central_half, rectangle, disk or none");
        if (auto p = dirichlet_patch()) p->validate(domain());
        if (pressure_pins != "top_perimeter" && pressure_pins != "top_face")
            throw ConfigError("domain.pressure_pins: expected top_perimeter or top_face");
        for (int k = 0; k < dim; ++k)
            if (coarse_n[k] < 2) throw ConfigError("grid.coarse_n: every entry must be >= 2");
        if (levels < 1 || levels > 12) throw ConfigError("grid.levels: expected 1..12");
        if (!(dt > 0.0)) throw ConfigError("time.dt: must be positive");
        if (n_steps < 1) throw ConfigError("time.n_steps: must be >= 1");
        if (time_unit != "s" && time_unit != "yr") throw ConfigError("time.time_unit: expected s or yr");
        if (snapshot_steps.empty()) throw ConfigError("time.snapshot_steps: must not be empty");
        for (std::size_t i = 0; i < snapshot_steps.size(); ++i) {
            if (snapshot_steps[i] < 0 || snapshot_steps[i] > n_steps)
                throw ConfigError("time.snapshot_steps: entries must lie in [0, n_steps]");
            if (i > 0 && snapshot_steps[i] <= snapshot_steps[i - 1])
                throw ConfigError("time.snapshot_steps: must be strictly increasing");
        }
        physics.validate();
        field_spec();
        if (method != Method::Deterministic && dim_theta < 1)
            throw ConfigError("stochastic.M: stochastic methods need a field with M >= 1");
        rule_kind_from_string(rule);
        truncation_from_string(truncation);
        if (rule_size < 1) throw ConfigError("method.rule_size: must be >= 1");
        if (rule_level < 0) throw ConfigError("method.rule_level: must be >= 0");
        if (gpc_order < 0) throw ConfigError("method.gpc_order: must be >= 0");
        newton.validate();
        linear.validate();
        if (threads < 1) throw ConfigError("solver.threads: must be >= 1");
        for (const auto& f : formats)
            if (f != "vtk" && f != "csv") throw ConfigError("output.formats: expected vtk and/or csv");
        for (const auto& p : probes)
            if (static_cast<int>(p.size()) != dim) throw ConfigError("output.probes: each probe needs dim coordinates");
        for (double q : quantiles)
            if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("output.quantiles: levels must lie in [0,1]");
        if (samples < 1) throw ConfigError("output.samples: must be >= 1");
        if (workers < 1) throw ConfigError("run.workers: must be >= 1");
    }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(section + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) throw ConfigError(section + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(section + "." + key + ": wrong type");
    }
}

template <std::size_t N, class T>
void read_prefix(const json& obj, const std::string& section, const char* key, std::array<T, N>& out, int count) {
    if (!obj.contains(key)) return;
    std::vector<T> v;
    read(obj, section, key, v);
    if (static_cast<int>(v.size()) != count)
        throw ConfigError(section + "." + key + ": expected " + std::to_string(count) + " entries");
    for (int k = 0; k < count; ++k) out[k] = v[k];
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    using detail::read;
    RunConfig c;
    detail::check_keys(j, "config", {"domain", "grid", "time", "physics", "stochastic", "method", "solver", "output", "run"});

    if (j.contains("domain")) {
        const auto& d = j["domain"];
        detail::check_keys(d, "domain", {"dim", "lo", "hi", "patch", "pressure_pins"});
        read(d, "domain", "dim", c.dim);
        if (c.dim != 2 && c.dim != 3) throw ConfigError("domain.dim: must be 2 or 3");
        if (c.dim == 3) {
            c.hi = {600.0, 600.0, 150.0};
            c.coarse_n = {5, 5, 3};
        }
        detail::read_prefix(d, "domain", "lo", c.lo, c.dim);
        detail::read_prefix(d, "domain", "hi", c.hi, c.dim);
        read(d, "domain", "pressure_pins", c.pressure_pins);
        if (d.contains("patch")) {
            const auto& p = d["patch"];
            detail::check_keys(p, "domain.patch", {"type", "lo", "hi", "center", "radius"});
            read(p, "domain.patch", "type", c.patch.type);
            detail::read_prefix(p, "domain.patch", "lo", c.patch.lo, c.dim - 1);
            detail::read_prefix(p, "domain.patch", "hi", c.patch.hi, c.dim - 1);
            detail::read_prefix(p, "domain.patch", "center", c.patch.center, c.dim - 1);
            read(p, "domain.patch", "radius", c.patch.radius);
        }
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        detail::check_keys(g, "grid", {"coarse_n", "levels"});
        detail::read_prefix(g, "grid", "coarse_n", c.coarse_n, c.dim);
        read(g, "grid", "levels", c.levels);
    }
    if (c.dim == 2) c.coarse_n[2] = 1;
    if (j.contains("time")) {
        const auto& t = j["time"];
        detail::check_keys(t, "time", {"dt", "n_steps", "snapshot_steps", "time_unit"});
        read(t, "time", "dt", c.dt);
        read(t, "time", "n_steps", c.n_steps);
        if (!t.contains("snapshot_steps")) c.snapshot_steps = {c.n_steps};
        read(t, "time", "snapshot_steps", c.snapshot_steps);
        read(t, "time", "time_unit", c.time_unit);
    }
    if (j.contains("physics")) {
        const auto& p = j["physics"];
        detail::check_keys(p, "physics", {"rho0", "rho1", "mu", "Dm", "g", "phi_mean", "K_mean"});
        read(p, "physics", "rho0", c.physics.rho0);
        read(p, "physics", "rho1", c.physics.rho1);
        read(p, "physics", "mu", c.physics.mu);
        read(p, "physics", "Dm", c.physics.Dm);
        read(p, "physics", "g", c.physics.g);
        read(p, "physics", "phi_mean", c.physics.phi_mean);
        read(p, "physics", "K_mean", c.physics.K_mean);
    }
    if (j.contains("stochastic")) {
        const auto& s = j["stochastic"];
        detail::check_keys(s, "stochastic", {"field", "M"});
        read(s, "stochastic", "field", c.field);
        porosity_kind_from_string(c.field);
        c.dim_theta = PorosityFieldSpec::natural_dim_theta(porosity_kind_from_string(c.field), c.dim);
        read(s, "stochastic", "M", c.dim_theta);
    }
    if (j.contains("method")) {
        const auto& m = j["method"];
        detail::check_keys(m, "method", {"kind", "rule", "rule_size", "rule_level", "gpc_order", "truncation"});
        std::string kind = to_string(c.method);
        read(m, "method", "kind", kind);
        if (kind == "deterministic") c.method = Method::Deterministic;
        else if (kind == "qmc") c.method = Method::Qmc;
        else if (kind == "mc") c.method = Method::Mc;
        else if (kind == "gpc") c.method = Method::Gpc;
        else throw ConfigError("method.kind: expected deterministic, qmc, mc or gpc");
        read(m, "method", "rule", c.rule);
        read(m, "method", "rule_size", c.rule_size);
        read(m, "method", "rule_level", c.rule_level);
        read(m, "method", "gpc_order", c.gpc_order);
        read(m, "method", "truncation", c.truncation);
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        detail::check_keys(s, "solver", {"newton_tol_abs", "newton_tol_rel", "newton_max_iter", "ls_max_halvings",
                                         "krylov_tol_rel", "krylov_max_iter", "mg_pre_smooth", "mg_post_smooth",
                                         "mg_coarse", "threads"});
        read(s, "solver", "newton_tol_abs", c.newton.tol_abs);
        read(s, "solver", "newton_tol_rel", c.newton.tol_rel);
        read(s, "solver", "newton_max_iter", c.newton.max_iter);
        read(s, "solver", "ls_max_halvings", c.newton.ls_max_halvings);
        read(s, "solver", "krylov_tol_rel", c.linear.krylov_tol_rel);
        read(s, "solver", "krylov_max_iter", c.linear.krylov_max_iter);
        read(s, "solver", "mg_pre_smooth", c.linear.mg_pre_smooth);
        read(s, "solver", "mg_post_smooth", c.linear.mg_post_smooth);
        std::string coarse = c.linear.mg_coarse == CoarseSolve::Direct ? "direct" : "smooth";
        read(s, "solver", "mg_coarse", coarse);
        if (coarse == "direct") c.linear.mg_coarse = CoarseSolve::Direct;
        else if (coarse == "smooth") c.linear.mg_coarse = CoarseSolve::ManySmooths;
        else throw ConfigError("solver.mg_coarse: expected direct or smooth");
        read(s, "solver", "threads", c.threads);
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::check_keys(o, "output", {"directory", "formats", "thresholds", "probes", "quantiles", "samples", "isovalue"});
        read(o, "output", "directory", c.directory);
        read(o, "output", "formats", c.formats);
        read(o, "output", "thresholds", c.thresholds);
        read(o, "output", "probes", c.probes);
        read(o, "output", "quantiles", c.quantiles);
        read(o, "output", "samples", c.samples);
        read(o, "output", "isovalue", c.isovalue);
    }
    if (j.contains("run")) {
        const auto& r = j["run"];
        detail::check_keys(r, "run", {"workers", "resume", "failure_policy", "seed"});
        read(r, "run", "workers", c.workers);
        read(r, "run", "resume", c.resume);
        std::string pol = to_string(c.failure_policy);
        read(r, "run", "failure_policy", pol);
        if (pol == "abort") c.failure_policy = PolicyKind::Abort;
        else if (pol == "continue") c.failure_policy = PolicyKind::Continue;
        else if (pol == "skip_reweight") c.failure_policy = PolicyKind::SkipReweight;
        else throw ConfigError("run.failure_policy: expected abort, continue or skip_reweight");
        read(r, "run", "seed", c.seed);
    }
    c.validate();
    return c;
}

inline json to_json(const RunConfig& c) {
    auto prefix = [](const auto& a, int n) {
        json v = json::array();
        for (int k = 0; k < n; ++k) v.push_back(a[k]);
        return v;
    };
    json j;
    j["domain"] = {{"dim", c.dim}, {"lo", prefix(c.lo, c.dim)}, {"hi", prefix(c.hi, c.dim)},
                   {"pressure_pins", c.pressure_pins}};
    json p = {{"type", c.patch.type}};
    if (c.patch.type == "rectangle") {
        p["lo"] = prefix(c.patch.lo, c.dim - 1);
        p["hi"] = prefix(c.patch.hi, c.dim - 1);
    } else if (c.patch.type == "disk") {
        p["center"] = prefix(c.patch.center, c.dim - 1);
        p["radius"] = c.patch.radius;
    }
    j["domain"]["patch"] = p;
    j["grid"] = {{"coarse_n", prefix(c.coarse_n, c.dim)}, {"levels", c.levels}};
    j["time"] = {{"dt", c.dt}, {"n_steps", c.n_steps}, {"snapshot_steps", c.snapshot_steps}, {"time_unit", c.time_unit}};
    j["physics"] = {{"rho0", c.physics.rho0}, {"rho1", c.physics.rho1}, {"mu", c.physics.mu}, {"Dm", c.physics.Dm},
                    {"g", c.physics.g}, {"phi_mean", c.physics.phi_mean}, {"K_mean", c.physics.K_mean}};
    j["stochastic"] = {{"field", c.field}, {"M", c.dim_theta}};
    j["method"] = {{"kind", to_string(c.method)}, {"rule", c.rule}, {"rule_size", c.rule_size},
                   {"rule_level", c.rule_level}, {"gpc_order", c.gpc_order}, {"truncation", c.truncation}};
    j["solver"] = {{"newton_tol_abs", c.newton.tol_abs},
                   {"newton_tol_rel", c.newton.tol_rel},
                   {"newton_max_iter", c.newton.max_iter},
                   {"ls_max_halvings", c.newton.ls_max_halvings},
                   {"krylov_tol_rel", c.linear.krylov_tol_rel},
                   {"krylov_max_iter", c.linear.krylov_max_iter},
                   {"mg_pre_smooth", c.linear.mg_pre_smooth},
                   {"mg_post_smooth", c.linear.mg_post_smooth},
                   {"mg_coarse", c.linear.mg_coarse == CoarseSolve::Direct ? "direct" : "smooth"},
                   {"threads", c.threads}};
    j["output"] = {{"directory", c.directory}, {"formats", c.formats}, {"thresholds", c.thresholds},
                   {"probes", c.probes},       {"quantiles", c.quantiles}, {"samples", c.samples},
                   {"isovalue", c.isovalue}};
    j["run"] = {{"workers", c.workers}, {"resume", c.resume}, {"failure_policy", to_string(c.failure_policy)},
                {"seed", c.seed}};
    return j;
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace dduq::io
