#pragma once

// Quadrature and sampling rules on [-1,1]^M. Rules built here carry
// probability-normalized weights (sum 1 for the uniform density 0.5^M).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dduq/errors.hpp"

namespace dduq {

enum class RuleKind { QmcHalton, Mc, GaussLegendreTensor, ClenshawCurtisTensor, SmolyakCc };

inline const char* to_string(RuleKind k) {
    switch (k) {
        case RuleKind::QmcHalton: return "qmc_halton";
        case RuleKind::Mc: return "mc";
        case RuleKind::GaussLegendreTensor: return "gauss_legendre_tensor";
        case RuleKind::ClenshawCurtisTensor: return "clenshaw_curtis_tensor";
        case RuleKind::SmolyakCc: return "smolyak_cc";
    }
    return "?";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
    for (auto k : {RuleKind::QmcHalton, RuleKind::Mc, RuleKind::GaussLegendreTensor, RuleKind::ClenshawCurtisTensor,
                   RuleKind::SmolyakCc})
        if (s == to_string(k)) return k;
    throw ConfigError("method: unknown rule kind '" + s + "'");
}

struct QuadratureRule {
    RuleKind kind = RuleKind::QmcHalton;
    int dim = 0;
    std::vector<std::vector<double>> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

inline void check_theta(std::span<const double> theta, int m) {
    if (static_cast<int>(theta.size()) != m)
        throw UsageError("theta has " + std::to_string(theta.size()) + " components, expected " + std::to_string(m));
    for (double t : theta)
        if (!(t >= -1.0 && t <= 1.0)) throw DomainError("theta component outside [-1,1]");
}

/// 1D rule on [-1,1] with Lebesgue weights (sum 2).
struct Rule1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline constexpr std::size_t kMaxRuleNodes = 10'000'000;

inline std::vector<unsigned> first_primes(int m) {
    std::vector<unsigned> p;
    for (unsigned n = 2; static_cast<int>(p.size()) < m; ++n) {
        bool prime = true;
        for (unsigned q : p) {
            if (q * q > n) break;
            if (n % q == 0) {
                prime = false;
                break;
            }
        }
        if (prime) p.push_back(n);
    }
    return p;
}

inline double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// Halton points 1..n mapped to (-1,1), equal weights 1/n.
inline QuadratureRule halton(std::size_t n, int m) {
    if (n < 1 || m < 1) throw ConfigError("method: halton needs n >= 1 and M >= 1");
    if (n > kMaxRuleNodes) throw ConfigError("method: halton node count exceeds 1e7");
    const auto bases = first_primes(m);
    QuadratureRule q;
    q.kind = RuleKind::QmcHalton;
    q.dim = m;
    q.nodes.resize(n, std::vector<double>(m));
    q.weights.assign(n, 1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) q.nodes[i][j] = 2.0 * radical_inverse(i + 1, bases[j]) - 1.0;
    return q;
}

/// Uniform i.i.d. samples on [-1,1]^M from mt19937_64(seed), equal weights 1/n.
inline QuadratureRule monte_carlo(std::size_t n, int m, std::uint64_t seed) {
    if (n < 1 || m < 1) throw ConfigError("method: Monte Carlo needs n >= 1 and M >= 1");
    if (n > kMaxRuleNodes) throw ConfigError("method: Monte Carlo sample count exceeds 1e7");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    QuadratureRule q;
    q.kind = RuleKind::Mc;
    q.dim = m;
    q.nodes.resize(n, std::vector<double>(m));
    q.weights.assign(n, 1.0 / static_cast<double>(n));
    for (auto& x : q.nodes)
        for (auto& v : x) v = u(gen);
    return q;
}

inline double legendre_eval(int n, double x) {
    if (n < 0) throw UsageError("legendre_eval: negative degree");
    if (n == 0) return 1.0;
    double pm = 1.0, p = x;
    for (int k = 1; k < n; ++k) {
        const double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
        pm = p;
        p = pn;
    }
    return p;
}

/// Value and derivative of psi_n via the recurrence (|x| < 1 for the derivative).
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
    double pm = 1.0, p = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 1; k < n; ++k) {
        const double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
        pm = p;
        p = pn;
    }
    return {p, n * (x * p - pm) / (x * x - 1.0)};
}

inline Rule1d gauss_legendre_1d(int n) {
    if (n < 1) throw ConfigError("method: Gauss-Legendre needs n >= 1");
    Rule1d r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_with_derivative(n, x);
            dp = d;
            const double dx = p / d;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

inline int cc_points(int level) { return level == 0 ? 1 : (1 << level) + 1; }

/// Nested Clenshaw-Curtis rule, nodes ascending.
inline Rule1d clenshaw_curtis_1d(int level) {
    if (level < 0) throw ConfigError("method: Clenshaw-Curtis level must be >= 0");
    if (level > 20) throw ConfigError("method: Clenshaw-Curtis level too large");
    Rule1d r;
    const int n = cc_points(level);
    if (n == 1) {
        r.nodes = {0.0};
        r.weights = {2.0};
        return r;
    }
    const int N = n - 1;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        const double theta = std::numbers::pi * k / N;
        r.nodes[N - k] = (2 * k == N) ? 0.0 : std::cos(theta);
        double s = 0.0;
        for (int j = 1; j <= N / 2; ++j) {
            const double b = (2 * j == N) ? 1.0 : 2.0;
            s += b / (4.0 * j * j - 1.0) * std::cos(2.0 * j * theta);
        }
        const double c = (k == 0 || k == N) ? 1.0 : 2.0;
        r.weights[N - k] = c / N * (1.0 - s);
    }
    return r;
}

/// Full tensor product of one 1D rule; weights scaled by 0.5^M.
inline QuadratureRule tensor_rule(const Rule1d& r, int m, RuleKind kind = RuleKind::GaussLegendreTensor) {
    if (m < 1) throw ConfigError("method: tensor rule needs M >= 1");
    const std::size_t n1 = r.nodes.size();
    double total = 1.0;
    for (int j = 0; j < m; ++j) total *= static_cast<double>(n1);
    if (total > static_cast<double>(kMaxRuleNodes)) throw ConfigError("method: tensor rule exceeds 1e7 nodes");
    const auto n = static_cast<std::size_t>(total);
    QuadratureRule q;
    q.kind = kind;
    q.dim = m;
    q.nodes.resize(n, std::vector<double>(m));
    q.weights.resize(n);
    const double scale = std::pow(0.5, m);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        double w = scale;
        // First coordinate varies slowest.
        for (int j = m - 1; j >= 0; --j) {
            const std::size_t k = rem % n1;
            rem /= n1;
            q.nodes[i][j] = r.nodes[k];
            w *= r.weights[k];
        }
        q.weights[i] = w;
    }
    return q;
}

namespace detail {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

template <class F>
void for_each_level_vector(int m, int lo, int hi, F&& f) {
    std::vector<int> k(m, 0);
    auto rec = [&](auto&& self, int j, int sum) -> void {
        if (j == m) {
            if (sum >= lo) f(k, sum);
            return;
        }
        for (int v = 0; sum + v <= hi; ++v) {
            k[j] = v;
            self(self, j + 1, sum + v);
        }
    };
    rec(rec, 0, 0);
}

}  // namespace detail

/// Smolyak combination of nested Clenshaw-Curtis rules over level vectors
/// max(0, L-M+1) <= |k| <= L with coefficients (-1)^(L-|k|) C(M-1, L-|k|).
/// Coinciding nodes are merged.
inline QuadratureRule smolyak_cc(int level, int m) {
    if (level < 0 || m < 1) throw ConfigError("method: Smolyak needs level >= 0 and M >= 1");
    std::vector<Rule1d> rules;
    for (int l = 0; l <= level; ++l) rules.push_back(clenshaw_curtis_1d(l));

    // Node coordinates keyed by their exact index on the finest dyadic CC grid.
    const int fine = cc_points(level) - 1;
    std::map<std::vector<int>, double> acc;
    const double scale = std::pow(0.5, m);
    double estimate = 0.0;
    detail::for_each_level_vector(m, std::max(0, level - m + 1), level, [&](const std::vector<int>& k, int sum) {
        double cnt = 1.0;
        for (int j = 0; j < m; ++j) cnt *= rules[k[j]].nodes.size();
        estimate += cnt;
        if (estimate > static_cast<double>(kMaxRuleNodes)) throw ConfigError("method: Smolyak rule exceeds 1e7 nodes");
        const double coef = ((level - sum) % 2 == 0 ? 1.0 : -1.0) * detail::binomial(m - 1, level - sum);
        std::vector<std::size_t> idx(m, 0);
        while (true) {
            std::vector<int> key(m);
            double w = coef * scale;
            for (int j = 0; j < m; ++j) {
                const auto& r = rules[k[j]];
                const int n = static_cast<int>(r.nodes.size());
                key[j] = n == 1 ? fine / 2 : static_cast<int>(idx[j]) * (fine / (n - 1));
                w *= r.weights[idx[j]];
            }
            acc[key] += w;
            int j = m - 1;
            while (j >= 0 && ++idx[j] == rules[k[j]].nodes.size()) idx[j--] = 0;
            if (j < 0) break;
        }
    });

    const Rule1d& finest = rules[level];
    QuadratureRule q;
    q.kind = RuleKind::SmolyakCc;
    q.dim = m;
    for (const auto& [key, w] : acc) {
        std::vector<double> x(m);
        for (int j = 0; j < m; ++j) x[j] = level == 0 ? 0.0 : finest.nodes[key[j]];
        q.nodes.push_back(std::move(x));
        q.weights.push_back(w);
    }
    return q;
}

/// Text table: header line, then one row per node with coordinates and weight (17 digits).
inline std::string rule_to_table(const QuadratureRule& q) {
    std::ostringstream os;
    os << "# kind=" << to_string(q.kind) << " dim=" << q.dim << " nodes=" << q.size() << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (double x : q.nodes[i]) os << x << ' ';
        os << q.weights[i] << '\n';
    }
    return os.str();
}

inline QuadratureRule rule_from_table(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    QuadratureRule q;
    if (!std::getline(is, line) || line.rfind("# kind=", 0) != 0) throw ConfigError("quadrature table: bad header");
    {
        std::istringstream hs(line.substr(7));
        std::string kind, dimtok;
        hs >> kind >> dimtok;
        q.kind = rule_kind_from_string(kind);
        if (dimtok.rfind("dim=", 0) != 0) throw ConfigError("quadrature table: bad header");
        q.dim = std::stoi(dimtok.substr(4));
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> x(q.dim);
        for (auto& v : x) ls >> v;
        double w = 0.0;
        ls >> w;
        if (!ls) throw ConfigError("quadrature table: malformed row");
        q.nodes.push_back(std::move(x));
        q.weights.push_back(w);
    }
    return q;
}

}  // namespace dduq
