#pragma once

/**
 * @file gpc.hpp
 * @brief Legendre chaos surrogates on [-1,1]^M under the uniform density.
 *
 * A surrogate stores one dense spatial field per multi-index and snapshot:
 *   c(theta) ~ sum_beta c_beta Psi_beta(theta),  Psi_beta = prod_j psi_{beta_j}(theta_j),
 * with E[Psi_beta^2] = Q_beta = prod_j 1/(2 beta_j + 1).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dduq/errors.hpp"
#include "dduq/parallel.hpp"
#include "dduq/quadrature.hpp"

namespace dduq {

enum class TruncationRule { TotalDegree, MaxDegree, ProductDegree };

inline const char* to_string(TruncationRule r) {
    switch (r) {
        case TruncationRule::TotalDegree: return "total_degree";
        case TruncationRule::MaxDegree: return "max_degree";
        case TruncationRule::ProductDegree: return "product_degree";
    }
    return "?";
}

inline TruncationRule truncation_from_string(const std::string& s) {
    for (auto r : {TruncationRule::TotalDegree, TruncationRule::MaxDegree, TruncationRule::ProductDegree})
        if (s == to_string(r)) return r;
    throw ConfigError("method: unknown truncation rule '" + s + "'");
}

using MultiIndex = std::vector<int>;

struct MultiIndexSet {
    int dim = 0;
    int order = 0;
    TruncationRule rule = TruncationRule::TotalDegree;
    std::vector<MultiIndex> indices;

    std::size_t size() const noexcept { return indices.size(); }
    const MultiIndex& operator[](std::size_t i) const { return indices[i]; }
};

inline constexpr std::size_t kMaxMultiIndices = 100'000;

inline bool admissible(const MultiIndex& b, int p, TruncationRule rule) {
    switch (rule) {
        case TruncationRule::TotalDegree: {
            int s = 0;
            for (int v : b) s += v;
            return s <= p;
        }
        case TruncationRule::MaxDegree: return *std::max_element(b.begin(), b.end()) <= p;
        case TruncationRule::ProductDegree: {
            // Zero entries count as 1; the zero index is always kept.
            if (std::all_of(b.begin(), b.end(), [](int v) { return v == 0; })) return true;
            long long prod = 1;
            for (int v : b) {
                prod *= std::max(v, 1);
                if (prod > p) return false;
            }
            return true;
        }
    }
    return false;
}

/// Indices ordered by total degree, then lexicographically ascending.
inline MultiIndexSet build_multiindex_set(int m, int p, TruncationRule rule) {
    if (m < 1 || p < 0) throw ConfigError("method: multi-index set needs M >= 1 and p >= 0");
    MultiIndexSet s{m, p, rule, {}};
    // Each admissible entry is at most p under every rule (product rule: max(v,1) <= p).
    const int max_entry = std::max(p, 0);
    const int max_total = rule == TruncationRule::TotalDegree ? p : m * max_entry;
    MultiIndex b(m, 0);
    for (int deg = 0; deg <= max_total; ++deg) {
        auto rec = [&](auto&& self, int j, int left) -> void {
            if (j == m - 1) {
                if (left > max_entry) return;
                b[j] = left;
                if (admissible(b, p, rule)) {
                    if (s.indices.size() == kMaxMultiIndices)
                        throw ConfigError("method: multi-index set exceeds 1e5 members");
                    s.indices.push_back(b);
                }
                return;
            }
            for (int v = 0; v <= std::min(left, max_entry); ++v) {
                b[j] = v;
                self(self, j + 1, left - v);
            }
        };
        rec(rec, 0, deg);
    }
    return s;
}

inline double basis_eval(const MultiIndex& beta, std::span<const double> theta) {
    if (beta.size() != theta.size()) throw UsageError("basis_eval: dimension mismatch");
    double v = 1.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (beta[j] != 0) v *= legendre_eval(beta[j], theta[j]);
    return v;
}

inline double basis_norm(const MultiIndex& beta) {
    double q = 1.0;
    for (int b : beta) q /= (2.0 * b + 1.0);
    return q;
}

/// Scenario output used for projection: one field per snapshot.
using SnapshotFields = std::vector<std::vector<double>>;

struct GpcSurrogate {
    MultiIndexSet index_set;
    std::vector<double> norms;           ///< Q_beta in index order
    std::vector<double> snapshot_times;  ///< seconds
    std::size_t field_size = 0;
    /// coeffs[time][beta] is a field of length field_size.
    std::vector<std::vector<std::vector<double>>> coeffs;

    std::size_t num_times() const noexcept { return snapshot_times.size(); }
};

/// Projection c_beta = (1/Q_beta) sum_i w_i Psi_beta(theta_i) c(theta_i), per DoF and snapshot.
inline GpcSurrogate project(const std::vector<SnapshotFields>& samples, const QuadratureRule& rule,
                            const MultiIndexSet& set, std::vector<double> snapshot_times, int threads = 1) {
    if (samples.size() != rule.size()) throw UsageError("project: sample count does not match rule nodes");
    if (rule.dim != set.dim) throw UsageError("project: rule and index set dimensions differ");
    if (samples.empty()) throw UsageError("project: no samples");
    const std::size_t nt = snapshot_times.size();
    const std::size_t nf = samples.front().empty() ? 0 : samples.front().front().size();
    for (const auto& s : samples) {
        if (s.size() != nt) throw UsageError("project: snapshot count mismatch");
        for (const auto& f : s)
            if (f.size() != nf) throw UsageError("project: field length mismatch");
    }

    GpcSurrogate out;
    out.index_set = set;
    out.snapshot_times = std::move(snapshot_times);
    out.field_size = nf;
    for (const auto& b : set.indices) out.norms.push_back(basis_norm(b));

    // psi[beta][i] = w_i Psi_beta(theta_i) / Q_beta
    std::vector<std::vector<double>> psi(set.size(), std::vector<double>(rule.size()));
    for (std::size_t k = 0; k < set.size(); ++k)
        for (std::size_t i = 0; i < rule.size(); ++i)
            psi[k][i] = rule.weights[i] * basis_eval(set[k], rule.nodes[i]) / out.norms[k];

    out.coeffs.assign(nt, std::vector<std::vector<double>>(set.size(), std::vector<double>(nf, 0.0)));
    parallel_for(set.size(), threads, [&](std::size_t k) {
        for (std::size_t t = 0; t < nt; ++t) {
            auto& c = out.coeffs[t][k];
            for (std::size_t i = 0; i < rule.size(); ++i) {
                const double a = psi[k][i];
                const auto& f = samples[i][t];
                for (std::size_t d = 0; d < nf; ++d) c[d] += a * f[d];
            }
        }
    });
    return out;
}

inline std::vector<double> surrogate_mean(const GpcSurrogate& s, std::size_t time_index = 0) {
    return s.coeffs.at(time_index).at(0);
}

inline std::vector<double> surrogate_variance(const GpcSurrogate& s, std::size_t time_index = 0) {
    const auto& c = s.coeffs.at(time_index);
    std::vector<double> v(s.field_size, 0.0);
    for (std::size_t k = 1; k < c.size(); ++k)
        for (std::size_t d = 0; d < s.field_size; ++d) v[d] += s.norms[k] * c[k][d] * c[k][d];
    return v;
}

inline std::vector<double> surrogate_eval(const GpcSurrogate& s, std::span<const double> theta,
                                          std::size_t time_index = 0) {
    check_theta(theta, s.index_set.dim);
    const auto& c = s.coeffs.at(time_index);
    std::vector<double> out(s.field_size, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double b = basis_eval(s.index_set[k], theta);
        if (b == 0.0) continue;
        for (std::size_t d = 0; d < s.field_size; ++d) out[d] += b * c[k][d];
    }
    return out;
}

inline double surrogate_eval_at(const GpcSurrogate& s, std::span<const double> theta, std::size_t time_index,
                                std::size_t dof) {
    check_theta(theta, s.index_set.dim);
    const auto& c = s.coeffs.at(time_index);
    double v = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) v += basis_eval(s.index_set[k], theta) * c[k].at(dof);
    return v;
}

/// Scalar surrogate built directly from coefficients (field length 1, one snapshot).
inline GpcSurrogate scalar_surrogate(const MultiIndexSet& set, const std::vector<double>& coeffs) {
    if (coeffs.size() != set.size()) throw UsageError("scalar_surrogate: coefficient count mismatch");
    GpcSurrogate s;
    s.index_set = set;
    s.snapshot_times = {0.0};
    s.field_size = 1;
    s.coeffs.assign(1, {});
    for (std::size_t k = 0; k < set.size(); ++k) {
        s.norms.push_back(basis_norm(set[k]));
        s.coeffs[0].push_back({coeffs[k]});
    }
    return s;
}

struct ProbeStats {
    std::vector<double> histogram_edges;    ///< bins + 1 edges
    std::vector<double> histogram_density;  ///< normalized to unit integral
    std::vector<double> thresholds;
    std::vector<double> exceedance;  ///< #{c > c*} / Ns
    std::vector<double> quantile_levels;
    std::vector<double> quantiles;  ///< nearest-rank order statistics
    double sample_mean = 0.0;
    double sample_variance = 0.0;
};

/// Samples the surrogate at one DoF and snapshot with uniform theta drawn from mt19937_64(seed).
inline ProbeStats surrogate_sample_stats(const GpcSurrogate& s, std::size_t time_index, std::size_t dof,
                                         std::size_t ns, const std::vector<double>& thresholds,
                                         const std::vector<double>& quantile_levels, std::uint64_t seed,
                                         int bins = 50) {
    if (ns < 1) throw UsageError("surrogate_sample_stats: Ns must be >= 1");
    if (bins < 1) throw UsageError("surrogate_sample_stats: bins must be >= 1");
    const auto& c = s.coeffs.at(time_index);
    std::vector<double> cb(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) cb[k] = c[k].at(dof);

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int m = s.index_set.dim;
    std::vector<double> theta(m), values(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        for (auto& t : theta) t = u(gen);
        double v = 0.0;
        for (std::size_t k = 0; k < cb.size(); ++k) v += cb[k] * basis_eval(s.index_set[k], theta);
        values[i] = v;
    }

    ProbeStats st;
    st.thresholds = thresholds;
    for (double th : thresholds) {
        std::size_t cnt = 0;
        for (double v : values) cnt += v > th;
        st.exceedance.push_back(static_cast<double>(cnt) / static_cast<double>(ns));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(ns);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    st.sample_mean = mean;
    st.sample_variance = var / static_cast<double>(ns);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    st.quantile_levels = quantile_levels;
    for (double q : quantile_levels) {
        if (!(q >= 0.0 && q <= 1.0)) throw UsageError("surrogate_sample_stats: quantile level outside [0,1]");
        const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ns)));
        st.quantiles.push_back(sorted[std::clamp<std::size_t>(rank, 1, ns) - 1]);
    }

    const double lo = sorted.front(), hi = sorted.back();
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    st.histogram_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) st.histogram_edges[b] = lo + b * width;
    st.histogram_density.assign(bins, 0.0);
    for (double v : values) {
        auto b = static_cast<int>((v - lo) / width);
        st.histogram_density[std::clamp(b, 0, bins - 1)] += 1.0;
    }
    for (auto& h : st.histogram_density) h /= static_cast<double>(ns) * width;
    return st;
}

struct ApproximationError {
    double rms = 0.0;          ///< over validation points and DoFs
    double max_abs = 0.0;
    std::vector<double> l2_per_point;  ///< spatial L2 (Euclidean over DoFs) per validation point
};

/// Empirical surrogate error against reference fields at validation points (one snapshot).
inline ApproximationError approximation_error_report(const GpcSurrogate& s,
                                                     const std::vector<std::vector<double>>& thetas,
                                                     const std::vector<std::vector<double>>& reference,
                                                     std::size_t time_index = 0) {
    if (thetas.size() != reference.size() || thetas.empty())
        throw UsageError("approximation_error_report: validation set mismatch");
    ApproximationError e;
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < thetas.size(); ++v) {
        const auto approx = surrogate_eval(s, thetas[v], time_index);
        if (reference[v].size() != approx.size()) throw UsageError("approximation_error_report: field length mismatch");
        double local = 0.0;
        for (std::size_t d = 0; d < approx.size(); ++d) {
            const double diff = approx[d] - reference[v][d];
            local += diff * diff;
            e.max_abs = std::max(e.max_abs, std::abs(diff));
        }
        sq += local;
        count += approx.size();
        e.l2_per_point.push_back(std::sqrt(local));
    }
    e.rms = std::sqrt(sq / static_cast<double>(count));
    return e;
}

}  // namespace dduq
