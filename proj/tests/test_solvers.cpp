#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dduq/discretization.hpp"
#include "dduq/simulation.hpp"
#include "dduq/solvers/bicgstab.hpp"
#include "dduq/solvers/dense_lu.hpp"
#include "dduq/solvers/ilu0.hpp"
#include "dduq/solvers/multigrid.hpp"
#include "dduq/solvers/newton.hpp"
#include "support.hpp"

using namespace dduq;
using dduq::testing::PoissonBc;

namespace {

BlockCsrMatrix<1> tridiagonal(std::size_t n) {
    std::vector<std::vector<std::size_t>> pat(n);
    for (std::size_t i = 0; i < n; ++i) {
        pat[i].push_back(i);
        if (i > 0) pat[i].push_back(i - 1);
        if (i + 1 < n) pat[i].push_back(i + 1);
    }
    BlockCsrMatrix<1> a(pat);
    for (std::size_t i = 0; i < n; ++i) {
        a.at(i, i) = 2.5 + 0.1 * static_cast<double>(i);
        if (i > 0) a.at(i, i - 1) = -1.0;
        if (i + 1 < n) a.at(i, i + 1) = -0.7;
    }
    return a;
}

BlockCsrMatrix<1> diagonal(std::size_t n) {
    std::vector<std::vector<std::size_t>> pat(n);
    for (std::size_t i = 0; i < n; ++i) pat[i] = {i};
    BlockCsrMatrix<1> a(pat);
    for (std::size_t i = 0; i < n; ++i) a.at(i, i) = static_cast<double>(i + 1);
    return a;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

BoxDomain elder2d() {
    BoxDomain d;
    d.dim = 2;
    d.hi = {600.0, 150.0, 1.0};
    return d;
}

}  // namespace

TEST(Newton, ScalarQuadraticConvergence) {
    auto residual = [](std::span<const double> x) { return Vector{x[0] * x[0] - 4.0}; };
    auto step = [](std::span<const double> x, std::span<const double> r) {
        return LinearStep{Vector{r[0] / (2.0 * x[0])}, 1};
    };
    std::vector<double> iterates;
    NewtonConfig cfg;
    cfg.tol_abs = 1e-15;
    cfg.tol_rel = 1e-15;
    const auto res = newton_solve_with(residual, step, Vector{3.0}, cfg);
    EXPECT_NEAR(res.x[0], 2.0, 1e-15);
    // |R| = |x - 2||x + 2|, so error ratios follow from the residual history.
    const auto& h = res.report.residual_norms;
    ASSERT_GE(h.size(), 4u);
    for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        const double ek = h[k] / 4.0, ek1 = h[k + 1] / 4.0;
        if (ek < 1e-7) break;
        EXPECT_LE(ek1 / (ek * ek), 1.0) << "k=" << k;
    }
}

TEST(Newton, LinearResidualConvergesInOneIteration) {
    const auto a = tridiagonal(50);
    const auto b = dduq::testing::random_vector(50, 1);
    auto residual = [&](std::span<const double> x) {
        Vector r(x.size());
        a.multiply(x, r);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
        return r;
    };
    auto jacobian = [&](std::span<const double>) { return a; };
    NewtonConfig cfg;
    cfg.tol_rel = 1e-8;
    LinearSolverConfig lin;
    lin.krylov_tol_rel = 1e-12;
    const auto res = newton_solve<1>(residual, jacobian, Vector(50, 0.0), cfg, lin);
    EXPECT_EQ(res.report.iterations, 1);
    EXPECT_LE(norm2(residual(res.x)), 1e-11 * norm2(b));
}

TEST(Newton, NonConvergenceCarriesHistory) {
    auto residual = [](std::span<const double> x) { return Vector{x[0] * x[0] + 1.0}; };
    auto step = [](std::span<const double> x, std::span<const double> r) {
        return LinearStep{Vector{r[0] / (2.0 * x[0])}, 1};
    };
    NewtonConfig cfg;
    cfg.max_iter = 5;
    cfg.ls_max_halvings = 3;
    try {
        newton_solve_with(residual, step, Vector{1.0}, cfg);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_FALSE(e.history().empty());
    }
}

TEST(Newton, DeskScaleElderStep) {
    const auto d = elder2d();
    const auto grids = build_grid(d, {5, 3, 1}, 3, DirichletPatch::central_half(d));
    SimulationSetup setup;
    setup.grids = &grids;
    setup.coeff.phi.assign(grids.front().num_vertices(), 0.1);
    setup.coeff.K.assign(grids.front().num_vertices(), 4.845e-13);
    setup.newton.tol_rel = 1e-8;
    const TransientSolver solver(setup);
    FieldState s = initial_state(grids.front(), setup.params);
    const auto rep = solver.advance(s, 0.005 * kSecondsPerYear, 1);
    EXPECT_GE(rep.newton_iterations, 1);
    EXPECT_LE(rep.newton_iterations, 8);
    EXPECT_LE(rep.residual_norms.back(), std::max(1e-12, 1e-8 * rep.residual_norms.front()));
}

// Newton with an analytic and with a finite-difference Jacobian converge to the same state.
TEST(Newton, AnalyticAndFiniteDifferenceJacobiansAgree) {
    const auto d = elder2d();
    const auto g = build_grid(d, {5, 3, 1}, 2, DirichletPatch::central_half(d)).front();
    CoefficientFields coeff;
    coeff.phi.assign(g.num_vertices(), 0.1);
    coeff.K.assign(g.num_vertices(), 4.845e-13);
    DiscreteProblem pr{&g, &coeff, FlowParameters{}, tagged_boundary(g)};
    const FieldState s0 = initial_state(g, pr.params);
    const Vector xo = pack_state(s0);
    const double dt = 0.005 * kSecondsPerYear;
    auto residual = [&](std::span<const double> x) { return assemble_residual(pr, x, xo, dt); };
    auto analytic = [&](std::span<const double> x) { return assemble_jacobian(pr, x, xo, dt); };
    auto fd = [&](std::span<const double> x) {
        BlockCsrMatrix<2> j(stencil_pattern(g));
        const std::size_t n = x.size();
        for (std::size_t c = 0; c < n; ++c) {
            const double eps = 1e-7 * (c % 2 == 0 ? 1.0 : 1e6);
            Vector xp(x.begin(), x.end()), xm(x.begin(), x.end());
            xp[c] += eps;
            xm[c] -= eps;
            const auto rp = residual(xp), rm = residual(xm);
            for (std::size_t r = 0; r < n; ++r) {
                const double v = (rp[r] - rm[r]) / (2.0 * eps);
                if (v != 0.0 && j.find(r / 2, c / 2) != BlockCsrMatrix<2>::npos) j.at(r, c) = v;
            }
        }
        return j;
    };
    NewtonConfig cfg;
    cfg.tol_rel = 1e-12;
    cfg.tol_abs = 1e-14;
    LinearSolverConfig lin;
    lin.krylov_tol_rel = 1e-12;
    lin.krylov_max_iter = 500;
    const auto a = newton_solve<2>(residual, analytic, xo, cfg, lin);
    const auto f = newton_solve<2>(residual, fd, xo, cfg, lin);
    const auto sa = unpack_state(a.x, 0.0), sf = unpack_state(f.x, 0.0);
    EXPECT_LE(max_abs_diff(sa.c, sf.c), 1e-8);
    EXPECT_LE(max_abs_diff(sa.p, sf.p), 1e-8 * 1000.0 * 9.81 * 150.0);
}

TEST(Bicgstab, IdentityConvergesInOneIteration) {
    const auto b = dduq::testing::random_vector(40, 2);
    auto id = [](std::span<const double> in, std::span<double> out) { std::copy(in.begin(), in.end(), out.begin()); };
    const auto res = bicgstab(id, identity_preconditioner(), b, LinearSolverConfig{});
    EXPECT_EQ(res.iterations, 1);
    EXPECT_LE(max_abs_diff(res.x, b), 1e-14);
}

TEST(Bicgstab, DiagonalSystemMatchesDenseSolve) {
    const std::size_t n = 60;
    const auto a = diagonal(n);
    const auto b = dduq::testing::random_vector(n, 3);
    LinearSolverConfig cfg;
    cfg.krylov_tol_rel = 1e-12;
    const auto res = bicgstab(matrix_operator(a), identity_preconditioner(), b, cfg);
    const DenseLu lu(n, a.to_dense());
    const auto oracle = lu.solve(b);
    EXPECT_LE(max_abs_diff(res.x, oracle), 1e-8);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(oracle[i], b[i] / (i + 1.0), 1e-15);
}

TEST(Bicgstab, ZeroRightHandSide) {
    const auto a = tridiagonal(10);
    const auto res = bicgstab(matrix_operator(a), identity_preconditioner(), Vector(10, 0.0), LinearSolverConfig{},
                              Vector(10, 3.0));
    EXPECT_EQ(res.iterations, 0);
    for (double v : res.x) EXPECT_EQ(v, 0.0);
}

TEST(Bicgstab, MaxIterationsIsNonConvergence) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 5, std::nullopt);
    const auto levels = dduq::testing::poisson_levels(h, PoissonBc::AllDirichlet);
    auto b = dduq::testing::random_vector(levels[0].matrix.rows(), 4);
    LinearSolverConfig cfg;
    cfg.krylov_max_iter = 2;
    EXPECT_THROW(bicgstab(matrix_operator(levels[0].matrix), identity_preconditioner(), b, cfg), NonConvergenceError);
}

TEST(Bicgstab, MultigridPreconditionedPoisson33) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 5, std::nullopt);
    ASSERT_EQ(h.front().n()[0], 33);
    auto levels = dduq::testing::poisson_levels(h, PoissonBc::AllDirichlet);
    const auto mask = levels[0].dirichlet;
    const BlockCsrMatrix<1> a = levels[0].matrix;
    LinearSolverConfig cfg;
    cfg.krylov_tol_rel = 1e-8;
    const Multigrid<1> mg(std::move(levels), cfg);
    auto b = dduq::testing::random_vector(a.rows(), 5);
    for (std::size_t i = 0; i < b.size(); ++i)
        if (mask[i]) b[i] = 0.0;
    auto precond = [&mg](std::span<const double> in, std::span<double> out) { mg.apply(in, out); };
    const auto res = bicgstab(matrix_operator(a), precond, b, cfg);
    EXPECT_LE(res.iterations, 10);
    Vector r(b.size());
    a.residual(b, res.x, r);
    EXPECT_LE(norm2(r), 1e-8 * norm2(b));
    // Residual drift bounded over any 5-iteration window.
    const auto& hist = res.residual_history;
    for (std::size_t k = 5; k < hist.size(); ++k) EXPECT_LE(hist[k], hist[k - 5]);
}

TEST(Multigrid, ZeroRightHandSideGivesZero) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 4, std::nullopt);
    const Multigrid<1> mg(dduq::testing::poisson_levels(h, PoissonBc::TopDirichlet), LinearSolverConfig{});
    const Vector zero(h.front().num_vertices(), 0.0);
    const auto x = mg_vcycle(mg, zero, zero);
    for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Multigrid, ContractionFactorPoisson65) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 6, std::nullopt);
    ASSERT_EQ(h.front().n()[0], 65);
    auto levels = dduq::testing::poisson_levels(h, PoissonBc::AllDirichlet);
    const auto mask = levels[0].dirichlet;
    const Multigrid<1> mg(std::move(levels), LinearSolverConfig{});
    // Homogeneous problem: the iterate is the error.
    Vector x = dduq::testing::random_vector(h.front().num_vertices(), 6);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (mask[i]) x[i] = 0.0;
    const Vector zero(x.size(), 0.0);
    double prev = norm2(x), worst = 0.0;
    for (int k = 0; k < 8; ++k) {
        mg.cycle(zero, x);
        const double now = norm2(x);
        if (k >= 2) worst = std::max(worst, now / prev);
        prev = now;
    }
    EXPECT_LE(worst, 0.2);
}

TEST(Multigrid, RejectsMissingLevelMatrices) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 3, std::nullopt);
    auto levels = dduq::testing::poisson_levels(h, PoissonBc::AllDirichlet);
    levels[1].matrix = BlockCsrMatrix<1>();
    EXPECT_THROW(Multigrid<1>(std::move(levels), LinearSolverConfig{}), UsageError);
    std::vector<MgLevel<1>> none;
    EXPECT_THROW(Multigrid<1>(std::move(none), LinearSolverConfig{}), UsageError);
}

TEST(Multigrid, ManySmoothsCoarseSolverAlsoConverges) {
    const auto h = build_grid(dduq::testing::unit_square(), {3, 3, 1}, 5, std::nullopt);
    auto levels = dduq::testing::poisson_levels(h, PoissonBc::AllDirichlet);
    const auto a = levels[0].matrix;
    LinearSolverConfig cfg;
    cfg.mg_coarse = CoarseSolve::ManySmooths;
    const Multigrid<1> mg(std::move(levels), cfg);
    auto b = dduq::testing::random_vector(a.rows(), 7);
    for (std::size_t v = 0; v < b.size(); ++v)
        if (h.front().on_boundary(v)) b[v] = 0.0;
    auto precond = [&mg](std::span<const double> in, std::span<double> out) { mg.apply(in, out); };
    const auto res = bicgstab(matrix_operator(a), precond, b, cfg);
    EXPECT_LE(res.iterations, 12);
}

TEST(Ilu0, DiagonalMatrixSolvedInOneApplication) {
    const auto a = diagonal(20);
    const auto b = dduq::testing::random_vector(20, 8);
    Vector x(20, 0.0);
    ilu0_smoother(a).smooth(a, b, x);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(x[i], b[i] / (i + 1.0), 1e-15);
}

TEST(Ilu0, TridiagonalIsExactLu) {
    const auto a = tridiagonal(30);
    const auto b = dduq::testing::random_vector(30, 9);
    Vector x(30, 0.0);
    ilu0_smoother(a).smooth(a, b, x);
    Vector r(30);
    a.residual(b, x, r);
    EXPECT_LE(norm2(r), 1e-13 * norm2(b));
}

TEST(Ilu0, ZeroPivotIsShiftedWithWarning) {
    std::vector<std::vector<std::size_t>> pat{{0, 1}, {0, 1}};
    BlockCsrMatrix<1> a(pat);
    a.at(0, 0) = 0.0;
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 1.0;
    a.at(1, 1) = 1.0;
    const auto ilu = ilu0_smoother(a);
    EXPECT_FALSE(ilu.warnings().empty());
}

// High-frequency damping of one ILU(0) sweep on the 17x17 Dirichlet Laplacian, measured
// against the discrete sine modes (the Dirichlet counterpart of Fourier modes).
TEST(Ilu0, SmoothingFactorPoisson17) {
    const auto g = build_grid(dduq::testing::unit_square(), {17, 17, 1}, 1, std::nullopt).front();
    const auto mask = boundary_mask(g);
    const auto a = assemble_diffusion_operator(g, 1.0, 0.0, mask);
    const auto ilu = ilu0_smoother(a);
    const int m = 16;
    auto mode = [&](int k, int l) {
        Vector e(g.num_vertices(), 0.0);
        for (int j = 1; j < m; ++j)
            for (int i = 1; i < m; ++i)
                e[g.index(i, j)] = std::sin(std::numbers::pi * k * i / m) * std::sin(std::numbers::pi * l * j / m);
        return e;
    };
    std::vector<Vector> modes;
    std::vector<std::pair<int, int>> kl;
    for (int l = 1; l < m; ++l)
        for (int k = 1; k < m; ++k) {
            modes.push_back(mode(k, l));
            kl.emplace_back(k, l);
        }
    const double mode_norm2 = (m / 2.0) * (m / 2.0);
    const Vector zero(g.num_vertices(), 0.0);
    double mu = 0.0;
    for (std::size_t s = 0; s < modes.size(); ++s) {
        if (std::max(kl[s].first, kl[s].second) < m / 2) continue;
        Vector e = modes[s];
        ilu.smooth(a, zero, e);
        double high = 0.0;
        for (std::size_t t = 0; t < modes.size(); ++t) {
            if (std::max(kl[t].first, kl[t].second) < m / 2) continue;
            const double c = dot(e, modes[t]) / mode_norm2;
            high += c * c * mode_norm2;
        }
        mu = std::max(mu, std::sqrt(high / mode_norm2));
    }
    EXPECT_LE(mu, 0.5);
}

TEST(LinearSolverConfig, Validation) {
    LinearSolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.krylov_tol_rel = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    NewtonConfig n;
    n.max_iter = 0;
    EXPECT_THROW(n.validate(), ConfigError);
}

TEST(Determinism, IdenticalIterateHistory) {
    const auto d = elder2d();
    const auto grids = build_grid(d, {5, 3, 1}, 3, DirichletPatch::central_half(d));
    SimulationSetup setup;
    setup.grids = &grids;
    setup.coeff.phi.assign(grids.front().num_vertices(), 0.1);
    setup.coeff.K.assign(grids.front().num_vertices(), 4.845e-13);
    const TransientSolver solver(setup);
    FieldState a = initial_state(grids.front(), setup.params), b = a;
    const auto ra = solver.advance(a, 1e5, 1);
    const auto rb = solver.advance(b, 1e5, 1);
    EXPECT_EQ(ra.residual_norms, rb.residual_norms);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(a.p, b.p);
}
