#include <doctest.h>

#include <cmath>

#include "hpde/dirichlet.hpp"
#include "hpde/errors.hpp"
#include "hpde/linsolve.hpp"
#include "hpde/probes.hpp"
#include "hpde/rng.hpp"

using namespace hpde;
using namespace hpde::grid;
using namespace hpde::dirichlet;

namespace {

DirichletProblem flat_problem(const symfunc::OperatorSpec& op, const ProductGrid& g) {
    return DirichletProblem{op, g, HermMat::identity(g.n()), HermMat::identity(g.n()),
                            ScalarField(g.nodes(), 0.0), ScalarField(g.nodes(), 0.0)};
}

double sup_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("dirichlet") {
    TEST_CASE("poisson on the flat cylinder is discretely exact") {
        for (int res : {16, 24}) {
            SurfaceGrid gs{res, res};
            const ScalarField h = solve_poisson_S(gs, 1.0);
            double worst = 0.0;
            for (int is = 0; is < gs.s_res; ++is) {
                const double s = is * gs.h_s();
                const double want = 2.0 * s * (s - 1.0);
                for (int it = 0; it < gs.theta_res; ++it)
                    worst = std::max(worst, std::abs(h[gs.at(it, is)] - want));
            }
            CHECK(worst < 1e-10);
        }

        SurfaceGrid gs{8, 8};
        const ScalarField zero = solve_poisson_S(gs, 0.0);
        for (double v : zero) CHECK(v == doctest::Approx(0.0));

        // Interior minimum of 2s(s-1) is -1/2 at s = 1/2.
        SurfaceGrid gs2{4, 17};
        const ScalarField h2 = solve_poisson_S(gs2, 1.0);
        double min_v = 0.0;
        for (double v : h2) min_v = std::min(min_v, v);
        CHECK(min_v == doctest::Approx(-0.5).epsilon(1e-10));
    }

    TEST_CASE("subsolution: sigma_2 root with X-factor background") {
        ProductGrid g(1, 4, 8, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::sigma_k_root(2, 2), g);
        HermMat chi(2);
        chi.set(0, 0, 1.0);
        prob.chi = chi;
        for (double& v : prob.psi) v = 1.0;

        const SubsolutionResult sub = construct_subsolution(prob, 0.1);
        // f(lambda(chi + t i ddbar h)) = sqrt(t); need sqrt(t) >= 1.1.
        CHECK(sub.t_star >= 1.21 - 1e-9);
        CHECK(sub.t_star <= 1.21 * 1.06);
        CHECK(sub.margin >= 0.1);
        CHECK(sub.normal_derivative_max < 0.0);

        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t t = 0; t < slice; ++t) {
            CHECK(sub.u_sub[t] == doctest::Approx(0.0));
            CHECK(sub.u_sub[g.nodes() - slice + t] == doctest::Approx(0.0));
        }
    }

    TEST_CASE("subsolution accepts t = 0 when the data already works") {
        ProductGrid g(1, 4, 8, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        for (double& v : prob.psi) v = -1.0;  // f(lambda(I)) = 0 > -1 + margin
        const SubsolutionResult sub = construct_subsolution(prob, 0.5);
        CHECK(sub.t_star == 0.0);
        CHECK(sub.margin >= 0.5);
    }

    TEST_CASE("subsolution fails when the X-factor never enters the cone") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::sigma_k_root(2, 2), g);
        prob.chi = HermMat(2);  // zero background: lambda = (0, t), sigma_2 = 0
        for (double& v : prob.psi) v = 1.0;
        CHECK_THROWS_AS(construct_subsolution(prob, 0.1), NoSubsolutionError);
    }

    TEST_CASE("supersolution solves the linear problem") {
        ProductGrid g(1, 4, 12, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        prob.chi = HermMat(2);  // zero
        ScalarField usuper = solve_supersolution(prob);
        for (double v : usuper) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

        // chi = omega = I, n = 2, phi = 0: Delta u = -2 gives u = 4 s (1 - s).
        prob.chi = HermMat::identity(2);
        usuper = solve_supersolution(prob);
        const std::int64_t slice = g.slice_nodes();
        for (int is = 0; is < g.s_res(); ++is) {
            const double s = is * g.spacing(g.s_dir());
            CHECK(usuper[is * slice] == doctest::Approx(4.0 * s * (1.0 - s)).epsilon(1e-10));
        }
    }

    TEST_CASE("newton: zero iterations at an exact start") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        for (double& v : prob.psi) v = 0.0;  // f(lambda(I)) = 0
        const SolveReport rep = newton_solve(prob, ScalarField(g.nodes(), 0.0));
        CHECK(rep.newton_iters[0] == 0);
        CHECK(rep.residual_sup < 1e-15);
        CHECK(rep.admissibility_margin == doctest::Approx(1.0));
    }

    TEST_CASE("newton rejects an inadmissible start") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        prob.chi = HermMat::diagonal({-1.0, -1.0});
        CHECK_THROWS_AS(newton_solve(prob, ScalarField(g.nodes(), 0.0)), DomainError);
    }

    TEST_CASE("manufactured solution is recovered on the same grid") {
        ProductGrid g(1, 8, 8, 8);
        for (auto op :
             {symfunc::OperatorSpec::log_ma(2), symfunc::OperatorSpec::sigma_k_root(2, 2)}) {
            DirichletProblem prob = probes::make_manufactured_problem(op, g, 0.05);
            const ScalarField u_star = probes::trig_reference_field(g, 0.05);
            const SubsolutionResult sub = construct_subsolution(prob, 0.05);
            const SolveReport rep = continuity_solve(prob, sub);
            INFO(op.name());
            CHECK(rep.residual_sup < 1e-9);
            CHECK(sup_diff(rep.u, u_star) < 1e-8);
            CHECK(rep.path_min_margin > 0.0);
            CHECK(rep.t_path.back() == 1.0);
            CHECK(rep.t_path.front() == 0.0);
        }
    }

    TEST_CASE("continuity with a constant path converges instantly") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        const SubsolutionResult sub{ScalarField(g.nodes(), 0.0), 0.0, 0.0, 0.0};
        prob.psi = f_of_g_field(prob, sub.u_sub);  // interior psi = 0 = f(I)
        const SolveReport rep = continuity_solve(prob, sub);
        CHECK(rep.residual_sup < 1e-12);
        for (int iters : rep.newton_iters) CHECK(iters <= 1);
    }

    TEST_CASE("continuity rejects degenerate data upfront") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::sigma_k_root(2, 2), g);
        for (double& v : prob.psi) v = 0.0;  // inf psi == sup_boundary f == 0
        SubsolutionResult sub{ScalarField(g.nodes(), 0.0), 0.0, 0.0, 0.0};
        CHECK_THROWS_AS(continuity_solve(prob, sub), DomainError);
    }

    TEST_CASE("jacobian matches directional finite differences") {
        ProductGrid g(1, 6, 6, 6);
        const std::int64_t slice = g.slice_nodes();
        for (auto op :
             {symfunc::OperatorSpec::log_ma(2), symfunc::OperatorSpec::sigma_k_root(2, 2)}) {
            DirichletProblem prob = probes::make_manufactured_problem(op, g, 0.03);
            const ScalarField u = probes::trig_reference_field(g, 0.03);

            const grid::HermitianField coeff = linearization_coefficients(prob, u);
            linsolve::StencilOperator lop(g, coeff);
            Rng rng(7);
            ScalarField w(g.nodes(), 0.0);
            for (std::int64_t v = slice; v < g.nodes() - slice; ++v)
                w[v] = rng.uniform(-1, 1);
            ScalarField jw(g.nodes(), 0.0);
            lop.apply(w.data(), jw.data(), Exec::serial);

            const double h = 1e-6;
            ScalarField up(g.nodes()), dn(g.nodes());
            for (std::int64_t v = 0; v < g.nodes(); ++v) {
                up[v] = u[v] + h * w[v];
                dn[v] = u[v] - h * w[v];
            }
            const ScalarField rp = f_of_g_field(prob, up);
            const ScalarField rm = f_of_g_field(prob, dn);
            double max_err = 0.0, max_ref = 0.0;
            for (std::int64_t v = slice; v < g.nodes() - slice; ++v) {
                const double fd = (rp[v] - rm[v]) / (2 * h);
                max_err = std::max(max_err, std::abs(fd - jw[v]));
                max_ref = std::max(max_ref, std::abs(jw[v]));
            }
            INFO(op.name());
            CHECK(max_err <= 1e-5 * std::max(1.0, max_ref));
        }
    }

    TEST_CASE("degenerate trivial geodesic collapses to c s") {
        ProductGrid g(1, 4, 12, 6);
        DirichletProblem prob = probes::make_geodesic_problem(g, 1.0, 0.0);
        const std::vector<double> schedule{1e-1, 1e-2, 1e-3};
        const DegenerateResult result = solve_degenerate(prob, schedule);

        ScalarField cs(g.nodes(), 0.0);
        const std::int64_t slice = g.slice_nodes();
        for (int is = 0; is < g.s_res(); ++is) {
            const double s = is * g.spacing(g.s_dir());
            for (std::int64_t t = 0; t < slice; ++t) cs[is * slice + t] = s;
        }
        // u_eps = c s + 2 eps^2 (s^2 - s): sup difference eps^2 / 2.
        CHECK(sup_diff(result.report.u, cs) == doctest::Approx(0.5 * 1e-6).epsilon(1e-2));
        REQUIRE(result.table.size() == 3);
        CHECK(result.table[1].sup_diff_to_prev > result.table[2].sup_diff_to_prev);
        CHECK(result.table[0].admissibility_margin > result.table[1].admissibility_margin);
        CHECK(result.table[1].admissibility_margin > result.table[2].admissibility_margin);
        CHECK(result.table[2].admissibility_margin > 0.0);
        // margin tracks eps^2 for lambda = (eps^2, 1).
        CHECK(result.table[2].admissibility_margin == doctest::Approx(1e-6).epsilon(1e-3));
    }

    TEST_CASE("degenerate guard: log_ma is rejected") {
        ProductGrid g(1, 4, 6, 4);
        DirichletProblem prob = flat_problem(symfunc::OperatorSpec::log_ma(2), g);
        CHECK_THROWS_AS(solve_degenerate(prob, {0.1}), DomainError);
    }

    TEST_CASE("comparison check: identical and shifted problems") {
        ProductGrid g(1, 6, 8, 6);
        const auto op = symfunc::OperatorSpec::log_ma(2);
        DirichletProblem prob = probes::make_manufactured_problem(op, g, 0.04);
        const SubsolutionResult sub = construct_subsolution(prob, 0.05);
        const SolveReport rep1 = continuity_solve(prob, sub);

        CHECK(comparison_check(g, rep1.u, rep1.u, prob.phi, prob.phi) <= 0.0);

        // Constant shift: u2 = u1 + delta exactly for translation-invariant F.
        const double delta = 0.3;
        DirichletProblem prob2 = prob;
        for (double& v : prob2.phi) v += delta;
        const SubsolutionResult sub2 = construct_subsolution(prob2, 0.05);
        const SolveReport rep2 = continuity_solve(prob2, sub2);
        ScalarField shifted = rep1.u;
        for (double& v : shifted) v += delta;
        CHECK(sup_diff(rep2.u, shifted) <= 2e-9);
        CHECK(std::abs(comparison_check(g, rep1.u, rep2.u, prob.phi, prob2.phi)) <= 2e-9);
    }

    TEST_CASE("monotone dependence on psi") {
        ProductGrid g(1, 6, 6, 6);
        const auto op = symfunc::OperatorSpec::log_ma(2);
        DirichletProblem lo = probes::make_manufactured_problem(op, g, 0.03);
        DirichletProblem hi = lo;
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t v = slice; v < g.nodes() - slice; ++v) hi.psi[v] += 0.05;

        const SolveReport rep_lo = continuity_solve(lo, construct_subsolution(lo, 0.1));
        const SolveReport rep_hi = continuity_solve(hi, construct_subsolution(hi, 0.1));
        double worst = 0.0;
        for (std::int64_t v = 0; v < g.nodes(); ++v)
            worst = std::min(worst, rep_lo.u[v] - rep_hi.u[v]);
        CHECK(worst >= -1e-8);
    }

    TEST_CASE("admissible solutions keep the trace positive") {
        // Gamma sits inside gamma_1, so Delta u + tr_omega(chi) = sum lambda_i > 0.
        ProductGrid g(1, 6, 8, 6);
        const auto op = symfunc::OperatorSpec::sigma_k_root(2, 2);
        DirichletProblem prob = probes::make_manufactured_problem(op, g, 0.04);
        const SolveReport rep = continuity_solve(prob, construct_subsolution(prob, 0.05));
        ScalarField lap, gradn;
        laplacian_and_gradient(g, rep.u, prob.omega, lap, gradn);
        const double tr_chi = 2.0;  // tr(I^{-1} I) for n = 2
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t v = slice; v < g.nodes() - slice; ++v)
            CHECK(lap[v] + tr_chi > 0.0);
    }

    TEST_CASE("sandwich between subsolution and supersolution") {
        ProductGrid g(1, 6, 8, 6);
        for (auto op :
             {symfunc::OperatorSpec::log_ma(2), symfunc::OperatorSpec::sigma_k_root(2, 2)}) {
            DirichletProblem prob = probes::make_manufactured_problem(op, g, 0.04);
            const SubsolutionResult sub = construct_subsolution(prob, 0.05);
            const ScalarField usuper = solve_supersolution(prob);
            const SolveReport rep = continuity_solve(prob, sub);
            INFO(op.name());
            double below = 0.0, above = 0.0;
            for (std::int64_t v = 0; v < g.nodes(); ++v) {
                below = std::max(below, sub.u_sub[v] - rep.u[v]);
                above = std::max(above, rep.u[v] - usuper[v]);
            }
            CHECK(below <= 1e-10);
            CHECK(above <= 1e-10);
        }
    }
}
