#include "hpde/probes.hpp"

#include <algorithm>
#include <cmath>

#include "hpde/errors.hpp"

namespace hpde::probes {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Delta u and |grad u| everywhere, then the boundary trace of a field taken
// from the first interior layer.
double boundary_trace_max(const ProductGrid& g, const ScalarField& field) {
    const std::int64_t slice = g.slice_nodes();
    const std::int64_t first = slice;                             // layer is = 1
    const std::int64_t last = (g.s_res() - 2) * slice;            // layer is = s_res-2
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t t = 0; t < slice; ++t) {
        m = std::max(m, field[first + t]);
        m = std::max(m, field[last + t]);
    }
    return m;
}

double interior_max(const ProductGrid& g, const ScalarField& field) {
    const std::int64_t slice = g.slice_nodes();
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t x = slice; x < g.nodes() - slice; ++x) m = std::max(m, field[x]);
    return m;
}

}  // namespace

double boundary_estimate_ratio(const ProductGrid& g, const ScalarField& u,
                               const HermMat& omega) {
    ScalarField lap, gradn;
    grid::laplacian_and_gradient(g, u, omega, lap, gradn);
    double sup_grad2 = 0.0;
    for (double v : gradn) sup_grad2 = std::max(sup_grad2, v * v);
    const double sup_bd_lap = boundary_trace_max(g, lap);
    return sup_bd_lap / (1.0 + sup_grad2);
}

double global_second_ratio(const ProductGrid& g, const ScalarField& u, const HermMat& omega) {
    ScalarField lap, gradn;
    grid::laplacian_and_gradient(g, u, omega, lap, gradn);
    double sup_grad2 = 0.0;
    for (double v : gradn) sup_grad2 = std::max(sup_grad2, v * v);

    const HermMat w = inverse_sqrt(omega);
    ScalarField norms(g.nodes(), 0.0);
    const grid::HermitianField hess = grid::complex_hessian(g, u);
    const std::int64_t slice = g.slice_nodes();
    for (std::int64_t x = slice; x < g.nodes() - slice; ++x) {
        const HermMat b = congruence(w, hess.matrix_at(x));
        const EigResult e = hermitian_eigen(b);
        double spec = 0.0;
        for (int i = 0; i < e.n; ++i) spec = std::max(spec, std::abs(e.values[i]));
        norms[x] = spec;
    }
    const double sup_interior = interior_max(g, norms);
    const double sup_boundary = boundary_trace_max(g, norms);
    return sup_interior / (1.0 + sup_grad2 + sup_boundary);
}

GuanProbeResult guan_inequality_probe(const symfunc::OperatorSpec& op,
                                      const std::vector<double>& mu, double beta, int samples,
                                      std::uint64_t seed) {
    if (static_cast<int>(mu.size()) != op.n)
        throw DomainError("guan_inequality_probe: mu dimension mismatch");
    const symfunc::ConeSpec cone = op.cone();
    if (!symfunc::cone_contains(cone, mu))
        throw OutsideConeError("guan_inequality_probe: mu outside cone");

    const double f_mu = symfunc::f_eval(op, mu);
    const std::vector<double> nu_mu = symfunc::normal_vector(op, mu);

    GuanProbeResult out;
    out.eps_hat = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    for (int i = 0; i < samples; ++i) {
        const std::vector<double> lambda = symfunc::sample_cone(cone, rng);
        const std::vector<double> nu_l = symfunc::normal_vector(op, lambda);
        double sep2 = 0.0;
        for (int j = 0; j < op.n; ++j) sep2 += (nu_mu[j] - nu_l[j]) * (nu_mu[j] - nu_l[j]);
        if (std::sqrt(sep2) < beta) continue;

        const std::vector<double> fi = symfunc::f_grad(op, lambda);
        double pairing = 0.0, fsum = 0.0;
        for (int j = 0; j < op.n; ++j) {
            pairing += fi[j] * (mu[j] - lambda[j]);
            fsum += fi[j];
        }
        const double eps_here =
            (pairing - f_mu + symfunc::f_eval(op, lambda)) / (1.0 + fsum);
        out.eps_hat = std::min(out.eps_hat, eps_here);
        ++out.samples_used;
    }
    out.conclusive = out.samples_used > 0;
    if (!out.conclusive) out.eps_hat = 0.0;
    return out;
}

bool plateau_verdict(const std::vector<LadderRun>& runs) {
    if (runs.size() < 3) return false;
    const LadderRun& mid = runs[runs.size() - 2];
    const LadderRun& fine = runs.back();
    auto ok = [](double fine_v, double mid_v) {
        // Ratios can be ~0 (exact solutions); compare with an absolute floor.
        const double floor = 1e-12;
        return fine_v <= 1.1 * mid_v + floor;
    };
    return ok(fine.ratio_boundary, mid.ratio_boundary) &&
           ok(fine.ratio_global, mid.ratio_global);
}

ScalarField trig_reference_field(const ProductGrid& g, double amp) {
    ScalarField u(g.nodes(), 0.0);
    const int nd = g.ndirs();
    std::vector<int> idx(nd, 0);
    for (std::int64_t node = 0; node < g.nodes(); ++node) {
        double v = 0.0;
        for (int j = 0; j < g.p(); ++j)
            v += std::cos(kTwoPi * g.coordinate(2 * j, idx[2 * j]));
        v += std::cos(kTwoPi * g.coordinate(g.theta_dir(), idx[g.theta_dir()]));
        const double s = g.coordinate(g.s_dir(), idx[g.s_dir()]);
        v += s * s;
        u[node] = amp * v;
        for (int d = 0; d < nd; ++d) {
            if (++idx[d] < g.dim(d)) break;
            idx[d] = 0;
        }
    }
    return u;
}

namespace {

DirichletProblem base_problem(const symfunc::OperatorSpec& op, const ProductGrid& g) {
    DirichletProblem prob{op, g, HermMat::identity(g.n()), HermMat::identity(g.n()),
                          ScalarField(g.nodes(), 0.0), ScalarField(g.nodes(), 0.0)};
    return prob;
}

}  // namespace

DirichletProblem make_manufactured_problem(const symfunc::OperatorSpec& op,
                                           const ProductGrid& g, double amp) {
    DirichletProblem prob = base_problem(op, g);
    const ScalarField u_star = trig_reference_field(g, amp);
    prob.phi = u_star;  // boundary slices used
    prob.psi = dirichlet::f_of_g_field(prob, u_star);
    return prob;
}

DirichletProblem make_manufactured_problem_analytic(const symfunc::OperatorSpec& op,
                                                    const ProductGrid& g, double amp) {
    DirichletProblem prob = base_problem(op, g);
    prob.phi = trig_reference_field(g, amp);

    const int n = g.n();
    const int nd = g.ndirs();
    std::vector<int> idx(nd, 0);
    const double pi2 = M_PI * M_PI;
    for (std::int64_t node = 0; node < g.nodes(); ++node) {
        std::vector<double> lambda(n);
        for (int j = 0; j < g.p(); ++j) {
            const double xj = g.coordinate(2 * j, idx[2 * j]);
            lambda[j] = 1.0 - amp * pi2 * std::cos(kTwoPi * xj);
        }
        const double th = g.coordinate(g.theta_dir(), idx[g.theta_dir()]);
        lambda[n - 1] = 1.0 + amp * (0.5 - pi2 * std::cos(kTwoPi * th));
        std::sort(lambda.begin(), lambda.end());
        prob.psi[node] = symfunc::f_eval(op, lambda);
        for (int d = 0; d < nd; ++d) {
            if (++idx[d] < g.dim(d)) break;
            idx[d] = 0;
        }
    }
    return prob;
}

DirichletProblem make_geodesic_problem(const ProductGrid& g, double c, double psi0) {
    if (g.n() != 2) throw DomainError("make_geodesic_problem: needs n = 2");
    DirichletProblem prob = base_problem(symfunc::OperatorSpec::sigma_k_root(2, 2), g);
    HermMat chi(2);
    chi.set(0, 0, 1.0);
    prob.chi = chi;
    for (double& v : prob.psi) v = psi0;
    const std::int64_t slice = g.slice_nodes();
    for (std::int64_t t = 0; t < slice; ++t) {
        prob.phi[t] = 0.0;
        prob.phi[g.nodes() - slice + t] = c;
    }
    return prob;
}

EstimateProbe run_ladder(const std::string& family, const std::vector<int>& ladder,
                         const LadderSolver& solve) {
    EstimateProbe probe;
    probe.family = family;
    for (size_t i = 0; i < ladder.size(); ++i) {
        if (i > 0 && ladder[i] <= ladder[i - 1])
            throw DomainError("run_ladder: resolutions must strictly increase");
        SolvedProblem solved = solve(ladder[i]);
        LadderRun run;
        run.resolution = ladder[i];
        run.ratio_boundary =
            boundary_estimate_ratio(solved.problem.grid, solved.u, solved.problem.omega);
        run.ratio_global =
            global_second_ratio(solved.problem.grid, solved.u, solved.problem.omega);
        ScalarField margin;
        run.margin_min = dirichlet::admissibility_margin_field(solved.problem, solved.u, margin);
        probe.runs.push_back(run);
    }
    probe.plateau = plateau_verdict(probe.runs);
    return probe;
}

}  // namespace hpde::probes
