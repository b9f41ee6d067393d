#pragma once

#include <cstdint>
#include <vector>

#include "hpde/grid.hpp"
#include "hpde/linsolve.hpp"
#include "hpde/symfunc.hpp"

namespace hpde::dirichlet {

using grid::ProductGrid;
using grid::ScalarField;

// F(chi + i ddbar u) = psi in M, u = phi on the two s-boundary slices.
// chi and omega are constant Hermitian forms (flat product background).
struct DirichletProblem {
    symfunc::OperatorSpec op;
    ProductGrid grid;
    HermMat chi;
    HermMat omega;
    ScalarField psi;  // full-size
    ScalarField phi;  // full-size; only the boundary slices are data

    double delta_psi_f() const;  // inf psi - sup_{boundary Gamma} f
};

struct SolverOptions {
    double tol_newton = 1e-9;
    int max_newton_iters = 200;
    double step_min = 9.313225746154785e-10;  // 2^-30
    double armijo_c = 1e-4;
    double t_initial = 0.25;
    double t_grow = 1.5;
    double t_min = 1e-4;
    int max_newton_iters_per_path_step = 30;
    linsolve::SolveOptions linear;
    Exec mode = Exec::openmp;
};

struct SolveReport {
    ScalarField u;
    std::vector<int> newton_iters;  // per accepted path step
    std::vector<double> t_path;
    double residual_sup = 0.0;
    double admissibility_margin = 0.0;  // min over interior nodes at the final u
    double path_min_margin = 0.0;       // min margin over every accepted iterate
    int continuity_steps = 0;
    double wall_ms = 0.0;
};

struct SubsolutionResult {
    ScalarField u_sub;
    double t_star = 0.0;
    double margin = 0.0;                // min over nodes of f(lambda(g[u_sub])) - psi
    double normal_derivative_max = 0.0; // max over boundary of du/dnu, recorded
};

// Flat cylinder surface grid for the S-factor Poisson problem.
struct SurfaceGrid {
    int theta_res = 0;
    int s_res = 0;
    double h_theta() const { return 1.0 / theta_res; }
    double h_s() const { return 1.0 / (s_res - 1); }
    std::int64_t nodes() const { return static_cast<std::int64_t>(theta_res) * s_res; }
    std::int64_t at(int itheta, int is) const {
        return static_cast<std::int64_t>(is) * theta_res + itheta;
    }
};

// Solves 1/4 (h_ss + h_thetatheta) = rhs with h = 0 at s in {0, 1};
// sup-norm residual < 1e-12 relative to |rhs|.
ScalarField solve_poisson_S(const SurfaceGrid& gs, double rhs);

// u_sub = phi_ext + t * h with h the S-factor Poisson solution lifted to the
// product; doubling then bisection finds the least t (within factor 1.05)
// whose node-wise margin reaches margin_target. Throws NoSubsolutionError
// naming the worst node when the cone condition fails up to the bound.
SubsolutionResult construct_subsolution(const DirichletProblem& prob, double margin_target,
                                        const SolverOptions& opts = {});

// Linear upper barrier: Delta u_check + tr_omega(chi) = 0, u_check = phi.
ScalarField solve_supersolution(const DirichletProblem& prob, const SolverOptions& opts = {},
                                linsolve::FftWorkspace* fft = nullptr);

// Damped Newton on f(lambda(g[u])) - rhs with backtracking that keeps every
// node strictly admissible (u_init must be admissible, else DomainError).
SolveReport newton_solve(const DirichletProblem& prob, const ScalarField& u_init,
                         const SolverOptions& opts = {},
                         linsolve::FftWorkspace* fft = nullptr);

// Continuity path F(g[u^t]) = (1-t) F(g[u_sub]) + t psi from t = 0 (solved
// exactly by u_sub) to t = 1, with adaptive steps.
SolveReport continuity_solve(const DirichletProblem& prob, const SubsolutionResult& sub,
                             const SolverOptions& opts = {},
                             linsolve::FftWorkspace* fft = nullptr);

struct CauchyRow {
    double eps = 0.0;
    double sup_diff_to_prev = 0.0;
    double admissibility_margin = 0.0;
    double sup_abs_laplacian = 0.0;  // bounded-Delta diagnostic
};

struct DegenerateResult {
    SolveReport report;             // for the last epsilon
    std::vector<CauchyRow> table;   // rows from the second epsilon on carry diffs
};

// Solves F = psi + eps for a descending schedule with warm starts,
// approximating the degenerate problem inf psi = sup_{bd Gamma} f.
DegenerateResult solve_degenerate(const DirichletProblem& prob,
                                  const std::vector<double>& eps_schedule,
                                  const SolverOptions& opts = {},
                                  linsolve::FftWorkspace* fft = nullptr);

// sup_M |u1 - u2| - sup_boundary |phi1 - phi2|.
double comparison_check(const ProductGrid& g, const ScalarField& u1, const ScalarField& u2,
                        const ScalarField& phi1, const ScalarField& phi2);

// f(lambda(g[u])) per interior node (zero at boundary slices).
ScalarField f_of_g_field(const DirichletProblem& prob, const ScalarField& u,
                         Exec mode = Exec::openmp);

// Coefficients of the linearized operator at u: per interior node the
// Hermitian F'[u] = W U diag(f_i(lambda)) U^H W with W = omega^{-1/2}.
// Feeding these to StencilOperator realizes v -> dF[u] v.
grid::HermitianField linearization_coefficients(const DirichletProblem& prob,
                                                const ScalarField& u,
                                                Exec mode = Exec::openmp);

// Per-node admissibility margin: min_j sigma_j(lambda)/binom(n,j) over
// j <= k for gamma_k, min_i lambda_i for the positive cone. Returns the
// field (zero at boundary) and the interior minimum.
double admissibility_margin_field(const DirichletProblem& prob, const ScalarField& u,
                                  ScalarField& margin_out, Exec mode = Exec::openmp);

}  // namespace hpde::dirichlet
