#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hpde/dirichlet.hpp"

namespace hpde::probes {

using dirichlet::DirichletProblem;
using dirichlet::SolverOptions;
using grid::ProductGrid;
using grid::ScalarField;

// sup_boundary(Delta u) / (1 + sup_M |grad u|^2). The boundary Laplacian is
// the interior-limit stencil: the value at the first interior layer next to
// each boundary node.
double boundary_estimate_ratio(const ProductGrid& g, const ScalarField& u,
                               const HermMat& omega);

// sup_M |ddbar u| / (1 + sup_M |grad u|^2 + sup_boundary |ddbar u|), with
// |ddbar u| the per-node spectral norm and the boundary value again taken
// from the first interior layer.
double global_second_ratio(const ProductGrid& g, const ScalarField& u, const HermMat& omega);

struct GuanProbeResult {
    bool conclusive = false;  // false when no sample met the separation bound
    double eps_hat = 0.0;
    int samples_used = 0;
};

// Largest eps such that sum f_i(lambda)(mu_i - lambda_i) >= f(mu) - f(lambda)
// + eps (1 + sum f_i(lambda)) holds over sampled lambda with normal
// separation |nu_mu - nu_lambda| >= beta.
GuanProbeResult guan_inequality_probe(const symfunc::OperatorSpec& op,
                                      const std::vector<double>& mu, double beta, int samples,
                                      std::uint64_t seed);

struct LadderRun {
    int resolution = 0;
    double ratio_boundary = 0.0;
    double ratio_global = 0.0;
    double margin_min = 0.0;
};

struct EstimateProbe {
    std::string family;
    std::vector<LadderRun> runs;   // strictly increasing resolutions
    bool plateau = false;          // finest ratio <= 1.1 x middle ratio, both probes
};

// "Bounded constant" operationalized as a plateau across the ladder.
bool plateau_verdict(const std::vector<LadderRun>& runs);

// --------------------------------------------------------------------------
// Problem families shared by the probe driver, the CLI and the tests.

// u*(x) = amp (sum_j cos 2 pi x_j + cos 2 pi theta + s^2) on the product
// grid; chi = omega = identity.
ScalarField trig_reference_field(const ProductGrid& g, double amp);

// Dirichlet problem whose right-hand side is the discrete f(lambda(g[u*])),
// so u* solves the discrete equations exactly.
DirichletProblem make_manufactured_problem(const symfunc::OperatorSpec& op,
                                           const ProductGrid& g, double amp);

// Same but psi evaluated from the analytic Hessian of u*; the discrete
// solution then differs from u* by the truncation error.
DirichletProblem make_manufactured_problem_analytic(const symfunc::OperatorSpec& op,
                                                    const ProductGrid& g, double amp);

// Degenerate-limit family: f = sigma_2^(1/2) (n = 2), chi = pi_1^* omega_X,
// psi = psi0 (0 in the degenerate limit), phi = c s on the boundary.
DirichletProblem make_geodesic_problem(const ProductGrid& g, double c, double psi0);

struct SolvedProblem {
    DirichletProblem problem;
    ScalarField u;
};
using LadderSolver = std::function<SolvedProblem(int resolution)>;

// Runs one problem family across a resolution ladder and fills the probe.
// `solve` maps a resolution to a solved problem on its own grid.
EstimateProbe run_ladder(const std::string& family, const std::vector<int>& ladder,
                         const LadderSolver& solve);

}  // namespace hpde::probes
