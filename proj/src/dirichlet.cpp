#include "hpde/dirichlet.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "hpde/errors.hpp"

namespace hpde::dirichlet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double binom(int n, int j) {
    double v = 1.0;
    for (int i = 1; i <= j; ++i) v = v * (n - i + 1) / i;
    return v;
}

// Walks interior nodes with an index odometer, same layout contract as the
// stencil kernels.
template <typename Body>
void for_each_interior(const ProductGrid& g, Exec mode, Body&& body) {
    const int nd = g.ndirs();
    const int s_dir = g.s_dir();
    const std::int64_t slice = g.slice_nodes();
    const std::int64_t layers = g.s_res() - 2;
    parallel_for(layers, mode, [&](std::int64_t layer) {
        const int is = 1 + static_cast<int>(layer);
        int idx[2 * HermMat::MAXN] = {};
        idx[s_dir] = is;
        std::int64_t node = static_cast<std::int64_t>(is) * slice;
        for (std::int64_t t = 0; t < slice; ++t, ++node) {
            body(node, idx);
            for (int d = 0; d < nd - 1; ++d) {
                if (++idx[d] < g.dim(d)) break;
                idx[d] = 0;
            }
        }
    });
}

double cone_margin(const symfunc::ConeSpec& cone, const double* lambda, int n) {
    if (cone.kind == symfunc::ConeKind::positive) {
        double m = kInf;
        for (int i = 0; i < n; ++i) m = std::min(m, lambda[i]);
        return m;
    }
    double m = kInf;
    std::span<const double> lam(lambda, static_cast<size_t>(n));
    for (int j = 1; j <= cone.k; ++j)
        m = std::min(m, symfunc::elementary_symmetric(lam, j) / binom(n, j));
    return m;
}

// Shared per-node machinery: g[u] = chi + Hess(u), reduction by the constant
// metric, eigenvalues, f and its derivative coefficients.
//
// The iteration state is the deviation v = u - phi_ext from the boundary
// extension; the form chi + i ddbar(phi_ext) is frozen once into a base
// field. Differencing only v keeps the 1/h^2 cancellation noise of an O(1)
// potential out of the residual, which matters when f' blows up near the
// degenerate limit.
class ProblemEval {
  public:
    explicit ProblemEval(const DirichletProblem& prob)
        : prob_(prob), n_(prob.grid.n()), identity_omega_(is_identity(prob.omega)),
          w_(identity_omega_ ? HermMat::identity(n_) : inverse_sqrt(prob.omega)),
          phi_ext_(grid::extend_boundary_linear_s(prob.grid, prob.phi)),
          base_(n_, prob.grid.nodes()) {
        for_each_interior(prob_.grid, Exec::openmp, [&](std::int64_t node, const int* idx) {
            HermMat hess(n_);
            grid::hessian_at(prob_.grid, phi_ext_.data(), node, idx, hess);
            base_.set_matrix(node, prob_.chi + hess);
        });
    }

    const ScalarField& phi_ext() const { return phi_ext_; }

    ScalarField to_deviation(const ScalarField& u) const {
        ScalarField v(u.size());
        for (size_t i = 0; i < u.size(); ++i) v[i] = u[i] - phi_ext_[i];
        const std::int64_t slice = prob_.grid.slice_nodes();
        std::fill(v.begin(), v.begin() + slice, 0.0);
        std::fill(v.end() - slice, v.end(), 0.0);
        return v;
    }

    ScalarField to_potential(const ScalarField& v) const {
        ScalarField u(v.size());
        for (size_t i = 0; i < v.size(); ++i) u[i] = v[i] + phi_ext_[i];
        return u;
    }

    struct NodeState {
        double lambda[HermMat::MAXN];
        EigResult eig;
        bool admissible = false;
    };

    // Eigen-decomposes the reduced form at one node of the deviation field.
    void node_state(const ScalarField& v, std::int64_t node, const int* idx,
                    NodeState& st) const {
        HermMat hess(n_);
        grid::hessian_at(prob_.grid, v.data(), node, idx, hess);
        HermMat gmat = base_.matrix_at(node) + hess;
        if (!identity_omega_) gmat = congruence(w_, gmat);
        st.eig = hermitian_eigen(gmat);
        for (int i = 0; i < n_; ++i) st.lambda[i] = st.eig.values[i];
        std::span<const double> lam(st.lambda, static_cast<size_t>(n_));
        st.admissible = symfunc::cone_contains(prob_.op.cone(), lam);
    }

    struct ResidualStats {
        bool admissible = true;
        double sup_residual = 0.0;
        double merit = 0.0;  // 1/2 sum r^2 over interior
        double min_margin = kInf;
        std::int64_t worst_node = -1;
    };

    // r = f(lambda(g[u])) - rhs on interior nodes of the deviation field v;
    // false as soon as any node leaves the cone (r is then meaningless).
    // When `coeff` is non-null the linearization blocks are filled from the
    // same eigendecomposition, so an accepted iterate needs no second pass.
    ResidualStats residual(const ScalarField& v, const ScalarField& rhs, ScalarField& r,
                           Exec mode, grid::HermitianField* coeff = nullptr) const {
        const ProductGrid& g = prob_.grid;
        const int layers = g.s_res() - 2;
        std::vector<ResidualStats> per_layer(layers);
        const symfunc::ConeSpec cone = prob_.op.cone();

        for_each_interior(g, mode, [&](std::int64_t node, const int* idx) {
            ResidualStats& acc = per_layer[idx[g.s_dir()] - 1];
            if (!acc.admissible) return;
            NodeState st;
            node_state(v, node, idx, st);
            if (!st.admissible) {
                acc.admissible = false;
                acc.worst_node = node;
                return;
            }
            std::span<const double> lam(st.lambda, static_cast<size_t>(n_));
            const double res = symfunc::f_eval(prob_.op, lam) - rhs[node];
            r[node] = res;
            acc.sup_residual = std::max(acc.sup_residual, std::abs(res));
            acc.merit += 0.5 * res * res;
            acc.min_margin = std::min(acc.min_margin, cone_margin(cone, st.lambda, n_));
            if (coeff) fill_coeff(st, node, *coeff);
        });

        ResidualStats total;
        for (const ResidualStats& acc : per_layer) {
            if (!acc.admissible) {
                total.admissible = false;
                total.worst_node = acc.worst_node;
            }
            total.sup_residual = std::max(total.sup_residual, acc.sup_residual);
            total.merit += acc.merit;
            total.min_margin = std::min(total.min_margin, acc.min_margin);
        }
        return total;
    }

    void fill_coeff(const NodeState& st, std::int64_t node, grid::HermitianField& coeff) const {
        std::span<const double> lam(st.lambda, static_cast<size_t>(n_));
        const std::vector<double> fi = symfunc::f_grad(prob_.op, lam);
        const int N = HermMat::MAXN;
        HermMat c(n_);
        for (int i = 0; i < n_; ++i) {
            for (int j = i; j < n_; ++j) {
                cplx acc = 0.0;
                for (int k = 0; k < n_; ++k)
                    acc += fi[k] * st.eig.vectors[i * N + k] *
                           std::conj(st.eig.vectors[j * N + k]);
                c.set(i, j, acc);
            }
        }
        if (!identity_omega_) c = congruence(w_, c);
        coeff.set_matrix(node, c);
    }

    // Linearization coefficients F'[u] = W U diag(f_i) U^H W per node.
    void assemble_coeff(const ScalarField& v, grid::HermitianField& coeff, Exec mode) const {
        const ProductGrid& g = prob_.grid;
        for_each_interior(g, mode, [&](std::int64_t node, const int* idx) {
            NodeState st;
            node_state(v, node, idx, st);
            if (!st.admissible)
                throw OutsideConeError("assemble_coeff: iterate left the cone");
            fill_coeff(st, node, coeff);
        });
    }

  private:
    static bool is_identity(const HermMat& m) {
        for (int i = 0; i < m.n(); ++i)
            for (int j = 0; j < m.n(); ++j) {
                const cplx want = i == j ? 1.0 : 0.0;
                if (std::abs(m(i, j) - want) > 0.0) return false;
            }
        return true;
    }

    const DirichletProblem& prob_;
    int n_;
    bool identity_omega_;
    HermMat w_;
    ScalarField phi_ext_;
    grid::HermitianField base_;  // chi + i ddbar(phi_ext) per interior node
};

// Newton iteration against a fixed right-hand side field. Appends per-path
// bookkeeping to the report.
struct NewtonOutcome {
    int iterations = 0;
    double residual_sup = 0.0;
    double final_margin = 0.0;
    double min_margin_seen = kInf;
};

// Operates on the deviation field v = u - phi_ext (zero on the boundary).
NewtonOutcome newton_on_rhs(const DirichletProblem& prob, const ProblemEval& eval,
                            ScalarField& v, const ScalarField& rhs, const SolverOptions& opts,
                            linsolve::FftWorkspace* fft, int iter_cap) {
    const ProductGrid& g = prob.grid;
    ScalarField r(g.nodes(), 0.0), r_trial(g.nodes(), 0.0), delta(g.nodes(), 0.0);
    ScalarField v_trial(g.nodes(), 0.0);
    grid::HermitianField coeff(g.n(), g.nodes());

    // Trial evaluations fill the linearization blocks from the same
    // eigendecomposition, so the accepted iterate never needs a second pass.
    ProblemEval::ResidualStats stats = eval.residual(v, rhs, r, opts.mode, &coeff);
    if (!stats.admissible)
        throw DomainError("newton_solve: initial iterate not admissible (node " +
                          std::to_string(stats.worst_node) + ")");
    NewtonOutcome out;
    out.min_margin_seen = stats.min_margin;

    for (int iter = 0; iter < iter_cap; ++iter) {
        if (stats.sup_residual < opts.tol_newton) break;
        linsolve::StencilOperator lop(g, coeff);
        ScalarField b(g.nodes(), 0.0);
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t x = slice; x < g.nodes() - slice; ++x) b[x] = -r[x];
        linsolve::solve_interior(lop, b, delta, opts.linear, fft);

        double step = 1.0;
        bool accepted = false;
        while (step >= opts.step_min) {
            for (std::int64_t x = 0; x < g.nodes(); ++x) v_trial[x] = v[x] + step * delta[x];
            ProblemEval::ResidualStats trial =
                eval.residual(v_trial, rhs, r_trial, opts.mode, &coeff);
            if (trial.admissible &&
                trial.merit <= (1.0 - 2.0 * opts.armijo_c * step) * stats.merit) {
                v.swap(v_trial);
                r.swap(r_trial);
                stats = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            throw NonAdmissibleStepError("newton_solve: line search underflow at step " +
                                         std::to_string(step));
        out.min_margin_seen = std::min(out.min_margin_seen, stats.min_margin);
        ++out.iterations;
        if (out.iterations == iter_cap && stats.sup_residual >= opts.tol_newton)
            throw NoConvergenceError("newton_solve: iteration cap reached (sup residual " +
                                     std::to_string(stats.sup_residual) + ")");
    }
    out.residual_sup = stats.sup_residual;
    out.final_margin = stats.min_margin;
    return out;
}

}  // namespace

double DirichletProblem::delta_psi_f() const {
    // The equation only sees psi at interior nodes.
    double inf_psi = kInf;
    const std::int64_t slice = grid.slice_nodes();
    for (std::int64_t x = slice; x < grid.nodes() - slice; ++x)
        inf_psi = std::min(inf_psi, psi[x]);
    return inf_psi - op.sup_boundary_f();
}

ScalarField solve_poisson_S(const SurfaceGrid& gs, double rhs) {
    if (gs.theta_res < 4 || gs.s_res < 4)
        throw DomainError("solve_poisson_S: resolutions >= 4 required");
    const int nt = gs.theta_res, ns = gs.s_res;
    const double ht = gs.h_theta(), hs = gs.h_s();
    const std::int64_t unknowns = static_cast<std::int64_t>(nt) * (ns - 2);

    auto uid = [&](int it, int is) { return static_cast<std::int64_t>(is - 1) * nt + it; };
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(unknowns * 5);
    Eigen::VectorXd b(unknowns);
    for (int is = 1; is <= ns - 2; ++is) {
        for (int it = 0; it < nt; ++it) {
            const std::int64_t row = uid(it, is);
            b[row] = rhs;
            const double ct = 0.25 / (ht * ht), cs = 0.25 / (hs * hs);
            trips.emplace_back(row, uid((it + 1) % nt, is), ct);
            trips.emplace_back(row, uid((it + nt - 1) % nt, is), ct);
            if (is + 1 <= ns - 2) trips.emplace_back(row, uid(it, is + 1), cs);
            if (is - 1 >= 1) trips.emplace_back(row, uid(it, is - 1), cs);
            trips.emplace_back(row, row, -2.0 * (ct + cs));
        }
    }
    Eigen::SparseMatrix<double> mat(unknowns, unknowns);
    mat.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success) throw LinearSolveError("poisson_S: factorization failed");
    Eigen::VectorXd x = lu.solve(b);
    // Iterative refinement buys back the h^-2 coefficient amplification.
    for (int pass = 0; pass < 3; ++pass) x += lu.solve(b - mat * x);

    const double scale = std::max(std::abs(rhs), 1.0);
    if ((mat * x - b).lpNorm<Eigen::Infinity>() > 1e-12 * scale)
        throw LinearSolveError("poisson_S: residual contract not met");

    ScalarField h(gs.nodes(), 0.0);
    for (int is = 1; is <= ns - 2; ++is)
        for (int it = 0; it < nt; ++it) h[gs.at(it, is)] = x[uid(it, is)];
    return h;
}

namespace {

// pi_2^* h: lift the surface field to the product grid.
ScalarField lift_surface_field(const ProductGrid& g, const SurfaceGrid& gs,
                               const ScalarField& h) {
    ScalarField out(g.nodes(), 0.0);
    const std::int64_t slice = g.slice_nodes();
    const std::int64_t theta_stride = g.stride(g.theta_dir());
    for (int is = 0; is < g.s_res(); ++is) {
        for (int it = 0; it < g.theta_res(); ++it) {
            const double val = h[gs.at(it, is)];
            const std::int64_t base = is * slice + it * theta_stride;
            for (std::int64_t t = 0; t < theta_stride; ++t) out[base + t] = val;
        }
    }
    return out;
}

struct MarginScan {
    bool all_in_cone = true;
    double min_margin = kInf;   // min over nodes of f(lambda(g[u])) - psi
    std::int64_t worst_node = -1;
};

MarginScan scan_margin(const DirichletProblem& prob, const ProblemEval& eval,
                       const ScalarField& v, Exec mode) {
    const ProductGrid& g = prob.grid;
    const int layers = g.s_res() - 2;
    std::vector<MarginScan> per_layer(layers);
    for_each_interior(g, mode, [&](std::int64_t node, const int* idx) {
        MarginScan& acc = per_layer[idx[g.s_dir()] - 1];
        ProblemEval::NodeState st;
        eval.node_state(v, node, idx, st);
        if (!st.admissible) {
            if (acc.all_in_cone) acc.worst_node = node;
            acc.all_in_cone = false;
            return;
        }
        if (!acc.all_in_cone) return;
        std::span<const double> lam(st.lambda, static_cast<size_t>(prob.grid.n()));
        const double value = symfunc::f_eval(prob.op, lam) - prob.psi[node];
        if (value < acc.min_margin) {
            acc.min_margin = value;
            acc.worst_node = node;
        }
    });
    MarginScan scan;
    for (const MarginScan& acc : per_layer) {
        if (!acc.all_in_cone && scan.all_in_cone) {
            scan.all_in_cone = false;
            scan.worst_node = acc.worst_node;
        }
        if (scan.all_in_cone && acc.min_margin < scan.min_margin) {
            scan.min_margin = acc.min_margin;
            scan.worst_node = acc.worst_node;
        }
        scan.min_margin = std::min(scan.min_margin, acc.min_margin);
    }
    return scan;
}

}  // namespace

SubsolutionResult construct_subsolution(const DirichletProblem& prob, double margin_target,
                                        const SolverOptions& opts) {
    if (!(margin_target > 0.0))
        throw DomainError("construct_subsolution: margin_target must be positive");
    const ProductGrid& g = prob.grid;
    const SurfaceGrid gs{g.theta_res(), g.s_res()};
    const ScalarField h_lift = lift_surface_field(g, gs, solve_poisson_S(gs, 1.0));

    ProblemEval eval(prob);
    ScalarField v(g.nodes(), 0.0);  // deviation from phi_ext: t * h
    auto margin_at = [&](double t) {
        for (std::int64_t x = 0; x < g.nodes(); ++x) v[x] = t * h_lift[x];
        return scan_margin(prob, eval, v, opts.mode);
    };

    double t_hi = -1.0, t_lo = 0.0;
    MarginScan scan = margin_at(0.0);
    if (scan.all_in_cone && scan.min_margin >= margin_target) {
        t_hi = 0.0;
    } else {
        MarginScan last = scan;
        for (double t = 1.0; t <= symfunc::kTMax; t *= 2.0) {
            scan = margin_at(t);
            if (scan.all_in_cone && scan.min_margin >= margin_target) {
                t_hi = t;
                t_lo = t == 1.0 ? 0.0 : t / 2.0;
                break;
            }
            last = scan;
        }
        if (t_hi < 0.0)
            throw NoSubsolutionError(
                "construct_subsolution: cone condition fails up to t_max at node " +
                    std::to_string(last.worst_node),
                last.worst_node);
        while (t_hi - t_lo > 0.05 * t_hi) {
            const double mid = 0.5 * (t_lo + t_hi);
            MarginScan ms = margin_at(mid);
            if (ms.all_in_cone && ms.min_margin >= margin_target)
                t_hi = mid;
            else
                t_lo = mid;
        }
    }

    SubsolutionResult res;
    res.t_star = t_hi;
    scan = margin_at(t_hi);
    res.u_sub = eval.to_potential(v);
    res.margin = scan.min_margin;
    const ScalarField dn = grid::boundary_normal_derivative(g, res.u_sub);
    double worst = -kInf;
    const std::int64_t slice = g.slice_nodes();
    for (std::int64_t x = 0; x < slice; ++x) worst = std::max(worst, dn[x]);
    for (std::int64_t x = g.nodes() - slice; x < g.nodes(); ++x)
        worst = std::max(worst, dn[x]);
    res.normal_derivative_max = worst;
    return res;
}

ScalarField solve_supersolution(const DirichletProblem& prob, const SolverOptions& opts,
                                linsolve::FftWorkspace* fft) {
    const ProductGrid& g = prob.grid;
    const ScalarField phi_ext = grid::extend_boundary_linear_s(g, prob.phi);
    const HermMat ginv = inverse(prob.omega);
    const grid::HermitianField coeff = grid::HermitianField::constant(g, ginv);
    linsolve::StencilOperator lap(g, coeff);

    double tr_chi = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) tr_chi += (ginv(i, j) * prob.chi(j, i)).real();

    ScalarField lap_phi(g.nodes(), 0.0);
    lap.apply(phi_ext.data(), lap_phi.data(), opts.mode);
    ScalarField b(g.nodes(), 0.0);
    const std::int64_t slice = g.slice_nodes();
    for (std::int64_t x = slice; x < g.nodes() - slice; ++x) b[x] = -tr_chi - lap_phi[x];

    ScalarField w;
    linsolve::solve_interior(lap, b, w, opts.linear, fft);
    ScalarField out = phi_ext;
    for (std::int64_t x = slice; x < g.nodes() - slice; ++x) out[x] = phi_ext[x] + w[x];
    return out;
}

SolveReport newton_solve(const DirichletProblem& prob, const ScalarField& u_init,
                         const SolverOptions& opts, linsolve::FftWorkspace* fft) {
    const auto start = std::chrono::steady_clock::now();
    ProblemEval eval(prob);
    SolveReport rep;
    ScalarField v = eval.to_deviation(u_init);
    NewtonOutcome out =
        newton_on_rhs(prob, eval, v, prob.psi, opts, fft, opts.max_newton_iters);
    rep.u = eval.to_potential(v);
    rep.newton_iters = {out.iterations};
    rep.t_path = {1.0};
    rep.residual_sup = out.residual_sup;
    rep.admissibility_margin = out.final_margin;
    rep.path_min_margin = out.min_margin_seen;
    rep.continuity_steps = 0;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start)
                      .count();
    return rep;
}

SolveReport continuity_solve(const DirichletProblem& prob, const SubsolutionResult& sub,
                             const SolverOptions& opts, linsolve::FftWorkspace* fft) {
    const auto start = std::chrono::steady_clock::now();
    const ProductGrid& g = prob.grid;
    if (!(prob.delta_psi_f() > 0.0))
        throw DomainError("continuity_solve: inf psi must exceed sup of f on the cone "
                          "boundary (degenerate data rejected)");

    ProblemEval eval(prob);
    ScalarField v = eval.to_deviation(sub.u_sub);

    // f(lambda(g[u_sub])) on interior nodes; the path right-hand side blends
    // it with psi.
    ScalarField f0(g.nodes(), 0.0);
    for_each_interior(g, opts.mode, [&](std::int64_t node, const int* idx) {
        ProblemEval::NodeState st;
        eval.node_state(v, node, idx, st);
        if (!st.admissible)
            throw OutsideConeError("continuity_solve: subsolution not admissible at node " +
                                   std::to_string(node));
        std::span<const double> lam(st.lambda, static_cast<size_t>(g.n()));
        f0[node] = symfunc::f_eval(prob.op, lam);
    });

    SolveReport rep;
    rep.t_path = {0.0};
    rep.newton_iters = {0};
    rep.path_min_margin = kInf;

    ScalarField rhs(g.nodes(), 0.0);
    double t = 0.0;
    double dt = opts.t_initial;
    ScalarField v_good = v;
    while (t < 1.0) {
        const double t_next = std::min(1.0, t + dt);
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t x = slice; x < g.nodes() - slice; ++x)
            rhs[x] = (1.0 - t_next) * f0[x] + t_next * prob.psi[x];
        try {
            NewtonOutcome out = newton_on_rhs(prob, eval, v, rhs, opts, fft,
                                              opts.max_newton_iters_per_path_step);
            t = t_next;
            v_good = v;
            rep.t_path.push_back(t);
            rep.newton_iters.push_back(out.iterations);
            rep.residual_sup = out.residual_sup;
            rep.admissibility_margin = out.final_margin;
            rep.path_min_margin = std::min(rep.path_min_margin, out.min_margin_seen);
            dt *= opts.t_grow;
        } catch (const NonAdmissibleStepError&) {
            v = v_good;
            dt *= 0.5;
            if (dt < opts.t_min)
                throw ContinuationStuckError("continuity_solve: step underflow at t = " +
                                                 std::to_string(t),
                                             t);
        } catch (const NoConvergenceError&) {
            v = v_good;
            dt *= 0.5;
            if (dt < opts.t_min)
                throw ContinuationStuckError("continuity_solve: step underflow at t = " +
                                                 std::to_string(t),
                                             t);
        }
    }
    rep.u = eval.to_potential(v);
    rep.continuity_steps = static_cast<int>(rep.t_path.size()) - 1;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start)
                      .count();
    return rep;
}

DegenerateResult solve_degenerate(const DirichletProblem& prob,
                                  const std::vector<double>& eps_schedule,
                                  const SolverOptions& opts, linsolve::FftWorkspace* fft) {
    if (eps_schedule.empty()) throw DomainError("solve_degenerate: empty schedule");
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0))
            throw DomainError("solve_degenerate: eps must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
            throw DomainError("solve_degenerate: schedule must descend");
    }
    if (!std::isfinite(prob.op.sup_boundary_f()))
        throw DomainError("solve_degenerate: operator must be continuous up to the cone "
                          "boundary (finite sup)");

    const ProductGrid& g = prob.grid;
    DegenerateResult result;
    ScalarField prev;
    DirichletProblem sub_prob = prob;

    for (size_t k = 0; k < eps_schedule.size(); ++k) {
        const double eps = eps_schedule[k];
        sub_prob.psi = prob.psi;
        for (double& v : sub_prob.psi) v += eps;

        if (k == 0) {
            const SubsolutionResult sub =
                construct_subsolution(sub_prob, std::max(0.1 * eps, 1e-12), opts);
            result.report = continuity_solve(sub_prob, sub, opts, fft);
        } else {
            try {
                result.report = newton_solve(sub_prob, prev, opts, fft);
            } catch (const std::runtime_error&) {
                // Re-enter through a short continuity path from the previous
                // solution, which solves its own t = 0 problem exactly.
                SubsolutionResult warm;
                warm.u_sub = prev;
                warm.t_star = 0.0;
                warm.margin = 0.0;
                result.report = continuity_solve(sub_prob, warm, opts, fft);
            }
        }

        CauchyRow row;
        row.eps = eps;
        row.admissibility_margin = result.report.admissibility_margin;
        ScalarField lap, gradn;
        grid::laplacian_and_gradient(g, result.report.u, prob.omega, lap, gradn, opts.mode);
        double sup_lap = 0.0;
        for (double v : lap) sup_lap = std::max(sup_lap, std::abs(v));
        row.sup_abs_laplacian = sup_lap;
        if (k > 0) {
            double diff = 0.0;
            for (std::int64_t x = 0; x < g.nodes(); ++x)
                diff = std::max(diff, std::abs(result.report.u[x] - prev[x]));
            row.sup_diff_to_prev = diff;
        }
        result.table.push_back(row);
        prev = result.report.u;
    }
    return result;
}

double comparison_check(const ProductGrid& g, const ScalarField& u1, const ScalarField& u2,
                        const ScalarField& phi1, const ScalarField& phi2) {
    double sup_m = 0.0;
    for (std::int64_t x = 0; x < g.nodes(); ++x)
        sup_m = std::max(sup_m, std::abs(u1[x] - u2[x]));
    double sup_b = 0.0;
    const std::int64_t slice = g.slice_nodes();
    for (std::int64_t x = 0; x < slice; ++x)
        sup_b = std::max(sup_b, std::abs(phi1[x] - phi2[x]));
    for (std::int64_t x = g.nodes() - slice; x < g.nodes(); ++x)
        sup_b = std::max(sup_b, std::abs(phi1[x] - phi2[x]));
    return sup_m - sup_b;
}

ScalarField f_of_g_field(const DirichletProblem& prob, const ScalarField& u, Exec mode) {
    ProblemEval eval(prob);
    const ScalarField v = eval.to_deviation(u);
    ScalarField out(prob.grid.nodes(), 0.0);
    for_each_interior(prob.grid, mode, [&](std::int64_t node, const int* idx) {
        ProblemEval::NodeState st;
        eval.node_state(v, node, idx, st);
        if (!st.admissible)
            throw OutsideConeError("f_of_g_field: point outside cone at node " +
                                   std::to_string(node));
        std::span<const double> lam(st.lambda, static_cast<size_t>(prob.grid.n()));
        out[node] = symfunc::f_eval(prob.op, lam);
    });
    return out;
}

grid::HermitianField linearization_coefficients(const DirichletProblem& prob,
                                                const ScalarField& u, Exec mode) {
    ProblemEval eval(prob);
    const ScalarField v = eval.to_deviation(u);
    grid::HermitianField coeff(prob.grid.n(), prob.grid.nodes());
    eval.assemble_coeff(v, coeff, mode);
    return coeff;
}

double admissibility_margin_field(const DirichletProblem& prob, const ScalarField& u,
                                  ScalarField& margin_out, Exec mode) {
    ProblemEval eval(prob);
    const ScalarField v = eval.to_deviation(u);
    const ProductGrid& g = prob.grid;
    margin_out.assign(g.nodes(), 0.0);
    const symfunc::ConeSpec cone = prob.op.cone();
    for_each_interior(g, mode, [&](std::int64_t node, const int* idx) {
        ProblemEval::NodeState st;
        eval.node_state(v, node, idx, st);
        margin_out[node] = cone_margin(cone, st.lambda, g.n());
    });
    return *std::min_element(margin_out.begin() + g.slice_nodes(),
                             margin_out.end() - g.slice_nodes());
}

}  // namespace hpde::dirichlet
