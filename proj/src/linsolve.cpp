#include "hpde/linsolve.hpp"

#include <fftw3.h>

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "hpde/errors.hpp"

namespace hpde::linsolve {

StencilOperator::StencilOperator(const ProductGrid& g, const HermitianField& coeff)
    : g_(g), c_(coeff) {
    if (coeff.n != g.n() || coeff.count != g.nodes())
        throw DomainError("StencilOperator: coefficient field shape mismatch");
}

template <typename Emit>
void StencilOperator::row(std::int64_t node, const int* idx, Emit&& emit) const {
    const int n = g_.n();
    double center = 0.0;
    for (int j = 0; j < n; ++j) {
        const int rj = g_.re_dir(j), ij = g_.im_dir(j);
        const double hr = g_.spacing(rj), hi = g_.spacing(ij);
        const double cjj = c_.diag(node, j);
        const double wr = 0.25 * cjj / (hr * hr);
        const double wi = 0.25 * cjj / (hi * hi);
        emit(node + g_.delta_plus(rj, idx[rj]), wr);
        emit(node + g_.delta_minus(rj, idx[rj]), wr);
        emit(node + g_.delta_plus(ij, idx[ij]), wi);
        emit(node + g_.delta_minus(ij, idx[ij]), wi);
        center -= 2.0 * (wr + wi);

        for (int k = j + 1; k < n; ++k) {
            const cplx cjk = c_.upper(node, j, k);
            const int rk = g_.re_dir(k), ik = g_.im_dir(k);
            auto cross = [&](int a, int b, double w) {
                if (w == 0.0) return;
                const double scale = w / (4.0 * g_.spacing(a) * g_.spacing(b));
                const std::int64_t pa = g_.delta_plus(a, idx[a]);
                const std::int64_t ma = g_.delta_minus(a, idx[a]);
                const std::int64_t pb = g_.delta_plus(b, idx[b]);
                const std::int64_t mb = g_.delta_minus(b, idx[b]);
                emit(node + pa + pb, scale);
                emit(node + pa + mb, -scale);
                emit(node + ma + pb, -scale);
                emit(node + ma + mb, scale);
            };
            // 2 Re(C_jk conj(Hess_jk)) expanded over the four real pairs.
            cross(rj, rk, 0.5 * cjk.real());
            cross(ij, ik, 0.5 * cjk.real());
            cross(rj, ik, 0.5 * cjk.imag());
            cross(ij, rk, -0.5 * cjk.imag());
        }
    }
    emit(node, center);
}

namespace {

template <typename Body>
void for_each_interior_node(const ProductGrid& g, Exec mode, Body&& body) {
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

}  // namespace

void StencilOperator::apply(const double* v, double* out, Exec mode) const {
    for_each_interior_node(g_, mode, [&](std::int64_t node, const int* idx) {
        double acc = 0.0;
        row(node, idx, [&](std::int64_t col, double w) { acc += w * v[col]; });
        out[node] = acc;
    });
}

void StencilOperator::diagonal(double* out) const {
    const int n = g_.n();
    for_each_interior_node(g_, Exec::serial, [&](std::int64_t node, const int*) {
        double center = 0.0;
        for (int j = 0; j < n; ++j) {
            const int rj = g_.re_dir(j), ij = g_.im_dir(j);
            const double hr = g_.spacing(rj), hi = g_.spacing(ij);
            center -= 0.5 * c_.diag(node, j) * (1.0 / (hr * hr) + 1.0 / (hi * hi));
        }
        out[node] = center;
    });
}

HermMat average_interior_coeff(const ProductGrid& g, const HermitianField& coeff) {
    const int n = coeff.n;
    HermMat mean(n);
    std::vector<double> acc(static_cast<size_t>(coeff.block()), 0.0);
    std::int64_t count = 0;
    const std::int64_t slice = g.slice_nodes();
    for (int is = 1; is <= g.s_res() - 2; ++is) {
        for (std::int64_t t = 0; t < slice; ++t) {
            const std::int64_t node = is * slice + t;
            const double* blk = coeff.data.data() + node * coeff.block();
            for (int q = 0; q < coeff.block(); ++q) acc[q] += blk[q];
            ++count;
        }
    }
    HermitianField one(n, 1);
    for (int q = 0; q < coeff.block(); ++q) one.data[q] = acc[q] / count;
    return one.matrix_at(0);
}

// ---------------------------------------------------------------------------
// FFT preconditioner

struct FftWorkspace::Impl {
    const ProductGrid& g;
    std::int64_t slice;
    int s_int;
    double hs;
    std::vector<std::complex<double>> buf;   // s_int layers x slice modes
    std::vector<double> alpha;               // real symbol part per mode
    std::vector<double> beta_im;             // imaginary D1_s coefficient per mode
    double gamma = 0.0;                      // C_nn / 4
    fftw_plan fwd = nullptr, bwd = nullptr;

    explicit Impl(const ProductGrid& grid)
        : g(grid), slice(grid.slice_nodes()), s_int(grid.s_res() - 2),
          hs(grid.spacing(grid.s_dir())) {
        buf.resize(static_cast<size_t>(s_int) * slice);
        alpha.resize(slice);
        beta_im.resize(slice);
        // Row-major dims, slowest first: theta, y_p, x_p, ..., y_1, x_1.
        std::vector<int> dims;
        dims.push_back(g.dim(g.theta_dir()));
        for (int d = 2 * g.p() - 1; d >= 0; --d) dims.push_back(g.dim(d));
        auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr,
                            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr,
                            FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }

    ~Impl() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }

    void set_coefficient(const HermMat& cbar) {
        const int n = g.n();
        gamma = 0.25 * cbar.diag(n - 1);
        if (!(gamma > 0.0))
            throw LinearSolveError("FftWorkspace: coefficient not elliptic along s");

        const int nper = g.ndirs() - 1;  // periodic directions
        std::vector<int> idx(nper, 0);
        std::vector<double> sin1(nper), d2(nper);
        for (std::int64_t m = 0; m < slice; ++m) {
            for (int d = 0; d < nper; ++d) {
                const double h = g.spacing(d);
                const double angle = 2.0 * M_PI * idx[d] / g.dim(d);
                sin1[d] = std::sin(angle) / h;                    // central D1 symbol / i
                d2[d] = 2.0 * (std::cos(angle) - 1.0) / (h * h);  // central D2 symbol
            }
            double a = 0.0, b = 0.0;
            for (int j = 0; j < n; ++j) {
                const int rj = g.re_dir(j), ij = g.im_dir(j);
                if (j < n - 1) {
                    a += 0.25 * cbar.diag(j) * (d2[rj] + d2[ij]);
                } else {
                    a += 0.25 * cbar.diag(j) * d2[ij];  // theta part; s handled below
                }
                for (int k = j + 1; k < n; ++k) {
                    const cplx cjk = cbar(j, k);
                    const int rk = g.re_dir(k), ik = g.im_dir(k);
                    if (k < n - 1) {
                        a += 0.5 * cjk.real() * (-sin1[rj] * sin1[rk] - sin1[ij] * sin1[ik]);
                        a += 0.5 * cjk.imag() * (-sin1[rj] * sin1[ik] + sin1[ij] * sin1[rk]);
                    } else {
                        // k == n-1: re_dir(k) is s (operator), im_dir(k) is theta.
                        a += 0.5 * cjk.real() * (-sin1[ij] * sin1[ik]);
                        a += 0.5 * cjk.imag() * (-sin1[rj] * sin1[ik]);
                        b += 0.5 * cjk.real() * sin1[rj] - 0.5 * cjk.imag() * sin1[ij];
                    }
                }
            }
            alpha[m] = a;
            beta_im[m] = b;
            for (int d = 0; d < nper; ++d) {
                if (++idx[d] < g.dim(d)) break;
                idx[d] = 0;
            }
        }
    }

    void apply_inverse(const double* r, double* z) {
        for (int layer = 0; layer < s_int; ++layer) {
            const double* src = r + static_cast<std::int64_t>(layer + 1) * slice;
            std::complex<double>* dst = buf.data() + static_cast<std::int64_t>(layer) * slice;
            for (std::int64_t t = 0; t < slice; ++t) dst[t] = src[t];
            fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(dst),
                             reinterpret_cast<fftw_complex*>(dst));
        }

        // Thomas solve per mode column; coefficients constant down a column.
        const double inv_h2 = 1.0 / (hs * hs);
        const double inv_2h = 1.0 / (2.0 * hs);
        std::vector<std::complex<double>> cprime(s_int), dprime(s_int);
        for (std::int64_t m = 0; m < slice; ++m) {
            const std::complex<double> mid(alpha[m] - 2.0 * gamma * inv_h2, 0.0);
            const std::complex<double> up(gamma * inv_h2, beta_im[m] * inv_2h);
            const std::complex<double> low(gamma * inv_h2, -beta_im[m] * inv_2h);

            std::complex<double> denom = mid;
            if (std::abs(denom) == 0.0)
                throw LinearSolveError("FftWorkspace: singular tridiagonal pivot");
            cprime[0] = up / denom;
            dprime[0] = buf[m] / denom;
            for (int j = 1; j < s_int; ++j) {
                denom = mid - low * cprime[j - 1];
                if (std::abs(denom) == 0.0)
                    throw LinearSolveError("FftWorkspace: singular tridiagonal pivot");
                cprime[j] = up / denom;
                dprime[j] =
                    (buf[static_cast<std::int64_t>(j) * slice + m] - low * dprime[j - 1]) /
                    denom;
            }
            std::complex<double> prev = dprime[s_int - 1];
            buf[static_cast<std::int64_t>(s_int - 1) * slice + m] = prev;
            for (int j = s_int - 2; j >= 0; --j) {
                prev = dprime[j] - cprime[j] * prev;
                buf[static_cast<std::int64_t>(j) * slice + m] = prev;
            }
        }

        const double scale = 1.0 / static_cast<double>(slice);
        for (int layer = 0; layer < s_int; ++layer) {
            std::complex<double>* src = buf.data() + static_cast<std::int64_t>(layer) * slice;
            fftw_execute_dft(bwd, reinterpret_cast<fftw_complex*>(src),
                             reinterpret_cast<fftw_complex*>(src));
            double* dst = z + static_cast<std::int64_t>(layer + 1) * slice;
            for (std::int64_t t = 0; t < slice; ++t) dst[t] = src[t].real() * scale;
        }
    }
};

FftWorkspace::FftWorkspace(const ProductGrid& g) : impl_(std::make_unique<Impl>(g)) {}
FftWorkspace::~FftWorkspace() = default;
void FftWorkspace::set_coefficient(const HermMat& cbar) { impl_->set_coefficient(cbar); }
void FftWorkspace::apply_inverse(const double* r, double* z) { impl_->apply_inverse(r, z); }

// ---------------------------------------------------------------------------
// Solvers

namespace {

double dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const ScalarField& a) { return std::sqrt(dot(a, a)); }

void boundary_to_zero(const ProductGrid& g, ScalarField& v) {
    const std::int64_t slice = g.slice_nodes();
    std::fill(v.begin(), v.begin() + slice, 0.0);
    std::fill(v.end() - slice, v.end(), 0.0);
}

SolveStats solve_direct(const StencilOperator& op, const ScalarField& b, ScalarField& u) {
    const ProductGrid& g = op.grid();
    std::vector<std::int32_t> id(g.nodes(), -1);
    std::int64_t nint = 0;
    for (std::int64_t v = 0; v < g.nodes(); ++v)
        if (!g.is_boundary(v)) id[v] = static_cast<std::int32_t>(nint++);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(nint) * (8 * g.n() * g.n()));
    Eigen::VectorXd rhs(nint);
    for_each_interior_node(g, Exec::serial, [&](std::int64_t node, const int* idx) {
        const std::int32_t r = id[node];
        rhs[r] = b[node];
        op.row(node, idx, [&](std::int64_t col, double w) {
            if (id[col] >= 0 && w != 0.0) trips.emplace_back(r, id[col], w);
        });
    });
    Eigen::SparseMatrix<double> mat(nint, nint);
    mat.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success) throw LinearSolveError("SparseLU factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw LinearSolveError("SparseLU solve failed");
    for (int pass = 0; pass < 2; ++pass) x += lu.solve(rhs - mat * x);

    u.assign(g.nodes(), 0.0);
    for (std::int64_t v = 0; v < g.nodes(); ++v)
        if (id[v] >= 0) u[v] = x[id[v]];

    SolveStats stats;
    stats.used_direct = true;
    const double bn = std::max(rhs.norm(), 1e-300);
    stats.relative_residual = (mat * x - rhs).norm() / bn;
    return stats;
}

SolveStats solve_bicgstab(const StencilOperator& op, const ScalarField& b, ScalarField& u,
                          const SolveOptions& opts, FftWorkspace& fft) {
    const ProductGrid& g = op.grid();
    const std::int64_t total = g.nodes();
    fft.set_coefficient(average_interior_coeff(g, op.coeff()));

    auto matvec = [&](const ScalarField& v, ScalarField& out) {
        op.apply(v.data(), out.data(), opts.mode);
    };
    auto precond = [&](const ScalarField& v, ScalarField& out) {
        fft.apply_inverse(v.data(), out.data());
    };

    u.assign(total, 0.0);
    ScalarField r = b, rhat = b;
    boundary_to_zero(g, r);
    boundary_to_zero(g, rhat);
    ScalarField p(total, 0.0), v(total, 0.0), s(total, 0.0), t(total, 0.0);
    // phat doubles as shat once alpha*phat has been applied to u.
    ScalarField phat(total, 0.0);

    const double bnorm = std::max(norm2(r), 1e-300);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    SolveStats stats;
    int restarts = 0;

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        const double rho1 = dot(rhat, r);
        if (std::abs(rho1) < 1e-290 || (iter > 1 && std::abs(omega) < 1e-290)) {
            // Stagnated recurrence; restart from the current true residual.
            if (++restarts > opts.max_restarts)
                throw LinearSolveError("BiCGStab: repeated breakdown");
            matvec(u, t);
            for (std::int64_t i = 0; i < total; ++i) r[i] = b[i] - t[i];
            boundary_to_zero(g, r);
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        if (iter == 1) {
            p = r;
        } else {
            const double beta = (rho1 / rho) * (alpha / omega);
            for (std::int64_t i = 0; i < total; ++i)
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho1;
        precond(p, phat);
        matvec(phat, v);
        const double rhat_v = dot(rhat, v);
        if (std::abs(rhat_v) < 1e-290) {
            if (++restarts > opts.max_restarts)
                throw LinearSolveError("BiCGStab: breakdown on <rhat, v>");
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        alpha = rho1 / rhat_v;
        for (std::int64_t i = 0; i < total; ++i) s[i] = r[i] - alpha * v[i];
        for (std::int64_t i = 0; i < total; ++i) u[i] += alpha * phat[i];
        if (norm2(s) <= opts.rtol * bnorm * 0.1) {
            stats.iterations = iter;
            break;
        }
        precond(s, phat);  // phat now holds shat
        matvec(phat, t);
        const double tt = dot(t, t);
        if (tt == 0.0) throw LinearSolveError("BiCGStab: t vanished");
        omega = dot(t, s) / tt;
        for (std::int64_t i = 0; i < total; ++i) {
            u[i] += omega * phat[i];
            r[i] = s[i] - omega * t[i];
        }
        stats.iterations = iter;
        if (norm2(r) <= opts.rtol * bnorm * 0.5) {
            // Accept only on the recomputed true residual.
            matvec(u, t);
            double rr = 0.0;
            for (std::int64_t i = 0; i < total; ++i) {
                const double d = b[i] - t[i];
                rr += g.is_boundary(i) ? 0.0 : d * d;
            }
            if (std::sqrt(rr) <= opts.rtol * bnorm) break;
        }
        if (iter == opts.max_iterations)
            throw LinearSolveError("BiCGStab: iteration cap reached");
    }

    boundary_to_zero(g, u);
    matvec(u, t);
    double rr = 0.0;
    for (std::int64_t i = 0; i < total; ++i) {
        if (g.is_boundary(i)) continue;
        const double d = b[i] - t[i];
        rr += d * d;
    }
    stats.relative_residual = std::sqrt(rr) / bnorm;
    if (stats.relative_residual > opts.rtol)
        throw LinearSolveError("BiCGStab: residual contract not met");
    return stats;
}

}  // namespace

SolveStats solve_interior(const StencilOperator& op, const ScalarField& b, ScalarField& u,
                          const SolveOptions& opts, FftWorkspace* fft) {
    const ProductGrid& g = op.grid();
    if (g.interior_nodes() <= opts.direct_threshold || fft == nullptr) {
        SolveStats stats = solve_direct(op, b, u);
        if (stats.relative_residual > opts.rtol)
            throw LinearSolveError("direct solve: residual contract not met");
        return stats;
    }
    return solve_bicgstab(op, b, u, opts, *fft);
}

}  // namespace hpde::linsolve
