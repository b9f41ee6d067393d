#include "hpde/grid.hpp"

#include <cmath>

#include "hpde/errors.hpp"

namespace hpde::grid {

ProductGrid::ProductGrid(int p, int torus_res, int s_res, int theta_res)
    : p_(p), torus_res_(torus_res), s_res_(s_res), theta_res_(theta_res) {
    if (p < 1) throw DomainError("ProductGrid: p >= 1 required");
    if (torus_res < 4 || s_res < 4 || theta_res < 4)
        throw DomainError("ProductGrid: resolutions >= 4 required");
    if (p + 1 > HermMat::MAXN) throw DomainError("ProductGrid: p too large");

    const int nd = ndirs();
    dim_.resize(nd);
    h_.resize(nd);
    for (int d = 0; d < 2 * p_; ++d) {
        dim_[d] = torus_res_;
        h_[d] = 1.0 / torus_res_;
    }
    dim_[theta_dir()] = theta_res_;
    h_[theta_dir()] = 1.0 / theta_res_;
    dim_[s_dir()] = s_res_;
    h_[s_dir()] = 1.0 / (s_res_ - 1);

    stride_.resize(nd);
    std::int64_t acc = 1;
    for (int d = 0; d < nd; ++d) {
        stride_[d] = acc;
        acc *= dim_[d];
    }
    nodes_ = acc;
    slice_ = stride_[s_dir()];

    dplus_.resize(nd);
    dminus_.resize(nd);
    for (int d = 0; d < nd; ++d) {
        dplus_[d].resize(dim_[d]);
        dminus_[d].resize(dim_[d]);
        for (int i = 0; i < dim_[d]; ++i) {
            if (periodic(d)) {
                dplus_[d][i] = (i + 1 == dim_[d]) ? stride_[d] * (1 - dim_[d]) : stride_[d];
                dminus_[d][i] = (i == 0) ? stride_[d] * (dim_[d] - 1) : -stride_[d];
            } else {
                dplus_[d][i] = stride_[d];
                dminus_[d][i] = -stride_[d];
            }
        }
    }
}

void ProductGrid::coords_of(std::int64_t node, int* idx) const {
    for (int d = ndirs() - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(node / stride_[d]);
        node -= idx[d] * stride_[d];
    }
}

std::int64_t ProductGrid::node_of(const int* idx) const {
    std::int64_t node = 0;
    for (int d = 0; d < ndirs(); ++d) node += idx[d] * stride_[d];
    return node;
}

std::int64_t ProductGrid::neighbor(std::int64_t node, int dir, int step) const {
    int idx[2 * HermMat::MAXN];
    coords_of(node, idx);
    int i = idx[dir];
    std::int64_t out = node;
    while (step > 0) {
        out += dplus_[dir][i];
        i = (i + 1) % dim_[dir];
        --step;
    }
    while (step < 0) {
        out += dminus_[dir][i];
        i = (i + dim_[dir] - 1) % dim_[dir];
        ++step;
    }
    return out;
}

HermitianField::HermitianField(int n_, std::int64_t count_) : n(n_), count(count_) {
    data.assign(count * block(), 0.0);
}

HermitianField HermitianField::constant(const ProductGrid& g, const HermMat& m) {
    HermitianField f(m.n(), g.nodes());
    for (std::int64_t v = 0; v < f.count; ++v) f.set_matrix(v, m);
    return f;
}

cplx HermitianField::upper(std::int64_t node, int j, int k) const {
    const int off = n + 2 * (j * (2 * n - j - 1) / 2 + (k - j - 1));
    return {data[node * block() + off], data[node * block() + off + 1]};
}

void HermitianField::set_upper(std::int64_t node, int j, int k, cplx v) {
    const int off = n + 2 * (j * (2 * n - j - 1) / 2 + (k - j - 1));
    data[node * block() + off] = v.real();
    data[node * block() + off + 1] = v.imag();
}

HermMat HermitianField::matrix_at(std::int64_t node) const {
    HermMat m(n);
    for (int j = 0; j < n; ++j) m.set(j, j, diag(node, j));
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) m.set(j, k, upper(node, j, k));
    return m;
}

void HermitianField::set_matrix(std::int64_t node, const HermMat& m) {
    for (int j = 0; j < n; ++j) set_diag(node, j, m.diag(j));
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) set_upper(node, j, k, m(j, k));
}

void hessian_at(const ProductGrid& g, const double* u, std::int64_t node, const int* idx,
                HermMat& out) {
    const int n = g.n();
    const double u0 = u[node];
    auto dp = [&](int dir) { return g.delta_plus(dir, idx[dir]); };
    auto dm = [&](int dir) { return g.delta_minus(dir, idx[dir]); };

    for (int j = 0; j < n; ++j) {
        const int rj = g.re_dir(j), ij = g.im_dir(j);
        const double hr = g.spacing(rj), hi = g.spacing(ij);
        const double d2r = (u[node + dp(rj)] - 2.0 * u0 + u[node + dm(rj)]) / (hr * hr);
        const double d2i = (u[node + dp(ij)] - 2.0 * u0 + u[node + dm(ij)]) / (hi * hi);
        out.set(j, j, 0.25 * (d2r + d2i));
        for (int k = j + 1; k < n; ++k) {
            const int rk = g.re_dir(k), ik = g.im_dir(k);
            auto cross = [&](int a, int b) {
                const double ha = g.spacing(a), hb = g.spacing(b);
                return (u[node + dp(a) + dp(b)] - u[node + dp(a) + dm(b)] -
                        u[node + dm(a) + dp(b)] + u[node + dm(a) + dm(b)]) /
                       (4.0 * ha * hb);
            };
            const double re = 0.25 * (cross(rj, rk) + cross(ij, ik));
            const double im = 0.25 * (cross(rj, ik) - cross(ij, rk));
            out.set(j, k, cplx(re, im));
        }
    }
}

// Runs `body(node, idx)` over every interior node, maintaining the
// per-direction coordinates with an odometer instead of div/mod.
template <typename Body>
static void for_each_interior(const ProductGrid& g, Exec mode, Body&& body) {
    const int nd = g.ndirs();
    const int s_dir = g.s_dir();
    const std::int64_t slice = g.slice_nodes();
    const int s_lo = 1, s_hi = g.s_res() - 2;
    const std::int64_t layers = s_hi - s_lo + 1;

    parallel_for(layers, mode, [&](std::int64_t layer) {
        const int is = s_lo + static_cast<int>(layer);
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

HermitianField complex_hessian(const ProductGrid& g, const ScalarField& u, Exec mode) {
    if (static_cast<std::int64_t>(u.size()) != g.nodes())
        throw DomainError("complex_hessian: field size mismatch");
    HermitianField out(g.n(), g.nodes());
    for_each_interior(g, mode, [&](std::int64_t node, const int* idx) {
        HermMat h(g.n());
        hessian_at(g, u.data(), node, idx, h);
        out.set_matrix(node, h);
    });
    return out;
}

HermitianField complex_hessian_reference(const ProductGrid& g, const ScalarField& u) {
    // Independent of the kernel path above: walks neighbors through the
    // general neighbor() routine, one node at a time.
    HermitianField out(g.n(), g.nodes());
    const int n = g.n();
    for (std::int64_t node = 0; node < g.nodes(); ++node) {
        if (g.is_boundary(node)) continue;
        HermMat h(n);
        auto value = [&](int dir_a, int step_a, int dir_b, int step_b) {
            std::int64_t v = g.neighbor(node, dir_a, step_a);
            if (dir_b >= 0) v = g.neighbor(v, dir_b, step_b);
            return u[v];
        };
        for (int j = 0; j < n; ++j) {
            const int rj = g.re_dir(j), ij = g.im_dir(j);
            const double hr = g.spacing(rj), hi = g.spacing(ij);
            double d2r = (value(rj, 1, -1, 0) - 2 * u[node] + value(rj, -1, -1, 0)) / (hr * hr);
            double d2i = (value(ij, 1, -1, 0) - 2 * u[node] + value(ij, -1, -1, 0)) / (hi * hi);
            h.set(j, j, 0.25 * (d2r + d2i));
            for (int k = j + 1; k < n; ++k) {
                const int rk = g.re_dir(k), ik = g.im_dir(k);
                auto cross = [&](int a, int b) {
                    const double ha = g.spacing(a), hb = g.spacing(b);
                    return (value(a, 1, b, 1) - value(a, 1, b, -1) - value(a, -1, b, 1) +
                            value(a, -1, b, -1)) /
                           (4.0 * ha * hb);
                };
                const double re = 0.25 * (cross(rj, rk) + cross(ij, ik));
                const double im = 0.25 * (cross(rj, ik) - cross(ij, rk));
                h.set(j, k, cplx(re, im));
            }
        }
        out.set_matrix(node, h);
    }
    return out;
}

std::vector<double> eigenvalues_rel(const ProductGrid& g, const HermitianField& gf,
                                    const HermMat& omega, Exec mode) {
    if (gf.n != omega.n()) throw DomainError("eigenvalues_rel: dimension mismatch");
    const HermMat w = inverse_sqrt(omega);  // throws GeometryError if not PD
    const int n = gf.n;
    std::vector<double> out(gf.count * n, 0.0);
    parallel_for(gf.count, mode, [&](std::int64_t node) {
        const HermMat b = congruence(w, gf.matrix_at(node));
        const EigResult e = hermitian_eigen(b);
        for (int i = 0; i < n; ++i) out[node * n + i] = e.values[i];
    });
    return out;
}

void laplacian_and_gradient(const ProductGrid& g, const ScalarField& u, const HermMat& omega,
                            ScalarField& lap, ScalarField& grad_norm, Exec mode) {
    if (static_cast<std::int64_t>(u.size()) != g.nodes())
        throw DomainError("laplacian_and_gradient: field size mismatch");
    const HermMat ginv = inverse(omega);
    const int n = g.n();
    const int sd = g.s_dir();
    const double hs = g.spacing(sd);
    lap.assign(g.nodes(), 0.0);
    grad_norm.assign(g.nodes(), 0.0);

    parallel_for(g.nodes(), mode, [&](std::int64_t node) {
        int idx[2 * HermMat::MAXN];
        g.coords_of(node, idx);
        const int is = idx[sd];
        const bool at_lo = is == 0, at_hi = is == g.s_res() - 1;

        // First derivative along a direction; one-sided in s at the ends.
        auto d1 = [&](int dir) {
            const double h = g.spacing(dir);
            if (dir == sd && at_lo)
                return (-3.0 * u[node] + 4.0 * u[node + g.stride(sd)] -
                        u[node + 2 * g.stride(sd)]) /
                       (2.0 * h);
            if (dir == sd && at_hi)
                return (3.0 * u[node] - 4.0 * u[node - g.stride(sd)] +
                        u[node - 2 * g.stride(sd)]) /
                       (2.0 * h);
            return (u[node + g.delta_plus(dir, idx[dir])] -
                    u[node + g.delta_minus(dir, idx[dir])]) /
                   (2.0 * h);
        };
        auto d2 = [&](int dir) {
            const double h = g.spacing(dir);
            if (dir == sd && at_lo)
                return (2.0 * u[node] - 5.0 * u[node + g.stride(sd)] +
                        4.0 * u[node + 2 * g.stride(sd)] - u[node + 3 * g.stride(sd)]) /
                       (h * h);
            if (dir == sd && at_hi)
                return (2.0 * u[node] - 5.0 * u[node - g.stride(sd)] +
                        4.0 * u[node - 2 * g.stride(sd)] - u[node - 3 * g.stride(sd)]) /
                       (h * h);
            return (u[node + g.delta_plus(dir, idx[dir])] - 2.0 * u[node] +
                    u[node + g.delta_minus(dir, idx[dir])]) /
                   (h * h);
        };
        auto cross = [&](int a, int b) {  // mixed second derivative
            // At the s-boundary, differentiate the central a-derivative
            // one-sidedly in s.
            if ((a == sd || b == sd) && (at_lo || at_hi)) {
                const int other = a == sd ? b : a;
                const double ho = g.spacing(other);
                auto central_other = [&](std::int64_t v, int io) {
                    return (u[v + g.delta_plus(other, io)] - u[v + g.delta_minus(other, io)]) /
                           (2.0 * ho);
                };
                const int io = idx[other];
                if (at_lo)
                    return (-3.0 * central_other(node, io) +
                            4.0 * central_other(node + g.stride(sd), io) -
                            central_other(node + 2 * g.stride(sd), io)) /
                           (2.0 * hs);
                return (3.0 * central_other(node, io) -
                        4.0 * central_other(node - g.stride(sd), io) +
                        central_other(node - 2 * g.stride(sd), io)) /
                       (2.0 * hs);
            }
            const double ha = g.spacing(a), hb = g.spacing(b);
            const std::int64_t pa = g.delta_plus(a, idx[a]), ma = g.delta_minus(a, idx[a]);
            const std::int64_t pb = g.delta_plus(b, idx[b]), mb = g.delta_minus(b, idx[b]);
            return (u[node + pa + pb] - u[node + pa + mb] - u[node + ma + pb] +
                    u[node + ma + mb]) /
                   (4.0 * ha * hb);
        };

        HermMat hess(n);
        std::array<cplx, HermMat::MAXN> du{};
        for (int j = 0; j < n; ++j) {
            const int rj = g.re_dir(j), ij = g.im_dir(j);
            hess.set(j, j, 0.25 * (d2(rj) + d2(ij)));
            du[j] = 0.5 * cplx(d1(rj), -d1(ij));
            for (int k = j + 1; k < n; ++k) {
                const int rk = g.re_dir(k), ik = g.im_dir(k);
                hess.set(j, k, 0.25 * cplx(cross(rj, rk) + cross(ij, ik),
                                           cross(rj, ik) - cross(ij, rk)));
            }
        }
        double lap_v = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) lap_v += (ginv(j, k) * hess(k, j)).real();
        double grad2 = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                grad2 += (ginv(k, j) * du[j] * std::conj(du[k])).real();
        lap[node] = lap_v;
        grad_norm[node] = std::sqrt(std::max(0.0, 2.0 * grad2));
    });
}

ScalarField boundary_normal_derivative(const ProductGrid& g, const ScalarField& u) {
    ScalarField out(g.nodes(), 0.0);
    const std::int64_t slice = g.slice_nodes();
    const std::int64_t step = g.stride(g.s_dir());
    const double h = g.spacing(g.s_dir());
    const std::int64_t top = (g.s_res() - 1) * slice;
    for (std::int64_t t = 0; t < slice; ++t) {
        out[t] = (-3.0 * u[t] + 4.0 * u[t + step] - u[t + 2 * step]) / (2.0 * h);
        out[top + t] =
            (-3.0 * u[top + t] + 4.0 * u[top + t - step] - u[top + t - 2 * step]) / (2.0 * h);
    }
    return out;
}

ScalarField extend_boundary_linear_s(const ProductGrid& g, const ScalarField& boundary_values) {
    ScalarField out(g.nodes(), 0.0);
    const std::int64_t slice = g.slice_nodes();
    const std::int64_t top = (g.s_res() - 1) * slice;
    for (int is = 0; is < g.s_res(); ++is) {
        const double s = is * g.spacing(g.s_dir());
        for (std::int64_t t = 0; t < slice; ++t)
            out[is * slice + t] =
                (1.0 - s) * boundary_values[t] + s * boundary_values[top + t];
    }
    return out;
}

}  // namespace hpde::grid
