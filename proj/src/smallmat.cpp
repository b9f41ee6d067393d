#include "hpde/smallmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpde/errors.hpp"

namespace hpde {

HermMat::HermMat(int n) : n_(n) {
    if (n < 1 || n > MAXN) throw DomainError("HermMat: dimension out of range");
}

HermMat HermMat::identity(int n) {
    HermMat m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

HermMat HermMat::diagonal(const std::vector<double>& d) {
    HermMat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n_; ++i) m.set(i, i, d[i]);
    return m;
}

void HermMat::set(int i, int j, cplx v) {
    if (i == j) {
        a_[i * MAXN + i] = v.real();
    } else {
        a_[i * MAXN + j] = v;
        a_[j * MAXN + i] = std::conj(v);
    }
}

HermMat HermMat::scaled(double s) const {
    HermMat m = *this;
    for (auto& v : m.a_) v *= s;
    return m;
}

HermMat operator+(const HermMat& x, const HermMat& y) {
    if (x.n_ != y.n_) throw DomainError("HermMat: dimension mismatch in +");
    HermMat m = x;
    for (int i = 0; i < HermMat::MAXN * HermMat::MAXN; ++i) m.a_[i] += y.a_[i];
    return m;
}

double HermMat::frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) s += std::norm(a_[i * MAXN + j]);
    return std::sqrt(s);
}

double HermMat::trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += a_[i * MAXN + i].real();
    return t;
}

double HermMat::max_abs_entry() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m = std::max(m, std::abs(a_[i * MAXN + j]));
    return m;
}

namespace {

constexpr int kMaxSweeps = 60;

double offdiag_norm(const std::array<cplx, HermMat::MAXN * HermMat::MAXN>& a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += std::norm(a[i * HermMat::MAXN + j]);
    return std::sqrt(2.0 * s);
}

}  // namespace

EigResult hermitian_eigen(const HermMat& m) {
    const int N = HermMat::MAXN;
    const int n = m.n();
    if (n < 1) throw DomainError("hermitian_eigen: empty matrix");

    std::array<cplx, N * N> a{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i * N + j] = m(i, j);

    EigResult out;
    out.n = n;
    for (int i = 0; i < n; ++i) out.vectors[i * N + i] = 1.0;

    const double scale = std::max(m.frobenius_norm(), 1e-300);
    const double stop = 1e-15 * scale;

    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        if (offdiag_norm(a, n) <= stop) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = a[p * N + q];
                const double abs_apq = std::abs(apq);
                if (abs_apq <= 1e-18 * scale) {
                    a[p * N + q] = 0.0;
                    a[q * N + p] = 0.0;
                    continue;
                }
                const double app = a[p * N + p].real();
                const double aqq = a[q * N + q].real();
                const cplx phase = apq / abs_apq;

                // Rotation angle from the real 2x2 [[app, |apq|], [|apq|, aqq]].
                const double tau = (aqq - app) / (2.0 * abs_apq);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // G_pp = c, G_pq = s*phase, G_qp = -s*conj(phase), G_qq = c;
                // update A <- G^H A G and V <- V G.
                const cplx g_pq = s * phase;
                const cplx g_qp = -s * std::conj(phase);

                a[p * N + p] = app - t * abs_apq;
                a[q * N + q] = aqq + t * abs_apq;
                a[p * N + q] = 0.0;
                a[q * N + p] = 0.0;

                for (int i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const cplx aip = a[i * N + p];
                    const cplx aiq = a[i * N + q];
                    const cplx new_ip = c * aip + g_qp * aiq;   // column update by G
                    const cplx new_iq = g_pq * aip + c * aiq;
                    a[i * N + p] = new_ip;
                    a[p * N + i] = std::conj(new_ip);
                    a[i * N + q] = new_iq;
                    a[q * N + i] = std::conj(new_iq);
                }
                for (int i = 0; i < n; ++i) {
                    const cplx vip = out.vectors[i * N + p];
                    const cplx viq = out.vectors[i * N + q];
                    out.vectors[i * N + p] = c * vip + g_qp * viq;
                    out.vectors[i * N + q] = g_pq * vip + c * viq;
                }
            }
        }
    }
    if (sweep == kMaxSweeps && offdiag_norm(a, n) > stop)
        throw NumericalError("hermitian_eigen: Jacobi sweeps did not converge");
    out.sweeps = sweep;

    std::array<int, N> order{};
    std::iota(order.begin(), order.begin() + n, 0);
    std::sort(order.begin(), order.begin() + n,
              [&](int i, int j) { return a[i * N + i].real() < a[j * N + j].real(); });

    EigResult sorted;
    sorted.n = n;
    sorted.sweeps = out.sweeps;
    for (int k = 0; k < n; ++k) {
        sorted.values[k] = a[order[k] * N + order[k]].real();
        for (int i = 0; i < n; ++i) sorted.vectors[i * N + k] = out.vectors[i * N + order[k]];
    }
    return sorted;
}

std::vector<double> hermitian_eigenvalues(const HermMat& a) {
    return hermitian_eigen(a).values_vec();
}

double eigen_residual(const HermMat& a, const EigResult& e) {
    const int N = HermMat::MAXN;
    const int n = e.n;
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            cplx acc = 0.0;
            for (int j = 0; j < n; ++j) acc += a(i, j) * e.vectors[j * N + k];
            acc -= e.values[k] * e.vectors[i * N + k];
            r2 += std::norm(acc);
        }
        worst = std::max(worst, std::sqrt(r2));
    }
    return worst;
}

namespace {

HermMat function_of(const HermMat& a, double (*fn)(double), const char* what) {
    EigResult e = hermitian_eigen(a);
    const int N = HermMat::MAXN;
    HermMat out(a.n());
    for (int i = 0; i < a.n(); ++i) {
        for (int j = i; j < a.n(); ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < a.n(); ++k) {
                if (e.values[k] <= 0.0 && fn != nullptr)
                    throw GeometryError(std::string(what) + ": matrix not positive definite");
                acc += fn(e.values[k]) * e.vectors[i * N + k] * std::conj(e.vectors[j * N + k]);
            }
            out.set(i, j, acc);
        }
    }
    return out;
}

double inv_sqrt_fn(double x) { return 1.0 / std::sqrt(x); }
double inv_fn(double x) { return 1.0 / x; }

}  // namespace

HermMat inverse_sqrt(const HermMat& a) { return function_of(a, &inv_sqrt_fn, "inverse_sqrt"); }
HermMat inverse(const HermMat& a) { return function_of(a, &inv_fn, "inverse"); }

HermMat congruence(const HermMat& w, const HermMat& a) {
    if (w.n() != a.n()) throw DomainError("congruence: dimension mismatch");
    const int n = a.n();
    // B = W A W, Hermitian because W and A are.
    HermMat out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < n; ++k) {
                cplx wa = 0.0;
                for (int l = 0; l < n; ++l) wa += w(i, l) * a(l, k);
                acc += wa * w(k, j);
            }
            out.set(i, j, acc);
        }
    }
    return out;
}

}  // namespace hpde
