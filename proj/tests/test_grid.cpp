#include <doctest.h>

#include <cmath>

#include "hpde/errors.hpp"
#include "hpde/grid.hpp"

using namespace hpde;
using namespace hpde::grid;

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Fills u(x) from a callback on physical coordinates.
template <typename Fn>
ScalarField fill(const ProductGrid& g, Fn&& fn) {
    ScalarField u(g.nodes());
    const int nd = g.ndirs();
    std::vector<int> idx(nd, 0);
    std::vector<double> c(nd);
    for (std::int64_t v = 0; v < g.nodes(); ++v) {
        for (int d = 0; d < nd; ++d) c[d] = g.coordinate(d, idx[d]);
        u[v] = fn(c);
        for (int d = 0; d < nd; ++d) {
            if (++idx[d] < g.dim(d)) break;
            idx[d] = 0;
        }
    }
    return u;
}

double interior_max_abs_diag_error(const ProductGrid& g, const HermitianField& h, int j,
                                   double want) {
    double worst = 0.0;
    for (std::int64_t v = 0; v < g.nodes(); ++v) {
        if (g.is_boundary(v)) continue;
        worst = std::max(worst, std::abs(h.diag(v, j) - want));
    }
    return worst;
}

}  // namespace

TEST_SUITE("grid") {
    TEST_CASE("node counting and boundary classification") {
        ProductGrid g(1, 8, 8, 8);
        CHECK(g.nodes() == 8 * 8 * 8 * 8);
        CHECK(g.boundary_nodes() == 2 * 8 * 8 * 8);
        CHECK(g.interior_nodes() == g.nodes() - g.boundary_nodes());
        std::int64_t counted = 0;
        for (std::int64_t v = 0; v < g.nodes(); ++v)
            if (g.is_boundary(v)) ++counted;
        CHECK(counted == g.boundary_nodes());

        CHECK_THROWS_AS(ProductGrid(1, 8, 2, 8), DomainError);
        CHECK_THROWS_AS(ProductGrid(0, 8, 8, 8), DomainError);
        CHECK(ProductGrid(2, 4, 4, 4).n() == 3);
    }

    TEST_CASE("coords round trip and neighbor wrap") {
        ProductGrid g(1, 6, 5, 4);
        int idx[8];
        for (std::int64_t v : {std::int64_t(0), std::int64_t(17), g.nodes() - 1}) {
            g.coords_of(v, idx);
            CHECK(g.node_of(idx) == v);
        }
        // Periodic wrap in x: neighbor of the last column returns to 0.
        idx[0] = 5;
        idx[1] = 0;
        idx[2] = 0;
        idx[3] = 2;
        const std::int64_t v = g.node_of(idx);
        const std::int64_t w = g.neighbor(v, 0, 1);
        g.coords_of(w, idx);
        CHECK(idx[0] == 0);
    }

    TEST_CASE("hessian exact on quadratics") {
        ProductGrid g(1, 8, 8, 8);
        // s^2 lives on the non-periodic factor: u_{22} = 1/2 everywhere.
        const ScalarField us =
            fill(g, [&](const std::vector<double>& c) { return c[3] * c[3]; });
        const HermitianField hs = complex_hessian(g, us);
        CHECK(interior_max_abs_diag_error(g, hs, 1, 0.5) < 1e-12);
        CHECK(interior_max_abs_diag_error(g, hs, 0, 0.0) < 1e-12);

        // |z1|^2 and Re(z1^2) are quadratics in the torus coordinates; the
        // stencil is exact at nodes whose x/y stencils do not cross the seam.
        const ScalarField uz =
            fill(g, [](const std::vector<double>& c) { return c[0] * c[0] + c[1] * c[1]; });
        const HermitianField hz = complex_hessian(g, uz);
        const ScalarField up =
            fill(g, [](const std::vector<double>& c) { return c[0] * c[0] - c[1] * c[1]; });
        const HermitianField hp = complex_hessian(g, up);
        std::vector<int> idx(4, 0);
        for (std::int64_t v = 0; v < g.nodes(); ++v) {
            const bool seam_free = idx[0] >= 1 && idx[0] <= 6 && idx[1] >= 1 && idx[1] <= 6;
            if (!g.is_boundary(v) && seam_free) {
                CHECK(hz.diag(v, 0) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(hp.diag(v, 0) == doctest::Approx(0.0));  // pluriharmonic
                CHECK(std::abs(hp.upper(v, 0, 1)) < 1e-12);
            }
            for (int d = 0; d < 4; ++d) {
                if (++idx[d] < g.dim(d)) break;
                idx[d] = 0;
            }
        }
    }

    TEST_CASE("hessian exact on s^2 and pluriharmonic-in-s fields") {
        ProductGrid g(1, 4, 16, 4);
        const ScalarField s2 =
            fill(g, [&](const std::vector<double>& c) { return 2.0 * c[3] * (c[3] - 1.0); });
        const HermitianField h = complex_hessian(g, s2);
        // 1/4 d_ss (2s^2 - 2s) = 1.
        CHECK(interior_max_abs_diag_error(g, h, 1, 1.0) < 1e-12);
    }

    TEST_CASE("second-order convergence on trigonometric fields") {
        auto err_at = [](int res) {
            ProductGrid g(1, res, res, res);
            const ScalarField u = fill(g, [](const std::vector<double>& c) {
                return std::cos(kTwoPi * c[0]) + std::sin(kTwoPi * c[2]) + c[3] * c[3];
            });
            const HermitianField h = complex_hessian(g, u);
            const double pi2 = M_PI * M_PI;
            double worst = 0.0;
            std::vector<int> idx(4, 0);
            for (std::int64_t v = 0; v < g.nodes(); ++v) {
                if (!g.is_boundary(v)) {
                    const double x = g.coordinate(0, idx[0]);
                    const double th = g.coordinate(2, idx[2]);
                    const double want00 = -pi2 * std::cos(kTwoPi * x);
                    const double want11 = 0.5 - pi2 * std::sin(kTwoPi * th);
                    worst = std::max(worst, std::abs(h.diag(v, 0) - want00));
                    worst = std::max(worst, std::abs(h.diag(v, 1) - want11));
                }
                for (int d = 0; d < 4; ++d) {
                    if (++idx[d] < g.dim(d)) break;
                    idx[d] = 0;
                }
            }
            return worst;
        };
        const double e8 = err_at(8), e16 = err_at(16);
        CHECK(e8 / e16 > 3.5);
        CHECK(e8 / e16 < 4.5);
    }

    TEST_CASE("cross terms: product fields give the right off-diagonal") {
        // u = Re(z1 conj(z2)) = x1 s + y1 theta has u_{12} = 1/2. Periodic
        // directions would break x1 s at the wrap, so test on interior nodes
        // away from the seam via a seam-free bump instead:
        // u = sin(2 pi x1) * s has u_{12} = 1/4 [2pi cos(2pi x1)] * 1 / ...
        ProductGrid g(1, 16, 16, 4);
        const ScalarField u = fill(g, [](const std::vector<double>& c) {
            return std::sin(kTwoPi * c[0]) * c[3];
        });
        const HermitianField h = complex_hessian(g, u);
        // u_{x1 s} = 2 pi cos(2 pi x1); u_{12} = 1/4 (u_{x1 s}) + i/4 (u_{x1 theta}) terms:
        // re = 1/4 u_{x1 s}, im = 0.
        double worst = 0.0;
        std::vector<int> idx(4, 0);
        for (std::int64_t v = 0; v < g.nodes(); ++v) {
            if (!g.is_boundary(v)) {
                const double x = g.coordinate(0, idx[0]);
                // central difference of sin carries the sinc factor
                const double hres = g.spacing(0);
                const double d1 = std::sin(kTwoPi * hres) / hres / kTwoPi;  // symbol factor
                const double want = 0.25 * kTwoPi * std::cos(kTwoPi * x) * d1;
                const cplx got = h.upper(v, 0, 1);
                worst = std::max(worst, std::abs(got - cplx(want, 0.0)));
            }
            for (int d = 0; d < 4; ++d) {
                if (++idx[d] < g.dim(d)) break;
                idx[d] = 0;
            }
        }
        CHECK(worst < 1e-12);
    }

    TEST_CASE("kernel and reference implementations agree bitwise") {
        ProductGrid g(1, 6, 6, 6);
        const ScalarField u = fill(g, [](const std::vector<double>& c) {
            return std::cos(kTwoPi * c[0]) * std::sin(kTwoPi * c[1]) +
                   std::cos(kTwoPi * c[2]) * c[3] + c[3] * c[3];
        });
        const HermitianField a = complex_hessian(g, u, Exec::openmp);
        const HermitianField b = complex_hessian_reference(g, u);
        REQUIRE(a.data.size() == b.data.size());
        for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
    }

    TEST_CASE("eigenvalues_rel basics") {
        ProductGrid g(1, 4, 4, 4);
        const HermMat omega = HermMat::identity(2);
        const HermitianField gf = HermitianField::constant(g, omega);
        const auto ev = eigenvalues_rel(g, gf, omega);
        for (std::int64_t v = 0; v < g.nodes(); ++v) {
            CHECK(ev[2 * v] == doctest::Approx(1.0));
            CHECK(ev[2 * v + 1] == doctest::Approx(1.0));
        }

        const HermitianField gdiag = HermitianField::constant(g, HermMat::diagonal({1.0, 4.0}));
        const auto ev2 = eigenvalues_rel(g, gdiag, omega);
        CHECK(ev2[0] == doctest::Approx(1.0));
        CHECK(ev2[1] == doctest::Approx(4.0));

        // Generalized: omega = diag(2,1), g = diag(2,3) -> (1,3).
        const auto ev3 = eigenvalues_rel(g, HermitianField::constant(g, HermMat::diagonal({2.0, 3.0})),
                                         HermMat::diagonal({2.0, 1.0}));
        CHECK(ev3[0] == doctest::Approx(1.0));
        CHECK(ev3[1] == doctest::Approx(3.0));

        CHECK_THROWS_AS(eigenvalues_rel(g, gf, HermMat::diagonal({1.0, -1.0})), GeometryError);

        // Eigenvalue sum equals tr(omega^{-1} g).
        HermMat gm(2);
        gm.set(0, 0, 2.0);
        gm.set(1, 1, 3.0);
        gm.set(0, 1, cplx(0.5, 0.25));
        HermMat om(2);
        om.set(0, 0, 2.0);
        om.set(1, 1, 1.0);
        om.set(0, 1, cplx(0.1, -0.2));
        const auto ev4 = eigenvalues_rel(g, HermitianField::constant(g, gm), om);
        const HermMat ginv = inverse(om);
        double want = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) want += (ginv(i, j) * gm(j, i)).real();
        CHECK(ev4[0] + ev4[1] == doctest::Approx(want).epsilon(1e-10));
    }

    TEST_CASE("laplacian and gradient") {
        ProductGrid g(1, 8, 16, 8);
        const HermMat omega = HermMat::identity(2);

        ScalarField lap, gradn;
        const ScalarField su = fill(g, [](const std::vector<double>& c) {
            return 2.0 * c[3] * c[3] - 2.0 * c[3];
        });
        laplacian_and_gradient(g, su, omega, lap, gradn);
        for (std::int64_t v = 0; v < g.nodes(); ++v)
            CHECK(lap[v] == doctest::Approx(1.0).epsilon(1e-10));

        const ScalarField cu = fill(g, [](const std::vector<double>&) { return 3.5; });
        laplacian_and_gradient(g, cu, omega, lap, gradn);
        for (std::int64_t v = 0; v < g.nodes(); ++v) {
            CHECK(lap[v] == doctest::Approx(0.0));
            CHECK(gradn[v] == doctest::Approx(0.0));
        }

        // Two routes to the same Laplacian for omega = I: trace of the
        // Hessian vs quarter of the real Laplacian.
        const ScalarField u = fill(g, [](const std::vector<double>& c) {
            return std::cos(kTwoPi * c[0]) + c[3] * c[3] * c[3];
        });
        laplacian_and_gradient(g, u, omega, lap, gradn);
        const HermitianField h = complex_hessian(g, u);
        for (std::int64_t v = 0; v < g.nodes(); ++v) {
            if (g.is_boundary(v)) continue;
            CHECK(lap[v] ==
                  doctest::Approx(h.diag(v, 0) + h.diag(v, 1)).epsilon(1e-13));
        }

        // |grad u| for u = s: 2|u_n|^2 = 2 * 1/4 = 1/2.
        const ScalarField lin = fill(g, [](const std::vector<double>& c) { return c[3]; });
        laplacian_and_gradient(g, lin, omega, lap, gradn);
        for (std::int64_t v = 0; v < g.nodes(); ++v)
            CHECK(gradn[v] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
    }

    TEST_CASE("boundary normal derivative") {
        ProductGrid g(1, 4, 16, 4);
        const ScalarField lin = fill(g, [](const std::vector<double>& c) { return c[3]; });
        ScalarField nd = boundary_normal_derivative(g, lin);
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t t = 0; t < slice; ++t) {
            CHECK(nd[t] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(nd[g.nodes() - slice + t] == doctest::Approx(-1.0).epsilon(1e-12));
        }

        const ScalarField quad = fill(g, [](const std::vector<double>& c) {
            return 2.0 * c[3] * c[3] - 2.0 * c[3];
        });
        nd = boundary_normal_derivative(g, quad);
        for (std::int64_t t = 0; t < slice; ++t) {
            CHECK(nd[t] == doctest::Approx(-2.0).epsilon(1e-12));
            CHECK(nd[g.nodes() - slice + t] == doctest::Approx(-2.0).epsilon(1e-12));
        }

        const ScalarField c0 = fill(g, [](const std::vector<double>&) { return 1.0; });
        nd = boundary_normal_derivative(g, c0);
        for (std::int64_t t = 0; t < slice; ++t) CHECK(nd[t] == doctest::Approx(0.0));
    }

    TEST_CASE("linear-in-s boundary extension") {
        ProductGrid g(1, 4, 8, 4);
        ScalarField bv(g.nodes(), 0.0);
        const std::int64_t slice = g.slice_nodes();
        for (std::int64_t t = 0; t < slice; ++t) {
            bv[t] = 1.0;
            bv[g.nodes() - slice + t] = 3.0;
        }
        const ScalarField ext = extend_boundary_linear_s(g, bv);
        for (int is = 0; is < g.s_res(); ++is) {
            const double s = is * g.spacing(g.s_dir());
            CHECK(ext[is * slice] == doctest::Approx(1.0 + 2.0 * s));
        }
    }
}
