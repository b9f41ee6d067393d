#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpde/arrow.hpp"
#include "hpde/errors.hpp"
#include "hpde/rng.hpp"

using namespace hpde;
using namespace hpde::arrow;

namespace {

// Root of the n = 3 characteristic cubic by bisection, independent of the
// dense eigensolver.
double cubic_root(const ArrowMatrix& m, double lo, double hi) {
    auto p = [&](double x) { return char_poly_residual(m, x); };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((p(lo) < 0) == (p(mid) < 0))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double max_abs_dev_best_assignment(std::vector<double> lambdas, std::vector<double> d) {
    // Brute force over permutations of d against the fixed lambda order.
    std::sort(d.begin(), d.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (size_t i = 0; i < d.size(); ++i)
            worst = std::max(worst, std::abs(lambdas[i] - d[i]));
        best = std::min(best, worst);
    } while (std::next_permutation(d.begin(), d.end()));
    return best;
}

}  // namespace

TEST_SUITE("arrow") {
    TEST_CASE("oracle on trivial structures") {
        ArrowMatrix diag{{1.0}, {cplx(0.0)}, 5.0};
        auto ev = eigen_oracle(diag);
        CHECK(ev[0] == doctest::Approx(1.0));
        CHECK(ev[1] == doctest::Approx(5.0));

        ArrowMatrix pauli{{0.0}, {cplx(1.0)}, 0.0};
        ev = eigen_oracle(pauli);
        CHECK(ev[0] == doctest::Approx(-1.0));
        CHECK(ev[1] == doctest::Approx(1.0));
    }

    TEST_CASE("oracle matches the characteristic cubic") {
        ArrowMatrix m{{1.0, 2.0}, {cplx(1.0), cplx(1.0)}, 10.0};
        const auto ev = eigen_oracle(m);
        // (lambda-10)(lambda-1)(lambda-2) = (lambda-2) + (lambda-1); bracket
        // each root away from the oracle values.
        const double r1 = cubic_root(m, 0.0, 1.5);
        const double r2 = cubic_root(m, 1.5, 3.0);
        const double r3 = cubic_root(m, 9.0, 12.0);
        CHECK(ev[0] == doctest::Approx(r1).epsilon(1e-10));
        CHECK(ev[1] == doctest::Approx(r2).epsilon(1e-10));
        CHECK(ev[2] == doctest::Approx(r3).epsilon(1e-10));
    }

    TEST_CASE("threshold formulas, direct substitution") {
        ArrowMatrix m1{{1.0}, {cplx(2.0)}, 0.0};
        CHECK(threshold_main(0.5, m1) == doctest::Approx(9.0));
        CHECK(threshold_ordered(0.5, m1) == doctest::Approx(9.0));
        CHECK(threshold_distinct(0.5, m1) == doctest::Approx(4.0 / 0.5 + 1.0));

        ArrowMatrix m2{{0.0, 0.0}, {cplx(1.0), cplx(1.0)}, 0.0};
        CHECK(threshold_main(1.0, m2) == doctest::Approx(19.0 / 3.0));
        CHECK(threshold_ordered(1.0, m2) == doctest::Approx(3.0));

        ArrowMatrix m3{{0.0, 0.0}, {cplx(0.0), cplx(0.0)}, 0.0};
        CHECK(threshold_main(1.0, m3) == doctest::Approx(1.0 / 3.0));

        ArrowMatrix m4{{-1.0, 1.0}, {cplx(0.0), cplx(0.0)}, 0.0};
        CHECK(threshold_ordered(1.0, m4) == doctest::Approx(3.0));

        ArrowMatrix m5{{0.0, 1.0}, {cplx(1.0), cplx(1.0)}, 0.0};
        CHECK(threshold_distinct(0.25, m5) == doctest::Approx(10.25));

        ArrowMatrix m6{{1.0}, {cplx(1.0)}, 0.0};
        CHECK(threshold_distinct(0.5, m6) == doctest::Approx(3.0));

        CHECK_THROWS_AS(threshold_main(0.0, m1), DomainError);
    }

    TEST_CASE("n=2 localization example at the threshold") {
        ArrowMatrix m{{1.0}, {cplx(2.0)}, 9.0};
        const LocalizationReport rep = check_localization(m, 0.5, Threshold::main);
        CHECK(rep.threshold == doctest::Approx(9.0));
        CHECK(rep.corner_meets_threshold);
        CHECK(rep.eigenvalues[0] == doctest::Approx(5.0 - 2.0 * std::sqrt(5.0)).epsilon(1e-12));
        CHECK(rep.eigenvalues[1] == doctest::Approx(5.0 + 2.0 * std::sqrt(5.0)).epsilon(1e-12));
        CHECK(rep.alpha_deviations[0] == doctest::Approx(2.0 * std::sqrt(5.0) - 4.0));
        CHECK(rep.alpha_deviations[0] < 0.5);
        CHECK(rep.top_gap >= 0.0);
        CHECK(rep.top_gap < 0.5);
        CHECK(rep.satisfied);
    }

    TEST_CASE("zero coupling localizes exactly") {
        ArrowMatrix m{{1.0, -2.0, 0.5}, {cplx(0.0), cplx(0.0), cplx(0.0)}, 0.0};
        m.corner = threshold_main(1.0, m);
        const LocalizationReport rep = check_localization(m, 1.0, Threshold::main);
        CHECK(rep.satisfied);
        for (double dev : rep.alpha_deviations) CHECK(dev == doctest::Approx(0.0));
        CHECK(rep.top_gap == doctest::Approx(0.0));
    }

    TEST_CASE("char poly residual examples") {
        ArrowMatrix m{{0.0}, {cplx(1.0)}, 0.0};
        CHECK(char_poly_residual(m, 1.0) == doctest::Approx(0.0));

        ArrowMatrix m2{{1.0, 2.0}, {cplx(1.0), cplx(1.0)}, 10.0};
        CHECK(char_poly_residual(m2, 0.0) == doctest::Approx(-17.0));
        for (double ev : eigen_oracle(m2))
            CHECK(std::abs(char_poly_residual(m2, ev)) <= 1e-10 * char_poly_scale(m2, ev));
    }

    TEST_CASE("trace identity") {
        ArrowMatrix diag{{1.0}, {cplx(0.0)}, 5.0};
        CHECK(trace_identity_residual(diag) == doctest::Approx(0.0));
        ArrowMatrix pauli{{0.0}, {cplx(1.0)}, 0.0};
        CHECK(trace_identity_residual(pauli) <= 1e-12);

        Rng rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            ArrowMatrix m;
            for (int i = 0; i < 5; ++i) {
                m.d.push_back(rng.uniform(-3, 3));
                m.a.push_back(rng.complex_disc(3.0));
            }
            m.corner = rng.uniform(-20, 20);
            CHECK(trace_identity_residual(m) <= 1e-10 * (1.0 + std::abs(m.trace())));
        }
    }

    TEST_CASE("deflation merges duplicate diagonal slots") {
        ArrowMatrix m{{1.0, 1.0}, {cplx(1.0), cplx(1.0)}, 5.0};
        const ArrowMatrix out = deflate_duplicate(m, 0, 1);
        CHECK(out.n() == 2);
        CHECK(out.d[0] == doctest::Approx(1.0));
        CHECK(std::abs(out.a[0]) == doctest::Approx(std::sqrt(2.0)));
        CHECK(out.corner == doctest::Approx(5.0));

        // Input spectrum = output spectrum + {1}.
        auto in_ev = eigen_oracle(m);
        auto out_ev = eigen_oracle(out);
        out_ev.push_back(1.0);
        std::sort(out_ev.begin(), out_ev.end());
        REQUIRE(in_ev.size() == out_ev.size());
        for (size_t i = 0; i < in_ev.size(); ++i)
            CHECK(in_ev[i] == doctest::Approx(out_ev[i]).epsilon(1e-9));

        ArrowMatrix uncoupled{{1.0, 1.0}, {cplx(0.0), cplx(0.0)}, 5.0};
        const ArrowMatrix dd = deflate_duplicate(uncoupled, 0, 1);
        auto ev = eigen_oracle(dd);
        CHECK(ev[0] == doctest::Approx(1.0));
        CHECK(ev[1] == doctest::Approx(5.0));

        ArrowMatrix bad{{1.0, 2.0}, {cplx(1.0), cplx(1.0)}, 0.0};
        CHECK_THROWS_AS(deflate_duplicate(bad, 0, 1), DomainError);
        CHECK_THROWS_AS(deflate_duplicate(m, 0, 0), DomainError);
    }

    TEST_CASE("deflation preserves spectra on random duplicates") {
        Rng rng(17);
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 4 + static_cast<int>(rng.uniform01() * 3);  // 4..6
            ArrowMatrix m;
            for (int i = 0; i + 1 < n; ++i) {
                m.d.push_back(rng.uniform(-3, 3));
                m.a.push_back(rng.complex_disc(3.0));
            }
            m.corner = rng.uniform(-10, 10);
            const int i0 = 0, j0 = 1 + static_cast<int>(rng.uniform01() * (n - 2));
            m.d[i0] = m.d[j0];
            auto in_ev = eigen_oracle(m);
            auto out_ev = eigen_oracle(deflate_duplicate(m, i0, j0));
            out_ev.push_back(m.d[i0]);
            std::sort(out_ev.begin(), out_ev.end());
            for (size_t i = 0; i < in_ev.size(); ++i)
                CHECK(std::abs(in_ev[i] - out_ev[i]) <= 1e-9 * (1.0 + std::abs(in_ev[i])));
        }
    }

    TEST_CASE("sorted pairing equals the min-max assignment") {
        Rng rng(23);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 3 + static_cast<int>(rng.uniform01() * 3);  // 3..5
            ArrowMatrix m;
            for (int i = 0; i + 1 < n; ++i) {
                m.d.push_back(rng.uniform(-3, 3));
                m.a.push_back(rng.complex_disc(2.0));
            }
            const double eps = 0.5;
            m.corner = threshold_main(eps, m);
            const LocalizationReport rep = check_localization(m, eps, Threshold::main);
            double max_dev = 0.0;
            for (double dev : rep.alpha_deviations) max_dev = std::max(max_dev, dev);
            const std::vector<double> small(rep.eigenvalues.begin(),
                                            rep.eigenvalues.end() - 1);
            CHECK(max_dev ==
                  doctest::Approx(max_abs_dev_best_assignment(small, m.d)).epsilon(1e-12));
        }
    }

    TEST_CASE("ordered-threshold conclusion: near SOME diagonal entry") {
        Rng rng(31);
        for (int trial = 0; trial < 2000; ++trial) {
            const int n = 3 + static_cast<int>(rng.uniform01() * 4);  // 3..6
            ArrowMatrix m;
            for (int i = 0; i + 1 < n; ++i) {
                m.d.push_back(rng.uniform(-3, 3));
                m.a.push_back(rng.complex_disc(3.0));
            }
            const double eps = trial % 2 ? 0.5 : 1.0;
            m.corner = threshold_ordered(eps, m);
            const auto ev = eigen_oracle(m);
            double perm_shift = 0.0;  // | sum (d_alpha - d_{i_alpha}) |
            std::vector<double> sorted_d = m.d;
            std::sort(sorted_d.begin(), sorted_d.end());
            double matched_sum = 0.0;
            for (int a = 0; a + 1 < n; ++a) {
                double best = std::numeric_limits<double>::infinity();
                double best_d = 0.0;
                for (double d : m.d) {
                    if (std::abs(ev[a] - d) < best) {
                        best = std::abs(ev[a] - d);
                        best_d = d;
                    }
                }
                CHECK(best < eps);
                matched_sum += best_d;
            }
            perm_shift = std::abs(std::accumulate(m.d.begin(), m.d.end(), 0.0) - matched_sum);
            const double gap = ev[n - 1] - m.corner;
            CHECK(gap >= 0.0);
            CHECK(gap < (n - 1) * eps + perm_shift + 1e-12);
        }
    }

    TEST_CASE("distinct-threshold lemma within its eps interval") {
        Rng rng(37);
        for (int trial = 0; trial < 2000; ++trial) {
            const int n = 3 + static_cast<int>(rng.uniform01() * 3);
            ArrowMatrix m;
            for (int i = 0; i + 1 < n; ++i) {
                m.d.push_back(rng.uniform(-3, 3));
                m.a.push_back(rng.complex_disc(3.0));
            }
            double min_gap = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < m.d.size(); ++i)
                for (size_t j = i + 1; j < m.d.size(); ++j)
                    min_gap = std::min(min_gap, std::abs(m.d[i] - m.d[j]));
            if (!(min_gap > 1e-6)) continue;
            const double eps = 0.5 * min_gap * rng.uniform(0.2, 1.0);
            m.corner = threshold_distinct(eps, m);
            const LocalizationReport rep = check_localization(m, eps, Threshold::distinct);
            CHECK(rep.satisfied);
        }
    }

    TEST_CASE("batch run: zero violations at and above threshold") {
        BatchParams params;
        params.n_min = 2;
        params.n_max = 6;
        params.instances_per_n = 400;
        params.seed = 2024;
        const BatchResult result = run_localization_batch(params, Exec::serial, true);
        CHECK(result.violations == 0);
        CHECK(result.worst_dev_slack > 0.0);
        CHECK(result.worst_top_lower_slack >= 0.0);
        CHECK(result.worst_top_upper_slack > 0.0);
        CHECK(result.max_oracle_residual_rel < 1e-10);
        CHECK(result.max_trace_residual_rel < 1e-10);
        CHECK(result.max_charpoly_residual_rel < 1e-10);
        // Largest eigenvalue dominates the corner even below threshold.
        CHECK(result.min_below_threshold_top_lower >= -1e-12);
    }

    TEST_CASE("batch is bit-identical between serial and openmp") {
        BatchParams params;
        params.n_min = 2;
        params.n_max = 4;
        params.instances_per_n = 200;
        params.seed = 7;
        const BatchResult a = run_localization_batch(params, Exec::serial, true);
        const BatchResult b = run_localization_batch(params, Exec::openmp, true);
        REQUIRE(a.rows.size() == b.rows.size());
        for (size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].worst_dev_slack == b.rows[i].worst_dev_slack);
            CHECK(a.rows[i].worst_top_lower_slack == b.rows[i].worst_top_lower_slack);
            CHECK(a.rows[i].max_oracle_residual_rel == b.rows[i].max_oracle_residual_rel);
        }
    }
}
