#include "hpde/arrow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hpde/errors.hpp"
#include "hpde/rng.hpp"

namespace hpde::arrow {

double ArrowMatrix::sum_abs_a_sq() const {
    double s = 0.0;
    for (const cplx& v : a) s += std::norm(v);
    return s;
}

double ArrowMatrix::sum_abs_d() const {
    double s = 0.0;
    for (double v : d) s += std::abs(v);
    return s;
}

double ArrowMatrix::sum_d() const { return std::accumulate(d.begin(), d.end(), 0.0); }

HermMat ArrowMatrix::to_dense() const {
    if (d.size() != a.size()) throw DomainError("ArrowMatrix: |d| != |a|");
    const int dim = n();
    HermMat m(dim);
    for (int i = 0; i < dim - 1; ++i) {
        m.set(i, i, d[i]);
        m.set(i, dim - 1, a[i]);
    }
    m.set(dim - 1, dim - 1, corner);
    return m;
}

std::vector<double> eigen_oracle(const ArrowMatrix& m, double& residual) {
    const HermMat dense = m.to_dense();
    const EigResult e = hermitian_eigen(dense);
    residual = eigen_residual(dense, e);
    return e.values_vec();
}

std::vector<double> eigen_oracle(const ArrowMatrix& m) {
    double residual = 0.0;
    return eigen_oracle(m, residual);
}

double threshold_main(double eps, const ArrowMatrix& m) {
    if (!(eps > 0.0)) throw DomainError("threshold_main: eps must be positive");
    const int n = m.n();
    return (2.0 * n - 3.0) / eps * m.sum_abs_a_sq() + (n - 1.0) * m.sum_abs_d() +
           (n - 2.0) * eps / (2.0 * n - 3.0);
}

double threshold_ordered(double eps, const ArrowMatrix& m) {
    if (!(eps > 0.0)) throw DomainError("threshold_ordered: eps must be positive");
    const int n = m.n();
    double dterm = 0.0;
    for (double v : m.d) dterm += v + (n - 2.0) * std::abs(v);
    return m.sum_abs_a_sq() / eps + dterm + (n - 2.0) * eps;
}

double threshold_distinct(double eps, const ArrowMatrix& m) {
    if (!(eps > 0.0)) throw DomainError("threshold_distinct: eps must be positive");
    const int n = m.n();
    return m.sum_abs_a_sq() / eps + (n - 1.0) * m.sum_abs_d() + (n - 2.0) * eps;
}

double threshold(Threshold which, double eps, const ArrowMatrix& m) {
    switch (which) {
        case Threshold::main:
            return threshold_main(eps, m);
        case Threshold::ordered:
            return threshold_ordered(eps, m);
        case Threshold::distinct:
            return threshold_distinct(eps, m);
    }
    return 0.0;
}

LocalizationReport check_localization(const ArrowMatrix& m, double eps, Threshold which) {
    LocalizationReport rep;
    rep.epsilon = eps;
    rep.threshold = threshold(which, eps, m);
    rep.corner_meets_threshold = m.corner >= rep.threshold;
    rep.eigenvalues = eigen_oracle(m, rep.oracle_residual);

    const int n = m.n();
    rep.top_gap = rep.eigenvalues[n - 1] - m.corner;

    // Sorted pairing of the n-1 smallest eigenvalues against sorted d is the
    // min-max-deviation assignment (both sequences ascending); deviations are
    // reported back in the input slot order.
    std::vector<int> order(n - 1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return m.d[i] < m.d[j]; });
    rep.alpha_deviations.assign(n - 1, 0.0);
    double max_dev = 0.0;
    for (int rank = 0; rank < n - 1; ++rank) {
        const double dev = std::abs(rep.eigenvalues[rank] - m.d[order[rank]]);
        rep.alpha_deviations[order[rank]] = dev;
        max_dev = std::max(max_dev, dev);
    }

    rep.satisfied = max_dev < eps && rep.top_gap >= 0.0 && rep.top_gap < (n - 1.0) * eps;
    return rep;
}

double char_poly_residual(const ArrowMatrix& m, double lambda) {
    const int n = m.n();
    double lhs = lambda - m.corner;
    for (int i = 0; i < n - 1; ++i) lhs *= lambda - m.d[i];
    double rhs = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        double prod = std::norm(m.a[i]);
        for (int j = 0; j < n - 1; ++j)
            if (j != i) prod *= lambda - m.d[j];
        rhs += prod;
    }
    return lhs - rhs;
}

double char_poly_scale(const ArrowMatrix& m, double lambda) {
    const int n = m.n();
    // Expand (x - corner) prod (x - d_i) and the coupling part, accumulating
    // coefficient magnitudes in ascending powers.
    std::vector<double> coeff = {1.0};
    auto multiply = [&](double root) {
        std::vector<double> next(coeff.size() + 1, 0.0);
        for (size_t i = 0; i < coeff.size(); ++i) {
            next[i + 1] += coeff[i];
            next[i] -= root * coeff[i];
        }
        coeff = std::move(next);
    };
    multiply(m.corner);
    for (int i = 0; i < n - 1; ++i) multiply(m.d[i]);
    std::vector<double> mag(coeff.size(), 0.0);
    for (size_t i = 0; i < coeff.size(); ++i) mag[i] = std::abs(coeff[i]);

    for (int i = 0; i < n - 1; ++i) {
        std::vector<double> part = {1.0};
        std::vector<double> tmp;
        for (int j = 0; j < n - 1; ++j) {
            if (j == i) continue;
            tmp.assign(part.size() + 1, 0.0);
            for (size_t t = 0; t < part.size(); ++t) {
                tmp[t + 1] += part[t];
                tmp[t] -= m.d[j] * part[t];
            }
            part = tmp;
        }
        for (size_t t = 0; t < part.size(); ++t) mag[t] += std::norm(m.a[i]) * std::abs(part[t]);
    }

    const double base = std::max(1.0, std::abs(lambda));
    double scale = 0.0, power = 1.0;
    for (double v : mag) {
        scale += v * power;
        power *= base;
    }
    return scale;
}

double trace_identity_residual(const ArrowMatrix& m) {
    const std::vector<double> ev = eigen_oracle(m);
    const double sum = std::accumulate(ev.begin(), ev.end(), 0.0);
    return std::abs(sum - m.trace());
}

ArrowMatrix deflate_duplicate(const ArrowMatrix& m, int i0, int j0) {
    const int cols = static_cast<int>(m.d.size());
    if (i0 < 0 || i0 >= cols || j0 < 0 || j0 >= cols || i0 == j0)
        throw DomainError("deflate_duplicate: bad index pair");
    if (m.d[i0] != m.d[j0])
        throw DomainError("deflate_duplicate: diagonal entries differ");
    ArrowMatrix out;
    out.corner = m.corner;
    const double merged = std::sqrt(std::norm(m.a[j0]) + std::norm(m.a[i0]));
    for (int i = 0; i < cols; ++i) {
        if (i == i0) continue;
        out.d.push_back(m.d[i]);
        out.a.push_back(i == j0 ? cplx(merged, 0.0) : m.a[i]);
    }
    return out;
}

namespace {

ArrowMatrix random_instance(int n, const BatchParams& p, Rng& rng) {
    ArrowMatrix m;
    m.d.resize(n - 1);
    m.a.resize(n - 1);
    for (double& v : m.d) v = rng.uniform(-p.d_range, p.d_range);
    for (cplx& v : m.a) v = rng.complex_disc(p.a_radius);
    return m;
}

}  // namespace

BatchResult run_localization_batch(const BatchParams& params, Exec mode, bool keep_rows) {
    const int n_span = params.n_max - params.n_min + 1;
    const std::int64_t total = n_span * params.instances_per_n;
    std::vector<InstanceRow> rows(total);

    parallel_for(total, mode, [&](std::int64_t t) {
        const int n = params.n_min + static_cast<int>(t / params.instances_per_n);
        const std::int64_t idx = t % params.instances_per_n;
        Rng rng = Rng::for_instance(params.seed ^ (static_cast<std::uint64_t>(n) << 56),
                                    static_cast<std::uint64_t>(idx));
        ArrowMatrix m = random_instance(n, params, rng);

        InstanceRow row;
        row.n = n;
        row.index = idx;
        double dev_slack = std::numeric_limits<double>::infinity();
        double top_lower = std::numeric_limits<double>::infinity();
        double top_upper = std::numeric_limits<double>::infinity();
        double below_lower = std::numeric_limits<double>::infinity();
        for (double eps : params.eps_values) {
            const double thr = threshold(params.which, eps, m);
            for (double mult : params.corner_multipliers) {
                m.corner = mult * thr;
                LocalizationReport rep = check_localization(m, eps, params.which);
                const double scale = std::max(1.0, m.to_dense().frobenius_norm());
                row.max_oracle_residual_rel =
                    std::max(row.max_oracle_residual_rel, rep.oracle_residual / scale);
                const double tr_scale = 1.0 + std::abs(m.trace());
                row.max_trace_residual_rel = std::max(
                    row.max_trace_residual_rel, trace_identity_residual(m) / tr_scale);
                for (double ev : rep.eigenvalues) {
                    const double cp_scale = char_poly_scale(m, ev);
                    row.max_charpoly_residual_rel =
                        std::max(row.max_charpoly_residual_rel,
                                 std::abs(char_poly_residual(m, ev)) / cp_scale);
                }
                double max_dev = 0.0;
                for (double dv : rep.alpha_deviations) max_dev = std::max(max_dev, dv);
                dev_slack = std::min(dev_slack, eps - max_dev);
                top_lower = std::min(top_lower, rep.top_gap);
                top_upper = std::min(top_upper, (n - 1.0) * eps - rep.top_gap);
                if (!rep.satisfied) ++row.violations;
            }
            if (params.include_below_threshold) {
                // Below the bound the lemma promises nothing except that the
                // top eigenvalue still dominates the corner.
                m.corner = 0.5 * thr;
                double resid = 0.0;
                const std::vector<double> ev = eigen_oracle(m, resid);
                below_lower = std::min(below_lower, ev[n - 1] - m.corner);
            }
        }
        row.worst_dev_slack = dev_slack;
        row.worst_top_lower_slack = top_lower;
        row.worst_top_upper_slack = top_upper;
        row.below_threshold_top_lower = params.include_below_threshold ? below_lower : 0.0;
        rows[t] = row;
    });

    BatchResult result;
    result.total_checks =
        total * static_cast<std::int64_t>(params.eps_values.size() *
                                          params.corner_multipliers.size());
    result.worst_dev_slack = std::numeric_limits<double>::infinity();
    result.worst_top_lower_slack = std::numeric_limits<double>::infinity();
    result.worst_top_upper_slack = std::numeric_limits<double>::infinity();
    result.min_below_threshold_top_lower = std::numeric_limits<double>::infinity();
    for (const InstanceRow& row : rows) {
        result.violations += row.violations;
        result.worst_dev_slack = std::min(result.worst_dev_slack, row.worst_dev_slack);
        result.worst_top_lower_slack =
            std::min(result.worst_top_lower_slack, row.worst_top_lower_slack);
        result.worst_top_upper_slack =
            std::min(result.worst_top_upper_slack, row.worst_top_upper_slack);
        result.max_oracle_residual_rel =
            std::max(result.max_oracle_residual_rel, row.max_oracle_residual_rel);
        result.max_trace_residual_rel =
            std::max(result.max_trace_residual_rel, row.max_trace_residual_rel);
        result.max_charpoly_residual_rel =
            std::max(result.max_charpoly_residual_rel, row.max_charpoly_residual_rel);
        result.min_below_threshold_top_lower =
            std::min(result.min_below_threshold_top_lower, row.below_threshold_top_lower);
    }
    if (keep_rows) result.rows = std::move(rows);
    return result;
}

}  // namespace hpde::arrow
