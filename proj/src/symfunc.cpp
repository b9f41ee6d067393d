#include "hpde/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpde/errors.hpp"

namespace hpde::symfunc {

ConeSpec ConeSpec::gamma(int n, int k) {
    if (n < 2 || k < 1 || k > n) throw DomainError("ConeSpec: need n >= 2, 1 <= k <= n");
    return {ConeKind::gamma_k, n, k};
}

ConeSpec ConeSpec::positive_cone(int n) {
    if (n < 2) throw DomainError("ConeSpec: need n >= 2");
    return {ConeKind::positive, n, n};
}

OperatorSpec OperatorSpec::log_ma(int n) {
    if (n < 2) throw DomainError("OperatorSpec: need n >= 2");
    return {Family::log_ma, n, n, 0};
}

OperatorSpec OperatorSpec::sigma_k_root(int n, int k) {
    if (n < 2 || k < 1 || k > n) throw DomainError("OperatorSpec: need 1 <= k <= n");
    return {Family::sigma_k_root, n, k, 0};
}

OperatorSpec OperatorSpec::hessian_quotient(int n, int k, int l) {
    if (n < 2 || k < 1 || k > n || l < 1 || l >= k)
        throw DomainError("OperatorSpec: quotient needs 1 <= l < k <= n");
    return {Family::hessian_quotient, n, k, l};
}

ConeSpec OperatorSpec::cone() const {
    if (family == Family::log_ma) return ConeSpec::positive_cone(n);
    return ConeSpec::gamma(n, k);
}

double OperatorSpec::sup_boundary_f() const {
    return family == Family::log_ma ? -std::numeric_limits<double>::infinity() : 0.0;
}

bool OperatorSpec::vertical_unbounded() const { return family != Family::hessian_quotient; }

std::string OperatorSpec::name() const {
    switch (family) {
        case Family::log_ma:
            return "log_ma(n=" + std::to_string(n) + ")";
        case Family::sigma_k_root:
            return "sigma_" + std::to_string(k) + "_root(n=" + std::to_string(n) + ")";
        case Family::hessian_quotient:
            return "quotient_s" + std::to_string(k) + "_s" + std::to_string(l) +
                   "(n=" + std::to_string(n) + ")";
    }
    return "?";
}

double elementary_symmetric(std::span<const double> lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (k < 0 || k > n) throw DomainError("elementary_symmetric: k out of range");
    // e[j] after processing i entries holds sigma_j of those entries.
    std::vector<double> e(static_cast<size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::min(k, i + 1); j >= 1; --j) e[j] += e[j - 1] * lambda[i];
    return e[k];
}

double elementary_symmetric_without(std::span<const double> lambda, int k, int skip) {
    const int n = static_cast<int>(lambda.size());
    if (skip < 0 || skip >= n) throw DomainError("elementary_symmetric_without: bad index");
    if (k < 0 || k > n - 1) throw DomainError("elementary_symmetric_without: k out of range");
    std::vector<double> e(static_cast<size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        if (i == skip) continue;
        for (int j = k; j >= 1; --j) e[j] += e[j - 1] * lambda[i];
    }
    return e[k];
}

bool cone_contains(const ConeSpec& cone, std::span<const double> lambda) {
    if (static_cast<int>(lambda.size()) != cone.n)
        throw DomainError("cone_contains: dimension mismatch");
    if (cone.kind == ConeKind::positive) {
        for (double v : lambda)
            if (!(v > 0.0)) return false;
        return true;
    }
    for (int j = 1; j <= cone.k; ++j)
        if (!(elementary_symmetric(lambda, j) > 0.0)) return false;
    return true;
}

namespace {

void require_in_cone(const OperatorSpec& op, std::span<const double> lambda) {
    if (static_cast<int>(lambda.size()) != op.n)
        throw DomainError("operator: dimension mismatch");
    if (!cone_contains(op.cone(), lambda))
        throw OutsideConeError("operator: point outside " + op.name() + " cone");
}

}  // namespace

double f_eval(const OperatorSpec& op, std::span<const double> lambda) {
    require_in_cone(op, lambda);
    switch (op.family) {
        case Family::log_ma: {
            double s = 0.0;
            for (double v : lambda) s += std::log(v);
            return s;
        }
        case Family::sigma_k_root:
            return std::pow(elementary_symmetric(lambda, op.k), 1.0 / op.k);
        case Family::hessian_quotient: {
            const double sk = elementary_symmetric(lambda, op.k);
            const double sl = elementary_symmetric(lambda, op.l);
            return std::exp((std::log(sk) - std::log(sl)) / (op.k - op.l));
        }
    }
    return 0.0;
}

std::vector<double> f_grad(const OperatorSpec& op, std::span<const double> lambda) {
    require_in_cone(op, lambda);
    const int n = op.n;
    std::vector<double> g(n);
    switch (op.family) {
        case Family::log_ma:
            for (int i = 0; i < n; ++i) g[i] = 1.0 / lambda[i];
            break;
        case Family::sigma_k_root: {
            const double sk = elementary_symmetric(lambda, op.k);
            const double f = std::pow(sk, 1.0 / op.k);
            for (int i = 0; i < n; ++i)
                g[i] = f / (op.k * sk) * elementary_symmetric_without(lambda, op.k - 1, i);
            break;
        }
        case Family::hessian_quotient: {
            // Logarithmic differentiation keeps the two sigma terms from
            // cancelling catastrophically near the cone boundary.
            const double sk = elementary_symmetric(lambda, op.k);
            const double sl = elementary_symmetric(lambda, op.l);
            const double f = std::exp((std::log(sk) - std::log(sl)) / (op.k - op.l));
            for (int i = 0; i < n; ++i) {
                const double dk = elementary_symmetric_without(lambda, op.k - 1, i);
                const double dl = elementary_symmetric_without(lambda, op.l - 1, i);
                g[i] = f / (op.k - op.l) * (dk / sk - dl / sl);
            }
            break;
        }
    }
    return g;
}

std::vector<double> normal_vector(const OperatorSpec& op, std::span<const double> lambda) {
    std::vector<double> g = f_grad(op, lambda);
    double norm = 0.0;
    for (double v : g) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : g) v /= norm;
    return g;
}

std::vector<double> sample_cone(const ConeSpec& cone, Rng& rng, int max_tries) {
    std::vector<double> lambda(cone.n);
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        const double c = rng.uniform(0.5, 5.0);
        const double r = rng.uniform(0.0, c / 2.0);
        for (double& v : lambda) v = c + r * rng.normal();
        if (cone_contains(cone, lambda)) return lambda;
    }
    throw SamplingError("sample_cone: no interior point after retry budget");
}

CriteriaReport verify_growth_criteria(const OperatorSpec& op, int samples, std::uint64_t seed,
                                      Exec mode) {
    if (samples < 1) throw DomainError("verify_growth_criteria: samples >= 1");
    const ConeSpec cone = op.cone();

    struct Slacks {
        double grad_pairing, translation, euler, grad_strict, translation_strict, sum_fi;
    };
    std::vector<Slacks> rows(samples);

    parallel_for(samples, mode, [&](std::int64_t idx) {
        Rng rng = Rng::for_instance(seed, static_cast<std::uint64_t>(idx));
        const std::vector<double> lambda = sample_cone(cone, rng);
        const std::vector<double> mu = sample_cone(cone, rng);
        const std::vector<double> grad = f_grad(op, lambda);

        double grad_dot_mu = 0.0, grad_dot_lambda = 0.0, grad_sum = 0.0;
        for (int i = 0; i < op.n; ++i) {
            grad_dot_mu += grad[i] * mu[i];
            grad_dot_lambda += grad[i] * lambda[i];
            grad_sum += grad[i];
        }
        std::vector<double> sum_lm(op.n);
        for (int i = 0; i < op.n; ++i) sum_lm[i] = lambda[i] + mu[i];
        const double f_lambda = f_eval(op, lambda);
        const double translation = f_eval(op, sum_lm) - f_lambda;

        double sum_fi_slack = std::numeric_limits<double>::infinity();
        const std::vector<double> ones(op.n, 1.0);
        for (double big_r : {1.0, 10.0, 100.0}) {
            std::vector<double> diag(op.n, big_r);
            const double bound = (f_eval(op, diag) - f_lambda) / big_r;
            sum_fi_slack = std::min(sum_fi_slack, grad_sum - bound);
        }

        rows[idx] = {grad_dot_mu, translation, grad_dot_lambda,
                     grad_dot_mu, translation,  sum_fi_slack};
    });

    CriteriaReport rep;
    rep.samples = samples;
    auto init = std::numeric_limits<double>::infinity();
    rep.min_slack_grad_pairing = rep.min_slack_translation = rep.min_slack_euler = init;
    rep.min_slack_grad_strict = rep.min_slack_translation_strict = rep.min_slack_sum_fi = init;
    for (const auto& r : rows) {
        rep.min_slack_grad_pairing = std::min(rep.min_slack_grad_pairing, r.grad_pairing);
        rep.min_slack_translation = std::min(rep.min_slack_translation, r.translation);
        rep.min_slack_euler = std::min(rep.min_slack_euler, r.euler);
        rep.min_slack_grad_strict = std::min(rep.min_slack_grad_strict, r.grad_strict);
        rep.min_slack_translation_strict =
            std::min(rep.min_slack_translation_strict, r.translation_strict);
        rep.min_slack_sum_fi = std::min(rep.min_slack_sum_fi, r.sum_fi);
        for (double s : {r.grad_pairing, r.translation, r.euler, r.grad_strict,
                         r.translation_strict, r.sum_fi})
            if (s < -kTolCheck) ++rep.violations;
    }
    return rep;
}

double concavity_midpoint_check(const OperatorSpec& op, std::span<const double> lambda,
                                std::span<const double> mu) {
    const int n = op.n;
    std::vector<double> mid(n);
    for (int i = 0; i < n; ++i) mid[i] = 0.5 * (lambda[i] + mu[i]);
    const double f_lambda = f_eval(op, lambda);
    const double f_mu = f_eval(op, mu);
    const double midpoint_slack = f_eval(op, mid) - 0.5 * (f_lambda + f_mu);

    const std::vector<double> grad = f_grad(op, lambda);
    double tangent = 0.0;
    for (int i = 0; i < n; ++i) tangent += grad[i] * (mu[i] - lambda[i]);
    const double tangent_slack = tangent - (f_mu - f_lambda);

    return std::min(midpoint_slack, tangent_slack);
}

LevelSetPoint diagonal_level_point(const OperatorSpec& op, double sigma) {
    if (!(sigma > op.sup_boundary_f()))
        throw RangeError("diagonal_level_point: sigma not above sup of f on the cone boundary");

    auto diag_f = [&](double t) {
        std::vector<double> d(op.n, t);
        return f_eval(op, d);
    };

    // Bracket: f(t 1) is strictly increasing; expand until it straddles sigma.
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (diag_f(lo) > sigma) {
        lo /= 2.0;
        if (++guard > 2100) throw RangeError("diagonal_level_point: sigma below diagonal range");
    }
    guard = 0;
    while (diag_f(hi) < sigma) {
        hi *= 2.0;
        if (++guard > 2100) throw RangeError("diagonal_level_point: sigma above diagonal range");
    }

    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (diag_f(mid) < sigma)
            lo = mid;
        else
            hi = mid;
    }
    double best = 0.5 * (lo + hi);
    if (std::abs(diag_f(lo) - sigma) < std::abs(diag_f(best) - sigma)) best = lo;
    if (std::abs(diag_f(hi) - sigma) < std::abs(diag_f(best) - sigma)) best = hi;
    if (std::abs(diag_f(best) - sigma) > kTolRoot * std::max(1.0, std::abs(sigma)))
        throw NumericalError("diagonal_level_point: residual above tolerance");
    return {sigma, best};
}

bool gamma_infinity_contains(const ConeSpec& cone, std::span<const double> lambda_prime) {
    if (static_cast<int>(lambda_prime.size()) != cone.n - 1)
        throw DomainError("gamma_infinity_contains: expected n-1 entries");
    std::vector<double> lifted(cone.n);
    std::copy(lambda_prime.begin(), lambda_prime.end(), lifted.begin());
    // Membership is monotone in the last slot because Gamma + Gamma_n stays
    // in Gamma, so a doubling scan is enough.
    for (double t = 1.0; t <= kTMax; t *= 2.0) {
        lifted[cone.n - 1] = t;
        if (cone_contains(cone, lifted)) return true;
    }
    return false;
}

bool gamma_infinity_contains(const OperatorSpec& op, std::span<const double> lambda_prime) {
    return gamma_infinity_contains(op.cone(), lambda_prime);
}

}  // namespace hpde::symfunc
