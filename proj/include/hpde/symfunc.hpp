#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpde/parallel.hpp"
#include "hpde/rng.hpp"

namespace hpde::symfunc {

// Absolute slack tolerance for the analytic inequality checks; closed
// forms in double precision sit comfortably inside it.
inline constexpr double kTolCheck = 1e-12;
// Residual tolerance for level-set points on the diagonal.
inline constexpr double kTolRoot = 1e-12;
// Doubling-search bound for the projected-cone membership test.
inline constexpr double kTMax = 1099511627776.0;  // 2^40

enum class ConeKind { gamma_k, positive };

// Open symmetric convex cone in R^n. gamma_k is realized through
// positivity of the first k elementary symmetric polynomials; the
// positive orthant is gamma_n.
struct ConeSpec {
    ConeKind kind = ConeKind::positive;
    int n = 0;
    int k = 0;  // only for gamma_k

    static ConeSpec gamma(int n, int k);
    static ConeSpec positive_cone(int n);
};

enum class Family { log_ma, sigma_k_root, hessian_quotient };

// A concrete pair (f, Gamma):
//   log_ma            f = sum_i log(lambda_i)            on the positive cone
//   sigma_k_root      f = sigma_k^(1/k)                  on gamma_k
//   hessian_quotient  f = (sigma_k / sigma_l)^(1/(k-l))  on gamma_k, l < k
struct OperatorSpec {
    Family family = Family::log_ma;
    int n = 0;
    int k = 0;
    int l = 0;

    static OperatorSpec log_ma(int n);
    static OperatorSpec sigma_k_root(int n, int k);
    static OperatorSpec hessian_quotient(int n, int k, int l);

    ConeSpec cone() const;
    // sup of f on the cone boundary: -inf for log_ma, 0 for the others.
    double sup_boundary_f() const;
    // Whether f(lambda_1,...,lambda_{n-1}, lambda_n + t) climbs to sup f
    // as t grows. Derived analytically: true for log_ma and sigma_k_root;
    // false for every quotient, whose limit in that direction is the
    // finite ratio (sigma_{k-1}(lambda')/sigma_{l-1}(lambda'))^(1/(k-l)).
    bool vertical_unbounded() const;
    std::string name() const;
};

// sigma_k(lambda), sigma_0 = 1. Throws DomainError for k outside [0, n].
double elementary_symmetric(std::span<const double> lambda, int k);
// sigma_k of lambda with entry `skip` removed.
double elementary_symmetric_without(std::span<const double> lambda, int k, int skip);

bool cone_contains(const ConeSpec& cone, std::span<const double> lambda);

double f_eval(const OperatorSpec& op, std::span<const double> lambda);
std::vector<double> f_grad(const OperatorSpec& op, std::span<const double> lambda);
// Df / |Df|; unit Euclidean norm, all components positive.
std::vector<double> normal_vector(const OperatorSpec& op, std::span<const double> lambda);

// Interior sample of the cone: lambda = c * 1 + r * g with c ~ U[0.5, 5],
// r ~ U[0, c/2], g standard normal, rejected until membership holds.
// Throws SamplingError after the retry budget.
std::vector<double> sample_cone(const ConeSpec& cone, Rng& rng, int max_tries = 200);

struct CriteriaReport {
    int samples = 0;
    // Minimum observed slack of each inequality over all sampled pairs.
    double min_slack_grad_pairing = 0.0;   // sum f_i(lambda) mu_i >= 0
    double min_slack_translation = 0.0;    // f(lambda + mu) >= f(lambda)
    double min_slack_euler = 0.0;          // sum f_i(lambda) lambda_i >= 0
    double min_slack_grad_strict = 0.0;    // sum f_i(lambda) mu_i > 0
    double min_slack_translation_strict = 0.0;  // f(lambda + mu) > f(lambda)
    double min_slack_sum_fi = 0.0;         // sum f_i > (f(R 1) - f(lambda)) / R
    int violations = 0;                    // slacks below -kTolCheck

    bool all_hold() const { return violations == 0; }
};

// Samples pairs (lambda, mu) from the cone and evaluates the growth
// criteria slacks directly per pair; R in {1, 10, 100} for the gradient-sum
// bound. Deterministic per (op, samples, seed); OpenMP-safe per instance.
CriteriaReport verify_growth_criteria(const OperatorSpec& op, int samples,
                                      std::uint64_t seed, Exec mode = Exec::serial);

// min( midpoint concavity slack, tangent-line slack ). Nonnegative for
// concave f up to kTolCheck.
double concavity_midpoint_check(const OperatorSpec& op, std::span<const double> lambda,
                                std::span<const double> mu);

struct LevelSetPoint {
    double sigma = 0.0;
    double c_sigma = 0.0;
};

// The point c 1 on the level set { f = sigma }, found by bisection on the
// strictly increasing t -> f(t 1). Throws RangeError when sigma is not
// attainable on the diagonal.
LevelSetPoint diagonal_level_point(const OperatorSpec& op, double sigma);

// Projection membership: true iff (lambda', T) lands in the cone for some
// T in a doubling search up to kTMax. A false return only certifies
// "not found within the search bound".
bool gamma_infinity_contains(const OperatorSpec& op, std::span<const double> lambda_prime);
bool gamma_infinity_contains(const ConeSpec& cone, std::span<const double> lambda_prime);

}  // namespace hpde::symfunc
