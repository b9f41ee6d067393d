#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hpde/parallel.hpp"
#include "hpde/smallmat.hpp"

namespace hpde::arrow {

// Hermitian matrix with fixed diagonal d_1..d_{n-1}, dense last column
// a_1..a_{n-1} and variable corner entry.
struct ArrowMatrix {
    std::vector<double> d;
    std::vector<cplx> a;
    double corner = 0.0;

    int n() const { return static_cast<int>(d.size()) + 1; }
    double sum_abs_a_sq() const;
    double sum_abs_d() const;
    double trace() const { return sum_d() + corner; }
    double sum_d() const;
    HermMat to_dense() const;
};

// Dense Hermitian eigenvalues, ascending. Deliberately ignorant of the
// arrow structure so the localization checks are non-circular.
std::vector<double> eigen_oracle(const ArrowMatrix& m);
// Same plus the worst ||A v - lambda v|| over eigenpairs.
std::vector<double> eigen_oracle(const ArrowMatrix& m, double& residual);

enum class Threshold { main, ordered, distinct };

// Corner bounds triggering eigenvalue localization:
//   main      (2n-3)/eps sum|a_i|^2 + (n-1) sum|d_i| + (n-2) eps/(2n-3)
//   ordered   1/eps sum|a_i|^2 + sum(d_i + (n-2)|d_i|) + (n-2) eps
//   distinct  1/eps sum|a_i|^2 + (n-1) sum|d_i| + (n-2) eps
// The distinct form only localizes for eps <= min gap / 2 when the d are
// distinct; the main form has no eps restriction.
double threshold_main(double eps, const ArrowMatrix& m);
double threshold_ordered(double eps, const ArrowMatrix& m);
double threshold_distinct(double eps, const ArrowMatrix& m);
double threshold(Threshold which, double eps, const ArrowMatrix& m);

struct LocalizationReport {
    double epsilon = 0.0;
    double threshold = 0.0;
    bool corner_meets_threshold = false;
    bool satisfied = false;                 // all conclusion inequalities hold
    std::vector<double> eigenvalues;        // oracle, ascending
    std::vector<double> alpha_deviations;   // |lambda - d_i| per input slot, min-max pairing
    double top_gap = 0.0;                   // lambda_n - corner
    double oracle_residual = 0.0;
};

// Pairs the n-1 smallest oracle eigenvalues with the diagonal by the
// assignment minimizing the maximum deviation (sorted pairing, which is
// optimal for that criterion), then reports whether the localization
// conclusion holds: every deviation < eps, 0 <= top_gap < (n-1) eps.
LocalizationReport check_localization(const ArrowMatrix& m, double eps, Threshold which);

// (lambda - corner) prod(lambda - d_i) - sum |a_i|^2 prod_{j != i}(lambda - d_j).
double char_poly_residual(const ArrowMatrix& m, double lambda);
// Evaluation-magnitude bound sum_j |c_j| max(1,|lambda|)^j of the expanded
// characteristic polynomial; the natural scale for the residual check.
double char_poly_scale(const ArrowMatrix& m, double lambda);

// | sum of oracle eigenvalues - trace |.
double trace_identity_residual(const ArrowMatrix& m);

// Removes duplicate diagonal slot i0 (d[i0] == d[j0] required), folding its
// coupling into slot j0 as sqrt(|a_j0|^2 + |a_i0|^2). The input spectrum is
// the output spectrum plus {d[i0]}.
ArrowMatrix deflate_duplicate(const ArrowMatrix& m, int i0, int j0);

struct BatchParams {
    int n_min = 2;
    int n_max = 8;
    std::int64_t instances_per_n = 100000;
    std::vector<double> eps_values = {0.1, 0.5, 1.0, 3.0};
    std::vector<double> corner_multipliers = {1.0, 10.0};
    double d_range = 3.0;     // d uniform in [-d_range, d_range]
    double a_radius = 3.0;    // a uniform in the complex disc
    std::uint64_t seed = 1;
    Threshold which = Threshold::main;
    bool include_below_threshold = true;  // extra corner = threshold/2 row, reported only
};

struct InstanceRow {
    int n = 0;
    std::int64_t index = 0;
    // Worst over the (eps, multiplier) combinations.
    double worst_dev_slack = 0.0;        // min of eps - max deviation
    double worst_top_lower_slack = 0.0;  // min of top_gap (>= 0 wanted)
    double worst_top_upper_slack = 0.0;  // min of (n-1) eps - top_gap
    double max_oracle_residual_rel = 0.0;
    double max_trace_residual_rel = 0.0;
    double max_charpoly_residual_rel = 0.0;
    double below_threshold_top_lower = 0.0;  // reported, not part of the lemma
    int violations = 0;
};

struct BatchResult {
    std::vector<InstanceRow> rows;
    std::int64_t total_checks = 0;
    std::int64_t violations = 0;
    double worst_dev_slack = 0.0;
    double worst_top_lower_slack = 0.0;
    double worst_top_upper_slack = 0.0;
    double max_oracle_residual_rel = 0.0;
    double max_trace_residual_rel = 0.0;
    double max_charpoly_residual_rel = 0.0;
    double min_below_threshold_top_lower = 0.0;
};

// Random-instance localization sweep; rows land in preallocated slots so
// serial and OpenMP runs produce identical bytes.
BatchResult run_localization_batch(const BatchParams& params, Exec mode,
                                   bool keep_rows = true);

}  // namespace hpde::arrow
