#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hpde/arrow.hpp"
#include "hpde/dirichlet.hpp"
#include "hpde/symfunc.hpp"

namespace hpde::config {

// Line-based `key = value` sections. Unknown sections or keys, duplicate
// keys and malformed numbers are rejected with the offending line number.

struct GridSpec {
    int p = 1;
    int torus_res = 16;
    int s_res = 16;
    int theta_res = 16;
};

enum class FieldKind { constant, expression, manufactured };

struct FieldSpec {
    FieldKind kind = FieldKind::constant;
    double value = 0.0;
    std::string expr;   // for FieldKind::expression
    double amp = 0.05;  // for FieldKind::manufactured (psi only)
};

struct MatrixSpec {
    std::vector<double> diag;           // empty means identity
    std::vector<double> upper;          // (re, im) pairs, row-major strict upper
};

struct SolverSpec {
    double tol_newton = 1e-9;
    int max_newton_iters = 200;
    double margin_target = 0.1;
    double t_initial = 0.25;
    double t_min = 1e-4;
    double linear_rtol = 1e-12;
    std::int64_t direct_threshold = 4000;
    int max_linear_iterations = 4000;
    std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
};

struct RunSpec {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int samples = 10000;
    bool openmp = true;
};

struct ArrowSpec {
    int n_min = 2;
    int n_max = 8;
    std::int64_t instances = 100000;
    std::vector<double> eps = {0.1, 0.5, 1.0, 3.0};
    std::vector<double> corner_multipliers = {1.0, 10.0};
    double d_range = 3.0;
    double a_radius = 3.0;
    std::string threshold = "main";
};

struct ProbeSpec {
    std::vector<int> ladder = {16, 32, 64};
    std::string family = "manufactured";  // or "geodesic"
    std::vector<double> amps = {0.01, 0.02, 0.03, 0.04, 0.05};
    double c = 1.0;
};

struct CompareSpec {
    std::string file_a;
    std::string file_b;
    double tol = 1e-7;
};

struct RunConfig {
    std::optional<symfunc::OperatorSpec> op;
    std::optional<GridSpec> grid;
    MatrixSpec chi;
    MatrixSpec omega;
    std::optional<FieldSpec> psi;
    std::optional<FieldSpec> phi;
    SolverSpec solver;
    RunSpec run;
    ArrowSpec arrow;
    ProbeSpec probe;
    CompareSpec compare;
    std::set<std::string> sections;

    bool has(const std::string& section) const { return sections.count(section) > 0; }
};

// Throws ConfigError with a line number on any malformed input.
RunConfig parse(const std::string& text);
RunConfig parse_file(const std::string& path);

// Canonical serialization; parse(serialize(parse(x))) == parse(x).
std::string serialize(const RunConfig& cfg);

// Assembles the Dirichlet problem from [operator], [grid], [chi], [omega],
// [psi], [phi]. Throws ConfigError when required sections are missing or
// dimensions disagree.
dirichlet::DirichletProblem build_problem(const RunConfig& cfg);

dirichlet::SolverOptions solver_options(const RunConfig& cfg);
arrow::BatchParams arrow_params(const RunConfig& cfg);

// FNV-1a of the raw config text, for the run manifest.
std::uint64_t config_hash(const std::string& text);

}  // namespace hpde::config
