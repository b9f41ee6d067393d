#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpde/arrow.hpp"
#include "hpde/dirichlet.hpp"
#include "hpde/grid.hpp"
#include "hpde/probes.hpp"
#include "hpde/symfunc.hpp"

namespace hpde::report {

// All floats in CSV files carry 17 significant digits so runs reproduce
// bit-identically from the same config and seed.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// Solution dump: node_id, x_1, y_1, ..., s, theta, value.
void write_field_csv(const std::string& path, const grid::ProductGrid& g,
                     const grid::ScalarField& field);
// Reads the `value` column back in node order; validates the node count.
grid::ScalarField read_field_csv(const std::string& path, std::int64_t expected_nodes);

void write_solve_report_json(const std::string& path, const dirichlet::SolveReport& rep,
                             const std::string& error = "");
void write_cauchy_csv(const std::string& path, const std::vector<dirichlet::CauchyRow>& rows);
void write_arrow_csv(const std::string& path, const arrow::BatchResult& result);
void write_cone_criteria_csv(const std::string& path,
                             const std::vector<std::pair<std::string, symfunc::CriteriaReport>>&
                                 reports);
void write_probe_csv(const std::string& path, const std::vector<probes::EstimateProbe>& probes);

struct Manifest {
    std::string subcommand;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    double tol_newton = 0.0;
    double linear_rtol = 1e-12;
    double wall_ms = 0.0;
    std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const Manifest& m);

}  // namespace hpde::report
