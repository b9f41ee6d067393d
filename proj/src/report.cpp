#include "hpde/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hpde/errors.hpp"

namespace hpde::report {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write file '" + path + "'");
    out << content;
}

void write_field_csv(const std::string& path, const grid::ProductGrid& g,
                     const grid::ScalarField& field) {
    std::ostringstream out;
    out << "node_id";
    for (int j = 1; j <= g.p(); ++j) out << ",x_" << j << ",y_" << j;
    out << ",s,theta,value\n";
    const int nd = g.ndirs();
    std::vector<int> idx(nd, 0);
    for (std::int64_t node = 0; node < g.nodes(); ++node) {
        out << node;
        for (int j = 0; j < g.p(); ++j)
            out << ',' << format_double(g.coordinate(2 * j, idx[2 * j])) << ','
                << format_double(g.coordinate(2 * j + 1, idx[2 * j + 1]));
        out << ',' << format_double(g.coordinate(g.s_dir(), idx[g.s_dir()])) << ','
            << format_double(g.coordinate(g.theta_dir(), idx[g.theta_dir()])) << ','
            << format_double(field[node]) << '\n';
        for (int d = 0; d < nd; ++d) {
            if (++idx[d] < g.dim(d)) break;
            idx[d] = 0;
        }
    }
    write_text_file(path, out.str());
}

grid::ScalarField read_field_csv(const std::string& path, std::int64_t expected_nodes) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read field file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DomainError("empty field file '" + path + "'");
    grid::ScalarField field;
    field.reserve(expected_nodes);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t comma = line.rfind(',');
        if (comma == std::string::npos) throw DomainError("malformed field row in " + path);
        field.push_back(std::stod(line.substr(comma + 1)));
    }
    if (static_cast<std::int64_t>(field.size()) != expected_nodes)
        throw DomainError("field file '" + path + "' has wrong node count");
    return field;
}

void write_solve_report_json(const std::string& path, const dirichlet::SolveReport& rep,
                             const std::string& error) {
    nlohmann::json j;
    j["residual_sup"] = rep.residual_sup;
    j["newton_iters"] = rep.newton_iters;
    j["t_path"] = rep.t_path;
    j["admissibility_margin"] = rep.admissibility_margin;
    j["wall_ms"] = rep.wall_ms;
    if (!error.empty()) j["error"] = error;
    write_text_file(path, j.dump(2) + "\n");
}

void write_cauchy_csv(const std::string& path, const std::vector<dirichlet::CauchyRow>& rows) {
    std::ostringstream out;
    out << "eps,sup_diff_to_prev\n";
    for (size_t i = 1; i < rows.size(); ++i)
        out << format_double(rows[i].eps) << ',' << format_double(rows[i].sup_diff_to_prev)
            << '\n';
    write_text_file(path, out.str());
}

void write_arrow_csv(const std::string& path, const arrow::BatchResult& result) {
    std::ostringstream out;
    out << "n,instance,worst_dev_slack,worst_top_lower_slack,worst_top_upper_slack,"
           "max_oracle_residual_rel,max_trace_residual_rel,max_charpoly_residual_rel,"
           "violations\n";
    for (const arrow::InstanceRow& r : result.rows) {
        out << r.n << ',' << r.index << ',' << format_double(r.worst_dev_slack) << ','
            << format_double(r.worst_top_lower_slack) << ','
            << format_double(r.worst_top_upper_slack) << ','
            << format_double(r.max_oracle_residual_rel) << ','
            << format_double(r.max_trace_residual_rel) << ','
            << format_double(r.max_charpoly_residual_rel) << ',' << r.violations << '\n';
    }
    write_text_file(path, out.str());
}

void write_cone_criteria_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, symfunc::CriteriaReport>>& reports) {
    std::ostringstream out;
    out << "family,samples,min_slack_grad_pairing,min_slack_translation,min_slack_euler,"
           "min_slack_grad_strict,min_slack_translation_strict,min_slack_sum_fi,violations\n";
    for (const auto& [name, rep] : reports) {
        out << name << ',' << rep.samples << ',' << format_double(rep.min_slack_grad_pairing)
            << ',' << format_double(rep.min_slack_translation) << ','
            << format_double(rep.min_slack_euler) << ','
            << format_double(rep.min_slack_grad_strict) << ','
            << format_double(rep.min_slack_translation_strict) << ','
            << format_double(rep.min_slack_sum_fi) << ',' << rep.violations << '\n';
    }
    write_text_file(path, out.str());
}

void write_probe_csv(const std::string& path,
                     const std::vector<probes::EstimateProbe>& probes) {
    std::ostringstream out;
    out << "family,resolution,ratio_boundary,ratio_global,margin_min\n";
    for (const probes::EstimateProbe& p : probes)
        for (const probes::LadderRun& r : p.runs)
            out << p.family << ',' << r.resolution << ',' << format_double(r.ratio_boundary)
                << ',' << format_double(r.ratio_global) << ',' << format_double(r.margin_min)
                << '\n';
    write_text_file(path, out.str());
}

void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::json j;
    j["subcommand"] = m.subcommand;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["tolerances"] = {{"tol_newton", m.tol_newton}, {"linear_rtol", m.linear_rtol}};
    j["version"] = "hpde 0.1.0";
    j["wall_ms"] = m.wall_ms;
    j["outputs"] = m.outputs;
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace hpde::report
