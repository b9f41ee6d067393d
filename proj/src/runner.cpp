#include "hpde/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "hpde/config.hpp"
#include "hpde/errors.hpp"
#include "hpde/report.hpp"

namespace hpde::runner {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct RunContext {
    config::RunConfig cfg;
    std::string config_text;
    fs::path out_dir;
    report::Manifest manifest;
    Clock::time_point start = Clock::now();

    std::string out(const std::string& name) {
        manifest.outputs.push_back(name);
        return (out_dir / name).string();
    }

    void finish() {
        manifest.wall_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        report::write_manifest((out_dir / "manifest.json").string(), manifest);
    }
};

int cmd_verify_cones(RunContext& ctx) {
    const Exec mode = ctx.cfg.run.openmp ? Exec::openmp : Exec::serial;
    std::vector<std::pair<std::string, symfunc::CriteriaReport>> reports;
    std::vector<symfunc::OperatorSpec> ops;
    for (int n = 2; n <= 4; ++n) {
        ops.push_back(symfunc::OperatorSpec::log_ma(n));
        for (int k = 1; k <= n; ++k) ops.push_back(symfunc::OperatorSpec::sigma_k_root(n, k));
    }
    ops.push_back(symfunc::OperatorSpec::hessian_quotient(3, 2, 1));

    int violations = 0;
    for (const auto& op : ops) {
        symfunc::CriteriaReport rep =
            symfunc::verify_growth_criteria(op, ctx.cfg.run.samples, ctx.cfg.run.seed, mode);
        violations += rep.violations;
        reports.emplace_back(op.name(), rep);
    }
    report::write_cone_criteria_csv(ctx.out("cones.csv"), reports);
    ctx.finish();
    return violations == 0 ? 0 : 3;
}

int cmd_verify_arrow(RunContext& ctx) {
    arrow::BatchParams params = config::arrow_params(ctx.cfg);
    const Exec mode = ctx.cfg.run.openmp ? Exec::openmp : Exec::serial;
    arrow::BatchResult result = arrow::run_localization_batch(params, mode, true);
    report::write_arrow_csv(ctx.out("arrow.csv"), result);

    nlohmann::json j;
    j["total_checks"] = result.total_checks;
    j["violations"] = result.violations;
    j["worst_dev_slack"] = result.worst_dev_slack;
    j["worst_top_lower_slack"] = result.worst_top_lower_slack;
    j["worst_top_upper_slack"] = result.worst_top_upper_slack;
    j["max_oracle_residual_rel"] = result.max_oracle_residual_rel;
    j["max_trace_residual_rel"] = result.max_trace_residual_rel;
    j["max_charpoly_residual_rel"] = result.max_charpoly_residual_rel;
    report::write_text_file(ctx.out("arrow_summary.json"), j.dump(2) + "\n");
    ctx.finish();
    return result.violations == 0 ? 0 : 3;
}

int cmd_subsolution(RunContext& ctx) {
    dirichlet::DirichletProblem prob = config::build_problem(ctx.cfg);
    const dirichlet::SolverOptions opts = config::solver_options(ctx.cfg);
    const dirichlet::SubsolutionResult sub =
        dirichlet::construct_subsolution(prob, ctx.cfg.solver.margin_target, opts);
    report::write_field_csv(ctx.out("subsolution.csv"), prob.grid, sub.u_sub);
    nlohmann::json j;
    j["t_star"] = sub.t_star;
    j["margin"] = sub.margin;
    j["normal_derivative_max"] = sub.normal_derivative_max;
    report::write_text_file(ctx.out("subsolution.json"), j.dump(2) + "\n");
    ctx.finish();
    return 0;
}

int cmd_solve(RunContext& ctx) {
    dirichlet::DirichletProblem prob = config::build_problem(ctx.cfg);
    const dirichlet::SolverOptions opts = config::solver_options(ctx.cfg);
    linsolve::FftWorkspace fft(prob.grid);

    dirichlet::SolveReport rep;
    try {
        const dirichlet::SubsolutionResult sub =
            dirichlet::construct_subsolution(prob, ctx.cfg.solver.margin_target, opts);
        const grid::ScalarField usuper = dirichlet::solve_supersolution(prob, opts, &fft);
        rep = dirichlet::continuity_solve(prob, sub, opts, &fft);

        double sandwich_low = 0.0, sandwich_high = 0.0;
        for (std::int64_t x = 0; x < prob.grid.nodes(); ++x) {
            sandwich_low = std::max(sandwich_low, sub.u_sub[x] - rep.u[x]);
            sandwich_high = std::max(sandwich_high, rep.u[x] - usuper[x]);
        }
        report::write_field_csv(ctx.out("solution.csv"), prob.grid, rep.u);
        report::write_field_csv(ctx.out("subsolution.csv"), prob.grid, sub.u_sub);
        report::write_field_csv(ctx.out("supersolution.csv"), prob.grid, usuper);
        report::write_solve_report_json(ctx.out("report.json"), rep);
        nlohmann::json j;
        j["sandwich_below_excess"] = sandwich_low;
        j["sandwich_above_excess"] = sandwich_high;
        j["t_star"] = sub.t_star;
        j["subsolution_margin"] = sub.margin;
        report::write_text_file(ctx.out("sandwich.json"), j.dump(2) + "\n");
    } catch (const std::exception& e) {
        report::write_solve_report_json(ctx.out("report.json"), rep, e.what());
        ctx.finish();
        std::cerr << "solve failed: " << e.what() << "\n";
        return 3;
    }
    ctx.finish();
    return 0;
}

int cmd_solve_degenerate(RunContext& ctx) {
    dirichlet::DirichletProblem prob = config::build_problem(ctx.cfg);
    const dirichlet::SolverOptions opts = config::solver_options(ctx.cfg);
    linsolve::FftWorkspace fft(prob.grid);
    dirichlet::DegenerateResult result;
    try {
        result = dirichlet::solve_degenerate(prob, ctx.cfg.solver.eps_schedule, opts, &fft);
    } catch (const std::exception& e) {
        report::write_solve_report_json(ctx.out("report.json"), result.report, e.what());
        ctx.finish();
        std::cerr << "solve-degenerate failed: " << e.what() << "\n";
        return 3;
    }
    report::write_field_csv(ctx.out("solution.csv"), prob.grid, result.report.u);
    report::write_cauchy_csv(ctx.out("cauchy.csv"), result.table);
    report::write_solve_report_json(ctx.out("report.json"), result.report);
    ctx.finish();
    return 0;
}

int cmd_probe_estimates(RunContext& ctx) {
    if (!ctx.cfg.op && ctx.cfg.probe.family == "manufactured")
        throw ConfigError("probe-estimates: manufactured family needs [operator]", 0);
    const dirichlet::SolverOptions opts = config::solver_options(ctx.cfg);
    const config::ProbeSpec& ps = ctx.cfg.probe;
    std::vector<probes::EstimateProbe> results;

    if (ps.family == "manufactured") {
        for (double amp : ps.amps) {
            auto solver = [&](int res) {
                grid::ProductGrid g(1, res, res, res);
                dirichlet::DirichletProblem prob =
                    probes::make_manufactured_problem_analytic(*ctx.cfg.op, g, amp);
                linsolve::FftWorkspace fft(g);
                const dirichlet::SubsolutionResult sub = dirichlet::construct_subsolution(
                    prob, ctx.cfg.solver.margin_target, opts);
                dirichlet::SolveReport rep =
                    dirichlet::continuity_solve(prob, sub, opts, &fft);
                return probes::SolvedProblem{std::move(prob), std::move(rep.u)};
            };
            results.push_back(
                probes::run_ladder("manufactured_amp_" + report::format_double(amp),
                                   ps.ladder, solver));
        }
    } else {
        auto solver = [&](int res) {
            grid::ProductGrid g(1, res, res, res);
            dirichlet::DirichletProblem prob = probes::make_geodesic_problem(g, ps.c, 0.0);
            linsolve::FftWorkspace fft(g);
            dirichlet::DegenerateResult dr =
                dirichlet::solve_degenerate(prob, ctx.cfg.solver.eps_schedule, opts, &fft);
            return probes::SolvedProblem{std::move(prob), std::move(dr.report.u)};
        };
        results.push_back(probes::run_ladder("geodesic", ps.ladder, solver));
    }

    report::write_probe_csv(ctx.out("probe.csv"), results);
    nlohmann::json j = nlohmann::json::array();
    bool all_plateau = true;
    for (const probes::EstimateProbe& p : results) {
        j.push_back({{"family", p.family}, {"plateau", p.plateau}});
        all_plateau = all_plateau && p.plateau;
    }
    report::write_text_file(ctx.out("verdicts.json"), j.dump(2) + "\n");
    ctx.finish();
    return all_plateau ? 0 : 3;
}

int cmd_compare(RunContext& ctx) {
    if (!ctx.cfg.grid) throw ConfigError("compare: needs [grid]", 0);
    const config::GridSpec& gs = *ctx.cfg.grid;
    grid::ProductGrid g(gs.p, gs.torus_res, gs.s_res, gs.theta_res);
    if (ctx.cfg.compare.file_a.empty() || ctx.cfg.compare.file_b.empty())
        throw ConfigError("compare: needs [compare] file_a and file_b", 0);
    const grid::ScalarField u1 = report::read_field_csv(ctx.cfg.compare.file_a, g.nodes());
    const grid::ScalarField u2 = report::read_field_csv(ctx.cfg.compare.file_b, g.nodes());
    const double excess = dirichlet::comparison_check(g, u1, u2, u1, u2);
    nlohmann::json j;
    j["sup_interior_minus_sup_boundary"] = excess;
    j["tol"] = ctx.cfg.compare.tol;
    j["pass"] = excess <= ctx.cfg.compare.tol;
    report::write_text_file(ctx.out("compare.json"), j.dump(2) + "\n");
    ctx.finish();
    return excess <= ctx.cfg.compare.tol ? 0 : 3;
}

}  // namespace

int run(const std::string& subcommand, const std::string& config_path,
        std::optional<std::uint64_t> seed_override) {
    RunContext ctx;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot open config '" << config_path << "'\n";
            return 2;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        ctx.config_text = buf.str();
        ctx.cfg = config::parse(ctx.config_text);
    } catch (const ConfigError& e) {
        std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
        return 2;
    }
    if (seed_override) ctx.cfg.run.seed = *seed_override;

    const char* env_dir = std::getenv("HPDE_OUT_DIR");
    ctx.out_dir = env_dir ? fs::path(env_dir) : fs::path(ctx.cfg.run.output_dir);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);

    ctx.manifest.subcommand = subcommand;
    ctx.manifest.config_hash = config::config_hash(ctx.config_text);
    ctx.manifest.seed = ctx.cfg.run.seed;
    ctx.manifest.tol_newton = ctx.cfg.solver.tol_newton;
    ctx.manifest.linear_rtol = ctx.cfg.solver.linear_rtol;

    try {
        if (subcommand == "verify-cones") return cmd_verify_cones(ctx);
        if (subcommand == "verify-arrow") return cmd_verify_arrow(ctx);
        if (subcommand == "subsolution") return cmd_subsolution(ctx);
        if (subcommand == "solve") return cmd_solve(ctx);
        if (subcommand == "solve-degenerate") return cmd_solve_degenerate(ctx);
        if (subcommand == "probe-estimates") return cmd_probe_estimates(ctx);
        if (subcommand == "compare") return cmd_compare(ctx);
        std::cerr << "unknown subcommand '" << subcommand << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << subcommand << " failed: " << e.what() << "\n";
        ctx.finish();
        return 3;
    }
}

}  // namespace hpde::runner
