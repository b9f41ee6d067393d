#include "hpde/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hpde/errors.hpp"
#include "hpde/expr.hpp"
#include "hpde/probes.hpp"

namespace hpde::config {

namespace {

struct RawEntry {
    int line;
    std::string value;
    bool used = false;
};
using Section = std::map<std::string, RawEntry>;

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + v + "'", line);
    }
}

long long parse_int(const std::string& v, int line) {
    try {
        size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("not an integer: '" + v + "'", line);
    }
}

std::vector<double> parse_double_list(const std::string& v, int line) {
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok, line));
    if (out.empty()) throw ConfigError("empty list", line);
    return out;
}

std::vector<int> parse_int_list(const std::string& v, int line) {
    std::vector<int> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(static_cast<int>(parse_int(tok, line)));
    if (out.empty()) throw ConfigError("empty list", line);
    return out;
}

class SectionReader {
  public:
    SectionReader(Section& sec, std::string name) : sec_(sec), name_(std::move(name)) {}

    bool has(const std::string& key) const { return sec_.count(key) > 0; }

    std::optional<std::string> str(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }
    std::optional<double> num(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        it->second.used = true;
        return parse_double(it->second.value, it->second.line);
    }
    std::optional<long long> integer(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        it->second.used = true;
        return parse_int(it->second.value, it->second.line);
    }
    std::optional<std::vector<double>> num_list(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        it->second.used = true;
        return parse_double_list(it->second.value, it->second.line);
    }
    std::optional<std::vector<int>> int_list(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        it->second.used = true;
        return parse_int_list(it->second.value, it->second.line);
    }

    void finish() const {
        for (const auto& [key, entry] : sec_)
            if (!entry.used)
                throw ConfigError("unknown key '" + key + "' in [" + name_ + "]", entry.line);
    }

    int line_of(const std::string& key) const {
        auto it = sec_.find(key);
        return it == sec_.end() ? 0 : it->second.line;
    }

  private:
    Section& sec_;
    std::string name_;
};

FieldSpec parse_field(SectionReader& r, const std::string& section, bool allow_manufactured) {
    FieldSpec f;
    const auto kind = r.str("kind").value_or("constant");
    if (kind == "constant") {
        f.kind = FieldKind::constant;
        f.value = r.num("value").value_or(0.0);
    } else if (kind == "expr") {
        f.kind = FieldKind::expression;
        auto e = r.str("expr");
        if (!e) throw ConfigError("[" + section + "] kind = expr needs key 'expr'", 0);
        f.expr = *e;
    } else if (kind == "manufactured" && allow_manufactured) {
        f.kind = FieldKind::manufactured;
        f.amp = r.num("amp").value_or(0.05);
    } else {
        throw ConfigError("[" + section + "] unknown kind '" + kind + "'",
                          r.line_of("kind"));
    }
    return f;
}

MatrixSpec parse_matrix(SectionReader& r) {
    MatrixSpec m;
    if (auto d = r.num_list("diag")) m.diag = *d;
    if (auto u = r.num_list("upper")) m.upper = *u;
    return m;
}

}  // namespace

RunConfig parse(const std::string& text) {
    std::map<std::string, Section> raw;
    std::vector<std::string> order;
    std::string current;
    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("malformed section header", line_no);
            current = trim(t.substr(1, t.size() - 2));
            if (current.empty()) throw ConfigError("empty section name", line_no);
            if (raw.count(current)) throw ConfigError("duplicate section [" + current + "]",
                                                      line_no);
            raw[current] = {};
            order.push_back(current);
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        if (current.empty()) throw ConfigError("key outside any section", line_no);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        Section& sec = raw[current];
        if (sec.count(key))
            throw ConfigError("duplicate key '" + key + "' in [" + current + "]", line_no);
        sec[key] = {line_no, value};
    }
    if (raw.empty()) throw ConfigError("empty config: no sections", 0);

    static const std::set<std::string> known = {"operator", "grid",  "chi",     "omega",
                                                "psi",      "phi",   "solver",  "run",
                                                "arrow",    "cones", "probe",   "compare"};
    for (const std::string& name : order)
        if (!known.count(name))
            throw ConfigError("unknown section [" + name + "]", raw[name].empty()
                                                                    ? 0
                                                                    : raw[name].begin()->second.line);

    RunConfig cfg;
    for (const std::string& name : order) cfg.sections.insert(name);

    if (raw.count("operator")) {
        SectionReader r(raw["operator"], "operator");
        const auto family = r.str("family");
        if (!family) throw ConfigError("[operator] needs 'family'", 0);
        const int n = static_cast<int>(r.integer("n").value_or(0));
        if (n < 2) throw ConfigError("[operator] needs n >= 2", r.line_of("n"));
        try {
            if (*family == "log_ma") {
                cfg.op = symfunc::OperatorSpec::log_ma(n);
            } else if (*family == "sigma_k_root") {
                const int k = static_cast<int>(r.integer("k").value_or(0));
                cfg.op = symfunc::OperatorSpec::sigma_k_root(n, k);
            } else if (*family == "hessian_quotient") {
                const int k = static_cast<int>(r.integer("k").value_or(0));
                const int l = static_cast<int>(r.integer("l").value_or(0));
                cfg.op = symfunc::OperatorSpec::hessian_quotient(n, k, l);
            } else {
                throw ConfigError("unknown family '" + *family + "'", r.line_of("family"));
            }
        } catch (const DomainError& e) {
            throw ConfigError(e.what(), r.line_of("family"));
        }
        r.finish();
    }

    if (raw.count("grid")) {
        SectionReader r(raw["grid"], "grid");
        GridSpec gs;
        gs.p = static_cast<int>(r.integer("p").value_or(1));
        gs.torus_res = static_cast<int>(r.integer("torus_res").value_or(16));
        gs.s_res = static_cast<int>(r.integer("s_res").value_or(16));
        gs.theta_res = static_cast<int>(r.integer("theta_res").value_or(16));
        if (gs.p < 1) throw ConfigError("[grid] p >= 1", r.line_of("p"));
        if (gs.torus_res < 4 || gs.s_res < 4 || gs.theta_res < 4)
            throw ConfigError("[grid] resolutions must be >= 4", 0);
        cfg.grid = gs;
        r.finish();
    }

    if (raw.count("chi")) {
        SectionReader r(raw["chi"], "chi");
        cfg.chi = parse_matrix(r);
        r.finish();
    }
    if (raw.count("omega")) {
        SectionReader r(raw["omega"], "omega");
        cfg.omega = parse_matrix(r);
        r.finish();
    }
    if (raw.count("psi")) {
        SectionReader r(raw["psi"], "psi");
        cfg.psi = parse_field(r, "psi", true);
        r.finish();
    }
    if (raw.count("phi")) {
        SectionReader r(raw["phi"], "phi");
        cfg.phi = parse_field(r, "phi", false);
        r.finish();
    }

    if (raw.count("solver")) {
        SectionReader r(raw["solver"], "solver");
        SolverSpec& s = cfg.solver;
        s.tol_newton = r.num("tol_newton").value_or(s.tol_newton);
        s.max_newton_iters =
            static_cast<int>(r.integer("max_newton_iters").value_or(s.max_newton_iters));
        s.margin_target = r.num("margin_target").value_or(s.margin_target);
        s.t_initial = r.num("t_initial").value_or(s.t_initial);
        s.t_min = r.num("t_min").value_or(s.t_min);
        s.linear_rtol = r.num("linear_rtol").value_or(s.linear_rtol);
        s.direct_threshold = r.integer("direct_threshold").value_or(s.direct_threshold);
        s.max_linear_iterations = static_cast<int>(
            r.integer("max_linear_iterations").value_or(s.max_linear_iterations));
        if (auto e = r.num_list("eps_schedule")) s.eps_schedule = *e;
        r.finish();
    }

    if (raw.count("run")) {
        SectionReader r(raw["run"], "run");
        RunSpec& s = cfg.run;
        if (auto seed = r.integer("seed")) s.seed = static_cast<std::uint64_t>(*seed);
        if (auto dir = r.str("output_dir")) s.output_dir = *dir;
        s.samples = static_cast<int>(r.integer("samples").value_or(s.samples));
        if (auto exec = r.str("exec")) {
            if (*exec == "serial")
                s.openmp = false;
            else if (*exec == "openmp")
                s.openmp = true;
            else
                throw ConfigError("[run] exec must be serial or openmp", r.line_of("exec"));
        }
        r.finish();
    }

    if (raw.count("arrow")) {
        SectionReader r(raw["arrow"], "arrow");
        ArrowSpec& s = cfg.arrow;
        s.n_min = static_cast<int>(r.integer("n_min").value_or(s.n_min));
        s.n_max = static_cast<int>(r.integer("n_max").value_or(s.n_max));
        s.instances = r.integer("instances").value_or(s.instances);
        if (auto e = r.num_list("eps")) s.eps = *e;
        if (auto c = r.num_list("corner_multipliers")) s.corner_multipliers = *c;
        s.d_range = r.num("d_range").value_or(s.d_range);
        s.a_radius = r.num("a_radius").value_or(s.a_radius);
        if (auto t = r.str("threshold")) {
            if (*t != "main" && *t != "ordered" && *t != "distinct")
                throw ConfigError("[arrow] threshold must be main|ordered|distinct",
                                  r.line_of("threshold"));
            s.threshold = *t;
        }
        if (s.n_min < 2 || s.n_max < s.n_min)
            throw ConfigError("[arrow] need 2 <= n_min <= n_max", 0);
        r.finish();
    }

    if (raw.count("cones")) {
        SectionReader r(raw["cones"], "cones");
        cfg.run.samples = static_cast<int>(r.integer("samples").value_or(cfg.run.samples));
        r.finish();
    }

    if (raw.count("probe")) {
        SectionReader r(raw["probe"], "probe");
        ProbeSpec& s = cfg.probe;
        if (auto l = r.int_list("ladder")) s.ladder = *l;
        if (auto f = r.str("family")) {
            if (*f != "manufactured" && *f != "geodesic")
                throw ConfigError("[probe] family must be manufactured|geodesic",
                                  r.line_of("family"));
            s.family = *f;
        }
        if (auto a = r.num_list("amps")) s.amps = *a;
        s.c = r.num("c").value_or(s.c);
        r.finish();
    }

    if (raw.count("compare")) {
        SectionReader r(raw["compare"], "compare");
        CompareSpec& s = cfg.compare;
        if (auto a = r.str("file_a")) s.file_a = *a;
        if (auto b = r.str("file_b")) s.file_b = *b;
        s.tol = r.num("tol").value_or(s.tol);
        r.finish();
    }

    return cfg;
}

RunConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

std::string serialize(const RunConfig& cfg) {
    std::ostringstream out;
    if (cfg.op) {
        out << "[operator]\n";
        switch (cfg.op->family) {
            case symfunc::Family::log_ma:
                out << "family = log_ma\n";
                break;
            case symfunc::Family::sigma_k_root:
                out << "family = sigma_k_root\nk = " << cfg.op->k << "\n";
                break;
            case symfunc::Family::hessian_quotient:
                out << "family = hessian_quotient\nk = " << cfg.op->k << "\nl = " << cfg.op->l
                    << "\n";
                break;
        }
        out << "n = " << cfg.op->n << "\n";
    }
    if (cfg.grid) {
        out << "[grid]\np = " << cfg.grid->p << "\ntorus_res = " << cfg.grid->torus_res
            << "\ns_res = " << cfg.grid->s_res << "\ntheta_res = " << cfg.grid->theta_res
            << "\n";
    }
    auto emit_matrix = [&](const char* name, const MatrixSpec& m) {
        if (m.diag.empty() && m.upper.empty()) return;
        out << "[" << name << "]\n";
        if (!m.diag.empty()) out << "diag = " << fmt_list(m.diag) << "\n";
        if (!m.upper.empty()) out << "upper = " << fmt_list(m.upper) << "\n";
    };
    emit_matrix("chi", cfg.chi);
    emit_matrix("omega", cfg.omega);
    auto emit_field = [&](const char* name, const std::optional<FieldSpec>& f) {
        if (!f) return;
        out << "[" << name << "]\n";
        switch (f->kind) {
            case FieldKind::constant:
                out << "kind = constant\nvalue = " << fmt(f->value) << "\n";
                break;
            case FieldKind::expression:
                out << "kind = expr\nexpr = " << f->expr << "\n";
                break;
            case FieldKind::manufactured:
                out << "kind = manufactured\namp = " << fmt(f->amp) << "\n";
                break;
        }
    };
    emit_field("psi", cfg.psi);
    emit_field("phi", cfg.phi);

    const SolverSpec& s = cfg.solver;
    out << "[solver]\ntol_newton = " << fmt(s.tol_newton)
        << "\nmax_newton_iters = " << s.max_newton_iters
        << "\nmargin_target = " << fmt(s.margin_target)
        << "\nt_initial = " << fmt(s.t_initial) << "\nt_min = " << fmt(s.t_min)
        << "\nlinear_rtol = " << fmt(s.linear_rtol)
        << "\ndirect_threshold = " << s.direct_threshold
        << "\nmax_linear_iterations = " << s.max_linear_iterations
        << "\neps_schedule = " << fmt_list(s.eps_schedule) << "\n";

    out << "[run]\nseed = " << cfg.run.seed << "\noutput_dir = " << cfg.run.output_dir
        << "\nsamples = " << cfg.run.samples
        << "\nexec = " << (cfg.run.openmp ? "openmp" : "serial") << "\n";

    const ArrowSpec& a = cfg.arrow;
    out << "[arrow]\nn_min = " << a.n_min << "\nn_max = " << a.n_max
        << "\ninstances = " << a.instances << "\neps = " << fmt_list(a.eps)
        << "\ncorner_multipliers = " << fmt_list(a.corner_multipliers)
        << "\nd_range = " << fmt(a.d_range) << "\na_radius = " << fmt(a.a_radius)
        << "\nthreshold = " << a.threshold << "\n";

    const ProbeSpec& p = cfg.probe;
    out << "[probe]\nladder =";
    for (int v : p.ladder) out << ' ' << v;
    out << "\nfamily = " << p.family << "\namps = " << fmt_list(p.amps)
        << "\nc = " << fmt(p.c) << "\n";

    if (!cfg.compare.file_a.empty() || !cfg.compare.file_b.empty()) {
        out << "[compare]\nfile_a = " << cfg.compare.file_a
            << "\nfile_b = " << cfg.compare.file_b << "\ntol = " << fmt(cfg.compare.tol)
            << "\n";
    }
    return out.str();
}

namespace {

HermMat build_matrix(const MatrixSpec& spec, int n, const char* what) {
    if (spec.diag.empty() && spec.upper.empty()) return HermMat::identity(n);
    if (static_cast<int>(spec.diag.size()) != n)
        throw ConfigError(std::string(what) + ": diag must have n entries", 0);
    HermMat m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, spec.diag[i]);
    const int pairs = n * (n - 1) / 2;
    if (!spec.upper.empty()) {
        if (static_cast<int>(spec.upper.size()) != 2 * pairs)
            throw ConfigError(std::string(what) + ": upper needs n(n-1)/2 (re, im) pairs", 0);
        int q = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j, ++q)
                m.set(i, j, cplx(spec.upper[2 * q], spec.upper[2 * q + 1]));
    }
    return m;
}

}  // namespace

dirichlet::DirichletProblem build_problem(const RunConfig& cfg) {
    if (!cfg.op) throw ConfigError("missing [operator] section", 0);
    if (!cfg.grid) throw ConfigError("missing [grid] section", 0);
    const GridSpec& gs = *cfg.grid;
    grid::ProductGrid g(gs.p, gs.torus_res, gs.s_res, gs.theta_res);
    if (cfg.op->n != g.n())
        throw ConfigError("operator n and grid p+1 disagree", 0);

    dirichlet::DirichletProblem prob{*cfg.op, g, build_matrix(cfg.chi, g.n(), "chi"),
                                     build_matrix(cfg.omega, g.n(), "omega"),
                                     grid::ScalarField(g.nodes(), 0.0),
                                     grid::ScalarField(g.nodes(), 0.0)};

    auto fill = [&](const FieldSpec& f, grid::ScalarField& field, bool boundary_only) {
        if (f.kind == FieldKind::constant) {
            std::fill(field.begin(), field.end(), f.value);
            return;
        }
        if (f.kind == FieldKind::manufactured) return;  // handled by caller
        const expr::Expression e = expr::Expression::parse(f.expr, g.p());
        const int nd = g.ndirs();
        std::vector<int> idx(nd, 0);
        std::vector<double> coords(nd, 0.0);
        for (std::int64_t node = 0; node < g.nodes(); ++node) {
            if (!boundary_only || g.is_boundary(node)) {
                for (int d = 0; d < nd; ++d) coords[d] = g.coordinate(d, idx[d]);
                field[node] = e.eval(coords.data());
            }
            for (int d = 0; d < nd; ++d) {
                if (++idx[d] < g.dim(d)) break;
                idx[d] = 0;
            }
        }
    };

    const FieldSpec psi = cfg.psi.value_or(FieldSpec{});
    const FieldSpec phi = cfg.phi.value_or(FieldSpec{});

    if (psi.kind == FieldKind::manufactured) {
        // psi := discrete f(lambda(g[u*])) for the trig reference field with
        // boundary data u*; requires the flat identity background.
        if (!cfg.chi.diag.empty() || !cfg.omega.diag.empty() || cfg.phi.has_value())
            throw ConfigError("manufactured psi fixes chi = omega = identity and phi = u*", 0);
        return probes::make_manufactured_problem(*cfg.op, g, psi.amp);
    }
    fill(phi, prob.phi, true);
    fill(psi, prob.psi, false);
    return prob;
}

dirichlet::SolverOptions solver_options(const RunConfig& cfg) {
    dirichlet::SolverOptions o;
    o.tol_newton = cfg.solver.tol_newton;
    o.max_newton_iters = cfg.solver.max_newton_iters;
    o.t_initial = cfg.solver.t_initial;
    o.t_min = cfg.solver.t_min;
    o.linear.rtol = cfg.solver.linear_rtol;
    o.linear.direct_threshold = cfg.solver.direct_threshold;
    o.linear.max_iterations = cfg.solver.max_linear_iterations;
    o.mode = cfg.run.openmp ? Exec::openmp : Exec::serial;
    o.linear.mode = o.mode;
    return o;
}

arrow::BatchParams arrow_params(const RunConfig& cfg) {
    arrow::BatchParams p;
    p.n_min = cfg.arrow.n_min;
    p.n_max = cfg.arrow.n_max;
    p.instances_per_n = cfg.arrow.instances;
    p.eps_values = cfg.arrow.eps;
    p.corner_multipliers = cfg.arrow.corner_multipliers;
    p.d_range = cfg.arrow.d_range;
    p.a_radius = cfg.arrow.a_radius;
    p.seed = cfg.run.seed;
    p.which = cfg.arrow.threshold == "ordered"    ? arrow::Threshold::ordered
              : cfg.arrow.threshold == "distinct" ? arrow::Threshold::distinct
                                                  : arrow::Threshold::main;
    return p;
}

std::uint64_t config_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace hpde::config
