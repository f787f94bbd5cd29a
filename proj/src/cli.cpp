#include "fracsing/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracsing/analysis.hpp"
#include "fracsing/barriers.hpp"
#include "fracsing/kernel.hpp"

namespace fracsing {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchema = 1;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

struct Output {
    std::string command;
    json meta = json::object();
    json summary = json::object();
    Table table;
    // Optional second table written to a separate file (solve --log).
    std::optional<Table> log;
};

// Flags shared by the subcommands; each subcommand registers the subset it uses.
struct Common {
    ModelParams params;
    double eps = 1e-3;
    int nodes = 800;
    double grading = 0.0;
    double tol = 1e-10;
    int max_iter = 5000;
    double rel_tol = 1e-9;
    int threads = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    std::string config;
};

std::string csv_cell(const json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_null()) return "";
    return v.dump();
}

void write_csv_table(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << '\n';
    }
}

json table_json(const Table& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = row[i];
        rows.push_back(std::move(obj));
    }
    return rows;
}

void write_output(std::ostream& os, const Output& o, const std::string& format) {
    if (format == "json") {
        json doc = json::object();
        doc["schema"] = kSchema;
        doc["command"] = o.command;
        doc["meta"] = o.meta;
        doc["summary"] = o.summary;
        doc["rows"] = table_json(o.table);
        os << doc.dump(2) << '\n';
        return;
    }
    os << "#schema=" << kSchema << '\n';
    os << "#command=" << o.command << '\n';
    os << "#meta=" << o.meta.dump() << '\n';
    os << "#summary=" << o.summary.dump() << '\n';
    write_csv_table(os, o.table);
}

json params_json(const ModelParams& p) {
    return json{{"dim", p.dim}, {"alpha", p.alpha}, {"p", p.p}};
}

json grid_json(const Common& c) {
    const double grading = c.grading > 0.0 ? c.grading : default_grading(c.eps, c.nodes);
    return json{{"eps", c.eps}, {"nodes", c.nodes}, {"grading", grading},
                {"grading_default", !(c.grading > 0.0)}};
}

json base_meta(const std::string& command, const Common& c) {
    json m = json::object();
    m["command"] = command;
    m["params"] = params_json(c.params);
    m["seed"] = c.seed;
    m["format"] = c.format;
    m["out"] = c.out;
    m["config"] = c.config;
    return m;
}

std::vector<double> parse_list(const std::string& text, char sep, std::size_t count,
                               const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw Error(ErrorCode::InvalidArgument, "cannot parse " + what + " '" + text + "'");
        v.push_back(x);
    }
    if (v.size() != count)
        throw Error(ErrorCode::InvalidArgument, what + " needs " + std::to_string(count) + " fields");
    return v;
}

SolveSetup make_setup(const Common& c) {
    SolveSetup s;
    s.params = c.params;
    s.eps = c.eps;
    s.nodes = c.nodes;
    s.grading = c.grading;
    s.solve.tol = c.tol;
    s.solve.max_iter = c.max_iter;
    s.assembly.rel_tol = c.rel_tol;
    s.assembly.threads = c.threads;
    return s;
}

void add_model(CLI::App* app, Common& c, bool with_p = true) {
    app->add_option("--dim", c.params.dim, "spatial dimension N (>= 2)");
    app->add_option("--alpha", c.params.alpha, "fractional order in (0, 1)");
    if (with_p) app->add_option("--p", c.params.p, "absorption exponent (> 0)");
}

void add_grid(CLI::App* app, Common& c) {
    app->add_option("--eps", c.eps, "puncture radius");
    app->add_option("--nodes", c.nodes, "interior grid nodes");
    app->add_option("--grading", c.grading, "geometric ratio (0: default)");
    app->add_option("--rel-tol", c.rel_tol, "assembly quadrature tolerance");
    app->add_option("--threads", c.threads, "assembly threads (0: THREADS or hardware)");
}

void add_io(CLI::App* app, Common& c) {
    app->add_option("--out", c.out, "output file (default: standard output)");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--seed", c.seed, "recorded in the output metadata");
    app->add_option("--config", c.config, "key=value file of defaults");
}

// ---------------------------------------------------------------- ctau

struct CtauArgs {
    std::optional<double> tau;
    std::string sweep;
    double abs_tol = 1e-10;
    double quad_rel_tol = 1e-8;
    double agree = 1e-6;
};

int cmd_ctau(const CtauArgs& a, const Common& c, Output& o) {
    ModelParams{c.params.dim, c.params.alpha, 1.0}.validate();
    const int dim = c.params.dim;
    const double alpha = c.params.alpha;
    std::vector<double> taus;
    if (a.tau && !a.sweep.empty())
        throw Error(ErrorCode::InvalidArgument, "give either --tau or --sweep");
    if (a.tau) {
        taus.push_back(*a.tau);
    } else if (!a.sweep.empty()) {
        const auto v = parse_list(a.sweep, ':', 3, "--sweep LO:HI:COUNT");
        const int count = static_cast<int>(v[2]);
        if (count < 1 || count != v[2])
            throw Error(ErrorCode::InvalidArgument, "sweep count must be a positive integer");
        for (int k = 0; k < count; ++k)
            taus.push_back(count == 1 ? v[0] : v[0] + (v[1] - v[0]) * k / (count - 1));
    } else {
        throw Error(ErrorCode::InvalidArgument, "one of --tau or --sweep is required");
    }
    for (double t : taus)
        if (!(t > -dim && t < 0.0)) throw Error(ErrorCode::OutOfRange, "tau outside (-N, 0)");

    const double scale = std::abs(c_tau(-dim + alpha, dim, alpha).value);
    const double t0 = 2.0 * alpha - dim;
    o.table.columns = {"tau", "c_quadrature", "c_error", "c_oracle", "abs_diff", "check_diff", "sign"};
    double worst = 0.0;
    for (double tau : taus) {
        const KernelValue q = c_tau(tau, dim, alpha, a.abs_tol, a.quad_rel_tol);
        const double oracle = c_tau_oracle(tau, dim, alpha);
        const double diff = std::abs(q.value - oracle);
        // Relative to |oracle|, except near the zero at 2α − N where the
        // scale |C(−N+α)| is used.
        const bool near = std::abs(tau - t0) < kChartExclusion;
        const double check = near ? diff / scale : diff / std::abs(oracle);
        worst = std::max(worst, check);
        const int sign = std::abs(q.value) / scale <= 1e-6 ? 0 : (q.value > 0 ? 1 : -1);
        o.table.rows.push_back({tau, q.value, q.error_estimate, oracle, diff, check, sign});
    }
    o.meta["ctau"] = {{"abs_tol", a.abs_tol}, {"rel_tol", a.quad_rel_tol}, {"agree", a.agree},
                      {"sweep", a.sweep}};
    o.summary = {{"rows", taus.size()}, {"scale", scale}, {"worst_check_diff", worst},
                 {"pass", worst <= a.agree}};
    return worst <= a.agree ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
    std::string profile = "strong";
    std::string direction = "both";
    double barrier_scale = 1.0;
    std::string log;
};

json report_json(const SolveReport& r) {
    return json{{"direction", std::string(to_string(r.direction))},
                {"iterations", r.iterations},
                {"monotone_ok", r.monotone_ok},
                {"sandwich_ok", r.sandwich_ok},
                {"final_update", r.final_update},
                {"residual_norm", r.residual_norm},
                {"worst_monotone_violation", r.worst_monotone_violation},
                {"worst_sandwich_violation", r.worst_sandwich_violation},
                {"lipschitz_floor_used", r.lipschitz_floor_used},
                {"refactorizations", r.refactorizations}};
}

int cmd_solve(const SolveArgs& a, const Common& c, Output& o) {
    SolveSetup s = make_setup(c);
    s.profile = ProfileChoice::parse(a.profile);
    s.barrier_scale = a.barrier_scale;
    s.from_super = a.direction == "super" || a.direction == "both";
    s.from_sub = a.direction == "sub" || a.direction == "both";
    const SolveOutcome r = run_solve(s);
    const SolveReport& main = r.down ? *r.down : *r.up;

    const bool weak = s.profile.kind == ProfileKind::Weak;
    o.table.columns = {"r", "u", "super", "sub"};
    if (r.down && r.up) o.table.columns.push_back("u_from_sub");
    if (weak) o.table.columns.push_back("defect");
    for (int i = 0; i < r.grid.size(); ++i) {
        const double x = r.grid.nodes[i];
        std::vector<json> row{x, main.u[i], r.super[i], r.sub[i]};
        if (r.down && r.up) row.push_back(r.up->u[i]);
        if (weak) row.push_back(s.profile.t * std::pow(x, c.params.tau_weak()) - main.u[i]);
        o.table.rows.push_back(std::move(row));
    }

    o.meta["grid"] = grid_json(c);
    o.meta["solve"] = {{"profile", s.profile.describe()}, {"direction", a.direction},
                       {"tol", c.tol}, {"max_iter", c.max_iter}, {"barrier_scale", a.barrier_scale},
                       {"rel_tol", c.rel_tol}};
    json sum = json::object();
    sum["inner_profile"] = r.inner.describe();
    sum["super_barrier"] = r.super_fn.describe();
    sum["super_kind"] = std::string(to_string(r.super_kind));
    sum["super_constant"] = r.super_constant;
    sum["sub_barrier"] = r.sub_fn.describe();
    sum["sub_kind"] = r.sub_kind ? std::string(to_string(*r.sub_kind)) : std::string("zero");
    sum["sub_constant"] = r.sub_constant;
    bool ok = true;
    if (r.down) {
        sum["from_super"] = report_json(*r.down);
        ok = ok && r.down->monotone_ok && r.down->sandwich_ok;
    }
    if (r.up) {
        sum["from_sub"] = report_json(*r.up);
        ok = ok && r.up->monotone_ok && r.up->sandwich_ok;
    }
    if (r.down && r.up) sum["gap"] = r.gap;
    const double lo = 2.0 * c.eps, hi = 20.0 * c.eps;
    try {
        const FitResult f = fit_exponent(main.u, r.grid, lo, hi);
        sum["fit"] = {{"window", {lo, hi}}, {"exponent", f.exponent}, {"constant", f.constant()}};
        if (weak) {
            const FitResult d = correction_fit(main.u, s.profile.t, c.params, r.grid, lo, hi);
            sum["defect_fit"] = {{"exponent", d.exponent}, {"constant", d.constant()}};
        }
    } catch (const Error& e) {
        sum["fit_error"] = e.what();
    }
    sum["ok"] = ok;
    o.summary = std::move(sum);

    Table log;
    log.columns = {"direction", "iteration", "update", "u_first_node"};
    for (const SolveReport* rep : {r.down ? &*r.down : nullptr, r.up ? &*r.up : nullptr}) {
        if (!rep) continue;
        for (std::size_t k = 0; k < rep->update_history.size(); ++k)
            log.rows.push_back({std::string(to_string(rep->direction)), static_cast<int>(k + 1),
                                rep->update_history[k], rep->first_node_history[k]});
    }
    o.log = std::move(log);
    return ok ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string in;
    std::string window;
    std::string column = "u";
    std::optional<double> defect;
    std::optional<double> expect;
    double expect_tol = 0.03;
};

void read_csv(const std::string& path, const std::string& column, std::vector<double>& r,
              std::vector<double>& u) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::string line;
    int ir = -1, iu = -1;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header) {
            for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
                if (cells[i] == "r") ir = i;
                if (cells[i] == column) iu = i;
            }
            if (ir < 0 || iu < 0)
                throw Error(ErrorCode::InvalidArgument, "'" + path + "' lacks columns r and " + column);
            header = true;
            continue;
        }
        if (static_cast<int>(cells.size()) <= std::max(ir, iu))
            throw Error(ErrorCode::InvalidArgument, "short row in '" + path + "'");
        r.push_back(std::stod(cells[ir]));
        u.push_back(std::stod(cells[iu]));
    }
    if (!header) throw Error(ErrorCode::InvalidArgument, "'" + path + "' has no header row");
}

int cmd_fit(const FitArgs& a, const Common& c, Output& o) {
    const auto w = parse_list(a.window, ':', 2, "--window LO:HI");
    std::vector<double> r, u;
    read_csv(a.in, a.column, r, u);
    const FitResult f = a.defect ? correction_fit(r, u, *a.defect, c.params, w[0], w[1])
                                 : fit_exponent(r, u, w[0], w[1]);
    o.table.columns = {"quantity", "exponent", "constant", "log_constant", "r_lo", "r_hi",
                       "residual_rms", "n_points"};
    o.table.rows.push_back({a.defect ? "defect" : a.column, f.exponent, f.constant(),
                            f.log_constant, f.r_lo, f.r_hi, f.residual_rms, f.n_points});
    o.meta["fit"] = {{"in", a.in}, {"window", a.window}, {"column", a.column}};
    if (a.defect) o.meta["fit"]["defect_level"] = *a.defect;
    bool ok = true;
    if (a.expect) {
        ok = std::abs(f.exponent - *a.expect) <= a.expect_tol * std::abs(*a.expect);
        o.summary = {{"expected", *a.expect}, {"relative_tolerance", a.expect_tol}, {"pass", ok}};
    } else {
        o.summary = {{"exponent", f.exponent}};
    }
    return ok ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- barrier

struct BarrierArgs {
    std::string kind;
    BarrierConstants constants;
    bool automatic = false;
    double tol_factor = 10.0;
    Geometry geometry;
};

int cmd_barrier(const BarrierArgs& a, const Common& c, Output& o) {
    const BarrierKind kind = parse_barrier_kind(a.kind);
    c.params.validate();
    check_regime(kind, c.params, a.constants);
    const SolveSetup s = make_setup(c);
    const double grading = c.grading > 0.0 ? c.grading : default_grading(c.eps, c.nodes);
    const RadialGrid grid = build_grid(c.eps, c.nodes, grading);
    const NonlocalOperator op = assemble(grid, c.params, ProfileSpec{}, s.assembly);
    const BarrierContext ctx(op);

    BarrierConstants constants = a.constants;
    std::optional<int> doubled;
    if (a.automatic) {
        TuneOptions t;
        t.tol_factor = a.tol_factor;
        const TuneResult tuned = tune_constant(kind, c.params, constants, ctx, t, a.geometry);
        constants = tuned.constants;
        BarrierConstants twice = constants;
        free_constant_ref(kind, twice) *= 2.0;
        doubled = residual_check(make_barrier(kind, c.params, twice, a.geometry), role_of(kind), ctx,
                                 a.tol_factor)
                      .sign_violations;
    }
    const BarrierFn b = make_barrier(kind, c.params, constants, a.geometry);
    const ResidualReport rep = residual_check(b, role_of(kind), ctx, a.tol_factor);
    const Eigen::VectorXd values = ctx.sample(b);

    o.table.columns = {"r", "value", "residual", "tolerance", "violation"};
    for (int i = 0; i < grid.size(); ++i) {
        const double res = rep.residuals[i];
        const bool bad = role_of(kind) == Role::Sub ? res > rep.tolerance[i] : res < -rep.tolerance[i];
        o.table.rows.push_back({grid.nodes[i], values[i], res, rep.tolerance[i], bad});
    }
    o.meta["grid"] = grid_json(c);
    o.meta["barrier"] = {{"kind", a.kind}, {"auto", a.automatic}, {"tol_factor", a.tol_factor},
                         {"lambda", a.constants.lambda}, {"mu", a.constants.mu}, {"t", a.constants.t},
                         {"tau", a.constants.tau}, {"C", a.constants.C},
                         {"d0", a.geometry.d0}, {"collar", a.geometry.collar},
                         {"l_dip", a.geometry.l_dip}};
    json sum = {{"kind", a.kind},
                {"role", std::string(to_string(role_of(kind)))},
                {"barrier", b.describe()},
                {"free_constant", std::string(free_constant(kind))},
                {"value", free_constant_ref(kind, constants)},
                {"sign_violations", rep.sign_violations},
                {"worst_violation", rep.worst_violation}};
    if (doubled) sum["violations_at_double"] = *doubled;
    const bool ok = rep.sign_violations == 0 && (!doubled || *doubled == 0);
    sum["pass"] = ok;
    o.summary = std::move(sum);
    return ok ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
    double tau = 0.0;
    bool no_drift = false;
};

int cmd_probe(const ProbeArgs& a, const Common& c, Output& o) {
    const ExperimentReport rep = nonexistence_probe(make_setup(c), a.tau, !a.no_drift);
    o.table.columns = {"metric", "value"};
    for (const auto& [k, v] : rep.metrics) o.table.rows.push_back({k, v});
    o.meta["grid"] = grid_json(c);
    o.meta["probe"] = {{"tau", a.tau}, {"drift", !a.no_drift}, {"tol", c.tol}};
    o.summary = {{"kind", rep.kind},
                 {"profile", rep.profile},
                 {"verdict", std::string(to_string(rep.verdict))},
                 {"notes", rep.notes}};
    return rep.verdict == Verdict::Consistent ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- signchart

struct ChartArgs {
    int samples = 39;
    double agree = 1e-6;
};

int cmd_signchart(const ChartArgs& a, const Common& c, Output& o) {
    const SignChart chart = sign_chart(c.params.dim, c.params.alpha, a.samples);
    o.table.columns = {"tau", "c_quadrature", "c_oracle", "rel_diff", "sign", "chart_sign", "agree"};
    for (const auto& r : chart.rows)
        o.table.rows.push_back({r.tau, r.c_quad, r.c_oracle, r.rel_diff, r.sign, r.chart_sign, r.agree});
    const bool ok = chart.signs_ok && chart.zero_ok && chart.max_rel_diff <= a.agree;
    o.meta["signchart"] = {{"samples", a.samples}, {"agree", a.agree}};
    o.summary = {{"scale", chart.scale},
                 {"zero_value", chart.zero_value},
                 {"zero_normalized", chart.zero_normalized},
                 {"max_rel_diff", chart.max_rel_diff},
                 {"signs_ok", chart.signs_ok},
                 {"zero_ok", chart.zero_ok},
                 {"pass", ok}};
    return ok ? kExitOk : kExitVerdict;
}

// ---------------------------------------------------------------- config

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::InvalidArgument, "cannot open config '" + path + "'");
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line.substr(0, line.find('#')));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument,
                        path + ":" + std::to_string(lineno) + ": expected key=value");
        kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return kv;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::OutOfRange:
        case ErrorCode::BadGeometry:
        case ErrorCode::NonPositiveRadius:
        case ErrorCode::WindowTooSmall: return kExitUsage;
        case ErrorCode::RegimeMismatch: return kExitRegime;
        default: return kExitNumeric;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Singular solutions of the fractional absorption equation on the punctured ball"};
    app.name("fracsing");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;
    CtauArgs ctau;
    SolveArgs solve;
    FitArgs fit;
    BarrierArgs barrier;
    ProbeArgs probe;
    ChartArgs chart;

    auto* c_ctau = app.add_subcommand("ctau", "C(tau) by quadrature against the Gamma-identity oracle");
    add_model(c_ctau, common, false);
    c_ctau->add_option("--tau", ctau.tau, "single exponent");
    c_ctau->add_option("--sweep", ctau.sweep, "LO:HI:COUNT");
    c_ctau->add_option("--abs-tol", ctau.abs_tol);
    c_ctau->add_option("--quad-rel-tol", ctau.quad_rel_tol);
    c_ctau->add_option("--agree", ctau.agree, "relative agreement required");
    add_io(c_ctau, common);

    auto* c_solve = app.add_subcommand("solve", "monotone iteration between tuned barriers");
    add_model(c_solve, common);
    add_grid(c_solve, common);
    c_solve->add_option("--profile", solve.profile, "strong | weak:T | custom:C,TAU");
    c_solve->add_option("--direction", solve.direction)
        ->check(CLI::IsMember({"super", "sub", "both"}));
    c_solve->add_option("--tol", common.tol, "relative update tolerance");
    c_solve->add_option("--max-iter", common.max_iter);
    c_solve->add_option("--barrier-scale", solve.barrier_scale, "multiplier on tuned constants");
    c_solve->add_option("--log", solve.log, "iteration log CSV");
    add_io(c_solve, common);

    auto* c_fit = app.add_subcommand("fit", "log-log exponent fit of a solution table");
    add_model(c_fit, common);
    c_fit->add_option("--in", fit.in, "CSV written by solve")->required();
    c_fit->add_option("--window", fit.window, "LO:HI")->required();
    c_fit->add_option("--column", fit.column);
    c_fit->add_option("--defect", fit.defect, "fit t*r^(2a-N) - u for this t");
    c_fit->add_option("--expect", fit.expect, "expected exponent");
    c_fit->add_option("--expect-tol", fit.expect_tol, "relative tolerance on --expect");
    add_io(c_fit, common);

    auto* c_barrier = app.add_subcommand("barrier", "residual check of a comparison function");
    add_model(c_barrier, common);
    add_grid(c_barrier, common);
    c_barrier->add_option("--kind", barrier.kind, "strong_super, strong_sub, weak_super, weak_sub, "
                                                  "weak_super_corrected, case1_sub, case2_super, case3_super")
        ->required();
    c_barrier->add_option("--lambda", barrier.constants.lambda);
    c_barrier->add_option("--mu", barrier.constants.mu);
    c_barrier->add_option("--t", barrier.constants.t);
    c_barrier->add_option("--tau", barrier.constants.tau);
    c_barrier->add_option("--C", barrier.constants.C);
    c_barrier->add_flag("--auto,--auto-lambda", barrier.automatic, "tune the free constant");
    c_barrier->add_option("--tol-factor", barrier.tol_factor);
    c_barrier->add_option("--d0", barrier.geometry.d0);
    c_barrier->add_option("--collar", barrier.geometry.collar);
    c_barrier->add_option("--l-dip", barrier.geometry.l_dip);
    add_io(c_barrier, common);

    auto* c_probe = app.add_subcommand("probe", "nonexistence probe for an excluded exponent");
    add_model(c_probe, common);
    add_grid(c_probe, common);
    c_probe->add_option("--tau", probe.tau)->required();
    c_probe->add_option("--tol", common.tol);
    c_probe->add_option("--max-iter", common.max_iter);
    c_probe->add_flag("--no-drift", probe.no_drift, "skip the drift solve");
    add_io(c_probe, common);

    auto* c_chart = app.add_subcommand("signchart", "sign of C(tau) across (-N, 0)");
    add_model(c_chart, common, false);
    c_chart->add_option("--samples", chart.samples);
    c_chart->add_option("--agree", chart.agree);
    add_io(c_chart, common);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // Config entries go right after the subcommand so later flags win.
        if (const auto path = find_config(args)) {
            auto sub = std::find_if(args.begin(), args.end(),
                                    [](const std::string& a) { return !a.empty() && a[0] != '-'; });
            if (sub == args.end()) throw Error(ErrorCode::InvalidArgument, "--config needs a subcommand");
            const CLI::App* target = app.get_subcommand(*sub);
            std::vector<std::string> injected;
            for (const auto& [key, value] : read_config(*path)) {
                if (key == "config") continue;
                const CLI::Option* opt = target->get_option_no_throw("--" + key);
                if (!opt) {
                    bool known = false;
                    for (const CLI::App* s : app.get_subcommands({}))
                        known = known || s->get_option_no_throw("--" + key) != nullptr;
                    if (!known) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
                    continue;
                }
                injected.push_back("--" + key);
                if (opt->get_type_size() != 0) {
                    injected.push_back(value);
                } else if (value != "true" && value != "1") {
                    injected.pop_back();
                }
            }
            args.insert(sub + 1, injected.begin(), injected.end());
        }
    } catch (const CLI::Error& e) {
        err << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_code_for(e.code());
    }

    std::vector<const char*> cargv{argv[0]};
    for (const auto& a : args) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        for (const CLI::App* s : app.get_subcommands()) err << s->help();
        return kExitUsage;
    }

    Output o;
    int code = kExitOk;
    try {
        CLI::App* used = app.get_subcommands().front();
        o.command = used->get_name();
        common.params.validate();
        o.meta = base_meta(o.command, common);
        if (used == c_ctau) code = cmd_ctau(ctau, common, o);
        if (used == c_solve) code = cmd_solve(solve, common, o);
        if (used == c_fit) code = cmd_fit(fit, common, o);
        if (used == c_barrier) code = cmd_barrier(barrier, common, o);
        if (used == c_probe) code = cmd_probe(probe, common, o);
        if (used == c_chart) code = cmd_signchart(chart, common, o);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }

    if (common.out.empty()) {
        write_output(out, o, common.format);
    } else {
        std::ofstream os(common.out);
        if (!os) {
            err << "cannot write '" << common.out << "'\n";
            return kExitUsage;
        }
        write_output(os, o, common.format);
        out << o.command << ": " << o.summary.dump() << '\n';
    }
    if (o.log && !solve.log.empty()) {
        std::ofstream os(solve.log);
        if (!os) {
            err << "cannot write '" << solve.log << "'\n";
            return kExitUsage;
        }
        os << "#schema=" << kSchema << '\n';
        write_csv_table(os, *o.log);
    }
    return code;
}

}  // namespace fracsing
