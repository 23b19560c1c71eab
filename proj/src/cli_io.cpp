#include "hsbl/cli_io.hpp"

#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hsbl {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string compose(const std::string& what, const std::string& key_path, int line)
{
    std::string msg = what;
    if (!key_path.empty())
        msg += " (key " + key_path + ")";
    if (line > 0)
        msg += " (line " + std::to_string(line) + ")";
    return msg;
}

}  // namespace

ConfigError::ConfigError(const std::string& what, std::string key_path, int line, std::optional<Assumption> assumption)
    : std::runtime_error(compose(what, key_path, line)),
      key_path_(std::move(key_path)),
      line_(line),
      assumption_(assumption)
{
}

std::string to_string(InitialKind k)
{
    switch (k) {
    case InitialKind::Zero:
        return "zero";
    case InitialKind::Uniform:
        return "uniform";
    case InitialKind::Step:
        return "step";
    case InitialKind::Hat:
        return "hat";
    }
    return "unknown";
}

InitialKind parse_initial_kind(const std::string& name)
{
    if (name == "zero")
        return InitialKind::Zero;
    if (name == "uniform")
        return InitialKind::Uniform;
    if (name == "step")
        return InitialKind::Step;
    if (name == "hat")
        return InitialKind::Hat;
    throw std::invalid_argument("unknown initial profile '" + name + "' (expected zero, uniform, step or hat)");
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SolverConfig RunConfig::default_solver(double horizon)
{
    SolverConfig s;
    std::vector<double> t;
    for (double early : {1e-3, 1e-2})
        if (early < horizon)
            t.push_back(early);
    for (int k = 1; k <= 20; ++k)
        t.push_back(horizon * k / 20.0);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    s.snapshot_times = t;
    return s;
}

InitialDensity RunConfig::initial_density() const
{
    const InitialKind kind = initial;
    const double v = initial_value, pos = initial_position, cx = initial_center_x, cy = initial_center_y,
                 r = initial_radius;
    const int d = grid.dim;
    return [=](const Point& x) -> double {
        switch (kind) {
        case InitialKind::Zero:
            return 0.0;
        case InitialKind::Uniform:
            return v;
        case InitialKind::Step:
            return x[0] < pos ? v : 0.0;
        case InitialKind::Hat: {
            const double dx = x[0] - cx;
            const double dy = d == 2 ? x[1] - cy : 0.0;
            return v * std::max(0.0, 1.0 - std::sqrt(dx * dx + dy * dy) / r);
        }
        }
        return 0.0;
    };
}

BoundaryFlux RunConfig::boundary_flux() const
{
    const double l = flux_left, rt = flux_right, b = flux_bottom, tp = flux_top;
    return [=](double, const BoundaryFace& f) {
        switch (f.side) {
        case Side::XLow:
            return l;
        case Side::XHigh:
            return rt;
        case Side::YLow:
            return b;
        case Side::YHigh:
            return tp;
        }
        return 0.0;
    };
}

SourceFunction RunConfig::source_function() const
{
    return SourceFunction{source, source_scale, p_max};
}

SweepPlan RunConfig::plan(std::optional<double> single_gamma) const
{
    SweepPlan p;
    p.ladder = single_gamma ? std::vector<double>{*single_gamma} : ladder;
    p.grid = grid;
    p.preset = preset;
    p.phi = source_function();
    p.delta = delta;
    p.test_override = test_override;
    p.alpha = alpha;
    p.regularization = regularization;
    p.initial_density = initial_density();
    p.flux = boundary_flux();
    p.flux_floor = flux_floor;
    p.horizon = horizon;
    p.solver = solver;
    p.diagnostics = diagnostics;
    p.contour_fraction = contour_fraction;
    p.trace_cluster = trace_cluster;
    p.refine_for_ba = refine_for_ba;
    p.parallel = parallel;
    return p;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s{
        {"grid", {"dim", "x_min", "x_max", "y_min", "y_max", "nx", "ny"}},
        {"model", {"preset", "source", "source_scale", "p_M", "delta", "regularization", "test_override"}},
        {"stiff", {"gamma", "alpha"}},
        {"data",
         {"initial", "initial_value", "initial_position", "initial_center_x", "initial_center_y", "initial_radius",
          "flux_left", "flux_right", "flux_bottom", "flux_top", "flux_floor", "horizon"}},
        {"solver",
         {"dt_initial", "dt_min", "dt_max", "newton_tol", "newton_max_iter", "linear_tol", "easy_newton_iterations",
          "snapshot_times"}},
        {"sweep", {"ladder", "parallel", "refine_for_ba", "contour_fraction", "trace_cluster"}},
        {"diagnostics", {"t_floor_fraction", "test_radius", "test_spacing", "temporal_tests"}},
    };
    return s;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Drops an inline "; ..." or "# ..." comment that follows whitespace.
std::string strip_comment(const std::string& v)
{
    for (std::size_t k = 1; k < v.size(); ++k)
        if ((v[k] == ';' || v[k] == '#') && (v[k - 1] == ' ' || v[k - 1] == '\t'))
            return v.substr(0, k);
    return v;
}

struct LineIndex {
    std::map<std::string, int> keys;      // "section.key" or "key" -> line
    std::map<std::string, int> sections;  // section -> line
};

LineIndex index_lines(const std::string& text)
{
    LineIndex idx;
    std::istringstream in(text);
    std::string line, section;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#')
            continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            idx.sections.emplace(section, n);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = trim(t.substr(0, eq));
        idx.keys.emplace(section.empty() ? key : section + "." + key, n);
    }
    return idx;
}

class Reader {
public:
    Reader(const pt::ptree& tree, const LineIndex& idx) : tree_(tree), idx_(idx) {}

    std::optional<std::string> raw(const std::string& path) const
    {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!v)
            return std::nullopt;
        return trim(strip_comment(*v));
    }

    int line(const std::string& path) const
    {
        const auto it = idx_.keys.find(path);
        return it == idx_.keys.end() ? 0 : it->second;
    }

    void number(const std::string& path, double& out) const
    {
        if (const auto s = raw(path))
            out = to_double(*s, path);
    }

    void integer(const std::string& path, int& out) const
    {
        if (const auto s = raw(path)) {
            std::size_t used = 0;
            long v = 0;
            try {
                v = std::stol(*s, &used);
            }
            catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != s->size())
                throw ConfigError("expected an integer, got '" + *s + "'", path, line(path));
            out = static_cast<int>(v);
        }
    }

    void boolean(const std::string& path, bool& out) const
    {
        if (const auto s = raw(path)) {
            if (*s == "true" || *s == "1")
                out = true;
            else if (*s == "false" || *s == "0")
                out = false;
            else
                throw ConfigError("expected true or false, got '" + *s + "'", path, line(path));
        }
    }

    void list(const std::string& path, std::vector<double>& out) const
    {
        if (const auto s = raw(path)) {
            std::vector<double> v;
            std::stringstream ss(*s);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!trim(item).empty())
                    v.push_back(to_double(trim(item), path));
            out = std::move(v);
        }
    }

    template <class E, class Parse>
    void choice(const std::string& path, E& out, Parse parse) const
    {
        if (const auto s = raw(path)) {
            try {
                out = parse(*s);
            }
            catch (const std::invalid_argument& e) {
                throw ConfigError(e.what(), path, line(path));
            }
        }
    }

private:
    double to_double(const std::string& s, const std::string& path) const
    {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        }
        catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v))
            throw ConfigError("expected a finite number, got '" + s + "'", path, line(path));
        return v;
    }

    const pt::ptree& tree_;
    const LineIndex& idx_;
};

template <class F>
void wrap(const std::string& path, F f)
{
    try {
        f();
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const ValidationError& e) {
        throw ConfigError(e.what(), path, 0, e.assumption());
    }
    catch (const std::exception& e) {
        throw ConfigError(e.what(), path);
    }
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    pt::ptree tree;
    {
        std::istringstream in(text);
        try {
            pt::ini_parser::read_ini(in, tree);
        }
        catch (const pt::ini_parser_error& e) {
            throw ConfigError("parse error: " + e.message(), {}, static_cast<int>(e.line()));
        }
    }
    const LineIndex idx = index_lines(text);
    const auto& sch = schema();

    for (const auto& [name, child] : tree) {
        if (idx.sections.count(name)) {
            const auto sec = sch.find(name);
            if (sec == sch.end())
                throw ConfigError("unknown section [" + name + "]", name, idx.sections.at(name));
            for (const auto& [key, value] : child) {
                (void)value;
                if (!sec->second.count(key)) {
                    const std::string path = name + "." + key;
                    const auto it = idx.keys.find(path);
                    throw ConfigError("unknown key", path, it == idx.keys.end() ? 0 : it->second);
                }
            }
        }
        else if (name != "config_version") {
            const auto it = idx.keys.find(name);
            throw ConfigError("unknown top-level key", name, it == idx.keys.end() ? 0 : it->second);
        }
    }

    const Reader r(tree, idx);
    RunConfig c;
    r.integer("config_version", c.config_version);
    if (c.config_version != 1)
        throw ConfigError("unsupported config_version " + std::to_string(c.config_version), "config_version",
                          r.line("config_version"));

    r.integer("grid.dim", c.grid.dim);
    r.number("grid.x_min", c.grid.extents[0].lo);
    r.number("grid.x_max", c.grid.extents[0].hi);
    r.number("grid.y_min", c.grid.extents[1].lo);
    r.number("grid.y_max", c.grid.extents[1].hi);
    r.integer("grid.nx", c.grid.counts[0]);
    r.integer("grid.ny", c.grid.counts[1]);

    r.choice("model.preset", c.preset, parse_mobility_preset);
    r.choice("model.source", c.source, parse_source_kind);
    r.number("model.source_scale", c.source_scale);
    r.number("model.p_M", c.p_max);
    r.number("model.delta", c.delta);
    r.choice("model.regularization", c.regularization, parse_regularization);
    r.boolean("model.test_override", c.test_override);

    r.number("stiff.gamma", c.gamma);
    r.number("stiff.alpha", c.alpha);

    r.choice("data.initial", c.initial, parse_initial_kind);
    r.number("data.initial_value", c.initial_value);
    r.number("data.initial_position", c.initial_position);
    r.number("data.initial_center_x", c.initial_center_x);
    r.number("data.initial_center_y", c.initial_center_y);
    r.number("data.initial_radius", c.initial_radius);
    r.number("data.flux_left", c.flux_left);
    r.number("data.flux_right", c.flux_right);
    r.number("data.flux_bottom", c.flux_bottom);
    r.number("data.flux_top", c.flux_top);
    r.number("data.flux_floor", c.flux_floor);
    r.number("data.horizon", c.horizon);

    c.solver = RunConfig::default_solver(c.horizon);
    r.number("solver.dt_initial", c.solver.dt_initial);
    r.number("solver.dt_min", c.solver.dt_min);
    r.number("solver.dt_max", c.solver.dt_max);
    r.number("solver.newton_tol", c.solver.newton_tol);
    r.integer("solver.newton_max_iter", c.solver.newton_max_iter);
    r.number("solver.linear_tol", c.solver.linear_tol);
    r.integer("solver.easy_newton_iterations", c.solver.easy_newton_iterations);
    r.list("solver.snapshot_times", c.solver.snapshot_times);

    r.list("sweep.ladder", c.ladder);
    r.integer("sweep.parallel", c.parallel);
    r.boolean("sweep.refine_for_ba", c.refine_for_ba);
    r.number("sweep.contour_fraction", c.contour_fraction);
    r.list("sweep.trace_cluster", c.trace_cluster);

    r.number("diagnostics.t_floor_fraction", c.diagnostics.t_floor_fraction);
    r.number("diagnostics.test_radius", c.diagnostics.test_radius);
    r.number("diagnostics.test_spacing", c.diagnostics.test_spacing);
    r.integer("diagnostics.temporal_tests", c.diagnostics.temporal_tests);

    validate_config(c);
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const RunConfig& c)
{
    Grid grid = [&] {
        Grid g = GridSpec{}.build();
        wrap("grid", [&] { g = c.grid.build(); });
        return g;
    }();

    if (!(c.p_max > 0.0))
        throw ConfigError("p_M must be positive [violates " + to_string(Assumption::Coefficients) + "]", "model.p_M",
                          0, Assumption::Coefficients);
    if (!(c.source_scale > 0.0) && c.source != SourceKind::Disabled)
        throw ConfigError("source_scale must be positive [violates " + to_string(Assumption::Coefficients) + "]",
                          "model.source_scale", 0, Assumption::Coefficients);
    wrap("model", [&] {
        const auto cons = Constitutive::make(c.preset, c.source_function(), c.delta, c.test_override);
        double lowest_gamma = c.gamma;
        for (double g : c.ladder)
            lowest_gamma = std::min(lowest_gamma, g);
        double ceiling = 0.0;
        for (double g : c.ladder)
            if (g > 1.0)
                ceiling = std::max(ceiling, std::pow(c.p_max, 1.0 / g));
        if (c.gamma > 1.0)
            ceiling = std::max(ceiling, std::pow(c.p_max, 1.0 / c.gamma));
        validate_constitutive(cons, ceiling);
    });

    if (!(c.alpha > 1.0))
        throw ConfigError("alpha must exceed 1 [violates " + to_string(Assumption::Stiffness) + "]", "stiff.alpha", 0,
                          Assumption::Stiffness);
    if (!(c.gamma > 1.0))
        throw ConfigError("gamma must exceed 1 [violates " + to_string(Assumption::Stiffness) + "]", "stiff.gamma", 0,
                          Assumption::Stiffness);

    if (!(c.horizon >= 0.0))
        throw ConfigError("horizon must be nonnegative", "data.horizon");
    if (!(c.flux_floor >= 0.0))
        throw ConfigError("flux_floor must be nonnegative", "data.flux_floor");
    if (!(c.initial_radius > 0.0))
        throw ConfigError("initial_radius must be positive", "data.initial_radius");

    wrap("solver", [&] { c.solver.validate(c.horizon); });
    wrap("sweep", [&] {
        SweepPlan p = c.plan();
        p.validate();
    });

    wrap("data", [&] {
        const auto cons = Constitutive::make(c.preset, c.source_function(), c.delta, c.test_override);
        ProblemData d;
        d.u0.resize(grid.cell_count());
        const auto f0 = c.initial_density();
        for (std::size_t i = 0; i < d.u0.size(); ++i)
            d.u0[i] = f0(grid.cell_center(i));
        d.boundary_flux = c.boundary_flux();
        d.flux_floor = c.flux_floor;
        d.horizon = c.horizon;
        std::vector<double> gammas = c.ladder;
        gammas.push_back(c.gamma);
        for (double g : gammas)
            validate_data(d, grid, StiffParams::make(g, c.alpha), cons);
    });

    wrap("diagnostics", [&] {
        const auto tests = TestFunctionSet::lattice(grid, c.diagnostics.test_radius, c.diagnostics.test_spacing,
                                                    c.horizon, c.diagnostics.temporal_tests);
        tests.validate(grid, c.horizon);
        if (!(c.diagnostics.t_floor_fraction > 0.0 && c.diagnostics.t_floor_fraction <= 1.0))
            throw std::invalid_argument("t_floor_fraction must lie in (0, 1]");
    });
}

namespace {

std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k)
        s += (k ? ", " : "") + format_number(v[k]);
    return s;
}

}  // namespace

std::string echo_config(const RunConfig& c)
{
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
    auto num = [&](const std::string& k, double v) { kv(k, format_number(v)); };
    os << "config_version = " << c.config_version << "\n";
    os << "\n[grid]\n";
    kv("dim", std::to_string(c.grid.dim));
    num("x_min", c.grid.extents[0].lo);
    num("x_max", c.grid.extents[0].hi);
    num("y_min", c.grid.extents[1].lo);
    num("y_max", c.grid.extents[1].hi);
    kv("nx", std::to_string(c.grid.counts[0]));
    kv("ny", std::to_string(c.grid.counts[1]));
    os << "\n[model]\n";
    kv("preset", to_string(c.preset));
    kv("source", to_string(c.source));
    num("source_scale", c.source_scale);
    num("p_M", c.p_max);
    num("delta", c.delta);
    kv("regularization", to_string(c.regularization));
    kv("test_override", c.test_override ? "true" : "false");
    os << "\n[stiff]\n";
    num("gamma", c.gamma);
    num("alpha", c.alpha);
    os << "\n[data]\n";
    kv("initial", to_string(c.initial));
    num("initial_value", c.initial_value);
    num("initial_position", c.initial_position);
    num("initial_center_x", c.initial_center_x);
    num("initial_center_y", c.initial_center_y);
    num("initial_radius", c.initial_radius);
    num("flux_left", c.flux_left);
    num("flux_right", c.flux_right);
    num("flux_bottom", c.flux_bottom);
    num("flux_top", c.flux_top);
    num("flux_floor", c.flux_floor);
    num("horizon", c.horizon);
    os << "\n[solver]\n";
    num("dt_initial", c.solver.dt_initial);
    num("dt_min", c.solver.dt_min);
    num("dt_max", c.solver.dt_max);
    num("newton_tol", c.solver.newton_tol);
    kv("newton_max_iter", std::to_string(c.solver.newton_max_iter));
    num("linear_tol", c.solver.linear_tol);
    kv("easy_newton_iterations", std::to_string(c.solver.easy_newton_iterations));
    kv("snapshot_times", join(c.solver.snapshot_times));
    os << "\n[sweep]\n";
    kv("ladder", join(c.ladder));
    kv("parallel", std::to_string(c.parallel));
    kv("refine_for_ba", c.refine_for_ba ? "true" : "false");
    num("contour_fraction", c.contour_fraction);
    kv("trace_cluster", join(c.trace_cluster));
    os << "\n[diagnostics]\n";
    num("t_floor_fraction", c.diagnostics.t_floor_fraction);
    num("test_radius", c.diagnostics.test_radius);
    num("test_spacing", c.diagnostics.test_spacing);
    kv("temporal_tests", std::to_string(c.diagnostics.temporal_tests));
    return os.str();
}

std::string member_dir_name(double gamma)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "member_%g", gamma);
    return buf;
}

namespace {

class OutputWriter {
public:
    explicit OutputWriter(fs::path root) : root_(std::move(root)) {}

    std::ofstream open(const std::string& rel)
    {
        const fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        if (!out)
            throw std::runtime_error("cannot write " + p.string());
        manifest_.push_back(rel);
        return out;
    }

    void close(std::ofstream& out, const std::string& rel)
    {
        out.close();
        if (!out)
            throw std::runtime_error("write failed for " + (root_ / rel).string());
    }

    const std::vector<std::string>& manifest() const { return manifest_; }

private:
    fs::path root_;
    std::vector<std::string> manifest_;
};

void write_text(OutputWriter& w, const std::string& rel, const std::string& text)
{
    auto out = w.open(rel);
    out << text;
    w.close(out, rel);
}

nlohmann::json verdict_json(const Verdict& v)
{
    return {{"name", v.name},
            {"status", to_string(v.status)},
            {"value", v.value},
            {"threshold", v.threshold},
            {"detail", v.detail}};
}

nlohmann::json member_json(const MemberResult& m)
{
    nlohmann::json j{{"gamma", m.gamma}, {"ok", m.ok}, {"directory", member_dir_name(m.gamma)}};
    if (!m.ok) {
        j["error"] = m.error;
        return j;
    }
    const auto& d = m.diagnostics;
    int newton = 0;
    double max_imbalance = 0.0;
    for (const auto& s : m.trajectory.steps) {
        newton += s.newton_iterations;
        max_imbalance = std::max(max_imbalance, std::abs(s.imbalance));
    }
    j["steps"] = m.trajectory.steps.size();
    j["newton_iterations"] = newton;
    j["max_mass_imbalance"] = max_imbalance;
    j["snapshots"] = m.trajectory.snapshots.size();
    j["flux_l1"] = m.flux_l1;
    j["r_phi"] = d.r_phi;
    j["t_floor"] = d.t_floor;
    j["l1_grad_u"] = d.norms.l1_grad_u;
    j["l1_grad_p"] = d.norms.l1_grad_p;
    j["l1_dt_u"] = d.norms.l1_dt_u;
    j["l1_dt_p"] = d.norms.l1_dt_p;
    j["l2_grad_p_sq"] = d.norms.l2_grad_p_sq;
    j["graph_residual"] = d.graph;
    j["incompressibility_residual"] = d.incompressibility;
    j["weak_form_residual"] = d.weak_form;
    j["l1_rhs_u"] = d.l1.rhs_u;
    j["l1_rhs_p"] = d.l1.rhs_p;
    j["l1_min_relative_slack_u"] = d.l1.min_relative_u();
    j["l1_min_relative_slack_p"] = d.l1.min_relative_p();
    j["ba_margin"] = d.benilan_aronson.margin;
    j["ba_time"] = d.benilan_aronson.time;
    j["ba_cell"] = d.benilan_aronson.cell;
    j["ba_refined"] = m.ba_refined;
    j["tol_ba"] = m.tol_ba;
    if (!m.refine_error.empty())
        j["refine_error"] = m.refine_error;
    j["mono_p_margin"] = d.mono_p.margin;
    j["mono_u_margin"] = d.mono_u.margin;
    j["min_u"] = d.min_u;
    j["max_u"] = d.max_u;
    j["max_p"] = d.max_p;
    j["outflux_only"] = m.outflux_only;
    j["data_warnings"] = m.data.warnings;
    j["tolerances"] = {{"max_principle", d.tol_max_principle},
                       {"l1_relative", d.tol_l1_relative},
                       {"monotonicity", d.tol_monotonicity}};
    return j;
}

void write_series(OutputWriter& w, const std::string& rel, const DiagnosticsReport& d)
{
    auto out = w.open(rel);
    out << "time,l1_u,l1_p,bv_u,bv_p,l2_grad_p,min_u,max_u,max_p,ba_margin,mono_margin\n";
    for (const auto& r : d.series) {
        const double vals[] = {r.time,  r.l1_u,  r.l1_p,  r.bv_u,      r.bv_p,       r.l2_grad_p,
                               r.min_u, r.max_u, r.max_p, r.ba_margin, r.mono_margin};
        for (std::size_t k = 0; k < std::size(vals); ++k)
            out << (k ? "," : "") << format_number(vals[k]);
        out << "\n";
    }
    w.close(out, rel);
}

void write_steps(OutputWriter& w, const std::string& rel, const Trajectory& t)
{
    auto out = w.open(rel);
    out << "time,dt,newton_iterations,initial_residual,final_residual,linear_iterations,mass_before,mass_after,"
           "boundary_inflow,source,imbalance\n";
    for (const auto& s : t.steps) {
        out << format_number(s.time) << "," << format_number(s.dt) << "," << s.newton_iterations << ","
            << format_number(s.initial_residual) << "," << format_number(s.final_residual) << ","
            << s.linear_iterations << "," << format_number(s.mass_before) << "," << format_number(s.mass_after)
            << "," << format_number(s.boundary_inflow) << "," << format_number(s.source) << ","
            << format_number(s.imbalance) << "\n";
    }
    w.close(out, rel);
}

void write_field(OutputWriter& w, const std::string& rel, const State& s, const Grid& grid, double gamma)
{
    auto out = w.open(rel);
    out << (grid.dim() == 2 ? "x,y,u,p\n" : "x,u,p\n");
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const Point c = grid.cell_center(i);
        out << format_number(c[0]) << ",";
        if (grid.dim() == 2)
            out << format_number(c[1]) << ",";
        out << format_number(s.u[i]) << "," << format_number(stiff_pressure(s.u[i], gamma)) << "\n";
    }
    w.close(out, rel);
}

}  // namespace

std::vector<std::string> emit_outputs(const SweepReport& report, const RunConfig& cfg, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    const fs::path marker = out_dir / ".partial";
    {
        std::ofstream m(marker);
        if (!m)
            throw std::runtime_error("output directory is not writable: " + out_dir.string());
        m << "incomplete output\n";
    }

    OutputWriter w(out_dir);
    const Grid grid = cfg.grid.build();

    write_text(w, "config.ini", echo_config(cfg));

    for (const auto& m : report.members) {
        if (!m.ok)
            continue;
        const std::string dir = member_dir_name(m.gamma);
        write_series(w, dir + "/series.csv", m.diagnostics);
        write_steps(w, dir + "/steps.csv", m.trajectory);
        for (std::size_t k = 0; k < m.trajectory.snapshots.size(); ++k)
            write_field(w, dir + "/field_" + std::to_string(k) + ".csv", m.trajectory.snapshots[k], grid, m.gamma);
    }

    {
        auto out = w.open("plots/member_scalars.csv");
        out << "gamma,quantity,value\n";
        for (const auto& m : report.members) {
            if (!m.ok)
                continue;
            const auto& d = m.diagnostics;
            const std::vector<std::pair<const char*, double>> rows{
                {"l1_grad_u", d.norms.l1_grad_u},
                {"l1_grad_p", d.norms.l1_grad_p},
                {"l1_dt_u", d.norms.l1_dt_u},
                {"l1_dt_p", d.norms.l1_dt_p},
                {"l2_grad_p_sq", d.norms.l2_grad_p_sq},
                {"graph_residual", d.graph},
                {"incompressibility_residual", d.incompressibility},
                {"weak_form_residual", d.weak_form},
                {"ba_margin", d.benilan_aronson.margin},
                {"tol_ba", m.tol_ba},
                {"mono_p_margin", d.mono_p.margin},
                {"max_u", d.max_u},
                {"max_p", d.max_p}};
            for (const auto& [q, v] : rows)
                out << format_number(m.gamma) << "," << q << "," << format_number(v) << "\n";
        }
        w.close(out, "plots/member_scalars.csv");
    }
    {
        std::vector<const MemberResult*> ok;
        for (const auto& m : report.members)
            if (m.ok)
                ok.push_back(&m);
        auto out = w.open("plots/cauchy.csv");
        out << "gamma,quantity,value\n";
        for (std::size_t k = 0; k < report.cauchy_u.size(); ++k) {
            out << format_number(ok[k + 1]->gamma) << ",cauchy_u," << format_number(report.cauchy_u[k]) << "\n";
            out << format_number(ok[k + 1]->gamma) << ",cauchy_p," << format_number(report.cauchy_p[k]) << "\n";
        }
        w.close(out, "plots/cauchy.csv");
    }

    nlohmann::json j;
    j["config_version"] = cfg.config_version;
    j["ladder"] = cfg.plan().ladder;
    for (const auto& m : report.members)
        j["members"].push_back(member_json(m));
    if (report.members.empty())
        j["members"] = nlohmann::json::array();
    j["cauchy_u"] = report.cauchy_u;
    j["cauchy_p"] = report.cauchy_p;
    j["all_pass"] = report.all_pass();
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : report.verdicts)
        j["verdicts"].push_back(verdict_json(v));
    j["limit"] = {{"gamma", report.limit.gamma},
                  {"min_u", report.limit.min_u},
                  {"max_u", report.limit.max_u},
                  {"tolerance", report.limit.tolerance}};
    {
        nlohmann::json fb = nlohmann::json::array();
        std::vector<double> times;
        for (const auto& m : report.members)
            if (m.ok && m.gamma == report.limit.gamma)
                times = m.trajectory.times();
        for (std::size_t k = 0; k < report.free_boundary.size(); ++k)
            fb.push_back({{"time", k < times.size() ? times[k] : 0.0},
                          {"positions", report.free_boundary[k].positions},
                          {"cells", report.free_boundary[k].cells.size()}});
        j["free_boundary"] = fb;
    }
    j["monotone_region"] = {{"nested", report.region.nested},
                            {"violations", report.region.violations},
                            {"first_violation_time", report.region.first_violation_time}};
    write_text(w, "summary.json", j.dump(2) + "\n");

    std::vector<std::string> manifest = w.manifest();
    manifest.push_back("manifest.json");
    {
        std::ofstream out(out_dir / "manifest.json");
        out << nlohmann::json(manifest).dump(2) << "\n";
        if (!out)
            throw std::runtime_error("write failed for manifest.json");
    }
    fs::remove(marker);
    return manifest;
}

void emit_oracle_report(const std::vector<OracleCheck>& checks, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : checks)
        j.push_back({{"name", c.name},
                     {"value", c.value},
                     {"tolerance", c.tolerance},
                     {"pass", c.pass},
                     {"detail", c.detail}});
    std::ofstream out(out_dir / "oracle.json");
    out << j.dump(2) << "\n";
    if (!out)
        throw std::runtime_error("cannot write " + (out_dir / "oracle.json").string());
}

std::vector<double> CsvTable::column(const std::string& name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw std::out_of_range("no column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back(r.at(k));
    return out;
}

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty CSV " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            t.header.push_back(trim(cell));
    }
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const std::string c = trim(cell);
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": not a number '" + c + "'");
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": wrong column count");
        t.rows.push_back(std::move(row));
    }
    return t;
}

Trajectory read_member_trajectory(const fs::path& member_dir)
{
    const auto series = read_csv(member_dir / "series.csv");
    const auto times = series.column("time");
    Trajectory t;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto field = read_csv(member_dir / ("field_" + std::to_string(k) + ".csv"));
        t.snapshots.push_back(State{times[k], field.column("u")});
    }
    return t;
}

VerifyResult verify_outputs(const fs::path& out_dir)
{
    VerifyResult res;
    if (fs::exists(out_dir / ".partial"))
        throw std::runtime_error("output directory holds a partial write: " + out_dir.string());
    const RunConfig cfg = load_config(out_dir / "config.ini");
    nlohmann::json summary;
    {
        std::ifstream in(out_dir / "summary.json");
        if (!in)
            throw std::runtime_error("cannot read summary.json in " + out_dir.string());
        summary = nlohmann::json::parse(in);
    }
    const SweepPlan plan = cfg.plan();
    const Grid grid = cfg.grid.build();
    for (const auto& mj : summary.at("members")) {
        if (!mj.at("ok").get<bool>())
            continue;
        const double gamma = mj.at("gamma").get<double>();
        const fs::path dir = out_dir / member_dir_name(gamma);
        const Trajectory traj = read_member_trajectory(dir);
        const Model model = plan.model(gamma);
        const ProblemData data = plan.data(grid);
        const double flux_l1 = boundary_flux_l1(data, grid);
        const auto tests = TestFunctionSet::lattice(grid, cfg.diagnostics.test_radius, cfg.diagnostics.test_spacing,
                                                    cfg.horizon, cfg.diagnostics.temporal_tests);
        const auto d =
            compute_diagnostics(traj, grid, model, data.boundary_flux, flux_l1, cfg.horizon, tests, cfg.diagnostics);
        ++res.members;

        const auto stored = read_csv(dir / "series.csv");
        if (stored.rows.size() != d.series.size()) {
            ++res.mismatches;
            res.messages.push_back(dir.string() + ": snapshot count differs");
            continue;
        }
        for (std::size_t k = 0; k < d.series.size(); ++k) {
            const auto& r = d.series[k];
            const double vals[] = {r.time,  r.l1_u,  r.l1_p,  r.bv_u,      r.bv_p,       r.l2_grad_p,
                                   r.min_u, r.max_u, r.max_p, r.ba_margin, r.mono_margin};
            for (std::size_t c = 0; c < std::size(vals); ++c) {
                ++res.compared;
                if (stored.rows[k][c] != vals[c]) {
                    ++res.mismatches;
                    res.messages.push_back(dir.string() + ": series row " + std::to_string(k) + " column " +
                                           stored.header[c] + " stored " + format_number(stored.rows[k][c]) +
                                           " recomputed " + format_number(vals[c]));
                }
            }
        }
        const std::vector<std::pair<const char*, double>> scalars{
            {"l1_grad_u", d.norms.l1_grad_u},
            {"l1_grad_p", d.norms.l1_grad_p},
            {"l1_dt_u", d.norms.l1_dt_u},
            {"l1_dt_p", d.norms.l1_dt_p},
            {"l2_grad_p_sq", d.norms.l2_grad_p_sq},
            {"graph_residual", d.graph},
            {"incompressibility_residual", d.incompressibility},
            {"weak_form_residual", d.weak_form}};
        for (const auto& [key, v] : scalars) {
            ++res.compared;
            const double s = mj.at(key).get<double>();
            if (s != v) {
                ++res.mismatches;
                res.messages.push_back(dir.string() + ": " + key + " stored " + format_number(s) + " recomputed " +
                                       format_number(v));
            }
        }
    }
    return res;
}

}  // namespace hsbl
