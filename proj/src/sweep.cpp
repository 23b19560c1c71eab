#include "hsbl/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hsbl {

void SweepPlan::validate() const
{
    if (ladder.empty())
        throw std::invalid_argument("gamma ladder is empty");
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (!(ladder[k] > 1.0))
            throw std::invalid_argument("every ladder gamma must exceed 1");
        if (k > 0 && !(ladder[k] > ladder[k - 1]))
            throw std::invalid_argument("gamma ladder must be strictly increasing");
    }
    if (!initial_density)
        throw std::invalid_argument("sweep plan has no initial density");
    if (!(horizon >= 0.0))
        throw std::invalid_argument("horizon must be nonnegative");
    if (!(contour_fraction > 0.0 && contour_fraction < 1.0))
        throw std::invalid_argument("contour fraction must lie in (0, 1)");
    if (parallel < 1)
        throw std::invalid_argument("parallel worker cap must be at least 1");
    solver.validate(horizon);
}

Model SweepPlan::model(double gamma) const
{
    return Model{Constitutive::make(preset, phi, delta, test_override), StiffParams::make(gamma, alpha),
                 regularization};
}

ProblemData SweepPlan::data(const Grid& grid) const
{
    ProblemData d;
    d.u0.resize(grid.cell_count());
    for (std::size_t i = 0; i < d.u0.size(); ++i)
        d.u0[i] = initial_density(grid.cell_center(i));
    d.boundary_flux = flux;
    d.flux_floor = flux_floor;
    d.horizon = horizon;
    return d;
}

std::string to_string(VerdictStatus s)
{
    switch (s) {
    case VerdictStatus::Pass:
        return "pass";
    case VerdictStatus::Fail:
        return "fail";
    case VerdictStatus::Skipped:
        return "skipped";
    }
    return "unknown";
}

Contour extract_free_boundary(const std::vector<double>& p, const Grid& grid, double p_max, double fraction)
{
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("contour fraction must lie in (0, 1)");
    const double level = fraction * p_max;
    Contour c;
    for (const auto& f : grid.interior_faces()) {
        const double a = p[f.left];
        const double b = p[f.right];
        if ((a > level) == (b > level))
            continue;
        c.cells.push_back(f.left);
        c.cells.push_back(f.right);
        if (grid.dim() == 1) {
            const double xa = grid.cell_center(f.left)[0];
            const double xb = grid.cell_center(f.right)[0];
            c.positions.push_back(xa + (level - a) / (b - a) * (xb - xa));
        }
    }
    std::sort(c.cells.begin(), c.cells.end());
    c.cells.erase(std::unique(c.cells.begin(), c.cells.end()), c.cells.end());
    std::sort(c.positions.begin(), c.positions.end());
    return c;
}

RegionCheck monotone_region_check(const Trajectory& traj, const Grid& grid, double gamma, double p_max,
                                  double fraction)
{
    RegionCheck out;
    const double level = fraction * p_max;
    const std::size_t n = grid.cell_count();
    std::vector<char> prev, next, ring;
    auto region = [&](const State& s) {
        std::vector<char> r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = stiff_pressure(s.u[i], gamma) > level;
        return r;
    };
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        next = region(traj.snapshots[k]);
        if (k > 0) {
            ring = next;
            for (const auto& f : grid.interior_faces()) {
                if (next[f.left])
                    ring[f.right] = 1;
                if (next[f.right])
                    ring[f.left] = 1;
            }
            int bad = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (prev[i] && !ring[i])
                    ++bad;
            if (bad > 0) {
                if (out.nested)
                    out.first_violation_time = traj.snapshots[k].time;
                out.nested = false;
                out.violations += bad;
            }
        }
        prev.swap(next);
    }
    return out;
}

CauchyPair cauchy_differences(const Trajectory& a, double gamma_a, const Trajectory& b, double gamma_b,
                              const Grid& grid)
{
    if (a.snapshots.size() != b.snapshots.size())
        throw std::invalid_argument("Cauchy difference needs identical snapshot grids");
    std::vector<double> t, du, dp;
    std::vector<double> diff(grid.cell_count());
    for (std::size_t n = 0; n < a.snapshots.size(); ++n) {
        const auto& sa = a.snapshots[n];
        const auto& sb = b.snapshots[n];
        if (sa.time != sb.time)
            throw std::invalid_argument("Cauchy difference needs identical snapshot grids");
        t.push_back(sa.time);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = sa.u[i] - sb.u[i];
        du.push_back(field_l1(diff, grid));
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = stiff_pressure(sa.u[i], gamma_a) - stiff_pressure(sb.u[i], gamma_b);
        dp.push_back(field_l1(diff, grid));
    }
    return {trapezoid(t, du), trapezoid(t, dp)};
}

namespace {

struct RunOutput {
    Trajectory trajectory;
    DiagnosticsReport diagnostics;
    DataReport data;
    double flux_l1 = 0.0;
};

RunOutput integrate(const SweepPlan& plan, const GridSpec& spec, double gamma)
{
    const Grid grid = spec.build();
    const Model model = plan.model(gamma);
    validate_constitutive(model.constitutive, model.density_ceiling());
    const ProblemData data = plan.data(grid);
    RunOutput out;
    out.data = validate_data(data, grid, model.stiff, model.constitutive);
    out.flux_l1 = out.data.boundary_flux_l1;
    const Solver solver(grid, model, data.boundary_flux, plan.solver);
    out.trajectory = solver.run(State{0.0, data.u0}, plan.horizon);
    const auto tests = TestFunctionSet::lattice(grid, plan.diagnostics.test_radius, plan.diagnostics.test_spacing,
                                                plan.horizon, plan.diagnostics.temporal_tests);
    tests.validate(grid, plan.horizon);
    out.diagnostics = compute_diagnostics(out.trajectory, grid, model, data.boundary_flux, out.flux_l1,
                                          plan.horizon, tests, plan.diagnostics);
    return out;
}

bool outflux_only(const SweepPlan& plan, const Grid& grid)
{
    if (!plan.flux)
        return true;
    std::vector<double> times = plan.solver.snapshot_times;
    for (int k = 0; k <= 100; ++k)
        times.push_back(plan.horizon * k / 100.0);
    for (double t : times)
        for (const auto& b : grid.boundary_faces())
            if (plan.flux(t, b) > 0.0)
                return false;
    return true;
}

}  // namespace

MemberResult run_member(const SweepPlan& plan, double gamma)
{
    MemberResult m;
    m.gamma = gamma;
    try {
        auto out = integrate(plan, plan.grid, gamma);
        m.trajectory = std::move(out.trajectory);
        m.diagnostics = std::move(out.diagnostics);
        m.data = std::move(out.data);
        m.flux_l1 = out.flux_l1;
        m.outflux_only = outflux_only(plan, plan.grid.build());
        m.ok = true;
    }
    catch (const std::exception& e) {
        m.error = e.what();
        return m;
    }
    if (plan.refine_for_ba && m.diagnostics.r_phi > 0.0) {
        try {
            const auto fine = integrate(plan, plan.grid.refined(2), gamma);
            const auto& cs = m.diagnostics.series;
            const auto& fs = fine.diagnostics.series;
            double tol = 0.0;
            for (std::size_t k = 0; k < cs.size() && k < fs.size(); ++k)
                if (cs[k].time >= m.diagnostics.t_floor && cs[k].time > 0.0)
                    tol = std::max(tol, std::abs(cs[k].ba_margin - fs[k].ba_margin));
            m.tol_ba = tol;
            m.ba_refined = true;
        }
        catch (const std::exception& e) {
            m.refine_error = e.what();
        }
    }
    return m;
}

bool SweepReport::all_pass() const
{
    return std::none_of(verdicts.begin(), verdicts.end(),
                        [](const Verdict& v) { return v.status == VerdictStatus::Fail; });
}

const Verdict* SweepReport::verdict(const std::string& name) const
{
    for (const auto& v : verdicts)
        if (v.name == name)
            return &v;
    return nullptr;
}

namespace {

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict make(const std::string& name, bool pass, double value, double threshold, const std::string& detail)
{
    return Verdict{name, pass ? VerdictStatus::Pass : VerdictStatus::Fail, value, threshold, detail};
}

Verdict skipped(const std::string& name, const std::string& detail)
{
    return Verdict{name, VerdictStatus::Skipped, 0.0, 0.0, detail};
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void add_verdicts(const SweepPlan& plan, SweepReport& rep)
{
    std::vector<const MemberResult*> ok;
    std::string failed;
    for (const auto& m : rep.members) {
        if (m.ok)
            ok.push_back(&m);
        else
            failed += (failed.empty() ? "" : "; ") + ("gamma " + fmt(m.gamma) + ": " + m.error);
    }
    auto& vs = rep.verdicts;
    vs.push_back(make("members", failed.empty(), static_cast<double>(ok.size()),
                      static_cast<double>(rep.members.size()), failed.empty() ? "all members completed" : failed));
    if (ok.empty())
        return;

    const double p_max = plan.phi.p_max;

    {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto* m : ok)
            worst = std::min(worst, m->diagnostics.min_u);
        vs.push_back(make("nonnegativity", worst >= 0.0, worst, 0.0, "min u over all snapshots"));
    }
    {
        const bool closed = std::all_of(ok.begin(), ok.end(), [](const MemberResult* m) { return m->outflux_only; });
        if (!closed) {
            vs.push_back(skipped("max_principle", "boundary data has influx; bound reported, not asserted"));
        }
        else {
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto* m : ok)
                worst = std::max(worst, m->diagnostics.max_u - std::pow(p_max, 1.0 / m->gamma));
            vs.push_back(make("max_principle", worst <= 1e-10, worst, 1e-10, "max over members of max u - p_M^(1/gamma)"));
        }
    }
    {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto* m : ok)
            worst = std::min({worst, m->diagnostics.l1.min_relative_u(), m->diagnostics.l1.min_relative_p()});
        vs.push_back(make("l1_bounds", worst >= -1e-8, worst, -1e-8, "min relative slack of the u and p bounds"));
    }
    {
        bool any = false;
        bool pass = true;
        double worst = std::numeric_limits<double>::infinity();
        std::string detail;
        for (const auto* m : ok) {
            if (!m->ba_refined) {
                if (!m->refine_error.empty())
                    detail += "gamma " + fmt(m->gamma) + " refinement failed: " + m->refine_error + "; ";
                continue;
            }
            any = true;
            const double v = m->diagnostics.benilan_aronson.margin + 2.0 * m->tol_ba;
            worst = std::min(worst, v);
            if (v < 0.0) {
                pass = false;
                detail += "gamma " + fmt(m->gamma) + " margin " + fmt(m->diagnostics.benilan_aronson.margin) +
                          " < -2*" + fmt(m->tol_ba) + "; ";
            }
        }
        if (!any)
            vs.push_back(skipped("benilan_aronson", detail.empty() ? "no refined member" : detail));
        else
            vs.push_back(make("benilan_aronson", pass && detail.find("failed") == std::string::npos, worst, 0.0,
                              detail.empty() ? "min over members of margin + 2 tol_BA" : detail));
    }
    {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto* m : ok)
            if (m->diagnostics.r_phi > 0.0)
                worst = std::min(worst, m->diagnostics.mono_p.margin);
        if (std::isfinite(worst))
            vs.push_back(make("monotonicity", worst >= -1e-8 * p_max, worst, -1e-8 * p_max,
                              "min pressure monotonicity margin for t >= t_floor"));
        else
            vs.push_back(skipped("monotonicity", "no reaction rate"));
    }

    if (ok.size() < 2) {
        for (const char* n : {"graph_trend", "incompressibility_trend", "uniform_bounds"})
            vs.push_back(skipped(n, "needs at least two members"));
    }
    else {
        bool mono = true;
        for (std::size_t k = 1; k < ok.size(); ++k)
            mono = mono && ok[k]->diagnostics.graph <= ok[k - 1]->diagnostics.graph;
        const double first = ok.front()->diagnostics.graph;
        const double last = ok.back()->diagnostics.graph;
        vs.push_back(make("graph_trend", mono && last <= 0.05 * first, last, 0.05 * first,
                          mono ? "non-increasing; last vs 0.05 x first" : "not monotone along the ladder"));

        const double i0 = ok.front()->diagnostics.incompressibility;
        const double i1 = ok.back()->diagnostics.incompressibility;
        vs.push_back(make("incompressibility_trend", i1 <= 0.1 * i0, i1, 0.1 * i0, "last vs 0.1 x first"));

        const std::vector<std::pair<std::string, double SpaceTimeNorms::*>> norms{
            {"l1_grad_u", &SpaceTimeNorms::l1_grad_u}, {"l1_grad_p", &SpaceTimeNorms::l1_grad_p},
            {"l1_dt_u", &SpaceTimeNorms::l1_dt_u},     {"l1_dt_p", &SpaceTimeNorms::l1_dt_p},
            {"l2_grad_p_sq", &SpaceTimeNorms::l2_grad_p_sq}};
        double worst_ratio = 0.0;
        std::string bad;
        for (const auto& [name, field] : norms) {
            std::vector<double> vals;
            for (const auto* m : ok)
                vals.push_back(m->diagnostics.norms.*field);
            const double med = median_of(vals);
            const double mx = *std::max_element(vals.begin(), vals.end());
            const double ratio = med > 0.0 ? mx / med : (mx > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            worst_ratio = std::max(worst_ratio, ratio);
            if (ratio > 2.0)
                bad += name + " max/median " + fmt(ratio) + "; ";
        }
        vs.push_back(make("uniform_bounds", bad.empty(), worst_ratio, 2.0,
                          bad.empty() ? "every norm within 2 x median" : bad));
    }

    if (rep.cauchy_u.size() < 2) {
        vs.push_back(skipped("cauchy", "needs at least two consecutive pairs"));
    }
    else {
        bool dec = true;
        for (std::size_t k = 1; k < rep.cauchy_u.size(); ++k)
            dec = dec && rep.cauchy_u[k] < rep.cauchy_u[k - 1] && rep.cauchy_p[k] < rep.cauchy_p[k - 1];
        const bool ratio = rep.cauchy_u.back() <= 0.5 * rep.cauchy_u.front() &&
                           rep.cauchy_p.back() <= 0.5 * rep.cauchy_p.front();
        const double value = std::max(rep.cauchy_u.back() / rep.cauchy_u.front(),
                                      rep.cauchy_p.back() / rep.cauchy_p.front());
        vs.push_back(make("cauchy", dec && ratio, value, 0.5,
                          dec ? "decreasing; last/first for u and p" : "not decreasing along the ladder"));
    }

    const MemberResult& top = *ok.back();
    {
        std::vector<double> vals;
        const auto& snaps = top.trajectory.snapshots;
        for (double t : plan.trace_cluster)
            for (std::size_t n = 0; n < snaps.size(); ++n)
                if (std::abs(snaps[n].time - t) <= 1e-12 * std::max(1.0, t)) {
                    vals.push_back(top.diagnostics.initial_trace[n]);
                    break;
                }
        if (vals.size() < 2 || vals.size() != plan.trace_cluster.size()) {
            vs.push_back(skipped("initial_trace", "trace cluster times are not all snapshot times"));
        }
        else {
            bool nondec = true;
            for (std::size_t k = 1; k < vals.size(); ++k)
                nondec = nondec && vals[k] >= vals[k - 1];
            vs.push_back(make("initial_trace", nondec && vals.front() <= 0.1 * vals.back(), vals.front(),
                              0.1 * vals.back(),
                              nondec ? "first cluster value vs 0.1 x last" : "deviation not non-decreasing"));
        }
    }
    vs.push_back(make("monotone_region", rep.region.nested, static_cast<double>(rep.region.violations), 0.0,
                      "cells leaving the positivity set beyond a one-cell ring"));
    vs.push_back(make("limit_bounds",
                      rep.limit.min_u >= 0.0 && rep.limit.max_u <= 1.0 + rep.limit.tolerance, rep.limit.max_u,
                      1.0 + rep.limit.tolerance, "0 <= u_inf <= 1 + tol_gamma at the largest gamma"));
}

}  // namespace

SweepReport run_sweep(const SweepPlan& plan)
{
    plan.validate();
    SweepReport rep;
    rep.members.resize(plan.ladder.size());

    const int workers = std::max(1, std::min<int>(plan.parallel, static_cast<int>(plan.ladder.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t k = next++; k < plan.ladder.size(); k = next++)
            rep.members[k] = run_member(plan, plan.ladder[k]);
    };
    if (workers == 1) {
        work();
    }
    else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }

    const Grid grid = plan.grid.build();
    std::vector<const MemberResult*> ok;
    for (const auto& m : rep.members)
        if (m.ok)
            ok.push_back(&m);
    for (std::size_t k = 1; k < ok.size(); ++k) {
        const auto c = cauchy_differences(ok[k - 1]->trajectory, ok[k - 1]->gamma, ok[k]->trajectory, ok[k]->gamma,
                                          grid);
        rep.cauchy_u.push_back(c.u);
        rep.cauchy_p.push_back(c.p);
    }

    if (!ok.empty()) {
        const MemberResult& top = *ok.back();
        const auto& last = top.trajectory.snapshots.back();
        rep.limit.gamma = top.gamma;
        rep.limit.u = last.u;
        rep.limit.p = pressure_field(last.u, top.gamma);
        rep.limit.min_u = *std::min_element(last.u.begin(), last.u.end());
        rep.limit.max_u = *std::max_element(last.u.begin(), last.u.end());
        rep.limit.tolerance = std::pow(plan.phi.p_max, 1.0 / top.gamma) - 1.0 + 1e-10;
        for (const auto& s : top.trajectory.snapshots)
            rep.free_boundary.push_back(
                extract_free_boundary(pressure_field(s.u, top.gamma), grid, plan.phi.p_max, plan.contour_fraction));
        rep.region = monotone_region_check(top.trajectory, grid, top.gamma, plan.phi.p_max, plan.contour_fraction);
    }
    add_verdicts(plan, rep);
    return rep;
}

}  // namespace hsbl
