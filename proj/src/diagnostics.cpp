#include "hsbl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hsbl {

double quintic_bump(double s)
{
    s = std::abs(s);
    if (s >= 1.0)
        return 0.0;
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double quintic_bump_derivative(double s)
{
    const double a = std::abs(s);
    if (a >= 1.0)
        return 0.0;
    const double d = -30.0 * a * a * (1.0 - a) * (1.0 - a);
    return s < 0.0 ? -d : d;
}

double SpatialBump::value(const Point& x, int dim) const
{
    double v = quintic_bump((x[0] - center[0]) / radius);
    if (dim == 2)
        v *= quintic_bump((x[1] - center[1]) / radius);
    return v;
}

double TemporalBump::value(double t) const
{
    return quintic_bump((t - center) / radius);
}

double TemporalBump::derivative(double t) const
{
    return quintic_bump_derivative((t - center) / radius) / radius;
}

TestFunctionSet::TestFunctionSet(std::vector<SpatialBump> spatial, std::vector<TemporalBump> temporal)
    : spatial_(std::move(spatial)), temporal_(std::move(temporal))
{
}

TestFunctionSet TestFunctionSet::lattice(const Grid& grid, double radius, double spacing, double horizon,
                                         int temporal)
{
    if (!(radius > 0.0) || !(spacing > 0.0))
        throw std::invalid_argument("test radius and spacing must be positive");
    std::array<std::vector<double>, 2> centers;
    for (int a = 0; a < grid.dim(); ++a) {
        const double margin = 2.0 * grid.spacing(a) + radius;
        const double lo = grid.extent(a).lo + margin;
        const double hi = grid.extent(a).hi - margin;
        if (hi < lo)
            throw std::invalid_argument("test radius too large for the domain");
        const int count = static_cast<int>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
        const double offset = 0.5 * ((hi - lo) - (count - 1) * spacing);
        for (int j = 0; j < count; ++j)
            centers[a].push_back(lo + offset + j * spacing);
    }
    std::vector<SpatialBump> spatial;
    if (grid.dim() == 1) {
        for (double c : centers[0])
            spatial.push_back({{c, 0.0}, radius});
    }
    else {
        for (double cy : centers[1])
            for (double cx : centers[0])
                spatial.push_back({{cx, cy}, radius});
    }
    std::vector<TemporalBump> times;
    if (temporal > 0 && horizon > 0.0) {
        const double r = horizon / (temporal + 1);
        for (int m = 0; m < temporal; ++m)
            times.push_back({(m + 1) * r, r});
    }
    return TestFunctionSet(std::move(spatial), std::move(times));
}

std::vector<double> TestFunctionSet::sample(std::size_t k, const Grid& grid) const
{
    const auto& b = spatial_.at(k);
    std::vector<double> v(grid.cell_count());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = b.value(grid.cell_center(i), grid.dim());
    return v;
}

double TestFunctionSet::closure_margin(const Grid& grid) const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : spatial_)
        for (int a = 0; a < grid.dim(); ++a) {
            const double h = grid.spacing(a);
            m = std::min(m, (b.center[a] - b.radius - grid.extent(a).lo) / h);
            m = std::min(m, (grid.extent(a).hi - b.center[a] - b.radius) / h);
        }
    return m;
}

void TestFunctionSet::validate(const Grid& grid, double horizon) const
{
    if (spatial_.empty())
        throw std::invalid_argument("test function set has no spatial bumps");
    if (closure_margin(grid) < 2.0 - 1e-9)
        throw std::invalid_argument("test function support within two cells of the boundary");
    for (const auto& z : temporal_)
        if (z.center - z.radius < -1e-12 || z.center + z.radius > horizon + 1e-12)
            throw std::invalid_argument("temporal test support leaves (0, T)");
}

double sigma_weight(double t, double gamma, double alpha, double r_phi)
{
    if (!(t > 0.0))
        throw std::invalid_argument("sigma_weight requires t > 0");
    if (!(r_phi > 0.0))
        throw std::invalid_argument("sigma_weight requires r_phi > 0");
    const double a = r_phi * t / std::pow(gamma, alpha - 1.0);
    // e^-a / (1 - e^-a) = 1 / expm1(a)
    return 1.0 / std::expm1(a);
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& v)
{
    if (t.size() != v.size())
        throw std::invalid_argument("trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t n = 1; n < t.size(); ++n)
        s += 0.5 * (t[n] - t[n - 1]) * (v[n] + v[n - 1]);
    return s;
}

namespace {

double relative_min(const std::vector<double>& slack, double rhs)
{
    double m = std::numeric_limits<double>::infinity();
    for (double s : slack) {
        if (rhs > 0.0)
            m = std::min(m, s / rhs);
        else
            m = std::min(m, s == 0.0 ? 0.0 : (s > 0.0 ? std::numeric_limits<double>::infinity() : -1.0));
    }
    return slack.empty() ? 0.0 : m;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1)
        return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double laplacian(const std::vector<double>& p, const Grid& grid, std::size_t cell)
{
    const auto ij = grid.ijk(cell);
    double lap = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
        const double h = grid.spacing(a);
        const std::size_t lo = a == 0 ? grid.index(ij[0] - 1, ij[1]) : grid.index(ij[0], ij[1] - 1);
        const std::size_t hi = a == 0 ? grid.index(ij[0] + 1, ij[1]) : grid.index(ij[0], ij[1] + 1);
        lap += (p[hi] - 2.0 * p[cell] + p[lo]) / (h * h);
    }
    return lap;
}

}  // namespace

double L1BoundSlack::min_relative_u() const
{
    return relative_min(slack_u, rhs_u);
}

double L1BoundSlack::min_relative_p() const
{
    return relative_min(slack_p, rhs_p);
}

L1BoundSlack l1_bound_check(const Trajectory& traj, const Grid& grid, const Model& model, double flux_l1,
                            double horizon)
{
    L1BoundSlack out;
    if (traj.snapshots.empty())
        return out;
    const double gamma = model.stiff.gamma;
    const double growth = std::exp(model.constitutive.phi()(0.0) * horizon * model.stiff.reaction_scale());
    out.rhs_u = growth * (field_l1(traj.snapshots.front().u, grid) + 2.0 * flux_l1);
    out.rhs_p = std::pow(model.p_max(), (gamma - 1.0) / gamma) * out.rhs_u;
    for (const auto& s : traj.snapshots) {
        out.slack_u.push_back(out.rhs_u - field_l1(s.u, grid));
        out.slack_p.push_back(out.rhs_p - field_l1(pressure_field(s.u, gamma), grid));
    }
    return out;
}

MarginResult benilan_aronson_residual(const State& state, const Grid& grid, const Model& model, double r_phi)
{
    const double gamma = model.stiff.gamma;
    const double scale = model.stiff.reaction_scale();
    const double sigma = sigma_weight(state.time, gamma, model.stiff.alpha, r_phi);
    const auto p = pressure_field(state.u, gamma);
    const auto& phi = model.constitutive.phi();
    MarginResult best{std::numeric_limits<double>::infinity(), 0, state.time};
    for (std::size_t i = 0; i < state.u.size(); ++i) {
        if (!grid.is_interior_cell(i))
            continue;
        const double u = state.u[i];
        const double m = model.constitutive.theta(u) * laplacian(p, grid, i) + scale * u * phi(p[i]) +
                         r_phi * scale * u * sigma;
        if (m < best.margin) {
            best.margin = m;
            best.cell = i;
        }
    }
    if (!std::isfinite(best.margin))
        best.margin = 0.0;
    return best;
}

namespace {

template <class Transform>
MarginResult pair_margin(const State& s0, const State& s1, double weight, Transform field)
{
    const double dt = s1.time - s0.time;
    if (!(dt > 0.0))
        throw std::invalid_argument("monotonicity margin needs increasing snapshot times");
    MarginResult best{std::numeric_limits<double>::infinity(), 0, s1.time};
    for (std::size_t i = 0; i < s1.u.size(); ++i) {
        const double a = field(s0.u[i]);
        const double b = field(s1.u[i]);
        const double m = (b - a) / dt + weight * b;
        if (m < best.margin) {
            best.margin = m;
            best.cell = i;
        }
    }
    return best;
}

template <class PairFn>
MarginResult trajectory_margin(const Trajectory& traj, double t_floor, PairFn fn)
{
    MarginResult best{std::numeric_limits<double>::infinity(), 0, 0.0};
    for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
        if (traj.snapshots[n].time < t_floor || traj.snapshots[n].time <= 0.0)
            continue;
        const auto m = fn(traj.snapshots[n - 1], traj.snapshots[n]);
        if (m.margin < best.margin)
            best = m;
    }
    if (!std::isfinite(best.margin))
        best.margin = 0.0;
    return best;
}

}  // namespace

MarginResult pressure_monotonicity_margin(const State& s0, const State& s1, const Model& model, double r_phi)
{
    const double gamma = model.stiff.gamma;
    const double w = r_phi / std::pow(gamma, model.stiff.alpha - 1.0) *
                     sigma_weight(s1.time, gamma, model.stiff.alpha, r_phi);
    return pair_margin(s0, s1, w, [gamma](double u) { return stiff_pressure(u, gamma); });
}

MarginResult density_monotonicity_margin(const State& s0, const State& s1, const Model& model, double r_phi)
{
    const double w = r_phi * model.stiff.reaction_scale() *
                     sigma_weight(s1.time, model.stiff.gamma, model.stiff.alpha, r_phi);
    return pair_margin(s0, s1, w, [](double u) { return u; });
}

MarginResult pressure_monotonicity_margin(const Trajectory& traj, const Model& model, double r_phi, double t_floor)
{
    return trajectory_margin(traj, t_floor, [&](const State& a, const State& b) {
        return pressure_monotonicity_margin(a, b, model, r_phi);
    });
}

MarginResult density_monotonicity_margin(const Trajectory& traj, const Model& model, double r_phi, double t_floor)
{
    return trajectory_margin(traj, t_floor, [&](const State& a, const State& b) {
        return density_monotonicity_margin(a, b, model, r_phi);
    });
}

double graph_residual(const Trajectory& traj, const Grid& grid, double gamma)
{
    std::vector<double> t, v;
    std::vector<double> terms(grid.cell_count());
    for (const auto& s : traj.snapshots) {
        for (std::size_t i = 0; i < s.u.size(); ++i)
            terms[i] = stiff_pressure(s.u[i], gamma) * (1.0 - s.u[i]) * grid.cell_volume();
        t.push_back(s.time);
        v.push_back(compensated_sum(terms));
    }
    return trapezoid(t, v);
}

double incompressibility_functional(const std::vector<double>& p, const std::vector<double>& u,
                                    const std::vector<double>& xi, const Grid& grid, const Constitutive& c,
                                    double* scale)
{
    std::vector<double> terms;
    terms.reserve(grid.interior_faces().size());
    double abs_sum = 0.0;
    for (const auto& f : grid.interior_faces()) {
        const double dxi = xi[f.right] - xi[f.left];
        if (dxi == 0.0)
            continue;
        const double u_face = 0.5 * (u[f.left] + u[f.right]);
        const double term = (p[f.right] - p[f.left]) / c.h(u_face) * dxi / f.distance * f.area;
        terms.push_back(term);
        abs_sum += std::abs(term);
    }
    if (scale)
        *scale = abs_sum;
    return compensated_sum(terms);
}

double incompressibility_residual(const Trajectory& traj, const Grid& grid, const Model& model,
                                  const TestFunctionSet& tests)
{
    std::vector<std::vector<double>> xi;
    for (std::size_t k = 0; k < tests.spatial().size(); ++k)
        xi.push_back(tests.sample(k, grid));
    std::vector<std::vector<double>> per_test(xi.size());
    for (const auto& s : traj.snapshots) {
        if (s.time <= 0.0)
            continue;
        const auto p = pressure_field(s.u, model.stiff.gamma);
        for (std::size_t k = 0; k < xi.size(); ++k)
            per_test[k].push_back(std::abs(incompressibility_functional(p, s.u, xi[k], grid, model.constitutive)));
    }
    double worst = 0.0;
    for (auto& v : per_test)
        worst = std::max(worst, median(std::move(v)));
    return worst;
}

double weak_form_residual(const Trajectory& traj, const Grid& grid, const Model& model, const BoundaryFlux& flux,
                          const TestFunctionSet& tests)
{
    const double gamma = model.stiff.gamma;
    const double vol = grid.cell_volume();
    const auto& phi = model.constitutive.phi();
    const std::size_t nk = tests.spatial().size();
    const std::size_t ns = traj.snapshots.size();

    // Per snapshot and spatial test: mass pairing, flux pairing, boundary pairing, source pairing.
    std::vector<std::vector<double>> mass(nk, std::vector<double>(ns)), diff(nk, std::vector<double>(ns)),
        bnd(nk, std::vector<double>(ns)), src(nk, std::vector<double>(ns));
    std::vector<double> times(ns);
    std::vector<std::vector<double>> xi;
    std::vector<std::vector<double>> xi_b;
    for (std::size_t k = 0; k < nk; ++k) {
        xi.push_back(tests.sample(k, grid));
        std::vector<double> vb;
        for (const auto& b : grid.boundary_faces())
            vb.push_back(tests.spatial()[k].value(b.centroid, grid.dim()));
        xi_b.push_back(std::move(vb));
    }

    std::vector<double> terms;
    for (std::size_t n = 0; n < ns; ++n) {
        const auto& s = traj.snapshots[n];
        times[n] = s.time;
        std::vector<double> pot(s.u.size());
        std::vector<double> reac(s.u.size());
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            pot[i] = psi(s.u[i], gamma, model.constitutive);
            reac[i] = model.stiff.reaction_scale() * s.u[i] * phi(stiff_pressure(s.u[i], gamma));
        }
        for (std::size_t k = 0; k < nk; ++k) {
            const auto& x = xi[k];
            terms.assign(s.u.size(), 0.0);
            for (std::size_t i = 0; i < s.u.size(); ++i)
                terms[i] = s.u[i] * x[i] * vol;
            mass[k][n] = compensated_sum(terms);
            for (std::size_t i = 0; i < s.u.size(); ++i)
                terms[i] = reac[i] * x[i] * vol;
            src[k][n] = compensated_sum(terms);
            terms.clear();
            for (const auto& f : grid.interior_faces())
                terms.push_back((pot[f.right] - pot[f.left]) * (x[f.right] - x[f.left]) / f.distance * f.area);
            diff[k][n] = compensated_sum(terms);
            terms.clear();
            const auto& bf = grid.boundary_faces();
            for (std::size_t b = 0; b < bf.size(); ++b)
                if (xi_b[k][b] != 0.0 && flux)
                    terms.push_back(flux(s.time, bf[b]) * xi_b[k][b] * bf[b].area);
            bnd[k][n] = compensated_sum(terms);
        }
    }

    double worst = 0.0;
    std::vector<double> a(ns), b(ns);
    for (const auto& z : tests.temporal()) {
        for (std::size_t k = 0; k < nk; ++k) {
            for (std::size_t n = 0; n < ns; ++n) {
                a[n] = z.derivative(times[n]) * mass[k][n];
                b[n] = z.value(times[n]) * (-diff[k][n] + bnd[k][n] + src[k][n]);
            }
            worst = std::max(worst, std::abs(trapezoid(times, a) + trapezoid(times, b)));
        }
    }
    return worst;
}

SpaceTimeNorms bv_and_l2_norms(const Trajectory& traj, const Grid& grid, double gamma)
{
    SpaceTimeNorms out;
    const auto& snaps = traj.snapshots;
    if (snaps.empty())
        return out;
    std::vector<double> t, gu, gp, gp2;
    std::vector<std::vector<double>> p;
    for (const auto& s : snaps) {
        t.push_back(s.time);
        p.push_back(pressure_field(s.u, gamma));
        gu.push_back(gradient_l1(s.u, grid));
        gp.push_back(gradient_l1(p.back(), grid));
        gp2.push_back(gradient_l2_squared(p.back(), grid));
    }
    out.l1_grad_u = trapezoid(t, gu);
    out.l1_grad_p = trapezoid(t, gp);
    out.l2_grad_p_sq = trapezoid(t, gp2);

    // Piecewise-linear interpolant in time restricted to (1/gamma, T).
    const double start = 1.0 / gamma;
    std::vector<double> diff(grid.cell_count());
    for (std::size_t n = 1; n < snaps.size(); ++n) {
        const double t0 = snaps[n - 1].time;
        const double t1 = snaps[n].time;
        const double overlap = t1 - std::max(t0, start);
        if (overlap <= 0.0 || t1 <= t0)
            continue;
        const double frac = overlap / (t1 - t0);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = snaps[n].u[i] - snaps[n - 1].u[i];
        out.l1_dt_u += frac * field_l1(diff, grid);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = p[n][i] - p[n - 1][i];
        out.l1_dt_p += frac * field_l1(diff, grid);
    }
    return out;
}

std::vector<double> initial_trace_check(const Trajectory& traj, const Grid& grid, const std::vector<double>& u0)
{
    std::vector<double> out;
    std::vector<double> diff(u0.size());
    for (const auto& s : traj.snapshots) {
        for (std::size_t i = 0; i < u0.size(); ++i)
            diff[i] = s.u[i] - u0[i];
        out.push_back(field_l1(diff, grid));
    }
    return out;
}

DiagnosticsReport compute_diagnostics(const Trajectory& traj, const Grid& grid, const Model& model,
                                      const BoundaryFlux& flux, double flux_l1, double horizon,
                                      const TestFunctionSet& tests, const DiagnosticsOptions& options)
{
    DiagnosticsReport rep;
    if (traj.snapshots.empty())
        throw std::invalid_argument("diagnostics need at least one snapshot");
    const double gamma = model.stiff.gamma;
    rep.r_phi = model.constitutive.phi().kind == SourceKind::Disabled ? 0.0 : r_phi(model.constitutive);
    rep.t_floor = options.t_floor_fraction * horizon;
    rep.tol_monotonicity = 1e-8 * model.p_max();

    rep.min_u = std::numeric_limits<double>::infinity();
    rep.max_u = -std::numeric_limits<double>::infinity();
    rep.max_p = -std::numeric_limits<double>::infinity();
    rep.benilan_aronson.margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < traj.snapshots.size(); ++n) {
        const auto& s = traj.snapshots[n];
        const auto p = pressure_field(s.u, gamma);
        SeriesRow row;
        row.time = s.time;
        row.l1_u = field_l1(s.u, grid);
        row.l1_p = field_l1(p, grid);
        row.bv_u = gradient_l1(s.u, grid);
        row.bv_p = gradient_l1(p, grid);
        row.l2_grad_p = std::sqrt(gradient_l2_squared(p, grid));
        row.min_u = *std::min_element(s.u.begin(), s.u.end());
        row.max_u = *std::max_element(s.u.begin(), s.u.end());
        row.max_p = *std::max_element(p.begin(), p.end());
        if (rep.r_phi > 0.0 && s.time > 0.0) {
            const auto ba = benilan_aronson_residual(s, grid, model, rep.r_phi);
            row.ba_margin = ba.margin;
            if (s.time >= rep.t_floor && ba.margin < rep.benilan_aronson.margin)
                rep.benilan_aronson = ba;
            if (n > 0)
                row.mono_margin = pressure_monotonicity_margin(traj.snapshots[n - 1], s, model, rep.r_phi).margin;
        }
        rep.min_u = std::min(rep.min_u, row.min_u);
        rep.max_u = std::max(rep.max_u, row.max_u);
        rep.max_p = std::max(rep.max_p, row.max_p);
        rep.series.push_back(row);
    }
    if (!std::isfinite(rep.benilan_aronson.margin))
        rep.benilan_aronson = MarginResult{};
    if (rep.r_phi > 0.0) {
        rep.mono_p = pressure_monotonicity_margin(traj, model, rep.r_phi, rep.t_floor);
        rep.mono_u = density_monotonicity_margin(traj, model, rep.r_phi, rep.t_floor);
    }

    rep.initial_trace = initial_trace_check(traj, grid, traj.snapshots.front().u);
    rep.norms = bv_and_l2_norms(traj, grid, gamma);
    rep.graph = graph_residual(traj, grid, gamma);
    rep.incompressibility = incompressibility_residual(traj, grid, model, tests);
    rep.weak_form = weak_form_residual(traj, grid, model, flux, tests);
    rep.l1 = l1_bound_check(traj, grid, model, flux_l1, horizon);
    return rep;
}

}  // namespace hsbl
