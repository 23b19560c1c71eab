#include "hsbl/oracle.hpp"

#include "hsbl/diagnostics.hpp"
#include "hsbl/solver.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hsbl {

double uniform_ode(double u0, double gamma, double alpha, double p_max, double t)
{
    return uniform_ode(u0, StiffParams::make(gamma, alpha), SourceFunction{SourceKind::Linear, 1.0, p_max}, t);
}

double uniform_ode(double u0, const StiffParams& stiff, const SourceFunction& phi, double t)
{
    if (!(u0 > 0.0))
        throw std::invalid_argument("uniform_ode needs u0 > 0");
    if (!(t >= 0.0))
        throw std::invalid_argument("uniform_ode needs t >= 0");
    if (phi.kind != SourceKind::Linear)
        return uniform_ode_integrated(u0, stiff, phi, t);
    const double g = stiff.gamma;
    const double rate = phi.scale * phi.p_max * std::pow(g, 1.0 - stiff.alpha);
    const double w = 1.0 / phi.p_max + (std::pow(u0, -g) - 1.0 / phi.p_max) * std::exp(-rate * t);
    return std::pow(w, -1.0 / g);
}

double uniform_ode_integrated(double u0, const StiffParams& stiff, const SourceFunction& phi, double t, double tol)
{
    using namespace boost::numeric::odeint;
    if (!(u0 > 0.0))
        throw std::invalid_argument("uniform_ode needs u0 > 0");
    if (!(t >= 0.0))
        throw std::invalid_argument("uniform_ode needs t >= 0");
    using StateType = std::vector<double>;
    StateType x{u0};
    const double scale = stiff.reaction_scale();
    auto rhs = [&](const StateType& y, StateType& dy, double) {
        dy[0] = scale * y[0] * phi(stiff_pressure(y[0], stiff.gamma));
    };
    if (t == 0.0)
        return u0;
    integrate_adaptive(make_controlled(tol, tol, runge_kutta_dopri5<StateType>()), rhs, x, 0.0, t,
                       std::min(1e-3, t));
    return x[0];
}

double ricatti_w(double t, double gamma, double alpha, double r_phi)
{
    if (!(t > 0.0))
        throw std::invalid_argument("ricatti_w requires t > 0");
    return -r_phi / std::pow(gamma, alpha) * sigma_weight(t, gamma, alpha, r_phi);
}

double Barenblatt::beta() const
{
    return 1.0 / (dim * (m - 1.0) + 2.0);
}

double Barenblatt::k() const
{
    return (m - 1.0) * beta() / (2.0 * m);
}

double Barenblatt::value(double t, const Point& x) const
{
    if (!(t > 0.0))
        throw std::invalid_argument("Barenblatt profile needs t > 0");
    const double b = beta();
    double r2 = x[0] * x[0];
    if (dim == 2)
        r2 += x[1] * x[1];
    const double core = mass_constant - k() * r2 * std::pow(t, -2.0 * b);
    if (core <= 0.0)
        return 0.0;
    return std::pow(t, -dim * b) * std::pow(core, 1.0 / (m - 1.0));
}

double Barenblatt::support_radius(double t) const
{
    return std::sqrt(mass_constant / k()) * std::pow(t, beta());
}

double Barenblatt::mass(double t) const
{
    using boost::math::quadrature::gauss_kronrod;
    const double r = support_radius(t);
    if (dim == 1)
        return gauss_kronrod<double, 61>::integrate([&](double x) { return value(t, {x, 0.0}); }, -r, r, 15, 1e-14);
    // Radial: 2 pi int_0^R u(r) r dr.
    return 2.0 * M_PI *
           gauss_kronrod<double, 61>::integrate([&](double s) { return value(t, {s, 0.0}) * s; }, 0.0, r, 15,
                                                1e-14);
}

std::string to_string(OracleKind k)
{
    switch (k) {
    case OracleKind::UniformOde:
        return "uniform-ode";
    case OracleKind::Ricatti:
        return "ricatti";
    case OracleKind::Barenblatt:
        return "barenblatt";
    }
    return "unknown";
}

OracleCase uniform_case(double u0, const StiffParams& stiff, const SourceFunction& phi)
{
    return {OracleKind::UniformOde, "uniform-ode",
            [=](double t, const Point&) { return uniform_ode(u0, stiff, phi, t); }};
}

OracleCase ricatti_case(double gamma, double alpha, double r_phi)
{
    return {OracleKind::Ricatti, "ricatti", [=](double t, const Point&) { return ricatti_w(t, gamma, alpha, r_phi); }};
}

OracleCase barenblatt_case(const Barenblatt& b)
{
    return {OracleKind::Barenblatt, "barenblatt", [=](double t, const Point& x) { return b.value(t, x); }};
}

namespace {

template <class F>
double five_point(F f, double x, double h)
{
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

template <class F>
double five_point_second(F f, double x, double h)
{
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

OracleCheck check(const std::string& name, double value, double tol, const std::string& detail = "")
{
    return OracleCheck{name, value, tol, value <= tol, detail};
}

}  // namespace

std::vector<OracleCheck> verify_uniform_ode(double u0, const StiffParams& stiff, const SourceFunction& phi,
                                            const std::vector<double>& times)
{
    std::vector<OracleCheck> out;
    double subst = 0.0;
    double agree = 0.0;
    const double scale = stiff.reaction_scale();
    for (double t : times) {
        auto f = [&](double s) { return uniform_ode(u0, stiff, phi, s); };
        const double h = std::min(1e-3, 0.25 * t);
        const double du = five_point(f, t, h);
        const double u = f(t);
        const double rhs = scale * u * phi(stiff_pressure(u, stiff.gamma));
        subst = std::max(subst, std::abs(du - rhs) / std::max(std::abs(rhs), 1e-12 * std::abs(u) + 1e-300));
        agree = std::max(agree, std::abs(u - uniform_ode_integrated(u0, stiff, phi, t)) / std::abs(u));
    }
    out.push_back(check("uniform-ode substitution", subst, 1e-8, "relative, 5-point time differences"));
    out.push_back(check("uniform-ode vs integrator", agree, 1e-8, "relative, Dormand-Prince at 1e-12"));
    return out;
}

std::vector<OracleCheck> verify_ricatti(double gamma, double alpha, double r_phi, const std::vector<double>& times)
{
    double worst = 0.0;
    const double a = r_phi / std::pow(gamma, alpha - 1.0);
    for (double t : times) {
        auto w = [&](double s) { return ricatti_w(s, gamma, alpha, r_phi); };
        const double h = 1e-3 * t;
        const double dw = five_point(w, t, h);
        const double W = w(t);
        const double rhs = gamma * W * W - a * W;
        worst = std::max(worst, std::abs(dw - rhs) / std::abs(rhs));
    }
    return {check("ricatti substitution", worst, 1e-8, "relative, 5-point time differences")};
}

std::vector<OracleCheck> verify_barenblatt(const Barenblatt& b, double t0, double t1)
{
    std::vector<OracleCheck> out;
    const double m0 = b.mass(t0);
    const double m1 = b.mass(t1);
    out.push_back(check("barenblatt mass drift", std::abs(m1 - m0) / m0, 1e-6, "relative, adaptive quadrature"));

    // u_t - Lap(u^m) at points well inside the support, relative to max |u_t|.
    double worst = 0.0;
    double scale = 0.0;
    const double h = 1e-3;
    for (double t : {t0, 0.5 * (t0 + t1), t1}) {
        const double r = b.support_radius(t);
        for (double frac : {0.0, 0.2, 0.4, 0.6}) {
            const Point x{frac * r, b.dim == 2 ? 0.3 * frac * r : 0.0};
            const double ut = five_point([&](double s) { return b.value(s, x); }, t, h * t);
            double lap = five_point_second([&](double s) { return std::pow(b.value(t, {s, x[1]}), b.m); }, x[0], h);
            if (b.dim == 2)
                lap += five_point_second([&](double s) { return std::pow(b.value(t, {x[0], s}), b.m); }, x[1], h);
            worst = std::max(worst, std::abs(ut - lap));
            scale = std::max(scale, std::abs(ut));
        }
    }
    out.push_back(check("barenblatt PDE residual", worst / scale, 1e-6,
                        "relative to max |u_t|, 5-point differences, 60% of the support radius"));
    return out;
}

std::vector<OracleCheck> self_verify_oracles()
{
    std::vector<OracleCheck> out;
    const std::vector<double> times{0.1, 0.5, 1.0, 2.5, 5.0};
    for (double g : {2.0, 8.0})
        for (auto& c : verify_uniform_ode(0.5, StiffParams::make(g, 2.0), SourceFunction{}, times))
            out.push_back(std::move(c));
    for (auto& c : verify_uniform_ode(0.5, StiffParams::make(4.0, 2.0),
                                      SourceFunction{SourceKind::Exponential, 1.0, 1.0}, times)) {
        c.name += " (exponential)";
        out.push_back(std::move(c));
    }
    for (auto& c : verify_ricatti(2.0, 2.0, 1.0, times))
        out.push_back(std::move(c));
    for (auto& c : verify_ricatti(16.0, 1.5, 0.7, times))
        out.push_back(std::move(c));
    for (int d : {1, 2})
        for (auto& c : verify_barenblatt(Barenblatt{2.0, d, 0.1875}, 0.5, 1.0)) {
            c.name += d == 1 ? " (1D)" : " (2D)";
            out.push_back(std::move(c));
        }
    return out;
}

UniformRunResult uniform_solver_run(double u0, double gamma, double alpha, double horizon, double dt)
{
    const Interval iv{0.0, 1.0};
    const int n = 3;
    const Grid grid = Grid::build(1, std::span(&iv, 1), std::span(&n, 1));
    const SourceFunction phi{};
    Model model{Constitutive::make(MobilityPreset::Linear, phi), StiffParams::make(gamma, alpha),
                Regularization::Linear};
    SolverConfig cfg;
    cfg.dt_initial = cfg.dt_min = cfg.dt_max = dt;
    const Solver solver(grid, model, nullptr, cfg);
    const auto traj = solver.run(State{0.0, std::vector<double>(n, u0)}, horizon);
    UniformRunResult r;
    r.exact = uniform_ode(u0, gamma, alpha, phi.p_max, horizon);
    for (double v : traj.snapshots.back().u) {
        r.error = std::max(r.error, std::abs(v - r.exact));
        r.computed = v;
    }
    return r;
}

BarenblattRunResult barenblatt_solver_run(const Barenblatt& b, double t0, double t1, double half_width,
                                          const std::vector<int>& cells, double dt_factor)
{
    if (b.dim != 1)
        throw std::invalid_argument("Barenblatt solver run is one-dimensional");
    BarenblattRunResult out;
    const Interval iv{-half_width, half_width};
    for (int n : cells) {
        const Grid grid = Grid::build(1, std::span(&iv, 1), std::span(&n, 1));
        const SourceFunction off{SourceKind::Disabled, 1.0, 1.0};
        Model model{Constitutive::make(MobilityPreset::ThetaOne, off, 0.1, true), StiffParams::make(b.m, 2.0),
                    Regularization::None};
        const double h = grid.spacing(0);
        SolverConfig cfg;
        cfg.dt_max = dt_factor * h;
        cfg.dt_initial = std::min(cfg.dt_max, 1e-4);
        cfg.dt_min = 1e-12;
        const Solver solver(grid, model, nullptr, cfg);
        State s{t0, std::vector<double>(grid.cell_count())};
        for (std::size_t i = 0; i < s.u.size(); ++i)
            s.u[i] = b.value(t0, grid.cell_center(i));
        const auto traj = solver.run(s, t1);
        std::vector<double> diff(grid.cell_count());
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = traj.snapshots.back().u[i] - b.value(t1, grid.cell_center(i));
        out.h.push_back(h);
        out.error.push_back(field_l1(diff, grid));
    }
    for (std::size_t k = 1; k < out.error.size(); ++k)
        out.order.push_back(std::log(out.error[k - 1] / out.error[k]) / std::log(out.h[k - 1] / out.h[k]));
    return out;
}

std::vector<OracleCheck> solver_oracle_checks()
{
    std::vector<OracleCheck> out;
    // Backward Euler on du/dt = u(1 - u^2)/4 has global error close to 0.017 dt
    // at T = 5, so dt = 2.5e-5 sits near 4e-7.
    const auto uni = uniform_solver_run(0.5, 2.0, 2.0, 5.0, 2.5e-5);
    out.push_back(check("uniform run vs closed form", uni.error, 1e-6, "L-infinity at T = 5, dt = 2.5e-5"));

    const Barenblatt b{2.0, 1, 0.1875};
    const auto br = barenblatt_solver_run(b, 0.5, 1.0, 2.0, {400, 800, 1600}, 0.1);
    for (std::size_t k = 0; k < br.error.size(); ++k) {
        std::ostringstream os;
        os << "L1 error at t = 1, h = " << br.h[k] << " (bound 1.0 * h)";
        out.push_back(check("barenblatt error h=" + std::to_string(br.h[k]), br.error[k], 1.0 * br.h[k], os.str()));
    }
    for (std::size_t k = 0; k < br.order.size(); ++k) {
        OracleCheck c{"barenblatt order " + std::to_string(k + 1), br.order[k], 0.9, br.order[k] >= 0.9,
                      "observed L1 order, must be >= 0.9"};
        out.push_back(c);
    }
    return out;
}

}  // namespace hsbl
