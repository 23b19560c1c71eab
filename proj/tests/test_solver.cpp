#include "hsbl/solver.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hsbl;

namespace {

Grid line(int n)
{
    return GridSpec{1, {Interval{0, 1}, Interval{0, 1}}, {n, 1}}.build();
}

Model linear_model(double gamma, double alpha = 2.0, double p_max = 1.0)
{
    return Model{Constitutive::make(MobilityPreset::Linear, SourceFunction{SourceKind::Linear, 1.0, p_max}),
                 StiffParams::make(gamma, alpha), Regularization::Linear};
}

BoundaryFlux constant_flux(double f)
{
    return [f](double, const BoundaryFace&) { return f; };
}

SolverConfig config(std::vector<double> snaps = {})
{
    SolverConfig c;
    c.snapshot_times = std::move(snaps);
    return c;
}

/// Backward Euler for du/dt = gamma^-alpha u (p_M - u^gamma), scalar Newton.
double scalar_backward_euler(double u0, double gamma, double alpha, double dt)
{
    const double k = std::pow(gamma, -alpha);
    double u = u0;
    for (int it = 0; it < 100; ++it) {
        const double r = u - u0 - dt * k * u * (1.0 - std::pow(u, gamma));
        const double dr = 1.0 - dt * k * (1.0 - (gamma + 1.0) * std::pow(u, gamma));
        const double du = r / dr;
        u -= du;
        if (std::abs(du) < 1e-16)
            break;
    }
    return u;
}

}  // namespace

TEST_CASE("face flux examples")
{
    const Grid g = line(10);
    const Model m{Constitutive::make(MobilityPreset::ThetaOne, SourceFunction{}, 0.1, true), StiffParams::make(2, 2),
                  Regularization::Linear};
    const Solver s(g, m, constant_flux(0.0), config());

    const auto uniform = s.face_flux(State{0.0, std::vector<double>(10, 0.4)});
    for (double v : uniform.interior)
        CHECK(v == 0.0);

    std::vector<double> u(10, 0.0);
    std::fill(u.begin() + 5, u.end(), 1.0);
    const auto ff = s.face_flux(State{0.0, u});
    CHECK(ff.interior[4] == doctest::Approx(12.5).epsilon(1e-13));
    CHECK(ff.interior[3] == 0.0);

    const Grid g2 = GridSpec{2, {Interval{0, 1}, Interval{0, 1.5}}, {3, 3}}.build();
    const Solver s2(g2, m, constant_flux(0.3), config());
    const auto fb = s2.face_flux(State{0.0, std::vector<double>(9, 0.2)});
    for (std::size_t b = 0; b < g2.boundary_faces().size(); ++b)
        if (g2.boundary_faces()[b].axis == 0)
            CHECK(fb.boundary[b] == doctest::Approx(0.15).epsilon(1e-15));
}

TEST_CASE("zero and equilibrium are fixed points")
{
    const Grid g = line(30);
    const Model m = linear_model(8.0, 2.0, 1.3);
    const Solver s(g, m, constant_flux(0.0), config());
    const auto z = s.step(State{0.0, std::vector<double>(30, 0.0)}, 1e-2);
    for (double v : z.u)
        CHECK(v == 0.0);

    const double eq = std::pow(1.3, 1.0 / 8.0);
    const auto e = s.step(State{0.0, std::vector<double>(30, eq)}, 1e-2);
    for (double v : e.u)
        CHECK(v == doctest::Approx(eq).epsilon(1e-14));
}

TEST_CASE("uniform step equals the scalar backward-Euler step")
{
    const Grid g = line(5);
    const Model m = linear_model(2.0);
    const Solver s(g, m, constant_flux(0.0), config());
    const auto next = s.step(State{0.0, std::vector<double>(5, 0.5)}, 0.1);
    const double ref = scalar_backward_euler(0.5, 2.0, 2.0, 0.1);
    for (double v : next.u)
        CHECK(v == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("mass ledger balances on a front with influx and outflux")
{
    const Grid g = line(100);
    const Model m = linear_model(16.0);
    const Solver s(g, m, [](double, const BoundaryFace& f) { return f.side == Side::XLow ? 0.5 : -0.02; },
                   config({0.05}));
    std::vector<double> u(100, 0.2);
    std::fill(u.begin(), u.begin() + 30, 0.9);
    const auto traj = s.run(State{0.0, u}, 0.05);
    REQUIRE(!traj.steps.empty());
    for (const auto& st : traj.steps) {
        CHECK(std::abs(st.imbalance) <= s.config().linear_tol * std::max(1.0, st.mass_after));
        CHECK(st.final_residual <= s.config().newton_tol);
    }
    for (const auto& snap : traj.snapshots)
        CHECK(*std::min_element(snap.u.begin(), snap.u.end()) >= 0.0);
}

TEST_CASE("run lands on snapshots; zero horizon returns the initial state")
{
    const Grid g = line(20);
    const Solver s(g, linear_model(4.0), constant_flux(0.0), config({0.01, 0.02, 0.1}));
    const auto traj = s.run(State{0.0, std::vector<double>(20, 0.3)}, 0.1);
    const std::vector<double> expect{0.0, 0.01, 0.02, 0.1};
    CHECK(traj.times() == expect);

    const Solver s0(g, linear_model(4.0), constant_flux(0.0), config());
    const auto t0 = s0.run(State{0.0, std::vector<double>(20, 0.3)}, 0.0);
    CHECK(t0.snapshots.size() == 1);
    CHECK(t0.steps.empty());
}

TEST_CASE("2D run stays bounded and conserves mass without flux or source")
{
    const Grid g = GridSpec{2, {Interval{0, 1}, Interval{0, 1}}, {16, 16}}.build();
    const Model m{Constitutive::make(MobilityPreset::Linear, SourceFunction{SourceKind::Disabled, 1, 1}, 0.1, true),
                  StiffParams::make(4.0, 2.0), Regularization::Linear};
    std::vector<double> u(g.cell_count());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto c = g.cell_center(i);
        u[i] = std::max(0.0, 0.9 - 3.0 * std::hypot(c[0] - 0.5, c[1] - 0.5));
    }
    const Solver s(g, m, constant_flux(0.0), config({0.02}));
    const auto traj = s.run(State{0.0, u}, 0.02);
    const double m0 = field_l1(u, g), m1 = field_l1(traj.snapshots.back().u, g);
    CHECK(std::abs(m1 - m0) <= 1e-12);
    const auto& last = traj.snapshots.back().u;
    CHECK(*std::max_element(last.begin(), last.end()) <= 0.9);
    CHECK(*std::min_element(last.begin(), last.end()) >= 0.0);
}

TEST_CASE("solver config validation")
{
    SolverConfig c;
    c.dt_min = 1.0;
    c.dt_max = 0.1;
    CHECK_THROWS(c.validate(1.0));
    SolverConfig d;
    d.snapshot_times = {0.5, 0.2};
    CHECK_THROWS(d.validate(1.0));
    SolverConfig e;
    e.snapshot_times = {2.0};
    CHECK_THROWS(e.validate(1.0));
}

TEST_CASE("residual vanishes at the computed step")
{
    const Grid g = line(40);
    const Model m = linear_model(8.0);
    const Solver s(g, m, constant_flux(0.1), config());
    std::vector<double> u(40);
    for (int i = 0; i < 40; ++i)
        u[i] = 0.5 + 0.4 * std::sin(0.3 * i);
    const State s0{0.0, u};
    const auto s1 = s.step(s0, 1e-3);
    const auto r = s.residual(u, s1.u, 1e-3, 1e-3);
    double rmax = 0.0;
    for (double v : r)
        rmax = std::max(rmax, std::abs(v));
    CHECK(rmax <= 1e-9);
}
