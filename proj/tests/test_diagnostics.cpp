#include "hsbl/diagnostics.hpp"

#include <doctest.h>

#include <Eigen/Sparse>

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

Trajectory constant_traj(std::size_t cells, double value, std::vector<double> times)
{
    Trajectory t;
    for (double s : times)
        t.snapshots.push_back(State{s, std::vector<double>(cells, value)});
    return t;
}

const BoundaryFlux zero_flux = [](double, const BoundaryFace&) { return 0.0; };

}  // namespace

TEST_CASE("quintic bump endpoints")
{
    CHECK(quintic_bump(0.0) == 1.0);
    CHECK(quintic_bump(1.0) == 0.0);
    CHECK(quintic_bump(1.5) == 0.0);
    CHECK(quintic_bump(0.5) == doctest::Approx(0.5));
    CHECK(quintic_bump_derivative(0.0) == 0.0);
    CHECK(quintic_bump_derivative(1.0) == 0.0);
    const double h = 1e-6;
    CHECK(quintic_bump_derivative(0.3) ==
          doctest::Approx((quintic_bump(0.3 + h) - quintic_bump(0.3 - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("sigma weight examples")
{
    // r t / gamma^(alpha-1) = ln 2
    CHECK(sigma_weight(2.0 * std::log(2.0), 2.0, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    const double e = std::exp(-0.5);
    CHECK(sigma_weight(1.0, 2.0, 2.0, 1.0) == doctest::Approx(e / (1.0 - e)).epsilon(1e-14));
    CHECK(sigma_weight(1.0, 2.0, 2.0, 1.0) == doctest::Approx(1.5415).epsilon(1e-4));
    const double far = sigma_weight(200.0, 2.0, 2.0, 1.0);
    CHECK(far > 0.0);
    CHECK(far < 1e-40);
    CHECK_THROWS(sigma_weight(0.0, 2.0, 2.0, 1.0));
    CHECK_THROWS(sigma_weight(1.0, 2.0, 2.0, 0.0));
}

TEST_CASE("L1 bound examples")
{
    const Grid g = line(10);
    const Model m = linear_model(2.0);
    const auto zero = l1_bound_check(constant_traj(10, 0.0, {0.0, 1.0}), g, m, 0.0, 1.0);
    CHECK(zero.rhs_u == 0.0);
    CHECK(zero.slack_u.back() == 0.0);
    CHECK(zero.min_relative_u() == 0.0);

    const auto b = l1_bound_check(constant_traj(10, 0.3, {0.0, 1.0}), g, m, 0.0, 1.0);
    CHECK(b.rhs_u == doctest::Approx(std::exp(0.25) * 0.3).epsilon(1e-14));
    CHECK(b.rhs_u == doctest::Approx(0.38520).epsilon(1e-5));

    const double eq = std::pow(1.4, 1.0 / 2.0);
    const auto e = l1_bound_check(constant_traj(10, eq, {0.0, 0.5, 1.0}), g, linear_model(2.0, 2.0, 1.4), 0.0, 1.0);
    CHECK(e.min_relative_u() >= 0.0);
    CHECK(e.min_relative_p() >= 0.0);
}

TEST_CASE("Benilan-Aronson margin on constant states")
{
    const Grid g = line(20);
    const Model m = linear_model(8.0);
    const auto z = benilan_aronson_residual(State{0.5, std::vector<double>(20, 0.0)}, g, m, 1.0);
    CHECK(z.margin == 0.0);
    for (double u : {0.3, 0.9, 1.0}) {
        const auto r = benilan_aronson_residual(State{0.5, std::vector<double>(20, u)}, g, m, 1.0);
        CHECK(r.margin >= 0.0);
    }
}

TEST_CASE("monotonicity margins")
{
    const Model m = linear_model(4.0, 2.0, 1.2);
    const double eq = std::pow(1.2, 0.25);
    const auto t = constant_traj(8, eq, {0.0, 0.1, 0.2, 0.5});
    const auto mp = pressure_monotonicity_margin(t, m, 1.2, 0.05);
    CHECK(mp.margin >= 0.0);
    const double sig = sigma_weight(0.5, 4.0, 2.0, 1.2);
    const auto last = pressure_monotonicity_margin(t.snapshots[2], t.snapshots[3], m, 1.2);
    CHECK(last.margin == doctest::Approx(1.2 / 4.0 * sig * 1.2).epsilon(1e-12));

    const auto z = constant_traj(8, 0.0, {0.0, 0.1, 0.2});
    CHECK(pressure_monotonicity_margin(z, m, 1.2, 0.05).margin == 0.0);
    CHECK(density_monotonicity_margin(z, m, 1.2, 0.05).margin == 0.0);
}

TEST_CASE("graph residual examples")
{
    const Grid g = line(10);
    CHECK(graph_residual(constant_traj(10, 1.0, {0.0, 0.5, 1.0}), g, 10.0) == 0.0);
    CHECK(graph_residual(constant_traj(10, 0.0, {0.0, 0.5, 1.0}), g, 10.0) == 0.0);
    CHECK(graph_residual(constant_traj(10, 0.9, {0.0, 0.5, 1.0}), g, 10.0) ==
          doctest::Approx(std::pow(0.9, 10) * 0.1).epsilon(1e-13));
}

TEST_CASE("incompressibility functional vanishes for constant pressure")
{
    const Grid g = GridSpec{2, {Interval{0, 1}, Interval{0, 1}}, {20, 20}}.build();
    const auto tests = TestFunctionSet::lattice(g, 0.1, 0.1, 1.0, 3);
    const auto t = constant_traj(g.cell_count(), 0.95, {0.0, 0.5, 1.0});
    CHECK(incompressibility_residual(t, g, linear_model(8.0), tests) == 0.0);
}

TEST_CASE("incompressibility functional on a discretely harmonic pressure")
{
    // Five-point Laplace with Dirichlet boundary rows, then h = 1 through the theta-one bundle.
    const int n = 24;
    const Grid g = GridSpec{2, {Interval{0, 1}, Interval{0, 1}}, {n, n}}.build();
    const std::size_t N = g.cell_count();
    Eigen::SparseMatrix<double> A(N, N);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t c = 0; c < N; ++c) {
        const auto ij = g.ijk(c);
        if (ij[0] == 0 || ij[1] == 0 || ij[0] == n - 1 || ij[1] == n - 1) {
            trip.emplace_back(c, c, 1.0);
            const auto x = g.cell_center(c);
            b[c] = 1.0 + x[0] * x[0] - 0.5 * x[1];
            continue;
        }
        trip.emplace_back(c, c, 4.0);
        trip.emplace_back(c, g.index(ij[0] - 1, ij[1]), -1.0);
        trip.emplace_back(c, g.index(ij[0] + 1, ij[1]), -1.0);
        trip.emplace_back(c, g.index(ij[0], ij[1] - 1), -1.0);
        trip.emplace_back(c, g.index(ij[0], ij[1] + 1), -1.0);
    }
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    const Eigen::VectorXd x = lu.solve(b);
    const std::vector<double> p(x.data(), x.data() + N);
    const std::vector<double> u(N, 0.5);

    const auto c1 = Constitutive::make(MobilityPreset::ThetaOne, SourceFunction{}, 0.1, true);
    const auto tests = TestFunctionSet::lattice(g, 0.1, 0.1, 1.0, 1);
    for (std::size_t k = 0; k < tests.spatial().size(); ++k) {
        double scale = 0.0;
        const double r = incompressibility_functional(p, u, tests.sample(k, g), g, c1, &scale);
        CHECK(std::abs(r) <= 1e-10 * scale);
    }
}

TEST_CASE("weak-form residual is zero for the zero and equilibrium solutions")
{
    const Grid g = line(50);
    const auto tests = TestFunctionSet::lattice(g, 0.1, 0.1, 1.0, 3);
    const Model m = linear_model(4.0);
    CHECK(weak_form_residual(constant_traj(50, 0.0, {0.0, 0.25, 0.5, 0.75, 1.0}), g, m, zero_flux, tests) == 0.0);
    CHECK(weak_form_residual(constant_traj(50, 1.0, {0.0, 0.25, 0.5, 0.75, 1.0}), g, m, zero_flux, tests) <=
          1e-14);
}

TEST_CASE("space-time norms")
{
    const Grid g = line(25);
    const auto c = bv_and_l2_norms(constant_traj(25, 0.7, {0.0, 0.5, 1.0}), g, 4.0);
    CHECK(c.l1_grad_u == 0.0);
    CHECK(c.l1_grad_p == 0.0);
    CHECK(c.l1_dt_u == 0.0);
    CHECK(c.l1_dt_p == 0.0);
    CHECK(c.l2_grad_p_sq == 0.0);

    Trajectory t;
    std::vector<double> x(25);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = g.cell_center(i)[0];
    t.snapshots = {State{0.0, x}, State{1.0, x}};
    const auto n = bv_and_l2_norms(t, g, 4.0);
    CHECK(n.l1_grad_u == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n.l1_dt_u == 0.0);
}

TEST_CASE("initial trace")
{
    const Grid g = line(10);
    for (double v : initial_trace_check(constant_traj(10, 0.0, {0.0, 0.1, 1.0}), g, std::vector<double>(10, 0.0)))
        CHECK(v == 0.0);
    for (double v : initial_trace_check(constant_traj(10, 1.0, {0.0, 0.1, 1.0}), g, std::vector<double>(10, 1.0)))
        CHECK(v == 0.0);
}

TEST_CASE("trapezoid rule is exact for linear data on uneven samples")
{
    const std::vector<double> t{0.0, 0.1, 0.15, 0.7, 1.0};
    std::vector<double> v;
    for (double s : t)
        v.push_back(3.0 * s + 1.0);
    CHECK(trapezoid(t, v) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("test-function lattice keeps supports inside")
{
    const Grid g = GridSpec{2, {Interval{0, 1}, Interval{0, 1}}, {40, 40}}.build();
    const auto tests = TestFunctionSet::lattice(g, 0.1, 0.1, 1.0, 3);
    CHECK(!tests.spatial().empty());
    CHECK(tests.temporal().size() == 3);
    CHECK(tests.closure_margin(g) >= 2.0 - 1e-9);
    CHECK_NOTHROW(tests.validate(g, 1.0));
    const Grid coarse = line(3);
    CHECK_THROWS(TestFunctionSet::lattice(coarse, 0.1, 0.1, 1.0, 3));
}

TEST_CASE("zero run gives zero diagnostics")
{
    const Grid g = line(40);
    const auto tests = TestFunctionSet::lattice(g, 0.1, 0.1, 1.0, 3);
    const auto d = compute_diagnostics(constant_traj(40, 0.0, {0.0, 0.1, 0.5, 1.0}), g, linear_model(8.0), zero_flux,
                                       0.0, 1.0, tests, DiagnosticsOptions{});
    for (const auto& r : d.series) {
        CHECK(r.l1_u == 0.0);
        CHECK(r.l1_p == 0.0);
        CHECK(r.bv_u == 0.0);
        CHECK(r.bv_p == 0.0);
        CHECK(r.l2_grad_p == 0.0);
        CHECK(r.max_u == 0.0);
        CHECK(r.ba_margin == 0.0);
        CHECK(r.mono_margin == 0.0);
    }
    CHECK(d.graph == 0.0);
    CHECK(d.weak_form == 0.0);
    CHECK(d.incompressibility == 0.0);
}
