/**
 * @file diagnostics.hpp
 * @brief Monitored quantities of a trajectory: norms, the explicit L1 bounds,
 * the Benilan-Aronson residual, time-monotonicity margins, the Hele-Shaw
 * graph residual, the weak incompressibility residual and the weak-form
 * residual.
 *
 * Everything here is a pure function of its inputs.  Space integrals use
 * cell-midpoint sums, gradients use two-point face differences and time
 * integrals use the trapezoidal rule over snapshots (equivalently, the
 * piecewise-linear-in-time interpolant of the snapshots).
 */
#pragma once

#include "hsbl/geometry.hpp"
#include "hsbl/model.hpp"
#include "hsbl/solver.hpp"

#include <cstddef>
#include <vector>

namespace hsbl {

/// Quintic bump b(s) = 1 - (6 s^5 - 15 s^4 + 10 s^3) on [0, 1], 0 beyond.
/// b(1) = b'(1) = b''(1) = 0 and b'(0) = b''(0) = 0.
double quintic_bump(double s);
double quintic_bump_derivative(double s);

struct SpatialBump {
    Point center{};
    double radius = 0.1;  ///< half-width of the square support

    double value(const Point& x, int dim) const;
};

struct TemporalBump {
    double center = 0.5;
    double radius = 0.25;

    double value(double t) const;
    double derivative(double t) const;
};

class TestFunctionSet {
public:
    /// Bumps of the given radius centered on a lattice of the given spacing,
    /// keeping every support at least two cells inside the domain, plus
    /// `temporal` bumps evenly covering (0, horizon).  Throws
    /// std::invalid_argument when no spatial bump fits.
    static TestFunctionSet lattice(const Grid& grid, double radius, double spacing, double horizon, int temporal);

    TestFunctionSet() = default;
    TestFunctionSet(std::vector<SpatialBump> spatial, std::vector<TemporalBump> temporal);

    const std::vector<SpatialBump>& spatial() const { return spatial_; }
    const std::vector<TemporalBump>& temporal() const { return temporal_; }

    /// Bump k sampled at cell centers.
    std::vector<double> sample(std::size_t k, const Grid& grid) const;

    /// Smallest distance, in cells, between a support and the boundary.
    double closure_margin(const Grid& grid) const;

    /// Throws std::invalid_argument when a support comes within two cells of
    /// the boundary or a temporal support leaves (0, horizon).
    void validate(const Grid& grid, double horizon) const;

private:
    std::vector<SpatialBump> spatial_;
    std::vector<TemporalBump> temporal_;
};

struct DiagnosticsOptions {
    double t_floor_fraction = 0.05;  ///< pointwise-in-time margins use t >= fraction * T
    double test_radius = 0.1;
    double test_spacing = 0.1;
    int temporal_tests = 3;
};

/// sigma(t) = e^{-r t / gamma^(alpha-1)} / (1 - e^{-r t / gamma^(alpha-1)}).
/// Throws std::invalid_argument for t <= 0 or r_phi <= 0.
double sigma_weight(double t, double gamma, double alpha, double r_phi);

/// Right-hand sides of the L1 bounds and their slack at every snapshot.
struct L1BoundSlack {
    double rhs_u = 0.0;
    double rhs_p = 0.0;
    std::vector<double> slack_u;
    std::vector<double> slack_p;

    /// min over snapshots of slack / max(rhs, tiny); 0 when rhs = 0 and slack = 0.
    double min_relative_u() const;
    double min_relative_p() const;
};

/**
 * ||u(t)||_1 <= e^{Phi(0) T / gamma^alpha} (||u0||_1 + 2 int_{Gamma_T} |f|)
 * and the same with prefactor p_M^{(gamma-1)/gamma} for ||p(t)||_1.
 * `flux_l1` is int_{Gamma_T} |f|.
 */
L1BoundSlack l1_bound_check(const Trajectory& traj, const Grid& grid, const Model& model, double flux_l1,
                            double horizon);

struct MarginResult {
    double margin = 0.0;
    std::size_t cell = 0;
    double time = 0.0;
};

/// min over interior cells of Theta(u) Lap_h p + gamma^-alpha u Phi(p) + (r/gamma^alpha) u sigma(t).
/// Requires state.time > 0.
MarginResult benilan_aronson_residual(const State& state, const Grid& grid, const Model& model, double r_phi);

/// Pressure margin (p1 - p0)/dt + (r/gamma^(alpha-1)) sigma(t1) p1, minimized over cells.
MarginResult pressure_monotonicity_margin(const State& s0, const State& s1, const Model& model, double r_phi);

/// Density margin (u1 - u0)/dt + (r/gamma^alpha) sigma(t1) u1, minimized over cells.
MarginResult density_monotonicity_margin(const State& s0, const State& s1, const Model& model, double r_phi);

/// Minimum of the pairwise margins over snapshot pairs with t1 >= t_floor.
MarginResult pressure_monotonicity_margin(const Trajectory& traj, const Model& model, double r_phi, double t_floor);
MarginResult density_monotonicity_margin(const Trajectory& traj, const Model& model, double r_phi, double t_floor);

/// int int p (1 - u) dx dt.
double graph_residual(const Trajectory& traj, const Grid& grid, double gamma);

/// Sum over interior faces of (grad_h p / h(u_face)) (grad_h xi) * area * distance,
/// with u_face the arithmetic mean.  `scale` receives the same sum of absolute values.
double incompressibility_functional(const std::vector<double>& p, const std::vector<double>& u,
                                    const std::vector<double>& xi, const Grid& grid, const Constitutive& c,
                                    double* scale = nullptr);

/// max over spatial tests of the median over snapshots (t > 0) of |functional|.
double incompressibility_residual(const Trajectory& traj, const Grid& grid, const Model& model,
                                  const TestFunctionSet& tests);

/**
 * max over test pairs phi = zeta_m xi_k of
 *   | int int (u phi_t - Theta(u) grad p . grad phi) + int_{Gamma_T} f phi
 *     + gamma^-alpha int int u Phi(p) phi |,
 * with Theta(u) grad p evaluated as the face difference of Psi(u).
 */
double weak_form_residual(const Trajectory& traj, const Grid& grid, const Model& model, const BoundaryFlux& flux,
                          const TestFunctionSet& tests);

struct SpaceTimeNorms {
    double l1_grad_u = 0.0;
    double l1_grad_p = 0.0;
    double l1_dt_u = 0.0;  ///< over (t_start, T)
    double l1_dt_p = 0.0;  ///< over (t_start, T)
    double l2_grad_p_sq = 0.0;
};

/// Five space-time norms; the time-derivative norms exclude (0, 1/gamma).
SpaceTimeNorms bv_and_l2_norms(const Trajectory& traj, const Grid& grid, double gamma);

/// t -> ||u(t) - u0||_1 at every snapshot.
std::vector<double> initial_trace_check(const Trajectory& traj, const Grid& grid, const std::vector<double>& u0);

/// One row per snapshot.
struct SeriesRow {
    double time = 0.0;
    double l1_u = 0.0;
    double l1_p = 0.0;
    double bv_u = 0.0;
    double bv_p = 0.0;
    double l2_grad_p = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    double max_p = 0.0;
    double ba_margin = 0.0;    ///< 0 at t = 0
    double mono_margin = 0.0;  ///< pressure margin against the previous snapshot; 0 on the first row
};

struct DiagnosticsReport {
    std::vector<SeriesRow> series;
    std::vector<double> initial_trace;

    SpaceTimeNorms norms;
    double graph = 0.0;
    double incompressibility = 0.0;
    double weak_form = 0.0;
    L1BoundSlack l1;
    MarginResult benilan_aronson;  ///< over snapshots with t >= t_floor
    MarginResult mono_p;
    MarginResult mono_u;
    double min_u = 0.0;
    double max_u = 0.0;
    double max_p = 0.0;

    double r_phi = 0.0;
    double t_floor = 0.0;
    double tol_max_principle = 1e-10;
    double tol_l1_relative = 1e-8;
    double tol_monotonicity = 1e-8;  ///< times p_M
};

DiagnosticsReport compute_diagnostics(const Trajectory& traj, const Grid& grid, const Model& model,
                                      const BoundaryFlux& flux, double flux_l1, double horizon,
                                      const TestFunctionSet& tests, const DiagnosticsOptions& options);

/// Trapezoidal rule over (possibly unevenly spaced) samples.
double trapezoid(const std::vector<double>& t, const std::vector<double>& v);

}  // namespace hsbl
