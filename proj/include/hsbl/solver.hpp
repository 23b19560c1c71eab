/**
 * @file solver.hpp
 * @brief Backward-Euler finite-volume solver for
 *
 *     d_t u = Laplacian(Psi(u)) + gamma^(-alpha) u Phi(u^gamma),
 *     grad Psi(u) . n = f  on the boundary (f > 0 is inflow),
 *
 * with two-point fluxes on a structured grid.  Each step is solved by a
 * damped Newton iteration with an analytic Jacobian; the line search keeps
 * every iterate nonnegative.
 */
#pragma once

#include "hsbl/geometry.hpp"
#include "hsbl/model.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace hsbl {

/// Flux potential choice for the implicit system.
enum class Regularization {
    None,    ///< Psi itself (degenerate at u = 0)
    Linear,  ///< Psi(z) + z / gamma^alpha (uniformly parabolic)
};

std::string to_string(Regularization r);
Regularization parse_regularization(const std::string& name);

/// Constitutive bundle plus stiffness: everything the discrete operator needs.
struct Model {
    Constitutive constitutive;
    StiffParams stiff;
    Regularization regularization = Regularization::Linear;

    double potential(double u) const;
    double potential_derivative(double u) const;
    double pressure(double u) const { return stiff_pressure(u, stiff.gamma); }
    /// gamma^(-alpha) u Phi(u^gamma)
    double source(double u) const;
    double source_derivative(double u) const;
    double p_max() const { return constitutive.p_max(); }
    /// p_M^(1/gamma)
    double density_ceiling() const;
};

std::vector<double> pressure_field(const std::vector<double>& u, double gamma);

struct State {
    double time = 0.0;
    std::vector<double> u;
};

struct SolverConfig {
    double dt_initial = 1e-4;
    double dt_min = 1e-10;
    double dt_max = 1e-2;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;  ///< also bounds the extra iterations that close the mass ledger
    double linear_tol = 1e-12;
    int easy_newton_iterations = 5;  ///< steps at or below this count as easy for dt growth
    std::vector<double> snapshot_times;

    /// Throws std::invalid_argument on inconsistent step bounds or snapshot times.
    void validate(double horizon) const;
};

struct StepReport {
    double time = 0.0;  ///< end of the step
    double dt = 0.0;
    int newton_iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    int linear_iterations = 0;
    double mass_before = 0.0;
    double mass_after = 0.0;
    double boundary_inflow = 0.0;  ///< sum of f * area at the end of the step
    double source = 0.0;           ///< sum of reaction * volume at the end of the step
    /// (mass_after - mass_before) - dt * (boundary_inflow + source)
    double imbalance = 0.0;
};

struct Trajectory {
    std::vector<State> snapshots;
    std::vector<StepReport> steps;

    std::vector<double> times() const;
};

struct FaceFluxes {
    std::vector<double> interior;  ///< along +e_axis, (Psi_R - Psi_L)/distance * area
    std::vector<double> boundary;  ///< inflow f * area
};

class NewtonDiverged : public std::runtime_error {
public:
    NewtonDiverged(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations)
    {
    }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

class LinearSolveFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DtUnderflow : public std::runtime_error {
public:
    DtUnderflow(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class Solver {
public:
    Solver(Grid grid, Model model, BoundaryFlux flux, SolverConfig config);

    const Grid& grid() const { return grid_; }
    const Model& model() const { return model_; }
    const SolverConfig& config() const { return config_; }

    /// Fluxes of the given state, boundary data evaluated at state.time.
    FaceFluxes face_flux(const State& state) const;

    /// Residual of the backward-Euler system for candidate u at time t_next.
    std::vector<double> residual(const std::vector<double>& u_prev, const std::vector<double>& u, double t_next,
                                 double dt) const;

    /// One backward-Euler step of size dt.  Throws NewtonDiverged or LinearSolveFailed.
    State step(const State& state, double dt, StepReport* report = nullptr) const;

    /// Integrates to `horizon`, landing on every snapshot time.  Throws DtUnderflow.
    Trajectory run(const State& initial, double horizon) const;

private:
    std::vector<double> solve_newton_system(const std::vector<double>& u, const std::vector<double>& rhs, double dt,
                                            int* iterations) const;
    double boundary_inflow(double t, std::vector<double>* per_face) const;

    Grid grid_;
    Model model_;
    BoundaryFlux flux_;
    SolverConfig config_;
};

}  // namespace hsbl
