/**
 * @file oracle.hpp
 * @brief Closed-form reference solutions and their self-checks.
 *
 * - uniform_ode: spatially uniform solutions, du/dt = gamma^-alpha u Phi(u^gamma).
 *   For Phi(p) = s (p_M - p) the substitution w = u^-gamma linearizes it:
 *   u(t) = [1/p_M + (u0^-gamma - 1/p_M) e^{-s p_M gamma^(1-alpha) t}]^(-1/gamma).
 * - ricatti_w: W(t) = -(r/gamma^alpha) sigma(t), solving W' = gamma W^2 - (r/gamma^(alpha-1)) W.
 * - Barenblatt: u_t = Lap(u^m) self-similar solution
 *   u = t^{-d b} (C - k |x|^2 t^{-2b})_+^{1/(m-1)}, b = 1/(d(m-1)+2), k = (m-1) b / (2m).
 */
#pragma once

#include "hsbl/geometry.hpp"
#include "hsbl/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hsbl {

/// Closed form for Phi(p) = p_M - p.  Throws std::invalid_argument when u0 <= 0 or t < 0.
double uniform_ode(double u0, double gamma, double alpha, double p_max, double t);

/// Closed form for a linear profile (any scale); adaptive integration otherwise.
double uniform_ode(double u0, const StiffParams& stiff, const SourceFunction& phi, double t);

/// Adaptive Dormand-Prince integration to the given tolerance, for any profile.
double uniform_ode_integrated(double u0, const StiffParams& stiff, const SourceFunction& phi, double t,
                              double tol = 1e-12);

/// Throws std::invalid_argument for t <= 0.
double ricatti_w(double t, double gamma, double alpha, double r_phi);

struct Barenblatt {
    double m = 2.0;
    int dim = 1;
    double mass_constant = 0.1875;

    double beta() const;
    double k() const;
    double value(double t, const Point& x) const;
    double support_radius(double t) const;
    /// Mass by adaptive quadrature over the support.
    double mass(double t) const;
};

enum class OracleKind { UniformOde, Ricatti, Barenblatt };

std::string to_string(OracleKind k);

struct OracleCase {
    OracleKind kind = OracleKind::UniformOde;
    std::string name;
    std::function<double(double t, const Point& x)> evaluate;
};

OracleCase uniform_case(double u0, const StiffParams& stiff, const SourceFunction& phi);
OracleCase ricatti_case(double gamma, double alpha, double r_phi);
OracleCase barenblatt_case(const Barenblatt& b);

struct OracleCheck {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

/// Substitution residual of the closed form (5-point time differences) and
/// agreement with the integrated fallback.
std::vector<OracleCheck> verify_uniform_ode(double u0, const StiffParams& stiff, const SourceFunction& phi,
                                            const std::vector<double>& times);

/// Substitution residual of W in its Ricatti equation.
std::vector<OracleCheck> verify_ricatti(double gamma, double alpha, double r_phi, const std::vector<double>& times);

/// Mass drift between two times and PDE residual inside the support.
std::vector<OracleCheck> verify_barenblatt(const Barenblatt& b, double t0, double t1);

/// All self-verifications on their reference parameters.
std::vector<OracleCheck> self_verify_oracles();

struct UniformRunResult {
    double error = 0.0;  ///< L-infinity error at the horizon
    double exact = 0.0;
    double computed = 0.0;
};

/// Solver run on uniform data with zero flux at a fixed dt.
UniformRunResult uniform_solver_run(double u0, double gamma, double alpha, double horizon, double dt);

struct BarenblattRunResult {
    std::vector<double> h;
    std::vector<double> error;  ///< L1 error at t1
    std::vector<double> order;  ///< observed orders between consecutive h
};

/// Transports the profile at t0 to t1 with the Theta = 1 override on
/// [-half_width, half_width] for each cell count; dt_max = dt_factor * h.
BarenblattRunResult barenblatt_solver_run(const Barenblatt& b, double t0, double t1, double half_width,
                                          const std::vector<int>& cells, double dt_factor);

/// Solver-against-oracle checks with the committed tolerances.
std::vector<OracleCheck> solver_oracle_checks();

}  // namespace hsbl
