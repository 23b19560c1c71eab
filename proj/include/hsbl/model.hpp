/**
 * @file model.hpp
 * @brief Constitutive functions, stiffness parameters and data checks.
 *
 * The transported mobility Theta = g / h, the stiff law p = u^gamma, the
 * reaction profile Phi with homeostatic pressure p_M, and the flux potential
 *
 *     Psi(z) = gamma * int_0^z Theta(s) s^(gamma-1) ds
 *
 * that turns div(Theta(u) grad p) into Laplacian(Psi(u)).
 */
#pragma once

#include "hsbl/geometry.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsbl {

/// Which standing assumption a rejected input violates.
enum class Assumption {
    Coefficients,  ///< g, h, Theta, Phi
    Data,          ///< initial density and boundary flux
    Stiffness,     ///< gamma > 1, alpha > 1
};

std::string to_string(Assumption a);

class ValidationError : public std::runtime_error {
public:
    ValidationError(Assumption assumption, const std::string& what);

    Assumption assumption() const { return assumption_; }

private:
    Assumption assumption_;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double error_bound)
        : std::runtime_error(what), error_bound_(error_bound)
    {
    }
    double error_bound() const { return error_bound_; }

private:
    double error_bound_;
};

enum class MobilityPreset {
    Linear,          ///< g(z) = z, h = 1 (porous-medium type); also spelled "pme"
    FractionalFlow,  ///< g(z) = z^2/(z^2+(1-z)^2), h(z) = 1/(z^2+2(1-z)^2)
    ThetaOne,        ///< g = h = 1: test-only, bypasses g(0) = 0
};

enum class SourceKind {
    Linear,       ///< scale * (p_M - p)
    Cubic,        ///< scale * (p_M - p)^3
    Exponential,  ///< scale * (exp(-p) - exp(-p_M))
    Disabled,     ///< 0: test-only
};

std::string to_string(MobilityPreset p);
std::string to_string(SourceKind k);
MobilityPreset parse_mobility_preset(const std::string& name);
SourceKind parse_source_kind(const std::string& name);

struct SourceFunction {
    SourceKind kind = SourceKind::Linear;
    double scale = 1.0;
    double p_max = 1.0;

    double operator()(double p) const;
    double derivative(double p) const;
};

class Constitutive {
public:
    /// ThetaOne and a Disabled source require test_override.
    /// Throws ValidationError(Coefficients) on a bad p_M, delta or scale.
    static Constitutive make(MobilityPreset preset, SourceFunction phi, double delta = 0.1,
                             bool test_override = false);

    MobilityPreset preset() const { return preset_; }
    const SourceFunction& phi() const { return phi_; }
    double p_max() const { return phi_.p_max; }
    double delta() const { return delta_; }
    bool test_override() const { return test_override_; }

    double g(double z) const;
    double g_derivative(double z) const;
    double h(double z) const;
    double theta(double z) const;

    bool has_closed_form_psi() const { return preset_ != MobilityPreset::FractionalFlow; }

private:
    MobilityPreset preset_ = MobilityPreset::Linear;
    SourceFunction phi_{};
    double delta_ = 0.1;
    bool test_override_ = false;
};

struct StiffParams {
    double gamma = 8.0;
    double alpha = 2.0;

    /// Throws ValidationError(Stiffness) unless gamma > 1 and alpha > 1.
    static StiffParams make(double gamma, double alpha);

    /// gamma^(-alpha): the scale of the reaction term.
    double reaction_scale() const;
};

/// Summary of the sampled checks on a Constitutive bundle.
struct ConstitutiveReport {
    double h_floor = 0.0;  ///< sampled min of h on the checked density range
    double density_range = 0.0;
    double r_phi = 0.0;
    double beta = 0.0;
};

/**
 * Sampled checks of the coefficient assumptions on [0, density_ceiling + 0.1]:
 * h bounded below, g(0) = 0 and g > 0, g' >= 0 near 1, Theta non-decreasing,
 * Phi' < 0 on [0, p_M), Phi(p_M) = 0, r_phi > 0 and beta > 0.
 * Test-override bundles skip the g and Phi checks.
 */
ConstitutiveReport validate_constitutive(const Constitutive& c, double density_ceiling);

double stiff_pressure(double u, double gamma);

/// Flux potential; closed form where available, tanh-sinh quadrature otherwise.
double psi(double z, double gamma, const Constitutive& c);

/// Flux potential by quadrature regardless of preset (cross-check path).
double psi_quadrature(double z, double gamma, const Constitutive& c);

/// Psi'(z) = gamma * Theta(z) * z^(gamma-1).
double psi_derivative(double z, double gamma, const Constitutive& c);

/// Psi(z) + z / gamma^alpha.
double psi_regularized(double z, const StiffParams& s, const Constitutive& c);
double psi_regularized_derivative(double z, const StiffParams& s, const Constitutive& c);

/// min over [0, p_M] of Phi(p) - Phi'(p) p, by dense sampling plus golden section.
double min_reaction_margin(const SourceFunction& phi, int samples = 10001);

/// As min_reaction_margin, throwing ValidationError(Coefficients) when it is not positive.
double r_phi(const Constitutive& c);

/// -min over [0, p_M] of Phi'(p), throwing ValidationError(Coefficients) when not positive.
double beta(const Constitutive& c);

/// Inflow through a boundary face at time t (positive adds mass).
using BoundaryFlux = std::function<double(double t, const BoundaryFace& face)>;

struct ProblemData {
    std::vector<double> u0;
    BoundaryFlux boundary_flux;
    double flux_floor = 0.0;  ///< declared lower bound on |f|; 0 for oracle runs
    double horizon = 1.0;
};

struct DataReport {
    double max_initial_pressure = 0.0;
    double initial_l1 = 0.0;
    double initial_bv = 0.0;
    double boundary_flux_l1 = 0.0;  ///< integral of |f| over (0, T) x boundary
    std::vector<std::string> warnings;
};

/// Integral of |f| over (0, horizon) x boundary.
double boundary_flux_l1(const ProblemData& data, const Grid& grid);

/**
 * Throws ValidationError(Data) on negative density, initial pressure above
 * p_M, non-finite flux samples or a mis-sized field.  Warns when the declared
 * flux floor is zero.
 */
DataReport validate_data(const ProblemData& data, const Grid& grid, const StiffParams& stiff,
                         const Constitutive& c);

}  // namespace hsbl
