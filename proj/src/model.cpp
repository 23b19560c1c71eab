#include "hsbl/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hsbl {

std::string to_string(Assumption a)
{
    switch (a) {
    case Assumption::Coefficients: return "coefficient assumptions (g, h, Theta, Phi)";
    case Assumption::Data: return "data assumptions (initial density, boundary flux)";
    case Assumption::Stiffness: return "stiffness requirement (gamma > 1, alpha > 1)";
    }
    return "unknown";
}

ValidationError::ValidationError(Assumption assumption, const std::string& what)
    : std::runtime_error(what + " [violates " + to_string(assumption) + "]"), assumption_(assumption)
{
}

std::string to_string(MobilityPreset p)
{
    switch (p) {
    case MobilityPreset::Linear: return "linear";
    case MobilityPreset::FractionalFlow: return "fractional-flow";
    case MobilityPreset::ThetaOne: return "theta-one";
    }
    return "linear";
}

std::string to_string(SourceKind k)
{
    switch (k) {
    case SourceKind::Linear: return "linear";
    case SourceKind::Cubic: return "cubic";
    case SourceKind::Exponential: return "exponential";
    case SourceKind::Disabled: return "disabled";
    }
    return "linear";
}

MobilityPreset parse_mobility_preset(const std::string& name)
{
    if (name == "linear" || name == "pme")
        return MobilityPreset::Linear;
    if (name == "fractional-flow")
        return MobilityPreset::FractionalFlow;
    if (name == "theta-one")
        return MobilityPreset::ThetaOne;
    throw std::invalid_argument("unknown mobility preset '" + name +
                                "' (expected linear, pme, fractional-flow or theta-one)");
}

SourceKind parse_source_kind(const std::string& name)
{
    if (name == "linear")
        return SourceKind::Linear;
    if (name == "cubic")
        return SourceKind::Cubic;
    if (name == "exponential")
        return SourceKind::Exponential;
    if (name == "disabled")
        return SourceKind::Disabled;
    throw std::invalid_argument("unknown source profile '" + name +
                                "' (expected linear, cubic, exponential or disabled)");
}

double SourceFunction::operator()(double p) const
{
    switch (kind) {
    case SourceKind::Linear: return scale * (p_max - p);
    case SourceKind::Cubic: {
        const double d = p_max - p;
        return scale * d * d * d;
    }
    case SourceKind::Exponential: return scale * (std::exp(-p) - std::exp(-p_max));
    case SourceKind::Disabled: return 0.0;
    }
    return 0.0;
}

double SourceFunction::derivative(double p) const
{
    switch (kind) {
    case SourceKind::Linear: return -scale;
    case SourceKind::Cubic: {
        const double d = p_max - p;
        return -3.0 * scale * d * d;
    }
    case SourceKind::Exponential: return -scale * std::exp(-p);
    case SourceKind::Disabled: return 0.0;
    }
    return 0.0;
}

Constitutive Constitutive::make(MobilityPreset preset, SourceFunction phi, double delta, bool test_override)
{
    if (!(phi.p_max > 0.0) || !std::isfinite(phi.p_max))
        throw ValidationError(Assumption::Coefficients, "homeostatic pressure p_M must be positive, got " +
                                                            std::to_string(phi.p_max));
    if (!(phi.scale > 0.0) || !std::isfinite(phi.scale))
        throw ValidationError(Assumption::Coefficients, "source scale must be positive");
    if (!(delta > 0.0) || delta >= 1.0)
        throw ValidationError(Assumption::Coefficients, "delta must lie in (0, 1)");
    if (!test_override && preset == MobilityPreset::ThetaOne)
        throw ValidationError(Assumption::Coefficients,
                              "theta-one mobility has g(0) != 0 and is only available as a test override");
    if (!test_override && phi.kind == SourceKind::Disabled)
        throw ValidationError(Assumption::Coefficients,
                              "a disabled source is only available as a test override");

    Constitutive c;
    c.preset_ = preset;
    c.phi_ = phi;
    c.delta_ = delta;
    c.test_override_ = test_override;
    return c;
}

// The fractional-flow g is evaluated at min(z, 1): the raw rational form
// turns decreasing just above z = 1, where g' >= 0 is required.
double Constitutive::g(double z) const
{
    switch (preset_) {
    case MobilityPreset::Linear: return z;
    case MobilityPreset::FractionalFlow: {
        const double s = std::min(z, 1.0);
        return s * s / (s * s + (1.0 - s) * (1.0 - s));
    }
    case MobilityPreset::ThetaOne: return 1.0;
    }
    return z;
}

double Constitutive::g_derivative(double z) const
{
    switch (preset_) {
    case MobilityPreset::Linear: return 1.0;
    case MobilityPreset::FractionalFlow: {
        if (z >= 1.0)
            return 0.0;
        const double d = z * z + (1.0 - z) * (1.0 - z);
        return 2.0 * z * (1.0 - z) / (d * d);
    }
    case MobilityPreset::ThetaOne: return 0.0;
    }
    return 1.0;
}

double Constitutive::h(double z) const
{
    switch (preset_) {
    case MobilityPreset::Linear: return 1.0;
    case MobilityPreset::FractionalFlow: return 1.0 / (z * z + 2.0 * (1.0 - z) * (1.0 - z));
    case MobilityPreset::ThetaOne: return 1.0;
    }
    return 1.0;
}

double Constitutive::theta(double z) const
{
    switch (preset_) {
    case MobilityPreset::Linear: return z;
    case MobilityPreset::FractionalFlow: return g(z) * (z * z + 2.0 * (1.0 - z) * (1.0 - z));
    case MobilityPreset::ThetaOne: return 1.0;
    }
    return z;
}

StiffParams StiffParams::make(double gamma, double alpha)
{
    if (!(gamma > 1.0) || !std::isfinite(gamma))
        throw ValidationError(Assumption::Stiffness, "gamma must exceed 1, got " + std::to_string(gamma));
    if (!(alpha > 1.0) || !std::isfinite(alpha))
        throw ValidationError(Assumption::Stiffness, "alpha must exceed 1, got " + std::to_string(alpha));
    return StiffParams{gamma, alpha};
}

double StiffParams::reaction_scale() const
{
    return std::pow(gamma, -alpha);
}

double stiff_pressure(double u, double gamma)
{
    return std::pow(u, gamma);
}

double psi_quadrature(double z, double gamma, const Constitutive& c)
{
    if (z <= 0.0)
        return 0.0;
    // s = z w^(1/gamma) maps gamma s^(gamma-1) ds onto z^gamma dw, which
    // removes the boundary layer of s^(gamma-1) at s = z for large gamma.
    const double inv_gamma = 1.0 / gamma;
    auto integrand = [&](double w) { return c.theta(z * std::pow(w, inv_gamma)); };
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    double error = 0.0;
    double l1 = 0.0;
    const double mean = integrator.integrate(integrand, 0.0, 1.0, 1e-14, &error, &l1);
    const double scale = std::pow(z, gamma);
    const double bound = error * scale;
    if (!(bound <= 1e-12 * std::max(1.0, std::abs(mean * scale)))) {
        std::ostringstream os;
        os << "flux-potential quadrature did not converge at z = " << z << ", achieved error bound " << bound;
        throw QuadratureError(os.str(), bound);
    }
    return mean * scale;
}

double psi(double z, double gamma, const Constitutive& c)
{
    if (z <= 0.0)
        return 0.0;
    switch (c.preset()) {
    case MobilityPreset::Linear: return gamma * std::pow(z, gamma + 1.0) / (gamma + 1.0);
    case MobilityPreset::ThetaOne: return std::pow(z, gamma);
    case MobilityPreset::FractionalFlow: return psi_quadrature(z, gamma, c);
    }
    return 0.0;
}

double psi_derivative(double z, double gamma, const Constitutive& c)
{
    if (z <= 0.0)
        return 0.0;
    return gamma * c.theta(z) * std::pow(z, gamma - 1.0);
}

double psi_regularized(double z, const StiffParams& s, const Constitutive& c)
{
    return psi(z, s.gamma, c) + z * s.reaction_scale();
}

double psi_regularized_derivative(double z, const StiffParams& s, const Constitutive& c)
{
    return psi_derivative(z, s.gamma, c) + s.reaction_scale();
}

namespace {

// Dense sampling on [lo, hi] followed by golden-section refinement inside
// the bracket around the sampled argmin.
template <class F>
double sampled_minimum(F f, double lo, double hi, int samples)
{
    samples = std::max(samples, 3);
    const double step = (hi - lo) / (samples - 1);
    int best = 0;
    double best_value = f(lo);
    for (int k = 1; k < samples; ++k) {
        const double v = f(k + 1 == samples ? hi : lo + k * step);
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    double a = lo + std::max(best - 1, 0) * step;
    double b = std::min(lo + (best + 1) * step, hi);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
        else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return std::min({best_value, f1, f2});
}

}  // namespace

double min_reaction_margin(const SourceFunction& phi, int samples)
{
    return sampled_minimum([&](double p) { return phi(p) - phi.derivative(p) * p; }, 0.0, phi.p_max, samples);
}

double r_phi(const Constitutive& c)
{
    const double r = min_reaction_margin(c.phi());
    if (!(r > 1e-12 * std::max(1.0, std::abs(c.phi()(0.0))))) {
        std::ostringstream os;
        os << "min of Phi(p) - Phi'(p) p over [0, p_M] is " << r << "; the Ricatti weight needs it positive";
        throw ValidationError(Assumption::Coefficients, os.str());
    }
    return r;
}

double beta(const Constitutive& c)
{
    const auto& phi = c.phi();
    const double b = -sampled_minimum([&](double p) { return phi.derivative(p); }, 0.0, phi.p_max, 10001);
    if (!(b > 0.0)) {
        std::ostringstream os;
        os << "max slope of Phi is " << -b << "; Phi must be strictly decreasing";
        throw ValidationError(Assumption::Coefficients, os.str());
    }
    return b;
}

ConstitutiveReport validate_constitutive(const Constitutive& c, double density_ceiling)
{
    ConstitutiveReport report;
    report.density_range = density_ceiling + 0.1;
    const int n = 4001;
    const double zmax = report.density_range;

    double hmin = c.h(0.0);
    double prev_theta = c.theta(0.0);
    for (int k = 0; k < n; ++k) {
        const double z = zmax * k / (n - 1);
        const double hz = c.h(z);
        hmin = std::min(hmin, hz);
        const double th = c.theta(z);
        if (th < prev_theta - 1e-14 * std::max(1.0, std::abs(prev_theta))) {
            std::ostringstream os;
            os << "Theta = g/h decreases near z = " << z;
            throw ValidationError(Assumption::Coefficients, os.str());
        }
        prev_theta = th;
        if (!c.test_override()) {
            if (k > 0 && !(c.g(z) > 0.0))
                throw ValidationError(Assumption::Coefficients, "g must be positive for z > 0");
            if (std::abs(z - 1.0) < c.delta() && c.g_derivative(z) < 0.0) {
                std::ostringstream os;
                os << "g' < 0 at z = " << z << " inside |z - 1| < delta";
                throw ValidationError(Assumption::Coefficients, os.str());
            }
        }
    }
    if (!(hmin > 0.0))
        throw ValidationError(Assumption::Coefficients, "h must be bounded below by a positive constant");
    report.h_floor = hmin;

    if (c.test_override())
        return report;

    if (c.g(0.0) != 0.0)
        throw ValidationError(Assumption::Coefficients, "g(0) must vanish");
    const auto& phi = c.phi();
    if (std::abs(phi(phi.p_max)) > 1e-12)
        throw ValidationError(Assumption::Coefficients, "Phi(p_M) must vanish");
    for (int k = 0; k + 1 < n; ++k) {
        const double p = phi.p_max * k / (n - 1);
        if (!(phi.derivative(p) < 0.0)) {
            std::ostringstream os;
            os << "Phi' must be negative on [0, p_M), fails at p = " << p;
            throw ValidationError(Assumption::Coefficients, os.str());
        }
    }
    report.r_phi = r_phi(c);
    report.beta = beta(c);
    return report;
}

double boundary_flux_l1(const ProblemData& data, const Grid& grid)
{
    if (!data.boundary_flux || data.horizon <= 0.0)
        return 0.0;
    double total = 0.0;
    for (const auto& face : grid.boundary_faces()) {
        auto integrand = [&](double t) { return std::abs(data.boundary_flux(t, face)); };
        double err = 0.0;
        const double v =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, data.horizon, 10, 1e-12, &err);
        total += v * face.area;
    }
    return total;
}

DataReport validate_data(const ProblemData& data, const Grid& grid, const StiffParams& stiff, const Constitutive& c)
{
    if (data.u0.size() != grid.cell_count())
        throw ValidationError(Assumption::Data, "initial density has " + std::to_string(data.u0.size()) +
                                                    " values for " + std::to_string(grid.cell_count()) + " cells");
    if (!(data.horizon >= 0.0) || !std::isfinite(data.horizon))
        throw ValidationError(Assumption::Data, "horizon T must be finite and nonnegative");
    if (data.flux_floor < 0.0)
        throw ValidationError(Assumption::Data, "flux floor must be nonnegative");

    DataReport report;
    for (std::size_t i = 0; i < data.u0.size(); ++i) {
        const double u = data.u0[i];
        if (!(u >= 0.0) || !std::isfinite(u)) {
            std::ostringstream os;
            os << "initial density must be nonnegative, cell " << i << " has " << u;
            throw ValidationError(Assumption::Data, os.str());
        }
        report.max_initial_pressure = std::max(report.max_initial_pressure, stiff_pressure(u, stiff.gamma));
    }
    if (report.max_initial_pressure > c.p_max() * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << "initial pressure " << report.max_initial_pressure << " exceeds p_M = " << c.p_max();
        throw ValidationError(Assumption::Data, os.str());
    }

    if (data.boundary_flux) {
        const int samples = 33;
        for (const auto& face : grid.boundary_faces()) {
            for (int k = 0; k < samples; ++k) {
                const double t = data.horizon * k / (samples - 1);
                const double f = data.boundary_flux(t, face);
                if (!std::isfinite(f))
                    throw ValidationError(Assumption::Data, "boundary flux is not finite");
                if (data.flux_floor > 0.0 && std::abs(f) < data.flux_floor * (1.0 - 1e-12)) {
                    std::ostringstream os;
                    os << "|f| = " << std::abs(f) << " falls below the declared floor " << data.flux_floor;
                    report.warnings.push_back(os.str());
                    break;
                }
            }
        }
    }
    if (data.flux_floor == 0.0)
        report.warnings.push_back("flux floor is 0: the boundary flux is not bounded away from zero");

    report.initial_l1 = field_l1(data.u0, grid);
    report.initial_bv = gradient_l1(data.u0, grid);
    report.boundary_flux_l1 = boundary_flux_l1(data, grid);
    return report;
}

}  // namespace hsbl
