/**
 * @file sweep.hpp
 * @brief Runs one problem across an increasing gamma ladder and collects the
 * cross-gamma evidence: Cauchy differences, residual trends, uniform-bound
 * bands, the free boundary and the limit candidate.
 */
#pragma once

#include "hsbl/diagnostics.hpp"
#include "hsbl/geometry.hpp"
#include "hsbl/model.hpp"
#include "hsbl/solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hsbl {

using InitialDensity = std::function<double(const Point&)>;

struct SweepPlan {
    std::vector<double> ladder{4.0, 8.0, 16.0, 32.0, 64.0, 128.0};
    GridSpec grid;
    MobilityPreset preset = MobilityPreset::Linear;
    SourceFunction phi;
    double delta = 0.1;
    bool test_override = false;
    double alpha = 2.0;
    Regularization regularization = Regularization::Linear;
    InitialDensity initial_density;
    BoundaryFlux flux;
    double flux_floor = 0.0;
    double horizon = 1.0;
    SolverConfig solver;
    DiagnosticsOptions diagnostics;
    double contour_fraction = 1e-3;      ///< epsilon: contours at epsilon * p_M
    std::vector<double> trace_cluster{1e-3, 1e-2, 1e-1};
    bool refine_for_ba = true;           ///< run each member again on a 2x grid to measure tol_BA
    int parallel = 1;

    /// Throws std::invalid_argument on an empty or non-increasing ladder, gamma <= 1,
    /// or missing data callbacks.
    void validate() const;

    /// Model for one ladder member.
    Model model(double gamma) const;
    /// Problem data sampled on the given grid.
    ProblemData data(const Grid& grid) const;
};

/// Crossings of p = threshold between face neighbors.
struct Contour {
    std::vector<double> positions;  ///< 1D: sorted crossing abscissae (linear interpolation)
    std::vector<std::size_t> cells; ///< cells adjacent to a crossing face, sorted, unique
};

/// Throws std::invalid_argument unless 0 < fraction < 1.
Contour extract_free_boundary(const std::vector<double>& p, const Grid& grid, double p_max, double fraction);

struct RegionCheck {
    bool nested = true;
    int violations = 0;        ///< cells outside the one-cell ring, summed over pairs
    double first_violation_time = 0.0;
};

/// {p(t_n) > eps p_M} must lie inside the one-cell dilation of {p(t_{n+1}) > eps p_M}.
RegionCheck monotone_region_check(const Trajectory& traj, const Grid& grid, double gamma, double p_max,
                                  double fraction);

struct CauchyPair {
    double u = 0.0;
    double p = 0.0;
};

/// Space-time L1 differences of u and p (trapezoidal in time).  Throws
/// std::invalid_argument when the snapshot times differ.
CauchyPair cauchy_differences(const Trajectory& a, double gamma_a, const Trajectory& b, double gamma_b,
                              const Grid& grid);

struct MemberResult {
    double gamma = 0.0;
    bool ok = false;
    std::string error;
    Trajectory trajectory;
    DiagnosticsReport diagnostics;
    DataReport data;
    double flux_l1 = 0.0;
    bool ba_refined = false;
    double tol_ba = 0.0;
    std::string refine_error;
    bool outflux_only = false;  ///< every sampled f <= 0
};

enum class VerdictStatus { Pass, Fail, Skipped };
std::string to_string(VerdictStatus s);

struct Verdict {
    std::string name;
    VerdictStatus status = VerdictStatus::Skipped;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct LimitCandidate {
    double gamma = 0.0;
    std::vector<double> u;
    std::vector<double> p;
    double min_u = 0.0;
    double max_u = 0.0;
    double tolerance = 0.0;  ///< p_M^{1/gamma_max} - 1 + 1e-10
};

struct SweepReport {
    std::vector<MemberResult> members;
    std::vector<double> cauchy_u;
    std::vector<double> cauchy_p;
    std::vector<Verdict> verdicts;
    LimitCandidate limit;
    std::vector<Contour> free_boundary;  ///< per snapshot of the largest successful member
    RegionCheck region;

    bool all_pass() const;
    const Verdict* verdict(const std::string& name) const;
};

/// Integrates and diagnoses a single member.  Never throws for solver failures.
MemberResult run_member(const SweepPlan& plan, double gamma);

SweepReport run_sweep(const SweepPlan& plan);

}  // namespace hsbl
