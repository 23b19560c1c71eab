#include "hsbl/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hsbl {

std::string to_string(Regularization r)
{
    return r == Regularization::Linear ? "linear" : "none";
}

Regularization parse_regularization(const std::string& name)
{
    if (name == "none")
        return Regularization::None;
    if (name == "linear")
        return Regularization::Linear;
    throw std::invalid_argument("unknown regularization '" + name + "' (expected none or linear)");
}

double Model::potential(double u) const
{
    const double base = psi(u, stiff.gamma, constitutive);
    return regularization == Regularization::Linear ? base + u * stiff.reaction_scale() : base;
}

double Model::potential_derivative(double u) const
{
    const double base = psi_derivative(u, stiff.gamma, constitutive);
    return regularization == Regularization::Linear ? base + stiff.reaction_scale() : base;
}

double Model::source(double u) const
{
    return stiff.reaction_scale() * u * constitutive.phi()(pressure(u));
}

double Model::source_derivative(double u) const
{
    const double p = pressure(u);
    const auto& phi = constitutive.phi();
    return stiff.reaction_scale() * (phi(p) + stiff.gamma * p * phi.derivative(p));
}

double Model::density_ceiling() const
{
    return std::pow(p_max(), 1.0 / stiff.gamma);
}

std::vector<double> pressure_field(const std::vector<double>& u, double gamma)
{
    std::vector<double> p(u.size());
    std::transform(u.begin(), u.end(), p.begin(), [gamma](double v) { return stiff_pressure(v, gamma); });
    return p;
}

void SolverConfig::validate(double horizon) const
{
    if (!(dt_initial > 0.0) || !(dt_min > 0.0) || !(dt_min <= dt_initial) || !(dt_initial <= dt_max))
        throw std::invalid_argument("step sizes must satisfy 0 < dt_min <= dt_initial <= dt_max");
    if (!(newton_tol > 0.0) || newton_max_iter < 1 || !(linear_tol > 0.0))
        throw std::invalid_argument("Newton and linear tolerances must be positive");
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
        throw std::invalid_argument("snapshot times must be sorted");
    for (double t : snapshot_times)
        if (t < 0.0 || t > horizon)
            throw std::invalid_argument("snapshot time " + std::to_string(t) + " lies outside [0, T]");
}

std::vector<double> Trajectory::times() const
{
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots)
        t.push_back(s.time);
    return t;
}

Solver::Solver(Grid grid, Model model, BoundaryFlux flux, SolverConfig config)
    : grid_(std::move(grid)), model_(std::move(model)), flux_(std::move(flux)), config_(std::move(config))
{
}

double Solver::boundary_inflow(double t, std::vector<double>* per_face) const
{
    const auto& bfaces = grid_.boundary_faces();
    std::vector<double> local(bfaces.size(), 0.0);
    if (flux_)
        for (std::size_t k = 0; k < bfaces.size(); ++k)
            local[k] = flux_(t, bfaces[k]) * bfaces[k].area;
    const double total = compensated_sum(local);
    if (per_face)
        *per_face = std::move(local);
    return total;
}

FaceFluxes Solver::face_flux(const State& state) const
{
    FaceFluxes out;
    std::vector<double> pot(state.u.size());
    std::transform(state.u.begin(), state.u.end(), pot.begin(), [this](double v) { return model_.potential(v); });
    out.interior.reserve(grid_.interior_faces().size());
    for (const auto& f : grid_.interior_faces())
        out.interior.push_back((pot[f.right] - pot[f.left]) / f.distance * f.area);
    boundary_inflow(state.time, &out.boundary);
    return out;
}

std::vector<double> Solver::residual(const std::vector<double>& u_prev, const std::vector<double>& u, double t_next,
                                     double dt) const
{
    const FaceFluxes flux = face_flux(State{t_next, u});
    const auto net = net_inflow(grid_, flux.interior, flux.boundary);
    const double scale = dt / grid_.cell_volume();
    std::vector<double> r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        r[i] = u[i] - u_prev[i] - scale * net[i] - dt * model_.source(u[i]);
    return r;
}

namespace {

double norm_inf(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

double norm_2(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

}  // namespace

// Solves J * delta = rhs with
//   J = I - dt S'(u) + (dt/vol) L D,   D = diag(Psi'(u)),
// L the two-point graph Laplacian with weights area/distance.
std::vector<double> Solver::solve_newton_system(const std::vector<double>& u, const std::vector<double>& rhs,
                                                double dt, int* iterations) const
{
    const std::size_t n = u.size();
    const double scale = dt / grid_.cell_volume();
    std::vector<double> mass(n);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        mass[i] = 1.0 - dt * model_.source_derivative(u[i]);
        diff[i] = model_.potential_derivative(u[i]);
        if (!(mass[i] > 0.0))
            throw LinearSolveFailed("reaction term makes the Newton matrix indefinite; reduce dt_max");
    }

    if (grid_.dim() == 1) {
        // Tridiagonal and column diagonally dominant: Thomas without pivoting.
        std::vector<double> lower(n, 0.0), diag(mass), upper(n, 0.0);
        for (const auto& f : grid_.interior_faces()) {
            const double w = scale * f.area / f.distance;
            diag[f.left] += w * diff[f.left];
            diag[f.right] += w * diff[f.right];
            upper[f.left] -= w * diff[f.right];
            lower[f.right] -= w * diff[f.left];
        }
        std::vector<double> x(rhs);
        for (std::size_t i = 1; i < n; ++i) {
            const double m = lower[i] / diag[i - 1];
            diag[i] -= m * upper[i - 1];
            x[i] -= m * x[i - 1];
        }
        for (std::size_t k = n; k-- > 0;) {
            if (!(std::abs(diag[k]) > 0.0) || !std::isfinite(diag[k]))
                throw LinearSolveFailed("zero pivot in tridiagonal Newton solve");
            x[k] = (x[k] - (k + 1 < n ? upper[k] * x[k + 1] : 0.0)) / diag[k];
        }
        if (iterations)
            *iterations = 1;
        return x;
    }

    // 2D: J = K D with K = M D^-1 + (dt/vol) L symmetric positive definite.
    // Solve K y = rhs by Jacobi-preconditioned CG, then delta = D^-1 y.
    // Cells with vanishing Psi' get a floored D; this only perturbs columns
    // that are numerically zero anyway.
    const double dmax = *std::max_element(diff.begin(), diff.end());
    const double floor = 1e-14 * std::max(1.0, dmax);
    std::vector<double> dd(n);
    for (std::size_t i = 0; i < n; ++i)
        dd[i] = std::max(diff[i], floor);

    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n + 4 * grid_.interior_faces().size());
    for (std::size_t i = 0; i < n; ++i)
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), mass[i] / dd[i]);
    for (const auto& f : grid_.interior_faces()) {
        const double w = scale * f.area / f.distance;
        const int l = static_cast<int>(f.left);
        const int r = static_cast<int>(f.right);
        trip.emplace_back(l, l, w);
        trip.emplace_back(r, r, w);
        trip.emplace_back(l, r, -w);
        trip.emplace_back(r, l, -w);
    }
    SpMat k(static_cast<int>(n), static_cast<int>(n));
    k.setFromTriplets(trip.begin(), trip.end());

    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(config_.linear_tol);
    cg.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, 10 * n)));
    cg.compute(k);
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd y = cg.solve(b);
    if (cg.info() != Eigen::Success) {
        std::ostringstream os;
        os << "conjugate gradient stopped after " << cg.iterations() << " iterations with relative residual "
           << cg.error();
        throw LinearSolveFailed(os.str());
    }
    if (iterations)
        *iterations = static_cast<int>(cg.iterations());
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = y[static_cast<Eigen::Index>(i)] / dd[i];
    return x;
}

State Solver::step(const State& state, double dt, StepReport* report) const
{
    const double t_next = state.time + dt;
    const auto& u_prev = state.u;
    std::vector<double> u = u_prev;
    std::vector<double> r = residual(u_prev, u, t_next, dt);
    const double res_scale = std::max(1.0, norm_inf(u_prev));
    double res = norm_inf(r) / res_scale;
    const double initial_res = res;

    const double vol = grid_.cell_volume();
    auto mass_defect = [&](const std::vector<double>& rv) { return std::abs(compensated_sum(rv)) * vol; };
    auto mass_bound = [&](const std::vector<double>& uv) {
        return config_.linear_tol * std::max(1.0, compensated_sum(uv) * vol);
    };

    int it = 0;
    int linear_its = 0;
    while (res > config_.newton_tol || mass_defect(r) > mass_bound(u)) {
        if (it >= config_.newton_max_iter) {
            if (res <= config_.newton_tol)
                break;
            std::ostringstream os;
            os << "Newton did not reach " << config_.newton_tol << " in " << it << " iterations at t = " << t_next
               << " (residual " << res << ")";
            throw NewtonDiverged(os.str(), res, it);
        }
        ++it;
        std::vector<double> rhs(r.size());
        std::transform(r.begin(), r.end(), rhs.begin(), [](double v) { return -v; });
        int lin = 0;
        std::vector<double> delta = solve_newton_system(u, rhs, dt, &lin);
        linear_its += lin;

        // Cells already at zero cannot move down; the others are limited by
        // the distance to zero.
        double lambda = 1.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!std::isfinite(delta[i]))
                throw NewtonDiverged("non-finite Newton direction", res, it);
            if (delta[i] < 0.0) {
                if (u[i] <= 0.0)
                    delta[i] = 0.0;
                else
                    lambda = std::min(lambda, u[i] / -delta[i]);
            }
        }

        const double r2 = norm_2(r);
        bool accepted = false;
        std::vector<double> trial(u.size());
        std::vector<double> r_trial;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t i = 0; i < u.size(); ++i)
                trial[i] = std::max(0.0, u[i] + lambda * delta[i]);  // rounding only: lambda keeps it >= 0
            r_trial = residual(u_prev, trial, t_next, dt);
            const double t2 = norm_2(r_trial);
            if (std::isfinite(t2) && t2 <= (1.0 - 1e-4 * lambda) * r2) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            if (res <= config_.newton_tol)
                break;  // ledger polish stalled at roundoff
            std::ostringstream os;
            os << "line search failed at t = " << t_next << " (residual " << res << ")";
            throw NewtonDiverged(os.str(), res, it);
        }
        u.swap(trial);
        r.swap(r_trial);
        res = norm_inf(r) / res_scale;
    }

    if (report) {
        std::vector<double> terms(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            terms[i] = u_prev[i] * vol;
        report->mass_before = compensated_sum(terms);
        for (std::size_t i = 0; i < u.size(); ++i)
            terms[i] = u[i] * vol;
        report->mass_after = compensated_sum(terms);
        for (std::size_t i = 0; i < u.size(); ++i)
            terms[i] = model_.source(u[i]) * vol;
        report->source = compensated_sum(terms);
        report->boundary_inflow = boundary_inflow(t_next, nullptr);
        report->imbalance =
            (report->mass_after - report->mass_before) - dt * (report->boundary_inflow + report->source);
        report->time = t_next;
        report->dt = dt;
        report->newton_iterations = it;
        report->initial_residual = initial_res;
        report->final_residual = res;
        report->linear_iterations = linear_its;
    }
    return State{t_next, std::move(u)};
}

Trajectory Solver::run(const State& initial, double horizon) const
{
    config_.validate(horizon);
    if (initial.u.size() != grid_.cell_count())
        throw std::invalid_argument("initial state does not match the grid");

    std::vector<double> targets;
    for (double t : config_.snapshot_times)
        if (t > initial.time && (targets.empty() || t > targets.back()))
            targets.push_back(t);
    if (targets.empty() || targets.back() < horizon)
        targets.push_back(horizon);

    Trajectory traj;
    traj.snapshots.push_back(initial);
    if (horizon <= initial.time)
        return traj;

    State state = initial;
    double dt = config_.dt_initial;
    int easy = 0;
    std::size_t next = 0;
    while (next < targets.size()) {
        const double target = targets[next];
        const double gap = target - state.time;
        double h = dt;
        bool landing = false;
        if (gap <= dt * (1.0 + 1e-9)) {
            h = gap;
            landing = true;
        }
        else if (gap - dt < config_.dt_min) {
            h = 0.5 * gap;
        }

        StepReport rep;
        State trial;
        try {
            trial = step(state, h, &rep);
        }
        catch (const NewtonDiverged& e) {
            dt = 0.5 * h;
            easy = 0;
            if (dt < config_.dt_min) {
                std::ostringstream os;
                os << "time step fell below dt_min = " << config_.dt_min << " at t = " << state.time << ": "
                   << e.what();
                throw DtUnderflow(os.str(), state.time);
            }
            continue;
        }
        if (landing)
            trial.time = target;
        rep.time = trial.time;
        traj.steps.push_back(rep);
        state = std::move(trial);

        if (rep.newton_iterations <= config_.easy_newton_iterations) {
            if (++easy >= 3) {
                dt = std::min(dt * 1.2, config_.dt_max);
                easy = 0;
            }
        }
        else {
            easy = 0;
        }
        if (landing) {
            traj.snapshots.push_back(state);
            ++next;
        }
    }
    return traj;
}

}  // namespace hsbl
