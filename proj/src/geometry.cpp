#include "hsbl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hsbl {

Grid Grid::build(int dim, std::span<const Interval> extents, std::span<const int> counts)
{
    if (dim != 1 && dim != 2)
        throw GridError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (extents.size() < static_cast<std::size_t>(dim) || counts.size() < static_cast<std::size_t>(dim))
        throw GridError("grid needs one extent and one cell count per axis");

    Grid g;
    g.dim_ = dim;
    for (int a = 0; a < dim; ++a) {
        const Interval& e = extents[a];
        if (!(std::isfinite(e.lo) && std::isfinite(e.hi)) || !(e.hi > e.lo))
            throw GridError("axis " + std::to_string(a) + " has a zero-length or inverted extent");
        if (counts[a] < 3)
            throw GridError("axis " + std::to_string(a) + " needs at least 3 cells, got " + std::to_string(counts[a]));
        g.extents_[a] = e;
        g.counts_[a] = counts[a];
        g.spacing_[a] = e.length() / counts[a];
    }
    if (dim == 1) {
        g.extents_[1] = Interval{0.0, 1.0};
        g.counts_[1] = 1;
        g.spacing_[1] = 1.0;
    }

    const int nx = g.counts_[0];
    const int ny = g.counts_[1];
    const double hx = g.spacing_[0];
    const double hy = g.spacing_[1];
    g.cell_count_ = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    g.cell_volume_ = dim == 1 ? hx : hx * hy;

    const double area_x = dim == 1 ? 1.0 : hy;  // faces normal to x
    const double area_y = hx;                   // faces normal to y

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            Point c = g.cell_center(g.index(i, j));
            c[0] += 0.5 * hx;
            g.interior_.push_back({g.index(i, j), g.index(i + 1, j), 0, area_x, hx, c});
        }
    }
    if (dim == 2) {
        for (int j = 0; j + 1 < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                Point c = g.cell_center(g.index(i, j));
                c[1] += 0.5 * hy;
                g.interior_.push_back({g.index(i, j), g.index(i, j + 1), 1, area_y, hy, c});
            }
        }
    }

    for (int j = 0; j < ny; ++j) {
        Point lo = g.cell_center(g.index(0, j));
        lo[0] = g.extents_[0].lo;
        Point hi = g.cell_center(g.index(nx - 1, j));
        hi[0] = g.extents_[0].hi;
        if (dim == 1) {
            lo[1] = hi[1] = 0.0;
        }
        g.boundary_.push_back({g.index(0, j), Side::XLow, 0, -1, area_x, lo});
        g.boundary_.push_back({g.index(nx - 1, j), Side::XHigh, 0, +1, area_x, hi});
    }
    if (dim == 2) {
        for (int i = 0; i < nx; ++i) {
            Point lo = g.cell_center(g.index(i, 0));
            lo[1] = g.extents_[1].lo;
            Point hi = g.cell_center(g.index(i, ny - 1));
            hi[1] = g.extents_[1].hi;
            g.boundary_.push_back({g.index(i, 0), Side::YLow, 1, -1, area_y, lo});
            g.boundary_.push_back({g.index(i, ny - 1), Side::YHigh, 1, +1, area_y, hi});
        }
    }
    return g;
}

double Grid::total_volume() const
{
    return dim_ == 1 ? extents_[0].length() : extents_[0].length() * extents_[1].length();
}

double Grid::boundary_measure() const
{
    return dim_ == 1 ? 2.0 : 2.0 * (extents_[0].length() + extents_[1].length());
}

Point Grid::cell_center(std::size_t cell) const
{
    const auto [i, j] = ijk(cell);
    Point p{extents_[0].lo + (i + 0.5) * spacing_[0], 0.0};
    if (dim_ == 2)
        p[1] = extents_[1].lo + (j + 0.5) * spacing_[1];
    return p;
}

bool Grid::is_interior_cell(std::size_t cell) const
{
    return cells_to_boundary(cell) > 0;
}

int Grid::cells_to_boundary(std::size_t cell) const
{
    const auto [i, j] = ijk(cell);
    int d = std::min(i, counts_[0] - 1 - i);
    if (dim_ == 2)
        d = std::min({d, j, counts_[1] - 1 - j});
    return d;
}

bool Grid::same_shape(const Grid& other) const
{
    if (dim_ != other.dim_)
        return false;
    for (int a = 0; a < dim_; ++a) {
        if (counts_[a] != other.counts_[a] || extents_[a].lo != other.extents_[a].lo ||
            extents_[a].hi != other.extents_[a].hi)
            return false;
    }
    return true;
}

std::vector<double> discrete_gradient(std::span<const double> field, const Grid& grid)
{
    if (field.size() != grid.cell_count())
        throw GridError("field size does not match the grid");
    std::vector<double> grad;
    grad.reserve(grid.interior_faces().size());
    for (const auto& f : grid.interior_faces())
        grad.push_back((field[f.right] - field[f.left]) / f.distance);
    return grad;
}

std::vector<double> net_inflow(const Grid& grid, std::span<const double> interior_flux,
                               std::span<const double> boundary_flux)
{
    const auto& faces = grid.interior_faces();
    const auto& bfaces = grid.boundary_faces();
    if (interior_flux.size() != faces.size() || boundary_flux.size() != bfaces.size())
        throw GridError("flux arrays do not match the face sets");

    std::vector<double> net(grid.cell_count(), 0.0);
    for (std::size_t k = 0; k < faces.size(); ++k) {
        net[faces[k].left] += interior_flux[k];
        net[faces[k].right] -= interior_flux[k];
    }
    for (std::size_t k = 0; k < bfaces.size(); ++k)
        net[bfaces[k].cell] += boundary_flux[k];
    return net;
}

namespace {

// Per cell and axis, the mean of transform(face gradient) over the cell's
// interior faces along that axis.
template <class Transform>
std::vector<Point> axis_means(std::span<const double> field, const Grid& grid, Transform transform)
{
    const auto face_grad = discrete_gradient(field, grid);
    std::vector<Point> sum(grid.cell_count(), Point{0.0, 0.0});
    std::vector<std::array<int, 2>> hits(grid.cell_count(), {0, 0});
    const auto& faces = grid.interior_faces();
    for (std::size_t k = 0; k < faces.size(); ++k) {
        const int a = faces[k].axis;
        const double v = transform(face_grad[k]);
        sum[faces[k].left][a] += v;
        sum[faces[k].right][a] += v;
        ++hits[faces[k].left][a];
        ++hits[faces[k].right][a];
    }
    for (std::size_t c = 0; c < sum.size(); ++c)
        for (int a = 0; a < 2; ++a)
            if (hits[c][a] > 0)
                sum[c][a] /= hits[c][a];
    return sum;
}

}  // namespace

std::vector<Point> cell_gradients(std::span<const double> field, const Grid& grid)
{
    return axis_means(field, grid, [](double g) { return g; });
}

double gradient_l1(std::span<const double> field, const Grid& grid)
{
    const auto g = axis_means(field, grid, [](double v) { return std::abs(v); });
    std::vector<double> terms(g.size());
    for (std::size_t c = 0; c < g.size(); ++c)
        terms[c] = std::hypot(g[c][0], g[c][1]) * grid.cell_volume();
    return compensated_sum(terms);
}

double gradient_l2_squared(std::span<const double> field, const Grid& grid)
{
    const auto g = axis_means(field, grid, [](double v) { return v * v; });
    std::vector<double> terms(g.size());
    for (std::size_t c = 0; c < g.size(); ++c)
        terms[c] = (g[c][0] + g[c][1]) * grid.cell_volume();
    return compensated_sum(terms);
}

double field_l1(std::span<const double> field, const Grid& grid)
{
    std::vector<double> terms(field.size());
    for (std::size_t c = 0; c < field.size(); ++c)
        terms[c] = std::abs(field[c]) * grid.cell_volume();
    return compensated_sum(terms);
}

double compensated_sum(std::span<const double> values)
{
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            c += (sum - t) + v;
        else
            c += (v - t) + sum;
        sum = t;
    }
    return sum + c;
}

Grid GridSpec::build() const
{
    const auto n = static_cast<std::size_t>(dim);
    return Grid::build(dim, std::span<const Interval>(extents.data(), n), std::span<const int>(counts.data(), n));
}

GridSpec GridSpec::refined(int factor) const
{
    GridSpec out = *this;
    for (int a = 0; a < dim; ++a)
        out.counts[a] *= factor;
    return out;
}

}  // namespace hsbl
