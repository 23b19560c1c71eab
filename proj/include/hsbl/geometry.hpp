/**
 * @file geometry.hpp
 * @brief Structured cell-centered grids on rectangles (1D and 2D).
 *
 * Cells are numbered x-fastest: index = i + nx * j.  Interior faces carry
 * the two cells they join (left/lower first) and the center distance used by
 * two-point flux approximations; boundary faces carry the owning cell and an
 * axis-aligned unit outward normal.
 */
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hsbl {

using Point = std::array<double, 2>;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
};

struct InteriorFace {
    std::size_t left = 0;   ///< cell on the low-coordinate side
    std::size_t right = 0;  ///< cell on the high-coordinate side
    int axis = 0;
    double area = 0.0;      ///< face measure (1 in 1D)
    double distance = 0.0;  ///< distance between the two cell centers
    Point centroid{};
};

enum class Side { XLow, XHigh, YLow, YHigh };

struct BoundaryFace {
    std::size_t cell = 0;
    Side side = Side::XLow;
    int axis = 0;
    int normal_sign = -1;  ///< outward normal is normal_sign * e_axis
    double area = 0.0;
    Point centroid{};
};

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Grid {
public:
    /// Throws GridError on dim outside {1,2}, counts < 3 or degenerate extents.
    static Grid build(int dim, std::span<const Interval> extents, std::span<const int> counts);

    int dim() const { return dim_; }
    int count(int axis) const { return counts_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    const Interval& extent(int axis) const { return extents_[axis]; }

    std::size_t cell_count() const { return cell_count_; }
    double cell_volume() const { return cell_volume_; }
    double total_volume() const;
    double boundary_measure() const;

    std::size_t index(int i, int j = 0) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(j);
    }
    std::array<int, 2> ijk(std::size_t cell) const
    {
        const auto nx = static_cast<std::size_t>(counts_[0]);
        return {static_cast<int>(cell % nx), static_cast<int>(cell / nx)};
    }
    Point cell_center(std::size_t cell) const;

    const std::vector<InteriorFace>& interior_faces() const { return interior_; }
    const std::vector<BoundaryFace>& boundary_faces() const { return boundary_; }

    /// True when the cell has a face neighbor on both sides along every axis.
    bool is_interior_cell(std::size_t cell) const;

    /// Minimum number of whole cells between the cell and the boundary.
    int cells_to_boundary(std::size_t cell) const;

    bool same_shape(const Grid& other) const;

private:
    Grid() = default;

    int dim_ = 1;
    std::array<Interval, 2> extents_{};
    std::array<int, 2> counts_{1, 1};
    std::array<double, 2> spacing_{1.0, 1.0};
    std::size_t cell_count_ = 0;
    double cell_volume_ = 0.0;
    std::vector<InteriorFace> interior_;
    std::vector<BoundaryFace> boundary_;
};

/// Value description of a grid, cheap to copy and refine.
struct GridSpec {
    int dim = 1;
    std::array<Interval, 2> extents{Interval{0.0, 1.0}, Interval{0.0, 1.0}};
    std::array<int, 2> counts{200, 1};

    Grid build() const;
    /// Same domain with every count multiplied by factor.
    GridSpec refined(int factor) const;
};

/// Two-point gradient on every interior face: (v_right - v_left) / distance.
std::vector<double> discrete_gradient(std::span<const double> field, const Grid& grid);

/**
 * Net inflow per cell from oriented face fluxes.
 *
 * interior_flux[f] is the flux along +e_axis through interior face f, so it
 * adds to the left cell and subtracts from the right one.  boundary_flux[b]
 * is the inflow through boundary face b.  Summing the result over all cells
 * reproduces the sum of boundary inflows (discrete divergence theorem).
 */
std::vector<double> net_inflow(const Grid& grid, std::span<const double> interior_flux,
                               std::span<const double> boundary_flux);

/**
 * Cell gradient reconstructed from face gradients: along each axis, the mean
 * of the two-point gradients on the cell's interior faces (the single
 * interior face for a boundary cell).  Exact for affine fields.
 */
std::vector<Point> cell_gradients(std::span<const double> field, const Grid& grid);

/// Discrete BV seminorm: sum over cells of the gradient magnitude times the
/// cell volume, where each axis component is the mean of the adjacent face
/// gradient magnitudes.  Exact on affine fields; a jump J between two
/// interior cells contributes exactly |J| times the face area.
double gradient_l1(std::span<const double> field, const Grid& grid);

/// Discrete squared L2 norm of the gradient, averaging squared face gradients.
double gradient_l2_squared(std::span<const double> field, const Grid& grid);

/// Sum over cells of |v| * volume.
double field_l1(std::span<const double> field, const Grid& grid);

/// Neumaier-compensated sum; order-independent to within one rounding.
double compensated_sum(std::span<const double> values);

}  // namespace hsbl
