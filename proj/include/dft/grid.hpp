#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dft/metric.hpp"

namespace dft {

/// Scalar samples on a uniform cell-centered grid over the bounding square
/// [-extent, extent]^2 of the disk; values outside the disk mask are zero.
struct GridFunction {
    int size = 0;
    double extent = 1.0;
    double mask_radius = 1.0;
    Eigen::MatrixXd values;  // indexed (ix, iy)

    static GridFunction zeros(int size, double extent);

    double spacing() const { return 2.0 * extent / size; }
    Vec2 cell_center(int ix, int iy) const {
        return {-extent + (ix + 0.5) * spacing(), -extent + (iy + 0.5) * spacing()};
    }
    /// Nearest cell indices of a point (clamped to the grid).
    void cell_of(const Vec2& x, int& ix, int& iy) const;

    bool all_finite() const { return values.allFinite(); }
    /// Bilinear interpolation between cell centers; zero outside the square.
    double interpolate(const Vec2& x) const;
    void apply_mask();

    /// spacing^2-weighted inner product and norm.
    double inner(const GridFunction& o) const;
    double norm2() const { return std::sqrt(inner(*this)); }
};

enum class QuadratureRule { trapezoid, midpoint };

/// Quadrature along the curves G_z: arclength step and endpoint rule;
/// interpolation off the grid is always bilinear. step = 0 picks half the
/// grid spacing.
struct Quadrature {
    QuadratureRule rule = QuadratureRule::trapezoid;
    double step = 0.0;

    double resolve_step(double grid_spacing) const {
        return step > 0.0 ? step : 0.5 * grid_spacing;
    }
};

/// Samples on the G-parameter grid: axis 0 x axis 1 with labeled uniform axes
/// (angle x offset for lines, boundary angle x direction for X-ray).
struct SinogramFunction {
    Eigen::MatrixXd values;  // (count0, count1)
    std::string label0 = "theta", label1 = "s";
    double origin0 = 0.0, step0 = 0.0;
    double origin1 = 0.0, step1 = 0.0;

    int count0() const { return static_cast<int>(values.rows()); }
    int count1() const { return static_cast<int>(values.cols()); }
    double node0(int i) const { return origin0 + i * step0; }
    double node1(int j) const { return origin1 + j * step1; }
    bool all_finite() const { return values.allFinite(); }

    /// step0*step1-weighted inner product.
    double inner(const SinogramFunction& o) const;
};

// --- phantom library --------------------------------------------------------

GridFunction phantom_gaussian(int size, double extent, const Vec2& center, double sigma);
GridFunction phantom_disk(int size, double extent, double radius);
/// Point-like Gaussian of width 2 grid cells.
GridFunction phantom_point(int size, double extent, const Vec2& center);
GridFunction phantom_by_name(const std::string& name, int size, double extent);

// --- file formats ------------------------------------------------------------

/// DFTG binary container: magic "DFTG", u32 rank, u32 dims[rank], f64 data,
/// little-endian, row-major. The sinogram variant inserts an axis-label
/// string table (u32 count, per label u32 length + bytes) and per-axis
/// (origin, step) doubles between the dims and the data.
void write_dftg(const std::string& path, const GridFunction& f);
GridFunction read_dftg_grid(const std::string& path, double extent);
void write_dftg(const std::string& path, const SinogramFunction& u);
SinogramFunction read_dftg_sinogram(const std::string& path);

/// 16-bit binary PGM (P5, maxval 65535), values scaled to the full range.
void write_pgm16(const std::string& path, const Eigen::MatrixXd& image);

/// Two-column CSV with a header line.
void write_csv_pairs(const std::string& path, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<double>& xs,
                     const std::vector<double>& ys);

/// FNV-1a checksum of a file's bytes (manifest entries).
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace dft
