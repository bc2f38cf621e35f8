#include "dft/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dft/errors.hpp"

namespace dft {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double v) {
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(&v), 8);  // little-endian hosts only
}

double read_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_magic(std::ostream& os) { os.write("DFTG", 4); }

void expect_magic(std::istream& is, const std::string& path) {
    char m[4];
    is.read(m, 4);
    if (!is || std::string(m, 4) != "DFTG")
        throw ValidationError("not a DFTG file: " + path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open for reading: " + path);
    return is;
}

}  // namespace

// ---------------------------------------------------------------------------
// GridFunction

GridFunction GridFunction::zeros(int size, double extent) {
    GridFunction f;
    f.size = size;
    f.extent = extent;
    f.mask_radius = extent;
    f.values = Eigen::MatrixXd::Zero(size, size);
    return f;
}

void GridFunction::cell_of(const Vec2& x, int& ix, int& iy) const {
    const double h = spacing();
    ix = std::clamp(static_cast<int>(std::floor((x[0] + extent) / h)), 0, size - 1);
    iy = std::clamp(static_cast<int>(std::floor((x[1] + extent) / h)), 0, size - 1);
}

double GridFunction::interpolate(const Vec2& x) const {
    const double h = spacing();
    // coordinates in units of cells, relative to the center of cell (0,0)
    const double u = (x[0] + extent) / h - 0.5;
    const double v = (x[1] + extent) / h - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double fu = u - i0, fv = v - j0;
    double out = 0.0;
    for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
            const int i = i0 + di, j = j0 + dj;
            if (i < 0 || j < 0 || i >= size || j >= size) continue;
            const double w = (di ? fu : 1.0 - fu) * (dj ? fv : 1.0 - fv);
            out += w * values(i, j);
        }
    }
    return out;
}

void GridFunction::apply_mask() {
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            if (cell_center(i, j).norm() > mask_radius) values(i, j) = 0.0;
}

double GridFunction::inner(const GridFunction& o) const {
    const double h = spacing();
    return h * h * values.cwiseProduct(o.values).sum();
}

double SinogramFunction::inner(const SinogramFunction& o) const {
    return step0 * step1 * values.cwiseProduct(o.values).sum();
}

// ---------------------------------------------------------------------------
// phantoms

GridFunction phantom_gaussian(int size, double extent, const Vec2& center, double sigma) {
    GridFunction f = GridFunction::zeros(size, extent);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            f.values(i, j) =
                std::exp(-(f.cell_center(i, j) - center).squaredNorm() / (2.0 * sigma * sigma));
    f.apply_mask();
    return f;
}

GridFunction phantom_disk(int size, double extent, double radius) {
    GridFunction f = GridFunction::zeros(size, extent);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            f.values(i, j) = f.cell_center(i, j).norm() <= radius ? 1.0 : 0.0;
    f.apply_mask();
    return f;
}

GridFunction phantom_point(int size, double extent, const Vec2& center) {
    return phantom_gaussian(size, extent, center, 2.0 * 2.0 * extent / size);
}

GridFunction phantom_by_name(const std::string& name, int size, double extent) {
    if (name == "gaussian")
        return phantom_gaussian(size, extent, Vec2::Zero(), 0.18 * extent);
    if (name == "offcenter")
        return phantom_gaussian(size, extent, Vec2(0.3 * extent, 0.2 * extent), 0.12 * extent);
    if (name == "disk") return phantom_disk(size, extent, 0.5 * extent);
    if (name == "point") return phantom_point(size, extent, Vec2::Zero());
    throw ValidationError("unknown phantom: " + name);
}

// ---------------------------------------------------------------------------
// file formats

void write_dftg(const std::string& path, const GridFunction& f) {
    auto os = open_out(path);
    write_magic(os);
    write_u32(os, 2);
    write_u32(os, static_cast<std::uint32_t>(f.size));
    write_u32(os, static_cast<std::uint32_t>(f.size));
    for (int i = 0; i < f.size; ++i)
        for (int j = 0; j < f.size; ++j) write_f64(os, f.values(i, j));
}

GridFunction read_dftg_grid(const std::string& path, double extent) {
    auto is = open_in(path);
    expect_magic(is, path);
    const std::uint32_t rank = read_u32(is);
    if (rank != 2) throw ValidationError("DFTG grid must have rank 2: " + path);
    const std::uint32_t d0 = read_u32(is);
    const std::uint32_t d1 = read_u32(is);
    if (d0 != d1) throw ValidationError("DFTG grid must be square: " + path);
    GridFunction f = GridFunction::zeros(static_cast<int>(d0), extent);
    for (std::uint32_t i = 0; i < d0; ++i)
        for (std::uint32_t j = 0; j < d1; ++j) f.values(i, j) = read_f64(is);
    if (!is) throw ValidationError("truncated DFTG file: " + path);
    return f;
}

void write_dftg(const std::string& path, const SinogramFunction& u) {
    auto os = open_out(path);
    write_magic(os);
    write_u32(os, 2);
    write_u32(os, static_cast<std::uint32_t>(u.count0()));
    write_u32(os, static_cast<std::uint32_t>(u.count1()));
    write_u32(os, 2);  // axis-label table
    for (const std::string& label : {u.label0, u.label1}) {
        write_u32(os, static_cast<std::uint32_t>(label.size()));
        os.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
    write_f64(os, u.origin0);
    write_f64(os, u.step0);
    write_f64(os, u.origin1);
    write_f64(os, u.step1);
    for (int i = 0; i < u.count0(); ++i)
        for (int j = 0; j < u.count1(); ++j) write_f64(os, u.values(i, j));
}

SinogramFunction read_dftg_sinogram(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, path);
    if (read_u32(is) != 2) throw ValidationError("DFTG sinogram must have rank 2: " + path);
    const std::uint32_t d0 = read_u32(is);
    const std::uint32_t d1 = read_u32(is);
    if (read_u32(is) != 2) throw ValidationError("DFTG sinogram needs 2 axis labels: " + path);
    SinogramFunction u;
    std::string* labels[2] = {&u.label0, &u.label1};
    for (auto* label : labels) {
        const std::uint32_t len = read_u32(is);
        label->resize(len);
        is.read(label->data(), len);
    }
    u.origin0 = read_f64(is);
    u.step0 = read_f64(is);
    u.origin1 = read_f64(is);
    u.step1 = read_f64(is);
    u.values.resize(d0, d1);
    for (std::uint32_t i = 0; i < d0; ++i)
        for (std::uint32_t j = 0; j < d1; ++j) u.values(i, j) = read_f64(is);
    if (!is) throw ValidationError("truncated DFTG file: " + path);
    return u;
}

void write_pgm16(const std::string& path, const Eigen::MatrixXd& image) {
    auto os = open_out(path);
    const double lo = image.minCoeff();
    const double hi = image.maxCoeff();
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    os << "P5\n" << image.cols() << " " << image.rows() << "\n65535\n";
    for (int i = 0; i < image.rows(); ++i) {
        for (int j = 0; j < image.cols(); ++j) {
            const auto v = static_cast<std::uint16_t>(
                std::lround((image(i, j) - lo) * scale));
            const unsigned char b[2] = {static_cast<unsigned char>(v >> 8),
                                        static_cast<unsigned char>(v & 0xff)};
            os.write(reinterpret_cast<const char*>(b), 2);
        }
    }
}

void write_csv_pairs(const std::string& path, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<double>& xs,
                     const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ValidationError("csv columns differ in length");
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os.precision(17);
    os << xlabel << "," << ylabel << "\n";
    for (std::size_t i = 0; i < xs.size(); ++i) os << xs[i] << "," << ys[i] << "\n";
}

std::uint64_t fnv1a_file(const std::string& path) {
    auto is = open_in(path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!is) break;
    }
    return h;
}

}  // namespace dft
