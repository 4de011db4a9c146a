#include "bmolab/gf1.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bmolab {

namespace {

void put_double(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

[[noreturn]] void fail(const std::string& what, const std::string& msg) {
    throw std::runtime_error("GF1 " + what + ": " + msg);
}

} // namespace

void write_gf1(std::ostream& out, const TensorField& field) {
    const Grid& grid = field.grid();
    out << "GF1 " << grid.dim() << ' ' << field.rows();
    for (int i = 0; i < grid.dim(); ++i) out << ' ' << grid.shape(i);
    out << ' ';
    put_double(out, grid.spacing());
    for (int i = 0; i < grid.dim(); ++i) {
        out << ' ';
        put_double(out, grid.origin()[i]);
    }
    out << '\n';
    const int comps = field.comps();
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const std::span<const double> v = field.cell_values(cell);
        for (int e = 0; e < comps; ++e) {
            if (e) out << ' ';
            put_double(out, v[e]);
        }
        out << '\n';
    }
}

void write_gf1_file(const std::string& path, const TensorField& field) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    write_gf1(out, field);
    if (!out) fail(path, "write failed");
}

TensorField read_gf1(std::istream& in, const std::string& what) {
    std::string magic;
    int dim = 0, rows = 0;
    if (!(in >> magic >> dim >> rows)) fail(what, "unreadable header");
    if (magic != "GF1") fail(what, "bad magic '" + magic + "', expected GF1");
    if (dim < 1 || dim > kMaxDim) fail(what, "dim out of range");
    if (rows < 1) fail(what, "N out of range");
    std::vector<int> shape(static_cast<std::size_t>(dim));
    for (int& s : shape)
        if (!(in >> s)) fail(what, "unreadable shape");
    double h = 0.0;
    if (!(in >> h)) fail(what, "unreadable spacing");
    std::vector<double> origin(static_cast<std::size_t>(dim));
    for (double& o : origin)
        if (!(in >> o)) fail(what, "unreadable origin");
    Grid grid(dim, shape, h, origin);
    const std::int64_t total = grid.cell_count() * rows * dim;
    std::vector<double> values(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i)
        if (!(in >> values[static_cast<std::size_t>(i)]))
            fail(what, "expected " + std::to_string(total) + " values, got " + std::to_string(i));
    return TensorField(grid, rows, std::move(values));
}

TensorField read_gf1_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open for reading");
    return read_gf1(in, path);
}

} // namespace bmolab
