#pragma once

#include <iosfwd>
#include <string>

#include "bmolab/grid.hpp"

namespace bmolab {

/// Grid-field text format "GF1".
///
/// Header line:  GF1 n N shape... h origin...
/// Body:         one whitespace-separated row of N*n reals per cell, in
///               row-major cell order (axis 0 slowest).
///
/// Values are written with 17 significant digits, so the round trip is
/// bit-identical.

void write_gf1(std::ostream& out, const TensorField& field);
void write_gf1_file(const std::string& path, const TensorField& field);

TensorField read_gf1(std::istream& in, const std::string& what = "<stream>");
TensorField read_gf1_file(const std::string& path);

} // namespace bmolab
