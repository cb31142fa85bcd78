#pragma once

#include <iosfwd>
#include <string>

#include "heatest/grid.hpp"

namespace heatest {

struct StoredField {
  SpaceTimeGrid grid;
  SpaceTimeField values;
};

/// Binary layout: "HEST1", u64 nt, u64 nx, f64 T (little-endian), then
/// (nt + 1) x (nx - 1) doubles row-major.
void write_field(std::ostream& out, const SpaceTimeGrid& grid, const SpaceTimeField& values);
void write_field(const std::string& path, const SpaceTimeGrid& grid,
                 const SpaceTimeField& values);
StoredField read_field(std::istream& in);
StoredField read_field(const std::string& path);

/// "t,x,value" rows; intended for small fields. Every `row_stride`-th row.
void write_field_csv(std::ostream& out, const SpaceTimeGrid& grid, const SpaceTimeField& values,
                     std::size_t row_stride = 1);

}  // namespace heatest
