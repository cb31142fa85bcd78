#include "heatest/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "heatest/error.hpp"

namespace heatest {

namespace {

constexpr char kMagic[5] = {'H', 'E', 'S', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "field_io assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw IoError("read_field: truncated header");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_field(std::ostream& out, const SpaceTimeGrid& grid, const SpaceTimeField& values) {
  if (values.rows() != grid.n_rows() || values.cols() != grid.n_interior()) {
    throw InvalidInput("write_field: field shape does not match grid");
  }
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, grid.nt());
  put<std::uint64_t>(out, grid.nx());
  put<double>(out, grid.T());
  const auto data = values.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw IoError("write_field: stream error");
}

void write_field(const std::string& path, const SpaceTimeGrid& grid,
                 const SpaceTimeField& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_field: cannot open " + path);
  write_field(out, grid, values);
}

StoredField read_field(std::istream& in) {
  char magic[5];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("read_field: bad magic");
  }
  const auto nt = get<std::uint64_t>(in);
  const auto nx = get<std::uint64_t>(in);
  const auto T = get<double>(in);
  SpaceTimeGrid grid(T, nt, nx);
  SpaceTimeField values(grid.n_rows(), grid.n_interior());
  auto data = values.data();
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    throw IoError("read_field: truncated data");
  }
  return StoredField{grid, std::move(values)};
}

StoredField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_field: cannot open " + path);
  return read_field(in);
}

void write_field_csv(std::ostream& out, const SpaceTimeGrid& grid, const SpaceTimeField& values,
                     std::size_t row_stride) {
  if (row_stride == 0) row_stride = 1;
  out << "t,x,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < values.rows(); i += row_stride) {
    const auto row = values.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << grid.time(i) << ',' << grid.node(j) << ',' << row[j] << '\n';
    }
  }
}

}  // namespace heatest
