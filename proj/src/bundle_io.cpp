#include <bit>
#include <cstring>
#include <fstream>

#include "fk/errors.hpp"
#include "fk/forward.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

constexpr char kMagic[5] = {'F', 'K', 'R', 'B', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(ErrorKind::InvalidInput, "forward", "truncated bundle file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_bundle_csv(const ReflectedPathBundle& b, const std::string& path, std::size_t max_paths) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::InvalidInput, "forward", "cannot open " + path);
  os << "path,step,time";
  for (int i = 0; i < b.d; ++i) os << ",x" << i;
  os << ",A,boundary\n";
  const std::size_t P = std::min(max_paths, b.M);
  for (std::size_t p = 0; p < P; ++p) {
    for (int n = 0; n <= b.N(); ++n) {
      os << p << ',' << n << ',' << to_text(b.grid.node(n));
      for (int i = 0; i < b.d; ++i) os << ',' << to_text(b.x(p, n)[i]);
      os << ',' << to_text(b.a(p, n)) << ',' << (b.on_boundary(p, n) ? 1 : 0) << '\n';
    }
  }
}

// Layout: magic, u64 M N d k seed start_index scheme, f64 T t_start
// snap_distance, x_start[d], X, A, dB, then one byte per boundary flag.
void write_bundle_binary(const ReflectedPathBundle& b, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::InvalidInput, "forward", "cannot open " + path);
  os.write(kMagic, sizeof kMagic);
  for (std::uint64_t v : {static_cast<std::uint64_t>(b.M), static_cast<std::uint64_t>(b.N()),
                          static_cast<std::uint64_t>(b.d), static_cast<std::uint64_t>(b.k), b.seed,
                          static_cast<std::uint64_t>(b.start_index), static_cast<std::uint64_t>(b.scheme)}) {
    put_u64(os, v);
  }
  put_f64(os, b.grid.T());
  put_f64(os, b.t_start);
  put_f64(os, b.snap_distance);
  for (int i = 0; i < b.d; ++i) put_f64(os, b.x_start[i]);
  for (double v : b.X) put_f64(os, v);
  for (double v : b.A) put_f64(os, v);
  for (double v : b.dB) put_f64(os, v);
  os.write(reinterpret_cast<const char*>(b.boundary.data()), static_cast<std::streamsize>(b.boundary.size()));
  if (!os) fail(ErrorKind::InvalidInput, "forward", "write failed for " + path);
}

ReflectedPathBundle read_bundle_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::InvalidInput, "forward", "cannot open " + path);
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    fail(ErrorKind::InvalidInput, "forward", path + " is not an FKRB1 bundle");
  }
  ReflectedPathBundle b;
  b.M = get_u64(is);
  const auto N = get_u64(is);
  b.d = static_cast<int>(get_u64(is));
  b.k = static_cast<int>(get_u64(is));
  b.seed = get_u64(is);
  b.start_index = static_cast<int>(get_u64(is));
  b.scheme = static_cast<ReflectionScheme>(get_u64(is));
  const double T = get_f64(is);
  b.grid = TimeGrid(T, static_cast<int>(N));
  b.t_start = get_f64(is);
  b.snap_distance = get_f64(is);
  b.x_start.resize(b.d);
  for (int i = 0; i < b.d; ++i) b.x_start[i] = get_f64(is);
  b.X.resize(b.M * (N + 1) * b.d);
  b.A.resize(b.M * (N + 1));
  b.dB.resize(b.M * N * b.k);
  b.boundary.resize(b.M * (N + 1));
  for (double& v : b.X) v = get_f64(is);
  for (double& v : b.A) v = get_f64(is);
  for (double& v : b.dB) v = get_f64(is);
  if (!is.read(reinterpret_cast<char*>(b.boundary.data()), static_cast<std::streamsize>(b.boundary.size()))) {
    fail(ErrorKind::InvalidInput, "forward", "truncated bundle file");
  }
  return b;
}

}  // namespace fk
