#include "racbf/valuefn.hpp"

#include "racbf/error.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace racbf {

void ValueGrid::validate() const {
  RACBF_REQUIRE(!times.empty(), "value grid needs at least one slice");
  RACBF_REQUIRE(times.size() == slices.size(), "value grid: times/slices size mismatch");
  RACBF_REQUIRE(times[0] == 0.0, "value grid: first time must be 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    RACBF_REQUIRE(times[k] < times[k - 1], "value grid: times must be strictly decreasing");
  for (const auto& s : slices) {
    RACBF_REQUIRE(s.size() == grid.size(), "value grid: slice size does not match grid");
    for (double v : s) RACBF_REQUIRE(std::isfinite(v), "value grid: non-finite value");
  }
}

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kSnapTol = 1e-9;

struct AxisCell {
  int lo_idx;
  int hi_idx;
  double w;  // weight of hi_idx
};

std::vector<AxisCell> cell_of(const Grid& grid, const Vec& x_in) {
  if (!grid.contains(x_in)) throw OutOfDomain("state outside value-function domain");
  const Vec x = grid.wrap(x_in);
  std::vector<AxisCell> cells(grid.ndim());
  for (int i = 0; i < grid.ndim(); ++i) {
    const GridDim& d = grid.dim(i);
    double s = (x[i] - d.lo) / d.spacing();
    const double r = std::round(s);
    if (std::abs(s - r) < kSnapTol) s = r;
    if (d.periodic) {
      int j = static_cast<int>(std::floor(s));
      if (j < 0) j = 0;
      if (j > d.count - 1) j = d.count - 1;
      cells[i] = {j, (j + 1) % d.count, s - j};
      if (cells[i].w >= 1.0) cells[i] = {(j + 1) % d.count, (j + 2) % d.count, 0.0};
    } else {
      int j = static_cast<int>(std::floor(s));
      if (j < 0) j = 0;
      if (j > d.count - 2) j = d.count - 2;
      double w = s - j;
      w = std::min(std::max(w, 0.0), 1.0);
      cells[i] = {j, j + 1, w};
    }
  }
  return cells;
}

// Bracketing slices for time t: value = (1-beta) * slice[k] + beta * slice[k+1].
struct TimeBracket {
  std::size_t k;
  std::size_t k_next;
  double beta;
  bool beyond;  // earlier than a converged horizon
};

TimeBracket bracket(const ValueGrid& vg, double t) {
  RACBF_REQUIRE(!vg.times.empty(), "empty value grid");
  RACBF_REQUIRE(t <= kTimeTol, "query time must be <= 0");
  if (t > 0.0) t = 0.0;
  const std::size_t last = vg.times.size() - 1;
  if (t < vg.times[last]) {
    if (t >= vg.times[last] - kTimeTol) t = vg.times[last];
    else if (vg.converged) return {last, last, 0.0, true};
    else
      throw HorizonError("query time " + std::to_string(t) + " before horizon " + std::to_string(vg.times[last]) +
                         " of a non-converged value function");
  }
  if (last == 0) return {0, 0, 0.0, false};
  // first k with times[k+1] <= t
  std::size_t lo = 0, hi = last - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (vg.times[mid + 1] <= t) hi = mid;
    else lo = mid + 1;
  }
  const std::size_t k = lo;
  const double beta = (vg.times[k] - t) / (vg.times[k] - vg.times[k + 1]);
  return {k, k + 1, beta, false};
}

// Flat index of a node from per-axis indices.
std::size_t flat_of(const Grid& grid, const std::vector<int>& idx) {
  std::size_t f = 0;
  for (int i = 0; i < grid.ndim(); ++i) f += static_cast<std::size_t>(idx[i]) * grid.stride(i);
  return f;
}

double node_partial(const Grid& grid, const std::vector<double>& slice, const std::vector<int>& idx, int axis) {
  const GridDim& d = grid.dim(axis);
  const std::size_t f = flat_of(grid, idx);
  const std::size_t st = grid.stride(axis);
  const int j = idx[axis];
  const double h = d.spacing();
  if (d.periodic) {
    const std::size_t fl = j > 0 ? f - st : f + static_cast<std::size_t>(d.count - 1) * st;
    const std::size_t fr = j < d.count - 1 ? f + st : f - static_cast<std::size_t>(d.count - 1) * st;
    return (slice[fr] - slice[fl]) / (2.0 * h);
  }
  if (j == 0) return (slice[f + st] - slice[f]) / h;
  if (j == d.count - 1) return (slice[f] - slice[f - st]) / h;
  return (slice[f + st] - slice[f - st]) / (2.0 * h);
}

// Multilinear interpolation of value and (optionally) gradient in one slice.
void interpolate(const Grid& grid, const std::vector<double>& slice, const std::vector<AxisCell>& cells,
                 double* value, Vec* gradient) {
  const int n = grid.ndim();
  std::vector<int> idx(n);
  double v = 0.0;
  if (gradient) *gradient = Vec::Zero(n);
  for (unsigned corner = 0; corner < (1u << n); ++corner) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      const bool up = (corner >> i) & 1u;
      idx[i] = up ? cells[i].hi_idx : cells[i].lo_idx;
      w *= up ? cells[i].w : 1.0 - cells[i].w;
    }
    if (w == 0.0) continue;
    v += w * slice[flat_of(grid, idx)];
    if (gradient)
      for (int i = 0; i < n; ++i) (*gradient)[i] += w * node_partial(grid, slice, idx, i);
  }
  *value = v;
}

}  // namespace

ValueSample sample(const ValueGrid& vg, const Vec& x, double t) {
  RACBF_REQUIRE(x.size() == vg.grid.ndim(), "value query: dimension mismatch");
  const auto cells = cell_of(vg.grid, x);
  const TimeBracket b = bracket(vg, t);
  ValueSample s;
  double v0 = 0.0, v1 = 0.0;
  Vec g0, g1;
  interpolate(vg.grid, vg.slices[b.k], cells, &v0, &g0);
  if (b.k_next != b.k) {
    interpolate(vg.grid, vg.slices[b.k_next], cells, &v1, &g1);
    s.value = b.beta == 0.0 ? v0 : (b.beta == 1.0 ? v1 : (1.0 - b.beta) * v0 + b.beta * v1);
    s.gradient = (1.0 - b.beta) * g0 + b.beta * g1;
    s.time_derivative = (v0 - v1) / (vg.times[b.k] - vg.times[b.k_next]);
  } else {
    s.value = v0;
    s.gradient = g0;
    s.time_derivative = 0.0;
  }
  return s;
}

double value_at(const ValueGrid& vg, const Vec& x, double t) {
  RACBF_REQUIRE(x.size() == vg.grid.ndim(), "value query: dimension mismatch");
  const auto cells = cell_of(vg.grid, x);
  const TimeBracket b = bracket(vg, t);
  double v0 = 0.0;
  interpolate(vg.grid, vg.slices[b.k], cells, &v0, nullptr);
  if (b.k_next == b.k || b.beta == 0.0) return v0;
  double v1 = 0.0;
  interpolate(vg.grid, vg.slices[b.k_next], cells, &v1, nullptr);
  if (b.beta == 1.0) return v1;
  return (1.0 - b.beta) * v0 + b.beta * v1;
}

std::vector<double> slice_at(const ValueGrid& vg, double t) {
  const TimeBracket b = bracket(vg, t);
  const auto& a = vg.slices[b.k];
  if (b.k_next == b.k || b.beta == 0.0) return a;
  const auto& c = vg.slices[b.k_next];
  if (b.beta == 1.0) return c;
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (1.0 - b.beta) * a[k] + b.beta * c[k];
  return out;
}

Vec spatial_gradient(const ValueGrid& vg, const Vec& x, double t) { return sample(vg, x, t).gradient; }

double temporal_derivative(const ValueGrid& vg, const Vec& x, double t) {
  RACBF_REQUIRE(vg.times.size() >= 2 || vg.converged, "temporal_derivative needs at least two slices");
  return sample(vg, x, t).time_derivative;
}

bool membership(const ValueGrid& vg, const Vec& x, double t) {
  try {
    return value_at(vg, x, t) >= 0.0;
  } catch (const OutOfDomain&) {
    return false;
  }
}

// --- serialization -----------------------------------------------------------

namespace {

class Writer {
public:
  std::vector<unsigned char> buf;

  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  void f64s(const std::vector<double>& v) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const unsigned char*>(v.data());
      buf.insert(buf.end(), p, p + v.size() * sizeof(double));
    } else {
      for (double x : v) f64(x);
    }
  }
  void bytes(const std::string& s) { buf.insert(buf.end(), s.begin(), s.end()); }
};

class Reader {
public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos < n || pos > b_.size()) throw FormatError(std::string("truncated file reading ") + what, pos);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos + i]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
  void f64s(std::vector<double>& out, std::size_t n, const char* what) {
    if (n > (b_.size() - pos) / 8) throw FormatError(std::string("truncated file reading ") + what, pos);
    out.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), b_.data() + pos, n * 8);
      pos += n * 8;
    } else {
      for (auto& x : out) x = f64(what);
    }
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos), b_.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }

private:
  const std::vector<unsigned char>& b_;
};

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<unsigned char> serialize(const ValueGrid& vg) {
  vg.validate();
  Writer w;
  w.bytes("RAVG");
  w.u32(kRavgVersion);
  w.u32(static_cast<std::uint32_t>(vg.grid.ndim()));
  for (const auto& d : vg.grid.dims()) {
    w.f64(d.lo);
    w.f64(d.hi);
    w.u32(static_cast<std::uint32_t>(d.count));
    w.u8(d.periodic ? 1 : 0);
  }
  w.u32(static_cast<std::uint32_t>(vg.times.size()));
  for (double t : vg.times) w.f64(t);
  for (const auto& s : vg.slices) w.f64s(s);
  nlohmann::json prov = vg.provenance;
  prov["converged"] = vg.converged;
  const std::string js = prov.dump();
  w.u32(static_cast<std::uint32_t>(js.size()));
  w.bytes(js);
  w.u32(crc_of(w.buf.data(), w.buf.size()));
  return std::move(w.buf);
}

ValueGrid deserialize(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != "RAVG") throw FormatError("bad magic, expected RAVG", 0);
  const std::size_t version_at = r.pos;
  const std::uint32_t version = r.u32("version");
  if (version != kRavgVersion) throw FormatError("unsupported RAVG version " + std::to_string(version), version_at);
  const std::size_t ndim_at = r.pos;
  const std::uint32_t ndim = r.u32("dimension count");
  if (ndim == 0 || ndim > 8) throw FormatError("invalid dimension count", ndim_at);
  std::vector<GridDim> dims(ndim);
  for (auto& d : dims) {
    const std::size_t at = r.pos;
    d.lo = r.f64("grid lo");
    d.hi = r.f64("grid hi");
    d.count = static_cast<int>(r.u32("grid count"));
    const std::uint8_t p = r.u8("periodic flag");
    if (p > 1 || !(d.lo < d.hi) || d.count < 3) throw FormatError("invalid grid block", at);
    d.periodic = p == 1;
  }
  ValueGrid vg;
  vg.grid = Grid(dims);
  const std::size_t nslices_at = r.pos;
  const std::uint32_t nslices = r.u32("slice count");
  if (nslices == 0) throw FormatError("no slices", nslices_at);
  r.need(static_cast<std::size_t>(nslices) * 8, "times");
  vg.times.resize(nslices);
  for (auto& t : vg.times) t = r.f64("time");
  vg.slices.resize(nslices);
  for (auto& s : vg.slices) s.reserve(vg.grid.size());
  for (auto& s : vg.slices) r.f64s(s, vg.grid.size(), "slice values");
  const std::size_t prov_at = r.pos;
  const std::uint32_t plen = r.u32("provenance length");
  const std::string js = r.str(plen, "provenance");
  const std::size_t crc_at = r.pos;
  const std::uint32_t stored = r.u32("crc");
  if (r.pos != bytes.size()) throw FormatError("trailing bytes after CRC", r.pos);
  if (crc_of(bytes.data(), crc_at) != stored) throw FormatError("CRC mismatch", crc_at);
  try {
    vg.provenance = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception&) {
    throw FormatError("provenance is not valid JSON", prov_at);
  }
  if (!vg.provenance.is_object()) throw FormatError("provenance must be a JSON object", prov_at);
  vg.converged = vg.provenance.value("converged", false);
  vg.provenance.erase("converged");
  try {
    vg.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(e.what(), nslices_at);
  }
  return vg;
}

void save(const ValueGrid& vg, const std::string& path) {
  const auto bytes = serialize(vg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ValueGrid load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("read failed for '" + path + "'");
  return deserialize(bytes);
}

}  // namespace racbf
