#include <carnot/errors.hpp>
#include <carnot/io.hpp>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace carnot
{

static_assert(std::endian::native == std::endian::little, "CGOP tables are written in host order");

namespace
{

constexpr char kMagic[4] = {'C', 'G', 'O', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer
{
public:
  explicit Writer(const std::string &path) : path_(path), out_(path, std::ios::binary)
  {
    if (!out_)
      fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  template <class T> void put(T v) { out_.write(reinterpret_cast<const char *>(&v), sizeof(T)); }
  void header(TableKind k)
  {
    out_.write(kMagic, 4);
    put(kVersion);
    put(static_cast<std::uint32_t>(k));
    put(std::uint32_t(0));
  }
  ~Writer() noexcept(false)
  {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0)
      fail(ErrorCode::IoError, "write to " + path_ + " failed");
  }

private:
  std::string path_;
  std::ofstream out_;
};

class Reader
{
public:
  explicit Reader(const std::string &path) : path_(path), in_(path, std::ios::binary)
  {
    if (!in_)
      fail(ErrorCode::IoError, "cannot open " + path);
  }
  template <class T> T get()
  {
    T v;
    in_.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!in_)
      fail(ErrorCode::IoError, path_ + ": truncated table");
    return v;
  }
  TableKind header()
  {
    char m[4];
    in_.read(m, 4);
    if (!in_ || std::memcmp(m, kMagic, 4) != 0)
      fail(ErrorCode::IoError, path_ + ": not a CGOP table");
    if (get<std::uint32_t>() != kVersion)
      fail(ErrorCode::IoError, path_ + ": unsupported CGOP version");
    const auto k = get<std::uint32_t>();
    get<std::uint32_t>();
    if (k < 1 || k > 3)
      fail(ErrorCode::IoError, path_ + ": unknown table kind");
    return static_cast<TableKind>(k);
  }
  void expect(TableKind k)
  {
    if (header() != k)
      fail(ErrorCode::IoError, path_ + ": table kind mismatch");
  }

private:
  std::string path_;
  std::ifstream in_;
};

std::ofstream open_text(const std::string &path)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  return out;
}

}  // namespace

std::string format_double(double x)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_grid_binary(const std::string &path, const Lattice &latt, const Vec &u)
{
  if (u.size() != latt.size())
    fail(ErrorCode::DimensionMismatch, "grid function length differs from the lattice");
  Writer w(path);
  w.header(TableKind::GridFunction);
  w.put(static_cast<std::uint32_t>(latt.dim()));
  w.put(latt.spec().radius);
  w.put(latt.spec().spacing);
  w.put(static_cast<std::uint32_t>(latt.spec().offset));
  w.put(static_cast<std::uint64_t>(latt.size()));
  for (Index p = 0; p < latt.size(); ++p)
  {
    const Vec x = latt.point(p);
    for (double c : x)
      w.put(c);
    w.put(u[p]);
  }
}

void write_operator_binary(const std::string &path, const SpMat &a)
{
  Writer w(path);
  w.header(TableKind::SparseOperator);
  w.put(static_cast<std::uint64_t>(a.rows()));
  w.put(static_cast<std::uint64_t>(a.cols()));
  w.put(static_cast<std::uint64_t>(a.nonZeros()));
  for (Index k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
    {
      w.put(static_cast<std::uint64_t>(it.row()));
      w.put(static_cast<std::uint64_t>(it.col()));
      w.put(it.value());
    }
}

void write_dense_binary(const std::string &path, const Mat &a)
{
  Writer w(path);
  w.header(TableKind::DenseMatrix);
  w.put(static_cast<std::uint64_t>(a.rows()));
  w.put(static_cast<std::uint64_t>(a.cols()));
  for (Index k = 0; k < a.size(); ++k)
    w.put(a.data()[k]);
}

TableKind peek_kind(const std::string &path)
{
  return Reader(path).header();
}

GridTable read_grid_binary(const std::string &path)
{
  Reader r(path);
  r.expect(TableKind::GridFunction);
  GridTable t;
  t.dim = static_cast<int>(r.get<std::uint32_t>());
  t.spec.radius = r.get<double>();
  t.spec.spacing = r.get<double>();
  t.spec.offset = r.get<std::uint32_t>() != 0;
  const auto n = static_cast<Index>(r.get<std::uint64_t>());
  t.coords.resize(n, t.dim);
  t.values.resize(n);
  for (Index p = 0; p < n; ++p)
  {
    for (int j = 0; j < t.dim; ++j)
      t.coords(p, j) = r.get<double>();
    t.values[p] = r.get<double>();
  }
  return t;
}

SpMat read_operator_binary(const std::string &path)
{
  Reader r(path);
  r.expect(TableKind::SparseOperator);
  const auto rows = static_cast<Index>(r.get<std::uint64_t>());
  const auto cols = static_cast<Index>(r.get<std::uint64_t>());
  const auto nnz = r.get<std::uint64_t>();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz);
  for (std::uint64_t k = 0; k < nnz; ++k)
  {
    const auto i = static_cast<Index>(r.get<std::uint64_t>());
    const auto j = static_cast<Index>(r.get<std::uint64_t>());
    const double v = r.get<double>();
    if (i >= rows || j >= cols)
      fail(ErrorCode::IoError, path + ": entry outside the declared shape");
    trip.emplace_back(i, j, v);
  }
  SpMat a(rows, cols);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

Mat read_dense_binary(const std::string &path)
{
  Reader r(path);
  r.expect(TableKind::DenseMatrix);
  const auto rows = static_cast<Index>(r.get<std::uint64_t>());
  const auto cols = static_cast<Index>(r.get<std::uint64_t>());
  Mat a(rows, cols);
  for (Index k = 0; k < a.size(); ++k)
    a.data()[k] = r.get<double>();
  return a;
}

void write_grid_csv(const std::string &path, const Lattice &latt, const Vec &u)
{
  if (u.size() != latt.size())
    fail(ErrorCode::DimensionMismatch, "grid function length differs from the lattice");
  auto out = open_text(path);
  for (int j = 0; j < latt.dim(); ++j)
    out << 'x' << j + 1 << ',';
  out << "value\n";
  for (Index p = 0; p < latt.size(); ++p)
  {
    const Vec x = latt.point(p);
    for (double c : x)
      out << format_double(c) << ',';
    out << format_double(u[p]) << '\n';
  }
}

void write_operator_csv(const std::string &path, const SpMat &a)
{
  auto out = open_text(path);
  out << "row,col,value\n";
  for (Index k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      out << it.row() << ',' << it.col() << ',' << format_double(it.value()) << '\n';
}

}  // namespace carnot
