#include "gbag/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gbag/errors.hpp"

namespace gbag::io {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw_config(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                   " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw_config(path + ": missing header row");
  return t;
}

double parse_double(const std::string& s, int line, bool allow_empty) {
  if (s.empty()) {
    if (allow_empty) return std::numeric_limits<double>::quiet_NaN();
    throw_config("line " + std::to_string(line) + ": empty numeric field");
  }
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw_config("line " + std::to_string(line) + ": cannot parse '" + s + "'");
  if (!std::isfinite(v)) throw_config("line " + std::to_string(line) + ": non-finite value");
  return v;
}

Dataset read_dataset(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int ty = t.column("y");
  const int tt = t.column("time");
  if (ty < 0 || tt < 0) throw_config(path + ": header needs 'time' and 'y' columns");
  int d = 0;
  while (t.column("x" + std::to_string(d + 1)) >= 0) ++d;
  if (d == 0) throw_config(path + ": header needs spatial columns x1..xd");
  std::vector<int> xcols(d), covcols;
  for (int a = 0; a < d; ++a) xcols[a] = t.column("x" + std::to_string(a + 1));
  for (int j = 1; t.column("cov" + std::to_string(j)) >= 0; ++j) covcols.push_back(t.column("cov" + std::to_string(j)));

  Dataset ds;
  ds.points = PointSet(d);
  const int n = static_cast<int>(t.rows.size());
  ds.points.reserve(n);
  ds.y.resize(n);
  ds.X.resize(n, static_cast<Eigen::Index>(covcols.size()));
  std::vector<double> c(d);
  for (int r = 0; r < n; ++r) {
    const int line = t.line_numbers[r];
    for (int a = 0; a < d; ++a) c[a] = parse_double(t.rows[r][xcols[a]], line);
    ds.points.push_back(c, parse_double(t.rows[r][tt], line));
    ds.y[r] = parse_double(t.rows[r][ty], line, true);
    for (std::size_t j = 0; j < covcols.size(); ++j) ds.X(r, j) = parse_double(t.rows[r][covcols[j]], line);
  }
  return ds;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw_config("cannot write '" + path + "'");
  const int d = data.points.dim();
  for (int a = 0; a < d; ++a) out << "x" << a + 1 << ",";
  out << "time,y";
  for (int j = 0; j < data.X.cols(); ++j) out << ",cov" << j + 1;
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int a = 0; a < d; ++a) out << fmt(data.points.coord(i, a)) << ",";
    out << fmt(data.points.time(i)) << "," << fmt(data.y[static_cast<Eigen::Index>(i)]);
    for (int j = 0; j < data.X.cols(); ++j) out << "," << fmt(data.X(static_cast<Eigen::Index>(i), j));
    out << "\n";
  }
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw_config("cannot create directory '" + path + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) h = (h ^ ch) * 1099511628211ULL;
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string location_hash(const PointSet& pts) {
  std::string bytes;
  bytes.reserve(pts.size() * (pts.dim() + 1) * sizeof(double));
  auto add = [&](double v) {
    char b[sizeof(double)];
    std::memcpy(b, &v, sizeof(double));
    bytes.append(b, sizeof(double));
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int a = 0; a < pts.dim(); ++a) add(pts.coord(i, a));
    add(pts.time(i));
  }
  return fnv1a_hex(bytes);
}

}  // namespace gbag::io
