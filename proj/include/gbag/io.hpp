#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbag/domain.hpp"

namespace gbag::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  int column(const std::string& name) const;  // -1 when absent
};

/// Comma-separated with a header row. Blank lines and lines starting with '#' are skipped.
CsvTable read_csv(const std::string& path);
/// Parses a double; an empty field gives NaN when allow_empty, else throws with the line number.
double parse_double(const std::string& s, int line, bool allow_empty = false);

/// Reads `x1..xd,time,y,cov1..covp`. Empty y marks a prediction-only location.
Dataset read_dataset(const std::string& path);
void write_dataset(const std::string& path, const Dataset& data);

/// Shortest round-trip decimal representation.
std::string fmt(double v);

void ensure_directory(const std::string& path);
std::string join_path(const std::string& dir, const std::string& name);

/// FNV-1a over a byte string, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
/// Hash of the coordinates of a point set.
std::string location_hash(const PointSet& pts);

}  // namespace gbag::io
