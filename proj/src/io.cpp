#include "spherelab/io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spherelab/errors.hpp"

namespace spherelab {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) os << ',';
    os << header[j];
  }
  os << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) os << ',';
      os << format_g17(rows(i, j));
    }
    os << '\n';
  }
}

output_sink::output_sink(const std::string& path) {
  if (path != "-") {
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw degenerate_input("cannot open output file: " + path);
  }
}

output_sink::~output_sink() = default;

std::ostream& output_sink::stream() { return file_ ? *file_ : std::cout; }

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) return false;
      out.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

csv_table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw degenerate_input("cannot open input file: " + path);

  csv_table table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::vector<double> parsed;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (parse_row(line, parsed)) {
      rows.push_back(parsed);
    } else if (first) {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    } else {
      throw degenerate_input("unparsable CSV row in " + path + ": " + line);
    }
    first = false;
  }
  if (rows.empty()) throw degenerate_input("no data rows in " + path);
  std::size_t ncol = rows[0].size();
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncol));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != ncol)
      throw degenerate_input("ragged CSV row in " + path);
    for (std::size_t j = 0; j < ncol; ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return table;
}

}  // namespace spherelab
