#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace spherelab {

// All numeric text output goes through this: shortest representation that
// round-trips a double (17 significant digits), identical across runs.
std::string format_g17(double v);

// Writes header + matrix rows as CSV. Every cell formatted with format_g17.
void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

// Opens `path` for writing; "-" means stdout. The returned stream stays
// valid for the lifetime of the sink object.
class output_sink {
 public:
  explicit output_sink(const std::string& path);
  ~output_sink();
  std::ostream& stream();
  bool is_stdout() const { return file_ == nullptr; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct csv_table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

// Reads a numeric CSV. A first line that does not parse as numbers is taken
// as the header. Ragged rows raise degenerate_input.
csv_table read_csv(const std::string& path);

}  // namespace spherelab
