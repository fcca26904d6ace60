#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace dtx::csv {

/// Fixed-format double used in every CSV we emit, so identical runs produce
/// byte-identical files. %.17g round-trips doubles exactly.
std::string num(double v);
std::string num(long v);

class Writer {
 public:
  explicit Writer(const std::string& path);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void flush();

 private:
  std::ofstream out_;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when missing
  double value(size_t row, int col) const;
};

Table read(const std::string& path);

}  // namespace dtx::csv
