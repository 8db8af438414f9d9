#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace flatcore {

// %.17g — shortest representation that round-trips a double
std::string fmt_g17(double v);

using CsvCell = std::variant<double, long long, std::string>;

// Comma-separated writer. Every file starts with a schema-version comment
// line followed by the column header; numeric cells use %.17g so identical
// runs are byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns);
  void row(const std::vector<CsvCell>& cells);
  void comment(const std::string& text);  // "# ..." line
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  size_t n_cols_;
};

}  // namespace flatcore
