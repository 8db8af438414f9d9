#include "flatcore/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace flatcore {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns)
    : out_(path), path_(path), n_cols_(columns.size()) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path + " for writing");
  out_ << "# schema: " << schema << "\n";
  for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != n_cols_)
    throw std::invalid_argument("csv: row width mismatch in " + path_);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    if (const auto* d = std::get_if<double>(&cells[i]))
      out_ << fmt_g17(*d);
    else if (const auto* n = std::get_if<long long>(&cells[i]))
      out_ << *n;
    else
      out_ << std::get<std::string>(cells[i]);
  }
  out_ << "\n";
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("csv: write failure on " + path_);
  out_.close();
}

}  // namespace flatcore
