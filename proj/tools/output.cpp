#include "output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "boxctrl/boxctrl.h"

namespace boxctrl::cli {

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string format_number(double x) {
  if (x == 0.0) x = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::uint64_t config_hash, std::vector<std::string> header)
    : columns_(header.size()) {
  char line[96];
  std::snprintf(line, sizeof line, "# config_hash=%016llx version=%s\n",
                static_cast<unsigned long long>(config_hash), boxctrl_version());
  text_ = line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvTable::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("csv row has the wrong width");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += format_number(values[i]);
  }
  text_ += '\n';
}

void CsvTable::write(const std::filesystem::path& path) const { write_atomic(path, text_); }

}  // namespace boxctrl::cli
