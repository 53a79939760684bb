#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace boxctrl::cli {

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// "%.17g", with -0 printed as 0 so outputs do not depend on signed zeros.
std::string format_number(double x);

class CsvTable {
 public:
  CsvTable(std::uint64_t config_hash, std::vector<std::string> header);

  void row(const std::vector<double>& values);
  void write(const std::filesystem::path& path) const;

 private:
  std::string text_;
  std::size_t columns_;
};

}  // namespace boxctrl::cli
