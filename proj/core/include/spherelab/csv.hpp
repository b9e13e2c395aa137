#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spherelab {

/// Shortest round-trip decimal form of a double; "nan", "inf" and "-inf" for
/// non-finite values.
std::string csv_number(double value);

/// Quotes a cell when it contains a comma, quote or line break.
std::string csv_escape(std::string_view cell);

/// In-memory table written in one go, so rows appear in the order they were
/// added regardless of how they were computed.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Throws std::invalid_argument when the cell count differs from the header.
  void add_row(std::vector<std::string> cells);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  /// Writes through a temporary file and renames it into place.
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `contents` to `path` via a temporary sibling and a rename.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace spherelab
