#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace issuelab::csv {

/// Quotes a field when it holds a comma, quote or line break.
std::string escape(std::string_view field);

/// Fixed 12 significant digits; NaN/inf and empty optionals become "".
std::string number(double value);
std::string number(std::optional<double> value);
std::string number(std::int64_t value);
std::string number(std::size_t value);

class Writer {
 public:
  /// Throws issuelab::Error when the file cannot be created.
  Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  /// Throws issuelab::Error if any write failed.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace issuelab::csv
