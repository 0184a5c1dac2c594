#include "issuelab/csv.hpp"

#include <cmath>

#include <fmt/format.h>

#include "issuelab/errors.hpp"

namespace issuelab::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string number(double value) {
  if (!std::isfinite(value)) return {};
  if (value == 0) return "0";  // folds -0
  return fmt::format("{:.12g}", value);
}

std::string number(std::optional<double> value) { return value ? number(*value) : std::string{}; }

std::string number(std::int64_t value) { return fmt::format("{}", value); }

std::string number(std::size_t value) { return fmt::format("{}", value); }

Writer::Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : Writer(path, std::vector<std::string>(header.begin(), header.end())) {}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw Error(fmt::format("cannot write '{}'", path.string()));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(header[i]);
  }
  out_ << '\n';
}

void Writer::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw Error(fmt::format("{}: row has {} fields, header has {}", path_.string(), fields.size(),
                            columns_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
}

void Writer::close() {
  out_.flush();
  if (!out_) throw Error(fmt::format("write failed for '{}'", path_.string()));
  out_.close();
}

}  // namespace issuelab::csv
