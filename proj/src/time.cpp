#include "issuelab/time.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "issuelab/errors.hpp"

namespace issuelab {

namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw Error(fmt::format("truncated timestamp '{}'", text));
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw Error(fmt::format("malformed timestamp '{}'", text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(fmt::format("malformed timestamp '{}'", text));
  }
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  const int y = read_int(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_int(text, 8, 2);
  if (text.size() < 11 || (text[10] != 'T' && text[10] != ' ')) {
    throw Error(fmt::format("malformed timestamp '{}'", text));
  }
  const int hh = read_int(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = read_int(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = read_int(text, 17, 2);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  long offset = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      // UTC
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
      const int oh = read_int(text, pos + 1, 2);
      expect_char(text, pos + 3, ':');
      const int om = read_int(text, pos + 4, 2);
      offset = (text[pos] == '+' ? 1 : -1) * (oh * 3600L + om * 60L);
    } else {
      throw Error(fmt::format("malformed timestamp '{}'", text));
    }
  }

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw Error(fmt::format("invalid calendar time '{}'", text));
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since_epoch) * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / 86400;
  Timestamp rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     rem / 3600, (rem % 3600) / 60, rem % 60);
}

Seconds parse_duration(std::string_view text) {
  std::size_t split = 0;
  while (split < text.size() &&
         ((text[split] >= '0' && text[split] <= '9') || text[split] == '.')) {
    ++split;
  }
  if (split == 0) throw Error(fmt::format("malformed duration '{}'", text));

  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + split, value);
  if (ec != std::errc() || ptr != text.data() + split || !std::isfinite(value)) {
    throw Error(fmt::format("malformed duration '{}'", text));
  }

  const std::string_view unit = text.substr(split);
  double scale = 0;
  if (unit.empty() || unit == "s") {
    scale = 1;
  } else if (unit == "m") {
    scale = kMinute;
  } else if (unit == "h") {
    scale = kHour;
  } else if (unit == "d") {
    scale = kDay;
  } else if (unit == "mo") {
    scale = kMonth;
  } else if (unit == "y") {
    scale = kYear;
  } else {
    throw Error(fmt::format("unknown duration unit in '{}'", text));
  }
  return value * scale;
}

}  // namespace issuelab
