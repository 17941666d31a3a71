#pragma once

// Daily closing-price ingestion: CSV loading, log returns, and the
// positional partition into annual blocks of 252 trading days. The most
// recent remainder is discarded when blocking.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qjd/errors.hpp"

namespace qjd {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  static Date parse(const std::string& text, std::size_t line, std::size_t column) {
    Date d;
    int n = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%d%n", &d.year, &d.month, &d.day, &n) != 3 ||
        static_cast<std::size_t>(n) != text.size())
      throw ParseError(line, column, "expected ISO-8601 date, got '" + text + "'");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
      throw ParseError(line, column, "date out of range: '" + text + "'");
    return d;
  }

  bool is_weekend() const {
    // Sakamoto's day-of-week; 0 = Sunday.
    static constexpr int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    int y = year - (month < 3 ? 1 : 0);
    const int dow = (y + y / 4 - y / 100 + y / 400 + t[month - 1] + day) % 7;
    return dow == 0 || dow == 6;
  }

  Date next_day() const {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    int len = lengths[month - 1] + (month == 2 && leap ? 1 : 0);
    Date d = *this;
    if (++d.day > len) {
      d.day = 1;
      if (++d.month > 12) {
        d.month = 1;
        ++d.year;
      }
    }
    return d;
  }
};

// Workdays in (start, start + calendar_days]; weekends are discarded.
inline int trading_days_after(const Date& start, int calendar_days) {
  int count = 0;
  Date d = start;
  for (int i = 0; i < calendar_days; ++i) {
    d = d.next_day();
    if (!d.is_weekend()) ++count;
  }
  return count;
}

struct PricePoint {
  Date date;
  double close = 0.0;
};

struct PriceSeries {
  std::vector<PricePoint> records;
};

struct ReturnPoint {
  Date date;  // date of the later close in the pair
  double value = 0.0;
};

struct ReturnSeries {
  std::vector<ReturnPoint> returns;
  int block_length = 252;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(returns.size());
    for (const auto& r : returns) v.push_back(r.value);
    return v;
  }
};

struct AnnualBlocks {
  std::vector<std::vector<double>> blocks;  // chronological, oldest first
  std::size_t dropped_tail = 0;             // most-recent returns discarded
};

struct LoadedPrices {
  PriceSeries prices;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_close(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(line, 2, "empty close field");
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(line, 2, "expected a number, got '" + t + "'");
  if (!(value > 0.0))
    throw ValidationError("line " + std::to_string(line) +
                          ": close must be strictly positive, got " + t);
  return value;
}

}  // namespace detail

// Parses `date,close` CSV (header required). Out-of-order rows are sorted
// with a warning; duplicate dates and non-positive closes are rejected.
inline LoadedPrices parse_prices(std::istream& in) {
  LoadedPrices out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ValidationError("empty price file");
  ++line_no;
  if (line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' && line[2] == '\xBF')
    line = line.substr(3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (detail::trim(line) != "date,close")
    throw ParseError(1, 1, "expected header 'date,close', got '" + detail::trim(line) + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(line_no, 1, "expected 'date,close' row");
    const Date date = Date::parse(detail::trim(line.substr(0, comma)), line_no, 1);
    const double close = detail::parse_close(line.substr(comma + 1), line_no);
    out.prices.records.push_back({date, close});
  }
  if (out.prices.records.empty()) throw ValidationError("price file has no data rows");

  auto& recs = out.prices.records;
  if (!std::is_sorted(recs.begin(), recs.end(),
                      [](const auto& a, const auto& b) { return a.date < b.date; })) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const auto& a, const auto& b) { return a.date < b.date; });
    out.warnings.push_back("input rows were out of order; sorted by date");
  }
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].date == recs[i - 1].date)
      throw ValidationError("duplicate date " + recs[i].date.to_string());
  }
  return out;
}

inline LoadedPrices load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open price file: " + path);
  return parse_prices(in);
}

// Daily log returns r_n = ln(close_{n+1}) - ln(close_n). Zeros are kept.
inline ReturnSeries log_returns(const PriceSeries& prices, int block_length = 252) {
  if (prices.records.size() < 2)
    throw ValidationError("log_returns: need at least 2 price records");
  ReturnSeries out;
  out.block_length = block_length;
  out.returns.reserve(prices.records.size() - 1);
  for (std::size_t i = 1; i < prices.records.size(); ++i) {
    out.returns.push_back({prices.records[i].date,
                           std::log(prices.records[i].close) -
                               std::log(prices.records[i - 1].close)});
  }
  return out;
}

// Partition into floor(N / block_length) blocks taken from the oldest data
// forward; the remainder at the recent end is dropped.
inline AnnualBlocks block_annual(const ReturnSeries& series, int block_length = 0) {
  const int len = block_length > 0 ? block_length : series.block_length;
  if (len <= 0) throw ValidationError("block_annual: block_length must be positive");
  const std::size_t n = series.returns.size();
  if (n < static_cast<std::size_t>(len))
    throw ValidationError("block_annual: series shorter than one block");
  AnnualBlocks out;
  const std::size_t block_count = n / static_cast<std::size_t>(len);
  out.dropped_tail = n - block_count * static_cast<std::size_t>(len);
  out.blocks.reserve(block_count);
  for (std::size_t b = 0; b < block_count; ++b) {
    std::vector<double> block(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i)
      block[static_cast<std::size_t>(i)] = series.returns[b * len + i].value;
    out.blocks.push_back(std::move(block));
  }
  return out;
}

}  // namespace qjd
