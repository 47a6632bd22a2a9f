// Copyright 2026 The abcloss Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef ABC_LOSS_IO_HPP
#define ABC_LOSS_IO_HPP

#include <abcloss/distances.hpp>
#include <abcloss/loss_models.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

/**
 * \file
 * \brief Delimited text data files.
 *
 * A data file has a header row and one row per period. Columns are `period`
 * (1, 2, ... in order), `x` or `x1`,`x2` for bivariate data, and the optional
 * claim counts `n` (and `n2`). Schema errors name the offending row and column.
 */

namespace abcloss::cli {

/// Raised when a data file does not match the schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed observations.
struct DataSet {
  SyntheticData data;
  std::optional<ObservedFrequencies> frequencies;
  std::variant<PartitionedUnivariate, PartitionedBivariate> partitioned;

  [[nodiscard]] bool bivariate() const { return data.bivariate(); }
};

/// Shortest text that reads back to the same double.
inline std::string format_number(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace detail {

inline std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream{line};
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

/// Parses a data file from a stream; `source` names it in error messages.
inline DataSet parse_data(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) {
    throw DataError(source + ": missing header row");
  }
  const auto header = detail::split(line);
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    if (name != "period" && name != "x" && name != "x1" && name != "x2" && name != "n" && name != "n2") {
      throw DataError(source + ": header, column " + std::to_string(i + 1) + ": unknown column '" + name + "'");
    }
    if (!columns.emplace(name, i).second) {
      throw DataError(source + ": header: duplicate column '" + name + "'");
    }
  }
  const auto has = [&](const char* name) { return columns.count(name) > 0; };
  if (!has("period")) throw DataError(source + ": header: missing column 'period'");
  const bool bivariate = has("x1") || has("x2");
  if (bivariate) {
    if (has("x")) throw DataError(source + ": header: give either 'x' or 'x1','x2', not both");
    if (!has("x1")) throw DataError(source + ": header: missing column 'x1'");
    if (!has("x2")) throw DataError(source + ": header: missing column 'x2'");
    if (has("n") != has("n2")) throw DataError(source + ": header: bivariate counts need both 'n' and 'n2'");
  } else {
    if (!has("x")) throw DataError(source + ": header: missing column 'x'");
    if (has("n2")) throw DataError(source + ": header: column 'n2' needs bivariate data");
  }
  const bool counted = has("n");

  DataSet out;
  ObservedFrequencies frequencies;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split(line);
    const auto where = [&](const std::string& column) {
      return source + ": row " + std::to_string(row) + ", column '" + column + "': ";
    };
    if (fields.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    const auto integer = [&](const char* column) -> std::uint64_t {
      const auto& text = fields[columns.at(column)];
      std::uint64_t value = 0;
      const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
      if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw DataError(where(column) + "expected a nonnegative integer, found '" + text + "'");
      }
      return value;
    };
    const auto real = [&](const char* column) -> double {
      const auto& text = fields[columns.at(column)];
      double value = 0.0;
      const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
      if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError(where(column) + "expected a number, found '" + text + "'");
      }
      if (value < 0.0) {
        throw DataError(where(column) + "negative value " + text);
      }
      return value;
    };
    if (integer("period") != row) {
      throw DataError(where("period") + "periods must run 1, 2, ... without gaps; expected " + std::to_string(row) +
                      ", found '" + fields[columns.at("period")] + "'");
    }
    if (bivariate) {
      out.data.values.push_back(real("x1"));
      out.data.second_values.push_back(real("x2"));
    } else {
      out.data.values.push_back(real("x"));
    }
    if (counted) {
      ClaimCounts counts;
      counts.first = integer("n");
      if (counts.first == 0 && out.data.values.back() > 0.0) {
        throw DataError(where(bivariate ? "x1" : "x") + "positive amount with zero claims");
      }
      if (bivariate) {
        counts.second = integer("n2");
        if (counts.second == 0 && out.data.second_values.back() > 0.0) {
          throw DataError(where("x2") + "positive amount with zero claims");
        }
        frequencies.second.push_back(counts.second);
      }
      frequencies.first.push_back(counts.first);
      out.data.counts.push_back(counts);
    }
  }
  if (row == 0) {
    throw DataError(source + ": no data rows");
  }
  if (counted) out.frequencies = std::move(frequencies);
  if (bivariate) {
    out.partitioned = partition(out.data.values, out.data.second_values);
  } else {
    out.partitioned = partition(out.data.values);
  }
  return out;
}

/// Reads a data file.
inline DataSet load_data(const std::string& path) {
  std::ifstream in{path};
  if (!in) {
    throw DataError(path + ": cannot open data file");
  }
  return parse_data(in, path);
}

/// Writes data in the file format read by `load_data`, with counts when `with_counts` is set.
inline void write_data(std::ostream& out, const SyntheticData& data, bool with_counts) {
  const bool bivariate = data.bivariate();
  with_counts = with_counts && data.counts.size() == data.horizon();
  out << (bivariate ? "period,x1,x2" : "period,x");
  if (with_counts) out << (bivariate ? ",n,n2" : ",n");
  out << '\n';
  for (std::size_t s = 0; s < data.horizon(); ++s) {
    out << s + 1 << ',' << format_number(data.values[s]);
    if (bivariate) out << ',' << format_number(data.second_values[s]);
    if (with_counts) {
      out << ',' << data.counts[s].first;
      if (bivariate) out << ',' << data.counts[s].second;
    }
    out << '\n';
  }
}

}  // namespace abcloss::cli

#endif
