// Copyright 2026 The stanfc Authors
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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stan::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  // Index of a header column; throws ParseError naming `source` when absent.
  std::size_t require(std::string_view name, std::string_view source) const;
};

// Comma-separated, optional double-quoted fields, '\n' or "\r\n" endings.
// Throws IoError when the file cannot be opened and ParseError on ragged rows.
Table read(const std::string& path);
Table parse(std::istream& in, std::string_view source);

double parse_double(std::string_view text, std::string_view context);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::string quote_if_needed(std::string_view field);

}  // namespace stan::csv
