// Copyright 2026 The MAGIC Authors
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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace magic::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::string source;

  std::ptrdiff_t column(std::string_view name) const;
};

/// Parses a UTF-8 CSV with a mandatory header row. Quoted fields follow
/// RFC 4180. Every row must have as many fields as the header.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source = "<memory>");

/// Parses a real number; throws a Parse error naming `where` otherwise.
double to_double(const std::string& text, const std::string& where);
long to_long(const std::string& text, const std::string& where);

/// Shortest representation that parses back to the identical double.
std::string format(double value);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Writes `contents` atomically enough for our purposes (truncate + write),
/// throwing an Io error on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Matrix with a header row and an optional leading label column.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& column_names,
                  const std::string& label_header, const std::vector<std::string>& row_labels);

}  // namespace magic::csv
