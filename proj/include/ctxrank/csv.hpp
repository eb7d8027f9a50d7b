// Copyright 2026 The ctxrank Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrank::csv {

// Plain comma-separated text: no quoting, '\n' line endings, one header row.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string read_file(const std::filesystem::path& path);  // throws IoError
void write_file(const std::filesystem::path& path, std::string_view content);

// Header-indexed view over a whole file held in memory.
class Table {
 public:
  static Table parse(std::string text, const std::string& source_name);
  static Table load(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;
  // Throws ValidationError naming the column when absent.
  std::size_t require_column(std::string_view name) const;

  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<std::string_view>& row(std::size_t i) const {
    return rows_[i];
  }
  // 1-based line number in the source file.
  std::size_t line_number(std::size_t i) const { return line_numbers_[i]; }
  const std::string& source_name() const { return source_; }

 private:
  // Heap-held so the row views survive moves of the Table.
  std::unique_ptr<std::string> text_;
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string_view>> rows_;
  std::vector<std::size_t> line_numbers_;
};

}  // namespace ctxrank::csv
