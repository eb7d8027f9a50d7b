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

#include "ctxrank/csv.hpp"

#include <fstream>
#include <sstream>

#include "ctxrank/common.hpp"

namespace ctxrank::csv {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

Table Table::parse(std::string text, const std::string& source_name) {
  Table t;
  t.text_ = std::make_unique<std::string>(std::move(text));
  t.source_ = source_name;
  std::string_view all(*t.text_);
  std::size_t start = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (start < all.size()) {
    std::size_t end = all.find('\n', start);
    if (end == std::string_view::npos) end = all.size();
    std::string_view line = all.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      for (auto f : fields) t.header_.emplace_back(f);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header_.size()) {
      throw ValidationError(source_name + " line " + std::to_string(line_no) +
                            ": expected " + std::to_string(t.header_.size()) +
                            " fields, found " + std::to_string(fields.size()));
    }
    t.rows_.push_back(std::move(fields));
    t.line_numbers_.push_back(line_no);
  }
  if (!have_header) throw ValidationError(source_name + ": missing header row");
  return t;
}

Table Table::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw ValidationError(source_ + ": missing required column '" +
                        std::string(name) + "'");
}

}  // namespace ctxrank::csv
