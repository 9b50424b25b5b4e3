// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "contextual/error.hpp"

namespace contextual {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::file_not_found, path);
    }
    throw Error(ErrorKind::io_error, "cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::io_error, "cannot open " + path + " for writing");
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw Error(ErrorKind::io_error, "short write to " + path);
  }
}

/// Splits file contents into lines; accepts LF endings with or without a
/// trailing newline, and tolerates CRLF by stripping the CR.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::string contents = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) {
      if (start < contents.size()) lines.push_back(contents.substr(start));
      break;
    }
    std::string line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

}  // namespace contextual
