#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <unistd.h>

#include "mipvu/error.hpp"

namespace mipvu::io {

inline std::ifstream open_input(const std::filesystem::path& path,
                                std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Writes `contents` to a sibling temp file and renames it over `path`, so a
/// reader never observes a partially written output.
inline void write_atomic(const std::filesystem::path& path,
                         const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw io_error("cannot create directory '" +
                     path.parent_path().string() + "': " + ec.message());
    }
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw io_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("cannot rename onto '" + path.string() + "'");
  }
}

}  // namespace mipvu::io
