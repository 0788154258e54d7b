#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <system_error>

#include "dnr/error.hpp"

namespace dnr {

// Writes through a sibling temporary file and renames it into place, so a
// failed write never leaves a partial file at `path`.
inline void atomic_write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() /
                       (target.filename().string() + ".tmp" + std::to_string(std::random_device{}()));
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write '" + tmp.string() + "'");
      body(out);
      out.flush();
      if (!out) throw DataError("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, target);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

}  // namespace dnr
