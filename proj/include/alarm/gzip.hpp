#pragma once

// Transparent .gz handling for compressed NIfTI files (zlib).

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <zlib.h>

#include "alarm/io_util.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

inline bool has_gz_suffix(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

inline std::vector<std::uint8_t> read_file_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 20);
  for (;;) {
    int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      gzclose(f);
      fail(ErrorCode::IoFailure, "gzip decompression failed for " + path);
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    if (n < static_cast<int>(chunk.size())) break;
  }
  gzclose(f);
  return out;
}

// Reads the file, inflating it first when the name ends in .gz.
inline std::vector<std::uint8_t> read_file_auto(const std::string& path) {
  return has_gz_suffix(path) ? read_file_gz(path) : read_file(path);
}

inline void write_file_gz(const std::string& path,
                          const std::vector<std::uint8_t>& bytes) {
  gzFile f = gzopen(path.c_str(), "wb");
  if (!f) fail(ErrorCode::IoFailure, "cannot create " + path);
  std::size_t done = 0;
  while (done < bytes.size()) {
    unsigned step = static_cast<unsigned>(
        std::min<std::size_t>(bytes.size() - done, 1u << 20));
    if (gzwrite(f, bytes.data() + done, step) != static_cast<int>(step)) {
      gzclose(f);
      fail(ErrorCode::IoFailure, "gzip write failed for " + path);
    }
    done += step;
  }
  gzclose(f);
}

}  // namespace alarmkit
