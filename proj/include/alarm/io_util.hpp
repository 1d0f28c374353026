#pragma once

// Small file helpers shared by the format readers/writers and the CLI.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  if (len < 0) fail(ErrorCode::IoFailure, "cannot stat " + path);
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) fail(ErrorCode::IoFailure, "short read on " + path);
  return bytes;
}

// Unique-per-call temp suffix: a per-process random token (so concurrent
// processes writing the same target cannot collide) plus a counter (so
// concurrent threads cannot either).
inline std::string temp_suffix() {
  static const std::uint64_t token = [] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }();
  static std::atomic<std::uint64_t> serial{0};
  return ".tmp" + std::to_string(token % 1000000) + "-" +
         std::to_string(serial.fetch_add(1, std::memory_order_relaxed));
}

// All output files go through this: write to a temp sibling, then rename.
// A crash mid-write never leaves a partial file at the target path.
inline void atomic_write_file(const std::string& path,
                              const void* data, std::size_t size) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += temp_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + tmp.string());
    if (size > 0) out.write(static_cast<const char*>(data),
                            static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::IoFailure, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::IoFailure, "rename failed for " + path);
  }
}

inline void atomic_write_file(const std::string& path,
                              const std::string& text) {
  atomic_write_file(path, text.data(), text.size());
}

inline void atomic_write_file(const std::string& path,
                              const std::vector<std::uint8_t>& bytes) {
  atomic_write_file(path, bytes.data(), bytes.size());
}

// "liver.nii.gz" -> "liver", "scan.nii" -> "scan", "grid.json" -> "grid".
inline std::string input_stem(const std::string& path) {
  std::string name = std::filesystem::path(path).filename().string();
  auto strip = [&name](const std::string& suffix) {
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      name.resize(name.size() - suffix.size());
      return true;
    }
    return false;
  };
  strip(".gz");
  strip(".nii") || strip(".hdr") || strip(".json") || strip(".bin");
  return name;
}

}  // namespace alarmkit
