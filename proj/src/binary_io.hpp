#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gcnbench/error.hpp"

// Raw little-endian serialization shared by the graph, feature and model
// formats.
namespace gcnbench::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
  }

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
  void put_span(std::span<const T> values) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorKind::Io, "write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorKind::Io, "cannot open for reading: " + path.string());
    std::error_code ec;
    size_ = std::filesystem::file_size(path, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot stat: " + path.string());
  }

  std::uint64_t size() const { return size_; }
  std::uint64_t remaining() const { return size_ - consumed_; }

  template <typename T>
  T get() {
    T value{};
    read_raw(&value, sizeof(T));
    return value;
  }

  template <typename T>
  std::vector<T> get_vector(std::uint64_t count) {
    if (count > remaining() / sizeof(T)) {
      throw Error(ErrorKind::Io, "truncated file: " + path_.string());
    }
    std::vector<T> values(count);
    read_raw(values.data(), count * sizeof(T));
    return values;
  }

 private:
  void read_raw(void* dst, std::uint64_t bytes) {
    if (bytes > remaining()) {
      throw Error(ErrorKind::Io, "truncated file: " + path_.string());
    }
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (!in_) throw Error(ErrorKind::Io, "read failed: " + path_.string());
    consumed_ += bytes;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t consumed_ = 0;
};

}  // namespace gcnbench::detail
