#pragma once

#include "wearcnn/network.hpp"
#include "wearcnn/tensor.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace wearcnn {

// Checkpoint file layout (little-endian throughout):
//   magic "WCNN", format version u16, then one record per parameter:
//   {name length u32, UTF-8 name bytes, dtype u8 (1=f32, 2=f64), rank u8,
//    rank x u32 extents, raw values}, and a trailing CRC32 of everything
//   between the header and the CRC itself.

inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void append_raw(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename Scalar>
constexpr std::uint8_t dtype_code() {
  if constexpr (std::is_same_v<Scalar, float>) {
    return 1;
  } else {
    static_assert(std::is_same_v<Scalar, double>, "checkpoint supports f32/f64 only");
    return 2;
  }
}

inline std::uint32_t payload_crc(const std::string& payload) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
}

struct RawReader {
  const std::string& buf;
  std::size_t pos = 0;

  void read(void* dst, std::size_t n) {
    check(pos + n <= buf.size(), "checkpoint: truncated record");
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  }

  template <typename T>
  T read_value() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
};

}  // namespace detail

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<Scalar>& store) {
  std::string payload;
  for (const auto& entry : store.entries()) {
    detail::append_raw(payload, static_cast<std::uint32_t>(entry.name.size()));
    payload.append(entry.name);
    detail::append_raw(payload, detail::dtype_code<Scalar>());
    detail::append_raw(payload, static_cast<std::uint8_t>(entry.value.rank()));
    for (int extent : entry.value.shape) {
      detail::append_raw(payload, static_cast<std::uint32_t>(extent));
    }
    const std::size_t bytes = entry.value.data.size() * sizeof(Scalar);
    payload.append(reinterpret_cast<const char*>(entry.value.data.data()), bytes);
  }

  const std::uint32_t crc = detail::payload_crc(payload);
  detail::append_raw(payload, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "checkpoint: cannot open " + path.string() + " for writing");
  out.write("WCNN", 4);
  const std::uint16_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out.good()) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

template <typename Scalar>
struct CheckpointRecord {
  std::string name;
  Tensor<Scalar> value;
};

/// Parses all records; values are converted to Scalar if the stored dtype
/// differs.
template <typename Scalar>
std::vector<CheckpointRecord<Scalar>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "checkpoint: cannot open " + path.string());
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  check(file.size() >= 10 && file.compare(0, 4, "WCNN") == 0,
        "checkpoint: " + path.string() + " is not a WCNN file");
  std::uint16_t version;
  std::memcpy(&version, file.data() + 4, sizeof(version));
  check(version == kCheckpointVersion,
        "checkpoint: unsupported format version " + std::to_string(version));

  const std::string payload = file.substr(6, file.size() - 10);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, file.data() + file.size() - 4, sizeof(stored_crc));
  if (detail::payload_crc(payload) != stored_crc) {
    throw std::runtime_error("checkpoint: CRC mismatch in " + path.string());
  }

  std::vector<CheckpointRecord<Scalar>> records;
  detail::RawReader reader{payload};
  while (reader.pos < payload.size()) {
    CheckpointRecord<Scalar> record;
    const auto name_len = reader.read_value<std::uint32_t>();
    record.name.resize(name_len);
    reader.read(record.name.data(), name_len);
    const auto dtype = reader.read_value<std::uint8_t>();
    check(dtype == 1 || dtype == 2, "checkpoint: unknown dtype code in " + record.name);
    const auto rank = reader.read_value<std::uint8_t>();
    Shape shape(rank);
    for (auto& extent : shape) extent = static_cast<int>(reader.read_value<std::uint32_t>());
    record.value = Tensor<Scalar>(shape);
    if (dtype == detail::dtype_code<Scalar>()) {
      reader.read(record.value.data.data(), record.value.data.size() * sizeof(Scalar));
    } else if (dtype == 1) {
      for (auto& v : record.value.data) v = static_cast<Scalar>(reader.read_value<float>());
    } else {
      for (auto& v : record.value.data) v = static_cast<Scalar>(reader.read_value<double>());
    }
    records.push_back(std::move(record));
  }
  return records;
}

/// Fills an existing (topology-built) store, so trainable flags and entry
/// order stay authoritative. Every store entry must be present in the file
/// with a matching shape.
template <typename Scalar>
void load_checkpoint(const std::filesystem::path& path, ParamStore<Scalar>& store) {
  const auto records = read_checkpoint<Scalar>(path);
  std::size_t used = 0;
  for (auto& entry : store.entries()) {
    const CheckpointRecord<Scalar>* found = nullptr;
    for (const auto& record : records) {
      if (record.name == entry.name) {
        found = &record;
        break;
      }
    }
    check(found != nullptr, "checkpoint: missing parameter " + entry.name);
    check(found->value.shape == entry.value.shape,
          "checkpoint: " + entry.name + " has shape " + shape_str(found->value.shape) +
              ", expected " + shape_str(entry.value.shape));
    entry.value = found->value;
    ++used;
  }
  check(used == records.size(), "checkpoint: file has " + std::to_string(records.size()) +
                                    " records, store expects " + std::to_string(used));
}

}  // namespace wearcnn
