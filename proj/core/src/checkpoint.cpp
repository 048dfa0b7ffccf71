#include "swem/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "swem/common.hpp"

namespace swem {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'E', 'M'};

struct CorruptionError : DataError {
  using DataError::DataError;
};

void append_u32(std::string& buf, std::uint32_t v) {
  char bytes[4];
  bytes[0] = static_cast<char>(v & 0xFF);
  bytes[1] = static_cast<char>((v >> 8) & 0xFF);
  bytes[2] = static_cast<char>((v >> 16) & 0xFF);
  bytes[3] = static_cast<char>((v >> 24) & 0xFF);
  buf.append(bytes, 4);
}

void append_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32(buf, bits);
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw CorruptionError(path + ": truncated checkpoint");
    }
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    pos += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float out;
    std::memcpy(&out, &bits, 4);
    return out;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = buf.substr(pos, n);
    pos += n;
    return out;
  }
};

std::string read_and_verify(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + 4 + 4 + 4) throw CorruptionError(path + ": truncated checkpoint");

  const std::size_t payload = buf.size() - 4;
  std::uint32_t stored = 0;
  {
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + payload);
    stored = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  const auto computed = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(payload)));
  if (stored != computed) {
    throw CorruptionError(path + ": CRC mismatch (file is corrupt)");
  }
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw CorruptionError(path + ": bad magic (not a checkpoint)");
  }
  return buf;
}

template <typename PerEntry>
void walk_entries(const std::string& path, PerEntry&& per_entry) {
  const std::string buf = read_and_verify(path);
  Cursor cur{buf, 4, path};  // past magic
  const std::uint32_t version = cur.u32();
  if (version != kCheckpointVersion) {
    throw CorruptionError(path + ": unknown checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = cur.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = cur.u32();
    const std::string name = cur.bytes(name_len);
    const std::uint32_t rank = cur.u32();
    if (rank != 2) {
      throw CorruptionError(path + ": unsupported tensor rank " + std::to_string(rank));
    }
    const std::uint32_t rows = cur.u32();
    const std::uint32_t cols = cur.u32();
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    cur.need(n * 4);
    per_entry(name, static_cast<int>(rows), static_cast<int>(cols), cur);
  }
  if (cur.pos != buf.size() - 4) {
    throw CorruptionError(path + ": trailing bytes after last entry");
  }
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  append_u32(buf, kCheckpointVersion);
  append_u32(buf, static_cast<std::uint32_t>(store.entries().size()));
  for (const auto& [name, e] : store.entries()) {
    append_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    append_u32(buf, 2);
    append_u32(buf, static_cast<std::uint32_t>(e.value.rows));
    append_u32(buf, static_cast<std::uint32_t>(e.value.cols));
    for (Real v : e.value.data) append_f32(buf, static_cast<float>(v));
  }
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  append_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write to checkpoint: " + path);
}

ParameterStore load_checkpoint(const std::string& path) {
  ParameterStore store;
  walk_entries(path, [&](const std::string& name, int rows, int cols, Cursor& cur) {
    Tensor2& value = store.create(name, rows, cols);
    for (std::size_t i = 0; i < value.data.size(); ++i) value.data[i] = cur.f32();
  });
  return store;
}

void load_checkpoint_into(ParameterStore& store, const std::string& path) {
  std::size_t loaded = 0;
  walk_entries(path, [&](const std::string& name, int rows, int cols, Cursor& cur) {
    if (!store.has(name)) {
      throw ConfigError(path + ": checkpoint entry '" + name + "' not present in model");
    }
    Tensor2& value = store.value(name);
    if (value.rows != rows || value.cols != cols) {
      throw ConfigError(path + ": shape mismatch for '" + name + "': model " + value.shape_str() +
                        " vs checkpoint [" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
    for (std::size_t i = 0; i < value.data.size(); ++i) value.data[i] = cur.f32();
    ++loaded;
  });
  if (loaded != store.entries().size()) {
    throw ConfigError(path + ": checkpoint is missing " +
                      std::to_string(store.entries().size() - loaded) + " model parameter(s)");
  }
}

std::vector<CheckpointEntryInfo> inspect_checkpoint(const std::string& path) {
  std::vector<CheckpointEntryInfo> infos;
  walk_entries(path, [&](const std::string& name, int rows, int cols, Cursor& cur) {
    CheckpointEntryInfo info;
    info.name = name;
    info.rows = rows;
    info.cols = cols;
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    double sum = 0.0;
    info.min_value = std::numeric_limits<double>::infinity();
    info.max_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = cur.f32();
      sum += v;
      info.min_value = std::min(info.min_value, v);
      info.max_value = std::max(info.max_value, v);
    }
    info.mean_value = n > 0 ? sum / static_cast<double>(n) : 0.0;
    infos.push_back(std::move(info));
  });
  return infos;
}

}  // namespace swem
