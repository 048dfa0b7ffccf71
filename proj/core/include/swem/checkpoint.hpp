#pragma once

#include <string>

#include "swem/parameter_store.hpp"

namespace swem {

// Binary parameter snapshot.
//
// Layout (all integers little-endian):
//   magic   4 bytes "SWEM"
//   version u32 (currently 1)
//   count   u32 number of entries
//   entry*  name_len u32, name bytes (UTF-8), rank u32 (2),
//           dims u32 * rank (rows, cols),
//           values f32 * rows*cols (IEEE-754, row-major)
//   crc     u32 CRC-32 of every preceding byte
//
// Values are stored at 32-bit precision: a load(save(store)) round trip is
// bit-exact for any store whose values are float-representable, which
// includes every store that itself came from a checkpoint.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& store, const std::string& path);

// Loads a full store (values only; gradients and optimizer moments zeroed,
// every entry trainable). CRC, magic and version are verified before any
// entry is returned.
ParameterStore load_checkpoint(const std::string& path);

// Loads values into an existing store by name; shapes must match and every
// entry of the store must be present in the file.
void load_checkpoint_into(ParameterStore& store, const std::string& path);

struct CheckpointEntryInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  double min_value = 0.0;
  double max_value = 0.0;
  double mean_value = 0.0;
};

// Verifies integrity and describes the contents without building a store.
std::vector<CheckpointEntryInfo> inspect_checkpoint(const std::string& path);

}  // namespace swem
