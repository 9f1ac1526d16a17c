#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "albt/model.h"
#include "albt/optim.h"

namespace albt {

inline constexpr std::string_view kCheckpointMagic = "ALBT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParameters<float> params;
  std::optional<OptimizerState<float>> optimizer;
  // Free-form string fields (label lists, task name, ...). Keys must not
  // contain '=' or newlines.
  std::map<std::string, std::string> metadata;
};

// Layout: "ALBT", u32 LE version, u32 LE header length, UTF-8 header of
// key=value lines (config, metadata, then one `tensor=` directory line per
// payload: name, dtype, shape, offset, length), then raw LE float32 payloads
// in directory order. Offsets are relative to the start of the payload area.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws FormatError on bad magic, unknown version, truncation or any header
// inconsistency.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Joins / splits a list stored in one metadata value (tab separated).
std::string join_list(const std::vector<std::string>& items);
std::vector<std::string> split_list(std::string_view value);

}  // namespace albt
