#include "albt/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "albt/error.h"

namespace albt {

namespace {

constexpr std::string_view kOptimizerM = "optimizer.m.";
constexpr std::string_view kOptimizerV = "optimizer.v.";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

void put_floats(std::string& out, const Array<float>& data) {
  const auto bytes = static_cast<std::size_t>(data.size()) * 4;
  const auto start = out.size();
  out.resize(start + bytes);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + start, data.data(), bytes);
  } else {
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(data[i]);
      for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
}

Array<float> get_floats(std::string_view in, std::size_t pos, std::size_t count) {
  Array<float> out(static_cast<Eigen::Index>(count));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), in.data() + pos, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_u32(in, pos + 4 * i));
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[i + 1] == 'n' ? '\n' : s[i + 1];
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(fmt::format("checkpoint: bad value '{}' for {}", text, what));
  }
  return value;
}

double parse_double(std::string_view text, std::string_view what) {
  // std::from_chars for double is unavailable in libstdc++ 11.
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError(fmt::format("checkpoint: bad value '{}' for {}", text, what));
  }
  return v;
}

std::string shape_text(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

Shape parse_shape(std::string_view text) {
  Shape shape;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('x', start);
    if (end == std::string_view::npos) end = text.size();
    shape.push_back(parse_number<std::int64_t>(text.substr(start, end - start), "tensor shape"));
    if (shape.back() <= 0) throw FormatError("checkpoint: non-positive tensor dimension");
    start = end + 1;
  }
  return shape;
}

struct DirectoryEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

}  // namespace

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\t';
    out += items[i];
  }
  return out;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  if (value.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto tab = value.find('\t', start);
    out.emplace_back(value.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  const auto& c = ck.config;
  std::string header;
  header += fmt::format("model.num_layers={}\n", c.num_layers);
  header += fmt::format("model.hidden={}\n", c.hidden);
  header += fmt::format("model.heads={}\n", c.heads);
  header += fmt::format("model.ff_dim={}\n", c.ff_dim);
  header += fmt::format("model.vocab_size={}\n", c.vocab_size);
  header += fmt::format("model.max_positions={}\n", c.max_positions);
  header += fmt::format("model.dropout_rate={}\n", c.dropout_rate);
  if (c.num_classes) header += fmt::format("model.num_classes={}\n", *c.num_classes);
  if (c.num_tags) header += fmt::format("model.num_tags={}\n", *c.num_tags);
  if (ck.optimizer) header += fmt::format("optimizer.step={}\n", ck.optimizer->step);
  for (const auto& [key, value] : ck.metadata) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos) {
      throw ConfigError(fmt::format("invalid checkpoint metadata key '{}'", key));
    }
    header += fmt::format("meta.{}={}\n", key, escape(value));
  }

  std::string payload;
  auto add_tensor = [&](const std::string& name, const Shape& shape, const Array<float>& data) {
    const auto offset = payload.size();
    put_floats(payload, data);
    header += fmt::format("tensor={} f32 {} {} {}\n", name, shape_text(shape), offset,
                         payload.size() - offset);
  };
  const auto& entries = ck.params.entries();
  for (const auto& [name, t] : entries) add_tensor(name, t.shape(), t.data());
  if (ck.optimizer) {
    if (ck.optimizer->m.size() != entries.size() || ck.optimizer->v.size() != entries.size()) {
      throw ShapeMismatch("optimizer state does not match the parameter list");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      add_tensor(std::string(kOptimizerM) + entries[i].first, entries[i].second.shape(), ck.optimizer->m[i]);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      add_tensor(std::string(kOptimizerV) + entries[i].first, entries[i].second.shape(), ck.optimizer->v[i]);
    }
  }

  std::string out(kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError("checkpoint: file too short");
  if (bytes.substr(0, 4) != kCheckpointMagic) throw FormatError("checkpoint: bad magic bytes");
  const auto version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("checkpoint: unsupported format version {}", version));
  }
  const std::size_t header_len = get_u32(bytes, 8);
  if (12 + header_len > bytes.size()) throw FormatError("checkpoint: truncated header");
  const auto header = bytes.substr(12, header_len);
  const auto payload = bytes.substr(12 + header_len);

  Checkpoint ck;
  std::optional<std::int64_t> optimizer_step;
  std::vector<DirectoryEntry> directory;
  std::size_t pos = 0;
  while (pos < header.size()) {
    auto end = header.find('\n', pos);
    if (end == std::string_view::npos) throw FormatError("checkpoint: unterminated header line");
    const auto line = header.substr(pos, end - pos);
    pos = end + 1;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("checkpoint: malformed header line");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    auto& c = ck.config;
    if (key == "model.num_layers") {
      c.num_layers = parse_number<int>(value, key);
    } else if (key == "model.hidden") {
      c.hidden = parse_number<int>(value, key);
    } else if (key == "model.heads") {
      c.heads = parse_number<int>(value, key);
    } else if (key == "model.ff_dim") {
      c.ff_dim = parse_number<int>(value, key);
    } else if (key == "model.vocab_size") {
      c.vocab_size = parse_number<int>(value, key);
    } else if (key == "model.max_positions") {
      c.max_positions = parse_number<int>(value, key);
    } else if (key == "model.dropout_rate") {
      c.dropout_rate = parse_double(value, key);
    } else if (key == "model.num_classes") {
      c.num_classes = parse_number<int>(value, key);
    } else if (key == "model.num_tags") {
      c.num_tags = parse_number<int>(value, key);
    } else if (key == "optimizer.step") {
      optimizer_step = parse_number<std::int64_t>(value, key);
    } else if (key.starts_with("meta.")) {
      ck.metadata[std::string(key.substr(5))] = unescape(value);
    } else if (key == "tensor") {
      std::istringstream fields{std::string(value)};
      DirectoryEntry e;
      std::string dtype, shape, offset, length, extra;
      if (!(fields >> e.name >> dtype >> shape >> offset >> length) || (fields >> extra)) {
        throw FormatError("checkpoint: malformed tensor directory entry");
      }
      if (dtype != "f32") throw FormatError("checkpoint: unsupported dtype " + dtype);
      e.shape = parse_shape(shape);
      e.offset = parse_number<std::uint64_t>(offset, "tensor offset");
      e.length = parse_number<std::uint64_t>(length, "tensor length");
      if (e.length != static_cast<std::uint64_t>(numel_of(e.shape)) * 4) {
        throw FormatError("checkpoint: tensor length does not match its shape: " + e.name);
      }
      if (e.offset > payload.size() || e.length > payload.size() - e.offset) {
        throw FormatError("checkpoint: truncated tensor payload: " + e.name);
      }
      directory.push_back(std::move(e));
    } else {
      throw FormatError(fmt::format("checkpoint: unknown header key '{}'", key));
    }
  }

  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid model config: ") + e.what());
  }
  const auto expected = parameter_shapes(ck.config);
  const std::size_t n = expected.size();
  const std::size_t want = optimizer_step ? 3 * n : n;
  if (directory.size() != want) {
    throw FormatError(fmt::format("checkpoint: expected {} tensors, found {}", want, directory.size()));
  }
  std::uint64_t next_offset = 0;
  for (std::size_t i = 0; i < directory.size(); ++i) {
    const auto& e = directory[i];
    const auto& [name, shape] = expected[i % n];
    const std::string prefix = i < n ? "" : (i < 2 * n ? std::string(kOptimizerM) : std::string(kOptimizerV));
    if (e.name != prefix + name || e.shape != shape) {
      throw FormatError(fmt::format("checkpoint: tensor {} is '{}' {}, expected '{}' {}", i, e.name,
                                    shape_string(e.shape), prefix + name, shape_string(shape)));
    }
    if (e.offset != next_offset) throw FormatError("checkpoint: tensor payloads out of order");
    next_offset += e.length;
  }
  if (next_offset != payload.size()) throw FormatError("checkpoint: payload size mismatch");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = directory[i];
    ck.params.add(e.name, Tensor<float>::from_array(e.shape, get_floats(payload, e.offset, e.length / 4)));
  }
  if (optimizer_step) {
    OptimizerState<float> state;
    state.step = *optimizer_step;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = directory[n + i];
      const auto& v = directory[2 * n + i];
      state.m.push_back(get_floats(payload, m.offset, m.length / 4));
      state.v.push_back(get_floats(payload, v.offset, v.length / 4));
    }
    ck.optimizer = std::move(state);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace albt
