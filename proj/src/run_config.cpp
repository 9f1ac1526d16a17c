#include "albt/run_config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "albt/error.h"

namespace albt {

namespace {

using V = ValueType;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> to_double(std::string_view s) {
  std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

const char* type_name(ValueType t) {
  switch (t) {
    case V::kInt:
      return "integer";
    case V::kDouble:
      return "number";
    case V::kBool:
      return "boolean";
    default:
      return "string";
  }
}

}  // namespace

const std::vector<KeySpec>& run_config_schema() {
  static const std::vector<KeySpec> schema{
      {"seed", V::kInt, "42", "master seed for init, masking, data order and synthesis"},
      {"paths.output_dir", V::kString, "out", "directory for artifacts and manifests"},
      {"paths.corpus", V::kString, "", "pretraining corpus, one sentence or document per line"},
      {"paths.vocab", V::kString, "", "vocabulary file (default <output_dir>/vocab.txt)"},
      {"paths.lexicon", V::kString, "", "affix lexicon (default: built-in)"},
      {"paths.pretrained", V::kString, "", "checkpoint to fine-tune (default <output_dir>/pretrained.ckpt)"},
      {"paths.resume", V::kString, "", "pretraining checkpoint to resume from"},
      {"paths.model", V::kString, "", "fine-tuned checkpoint (default <output_dir>/finetuned.ckpt)"},
      {"paths.train", V::kString, "", "task training file"},
      {"paths.val", V::kString, "", "task validation file"},
      {"paths.test", V::kString, "", "task test file"},
      {"paths.input", V::kString, "", "predict input file"},
      {"paths.output", V::kString, "", "predict output file (default <output_dir>/predictions.txt)"},
      {"vocab.target_size", V::kInt, "8192", "target vocabulary size"},
      {"vocab.dedup", V::kBool, "true", "drop duplicate sentences before training"},
      {"model.preset", V::kString, "tiny", "tiny, base or large"},
      {"model.num_layers", V::kInt, std::nullopt, "override preset layers"},
      {"model.hidden", V::kInt, std::nullopt, "override preset hidden size"},
      {"model.heads", V::kInt, std::nullopt, "override preset attention heads"},
      {"model.ff_dim", V::kInt, std::nullopt, "override preset feed-forward size"},
      {"model.dropout_rate", V::kDouble, std::nullopt, "override dropout rate"},
      {"pretrain.max_len", V::kInt, "128", "packed sequence length including [CLS]/[SEP]"},
      {"masking.rate", V::kDouble, "0.15", "fraction of tokens selected"},
      {"masking.mask_probability", V::kDouble, "0.8", "selected words replaced by [MASK]"},
      {"masking.random_probability", V::kDouble, "0.1", "selected words replaced by random tokens"},
      {"masking.whole_word", V::kBool, "true", "mask whole words instead of single tokens"},
      {"train.peak_lr", V::kDouble, "5e-5", "peak learning rate"},
      {"train.total_steps", V::kInt, "1000", "optimizer steps"},
      {"train.warmup_fraction", V::kDouble, "0.1", "fraction of steps spent warming up"},
      {"train.micro_batch", V::kInt, "8", "examples per micro-batch"},
      {"train.accumulation", V::kInt, "4", "micro-batches per optimizer step"},
      {"train.weight_decay", V::kDouble, "0.01", "decoupled weight decay on matrices"},
      {"train.max_grad_norm", V::kDouble, "1.0", "global gradient norm clip (<= 0 disables)"},
      {"train.eval_every", V::kInt, "50", "steps between validation evaluations"},
      {"train.patience", V::kInt, "3", "non-improving evaluations before stopping"},
      {"train.min_delta", V::kDouble, "1e-4", "minimum validation loss improvement"},
      {"train.checkpoint_every", V::kInt, "0", "steps between pretraining checkpoints (0: end only)"},
      {"task.name", V::kString, "classify", "classify or tag"},
      {"task.head", V::kInt, "128", "head tokens kept when truncating documents"},
      {"task.tail", V::kInt, "382", "tail tokens kept when truncating documents"},
      {"task.max_len", V::kInt, "512", "maximum fine-tuning sequence length"},
      {"data.strip_head_lines", V::kInt, "0", "leading document lines dropped by the classification loader"},
      {"eval.exclude_outside", V::kBool, "false", "leave the O tag out of token-level macro scores"},
      {"eval.batch_size", V::kInt, "16", "inference batch size"},
      {"synth.kind", V::kString, "classify", "mlm, classify, tag or keywords"},
      {"synth.sentences", V::kInt, "100", "sentences for mlm corpora"},
      {"synth.documents", V::kInt, "300", "documents for classification data"},
      {"synth.classes", V::kInt, "3", "classes for classification data"},
      {"synth.min_words", V::kInt, "540", "minimum words per classification document"},
      {"synth.max_words", V::kInt, "640", "maximum words per classification document"},
      {"synth.tag_sentences", V::kInt, "1000", "sentences for tagging data"},
      {"synth.entity_types", V::kInt, "17", "entity types for IOB tagging data"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : run_config_schema()) {
    if (k.default_value) values_[k.name] = *k.default_value;
  }
}

const KeySpec& RunConfig::spec(std::string_view key) const {
  const auto& schema = run_config_schema();
  const auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& k) { return k.name == key; });
  if (it == schema.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  return *it;
}

void RunConfig::set(std::string_view key, std::string value) {
  const auto& k = spec(key);
  bool ok = true;
  switch (k.type) {
    case V::kInt:
      ok = to_int(value).has_value();
      break;
    case V::kDouble:
      ok = to_double(value).has_value();
      break;
    case V::kBool:
      ok = to_bool(value).has_value();
      break;
    case V::kString:
      break;
  }
  if (!ok) throw ConfigError(fmt::format("{} expects a {}, got '{}'", key, type_name(k.type), value));
  values_[k.name] = std::move(value);
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  }
  set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::merge_text(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    }
    try {
      apply_override(line);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str());
}

bool RunConfig::has(std::string_view key) const {
  spec(key);
  return values_.contains(std::string(key));
}

const std::string& RunConfig::raw(std::string_view key) const {
  spec(key);
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError(fmt::format("config key '{}' is not set", key));
  return it->second;
}

std::string RunConfig::get_string(std::string_view key) const { return raw(key); }

std::int64_t RunConfig::get_int(std::string_view key) const {
  if (spec(key).type != V::kInt) throw ConfigError(fmt::format("{} is not an integer key", key));
  return *to_int(raw(key));
}

double RunConfig::get_double(std::string_view key) const {
  if (spec(key).type != V::kDouble) throw ConfigError(fmt::format("{} is not a number key", key));
  return *to_double(raw(key));
}

bool RunConfig::get_bool(std::string_view key) const {
  if (spec(key).type != V::kBool) throw ConfigError(fmt::format("{} is not a boolean key", key));
  return *to_bool(raw(key));
}

std::optional<std::int64_t> RunConfig::get_optional_int(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return get_int(key);
}

std::optional<double> RunConfig::get_optional_double(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key);
}

}  // namespace albt
