#include "albt/commands.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "albt/checkpoint.h"
#include "albt/corpus.h"
#include "albt/error.h"
#include "albt/metrics.h"
#include "albt/model.h"
#include "albt/seed.h"
#include "albt/synth.h"
#include "albt/tokenizer.h"
#include "albt/trainer.h"

namespace albt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kVersion = "1";

fs::path output_dir(const RunConfig& c) {
  fs::path dir = c.get_string("paths.output_dir");
  fs::create_directories(dir);
  return dir;
}

fs::path path_or(const RunConfig& c, std::string_view key, const fs::path& fallback) {
  const auto v = c.get_string(key);
  return v.empty() ? fallback : fs::path(v);
}

fs::path required_path(const RunConfig& c, std::string_view key) {
  const auto v = c.get_string(key);
  if (v.empty()) throw ConfigError(fmt::format("{} must be set", key));
  return v;
}

std::size_t positive(const RunConfig& c, std::string_view key) {
  const auto v = c.get_int(key);
  if (v < 1) throw ConfigError(fmt::format("{} must be at least 1", key));
  return static_cast<std::size_t>(v);
}

std::size_t non_negative(const RunConfig& c, std::string_view key) {
  const auto v = c.get_int(key);
  if (v < 0) throw ConfigError(fmt::format("{} must be non-negative", key));
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_of(const RunConfig& c) { return static_cast<std::uint64_t>(c.get_int("seed")); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = end + 1;
  }
  return lines;
}

// Records inputs and outputs of a command and writes the manifest.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config) : command_(std::move(command)), config_(config) {}

  void input(const fs::path& path) { inputs_.push_back(path); }
  void output(const fs::path& path) { outputs_.push_back(path); }
  json& stats() { return stats_; }

  fs::path write() const {
    json doc;
    doc["command"] = command_;
    doc["format_version"] = kVersion;
    doc["seed"] = config_.get_int("seed");
    json cfg = json::object();
    for (const auto& [k, v] : config_.resolved()) cfg[k] = v;
    doc["config"] = cfg;
    doc["inputs"] = files(inputs_);
    doc["outputs"] = files(outputs_);
    if (!stats_.is_null()) doc["stats"] = stats_;
    const auto path = output_dir(config_) / (command_ + ".manifest.json");
    write_text(path, doc.dump(2) + "\n");
    return path;
  }

 private:
  static json files(const std::vector<fs::path>& paths) {
    json out = json::array();
    for (const auto& p : paths) {
      out.push_back({{"path", p.string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    return out;
  }

  std::string command_;
  const RunConfig& config_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  json stats_;
};

AffixLexicon load_lexicon(const RunConfig& c, Manifest& m) {
  const auto p = c.get_string("paths.lexicon");
  if (p.empty()) return AffixLexicon::builtin();
  m.input(p);
  return AffixLexicon::load(p);
}

fs::path vocab_path(const RunConfig& c) { return path_or(c, "paths.vocab", output_dir(c) / "vocab.txt"); }

Vocabulary load_vocab(const RunConfig& c, Manifest& m) {
  const auto p = vocab_path(c);
  if (!fs::exists(p)) throw IoError("vocabulary not found: " + p.string());
  m.input(p);
  return Vocabulary::load(p);
}

// Corpus lines split into sentences, optionally deduplicated.
std::vector<std::string> load_sentences(const RunConfig& c, Manifest& m) {
  const auto p = required_path(c, "paths.corpus");
  if (!fs::exists(p)) throw IoError("corpus not found: " + p.string());
  m.input(p);
  std::vector<std::string> sentences;
  for (const auto& line : split_lines(read_text(p))) {
    for (auto& s : sentence_split(line)) sentences.push_back(std::move(s));
  }
  if (c.get_bool("vocab.dedup")) sentences = dedup(sentences);
  if (sentences.empty()) throw EmptyCorpus("corpus has no sentences: " + p.string());
  return sentences;
}

ModelConfig model_config(const RunConfig& c, int vocab_size) {
  auto mc = ModelConfig::preset(c.get_string("model.preset"), vocab_size);
  if (auto v = c.get_optional_int("model.num_layers")) mc.num_layers = static_cast<int>(*v);
  if (auto v = c.get_optional_int("model.hidden")) mc.hidden = static_cast<int>(*v);
  if (auto v = c.get_optional_int("model.heads")) mc.heads = static_cast<int>(*v);
  if (auto v = c.get_optional_int("model.ff_dim")) mc.ff_dim = static_cast<int>(*v);
  if (auto v = c.get_optional_double("model.dropout_rate")) mc.dropout_rate = *v;
  mc.validate();
  return mc;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.peak_lr = c.get_double("train.peak_lr");
  t.total_steps = c.get_int("train.total_steps");
  t.warmup_fraction = c.get_double("train.warmup_fraction");
  t.micro_batch = positive(c, "train.micro_batch");
  t.accumulation = positive(c, "train.accumulation");
  t.weight_decay = c.get_double("train.weight_decay");
  t.max_grad_norm = c.get_double("train.max_grad_norm");
  t.seed = seed_of(c);
  t.eval_every = c.get_int("train.eval_every");
  t.patience = static_cast<int>(c.get_int("train.patience"));
  t.min_delta = c.get_double("train.min_delta");
  t.checkpoint_every = c.get_int("train.checkpoint_every");
  t.validate();
  return t;
}

Task task_of(const RunConfig& c) {
  const auto name = c.get_string("task.name");
  if (name == "classify") return Task::kClassify;
  if (name == "tag") return Task::kTag;
  throw ConfigError(fmt::format("task.name must be classify or tag, got '{}'", name));
}

std::string format_log(const std::vector<LossRecord>& log) {
  std::string out;
  for (const auto& r : log) out += fmt::format("{}\t{}\t{}\n", r.step, r.lr, r.loss);
  return out;
}

struct TaskData {
  std::vector<std::string> labels;  // class names or tag set
  std::vector<Example> examples;
  std::vector<std::vector<std::int32_t>> word_starts;  // tagging only
  std::vector<TaggedSentence> sentences;               // tagging only
  std::vector<std::int32_t> gold_classes;              // classification only
  TagScheme scheme = TagScheme::kOther;
};

struct TaskSettings {
  std::size_t head = kDefaultHead;
  std::size_t tail = kDefaultTail;
  std::size_t max_len = kMaxSequenceLength;
  std::size_t strip_head_lines = 0;
};

TaskSettings task_settings(const RunConfig& c) {
  TaskSettings s;
  s.head = non_negative(c, "task.head");
  s.tail = non_negative(c, "task.tail");
  s.max_len = positive(c, "task.max_len");
  s.strip_head_lines = non_negative(c, "data.strip_head_lines");
  if (s.max_len > kMaxSequenceLength) throw ConfigError("task.max_len cannot exceed 512");
  if (s.head + s.tail + 2 != s.max_len) {
    throw ConfigError(fmt::format("task.head + task.tail + 2 must equal task.max_len ({} + {} + 2 != {})",
                                  s.head, s.tail, s.max_len));
  }
  return s;
}

// Loads a task file. With `labels` set, every label must come from it.
TaskData load_task(Task task, const fs::path& path, const std::optional<std::vector<std::string>>& labels,
                   const Vocabulary& vocab, const AffixLexicon& lexicon, const TaskSettings& s) {
  if (!fs::exists(path)) throw IoError("data file not found: " + path.string());
  TaskData d;
  if (task == Task::kClassify) {
    ClassificationLoadOptions opts;
    opts.fixed_labels = labels;
    opts.strip_head_lines = s.strip_head_lines;
    auto ds = load_classification_file(path, opts);
    d.labels = ds.labels;
    d.examples = make_classification_examples(ds.documents, vocab, lexicon, s.head, s.tail, s.max_len);
    for (const auto& doc : ds.documents) d.gold_classes.push_back(doc.label);
    return d;
  }
  auto ds = load_tagging_file(path);
  d.scheme = ds.scheme;
  d.labels = labels ? *labels : ds.tag_set;
  for (const auto& tag : ds.tag_set) {
    if (std::find(d.labels.begin(), d.labels.end(), tag) == d.labels.end()) {
      throw InputError(fmt::format("{}: tag '{}' is not in the model's tag set", path.string(), tag));
    }
  }
  for (auto& te : make_tagging_examples(ds.sentences, d.labels, vocab, lexicon, s.max_len)) {
    d.examples.push_back(std::move(te.example));
    d.word_starts.push_back(std::move(te.word_starts));
  }
  d.sentences = std::move(ds.sentences);
  return d;
}

struct LoadedModel {
  Checkpoint ck;
  Task task;
  std::vector<std::string> labels;
  TaskSettings settings;
};

LoadedModel load_finetuned(const RunConfig& c, Manifest& m) {
  const auto p = path_or(c, "paths.model", output_dir(c) / "finetuned.ckpt");
  if (!fs::exists(p)) throw IoError("checkpoint not found: " + p.string());
  m.input(p);
  LoadedModel lm{load_checkpoint(p), Task::kClassify, {}, {}};
  const auto& meta = lm.ck.metadata;
  const auto task = meta.find("task");
  if (task == meta.end() || meta.find("labels") == meta.end()) {
    throw InputError(p.string() + " is not a fine-tuned checkpoint");
  }
  lm.task = task->second == "tag" ? Task::kTag : Task::kClassify;
  lm.labels = split_list(meta.at("labels"));
  lm.settings.head = std::stoul(meta.at("head"));
  lm.settings.tail = std::stoul(meta.at("tail"));
  lm.settings.max_len = std::stoul(meta.at("max_len"));
  lm.settings.strip_head_lines = non_negative(c, "data.strip_head_lines");
  return lm;
}

std::vector<std::int32_t> predict_all_classes(const LoadedModel& lm, std::span<const Example> examples,
                                              std::size_t batch) {
  std::vector<std::int32_t> out;
  for (const auto& b : make_batches(examples, batch)) {
    const auto p = predict_classes(lm.ck.params, lm.ck.config, b);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// Word-level tags; words truncated away get `fallback`.
std::vector<std::vector<std::string>> predict_all_tags(const LoadedModel& lm, const TaskData& d,
                                                       std::size_t batch, const std::string& fallback) {
  std::vector<std::vector<std::string>> out;
  std::size_t row0 = 0;
  for (const auto& b : make_batches(d.examples, batch)) {
    const auto p = predict_tags(lm.ck.params, lm.ck.config, b);
    for (std::int64_t r = 0; r < b.rows(); ++r) {
      std::vector<std::string> tags;
      for (const auto start : d.word_starts[row0 + r]) {
        tags.push_back(start < 0 ? fallback : lm.labels.at(p(r, start)));
      }
      out.push_back(std::move(tags));
    }
    row0 += b.rows();
  }
  return out;
}

// Tags of all files in first-seen order. IOB sets also get the B-/I- partner
// of every tag so the head can emit tags that happen to be missing.
std::vector<std::string> tag_inventory(const std::vector<fs::path>& paths) {
  std::vector<std::string> tags;
  auto add = [&](const std::string& t) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  };
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw IoError("data file not found: " + p.string());
    for (const auto& t : load_tagging_file(p).tag_set) add(t);
  }
  if (detect_scheme(tags) == TagScheme::kIob) {
    const auto seen = tags;
    for (const auto& t : seen) {
      if (t.starts_with("B-") || t.starts_with("I-")) {
        add("B-" + t.substr(2));
        add("I-" + t.substr(2));
      }
    }
  }
  return tags;
}

std::string fallback_tag(const std::vector<std::string>& tag_set) {
  return std::find(tag_set.begin(), tag_set.end(), "O") != tag_set.end() ? "O" : tag_set.front();
}

std::string unescape_breaks(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == 'n') {
      out += '\n';
      ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  const auto bytes = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 failed for " + path.string());
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void cmd_build_vocab(const RunConfig& c, std::ostream& out) {
  Manifest m("build-vocab", c);
  const auto lexicon = load_lexicon(c, m);
  const auto sentences = load_sentences(c, m);
  const auto target = positive(c, "vocab.target_size");
  const auto result = train_wordpiece(sentences, target, lexicon);
  const auto path = vocab_path(c);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  result.vocab.save(path);
  m.output(path);

  out << fmt::format("vocabulary: {} tokens (target {}), {} merges, written to {}\n", result.vocab.size(),
                     target, result.merges.size(), path.string());
  const auto shown = std::min<std::size_t>(20, result.merges.size());
  for (std::size_t i = 0; i < shown; ++i) {
    out << fmt::format("merge {:>2}: {} + {}\n", i + 1, result.merges[i].first, result.merges[i].second);
  }
  m.stats() = {{"sentences", sentences.size()}, {"vocab_size", result.vocab.size()},
               {"merges", result.merges.size()}};
  m.write();
}

void cmd_pretrain(const RunConfig& c, std::ostream& out) {
  Manifest m("pretrain", c);
  const auto lexicon = load_lexicon(c, m);
  const auto vocab = load_vocab(c, m);
  const auto sentences = load_sentences(c, m);
  const auto max_len = positive(c, "pretrain.max_len");
  if (max_len > kMaxSequenceLength || max_len < 3) throw ConfigError("pretrain.max_len must be in [3, 512]");
  MaskingOptions masking;
  masking.rate = c.get_double("masking.rate");
  masking.mask_probability = c.get_double("masking.mask_probability");
  masking.random_probability = c.get_double("masking.random_probability");
  masking.whole_word = c.get_bool("masking.whole_word");
  const auto seed = seed_of(c);
  const auto sequences = build_pretrain_examples(sentences, vocab, lexicon, max_len);
  const auto examples = make_mlm_examples(sequences, vocab.size(), masking, seed);
  const auto train = train_config(c);

  const auto dir = output_dir(c);
  const auto ck_path = dir / "pretrained.ckpt";
  const auto log_path = dir / "pretrain_loss.tsv";
  auto mc = model_config(c, vocab.size());
  ModelParameters<float> params;
  OptimizerState<float> state;
  std::string log_text;
  const auto resume = c.get_string("paths.resume");
  if (!resume.empty()) {
    if (!fs::exists(resume)) throw IoError("resume checkpoint not found: " + resume);
    m.input(resume);
    auto ck = load_checkpoint(resume);
    if (!ck.optimizer) throw InputError(resume + " has no optimizer state to resume from");
    if (!(ck.config == mc)) throw InputError(resume + " was saved with a different model config");
    params = std::move(ck.params);
    state = std::move(*ck.optimizer);
    // Keep the log lines that precede the resumed step.
    if (fs::exists(log_path)) {
      for (const auto& line : split_lines(read_text(log_path))) {
        const auto step = std::stoll(line.substr(0, line.find('\t')));
        if (step <= state.step) log_text += line + "\n";
      }
    }
    out << fmt::format("resuming at step {}\n", state.step);
  } else {
    params = init_parameters<float>(mc, seed);
    state = make_optimizer_state(params);
  }
  out << fmt::format("pretraining: {} sentences, {} sequences, {} parameters, {} steps\n", sentences.size(),
                     examples.size(), parameter_count(mc), train.total_steps);

  std::map<std::string, std::string> meta{{"kind", "pretrained"}, {"vocab_sha256", sha256_file(vocab_path(c))}};
  auto save = [&](const ModelParameters<float>& p, const OptimizerState<float>& s) {
    save_checkpoint(ck_path, {mc, p.cast<float>(), s, meta});
  };
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  log << log_text << std::flush;
  TrainHooks hooks;
  hooks.on_step = [&](const LossRecord& r) {
    log << fmt::format("{}\t{}\t{}\n", r.step, r.lr, r.loss) << std::flush;
    if (r.step == 1 || r.step % 50 == 0 || r.step == train.total_steps) {
      out << fmt::format("step {} lr {:.3e} loss {:.4f}\n", r.step, r.lr, r.loss);
    }
  };
  hooks.on_checkpoint = [&](const ModelParameters<float>& p, const OptimizerState<float>& s) {
    save(p, s);
    if (train.checkpoint_every > 0 && s.step % train.checkpoint_every == 0) {
      const auto snapshot = dir / fmt::format("pretrained-step{}.ckpt", s.step);
      fs::copy_file(ck_path, snapshot, fs::copy_options::overwrite_existing);
    }
  };
  hooks.on_failure = [&](const ModelParameters<float>& p, const OptimizerState<float>& s) {
    save(p, s);
    out << fmt::format("numeric failure at step {}; last good state saved to {}\n", s.step + 1,
                       ck_path.string());
  };
  const auto records = pretrain(params, mc, examples, train, state, hooks);
  log.close();
  m.output(ck_path);
  m.output(log_path);
  m.stats() = {{"sequences", examples.size()},
               {"parameters", parameter_count(mc)},
               {"final_loss", records.empty() ? 0.0 : records.back().loss}};
  m.write();
}

void cmd_finetune(const RunConfig& c, std::ostream& out) {
  Manifest m("finetune", c);
  const auto task = task_of(c);
  const auto settings = task_settings(c);
  const auto lexicon = load_lexicon(c, m);
  const auto vocab = load_vocab(c, m);
  const auto dir = output_dir(c);
  const auto pre_path = path_or(c, "paths.pretrained", dir / "pretrained.ckpt");
  if (!fs::exists(pre_path)) throw IoError("pretrained checkpoint not found: " + pre_path.string());
  m.input(pre_path);
  auto ck = load_checkpoint(pre_path);
  if (ck.config.vocab_size != vocab.size()) {
    throw InputError(fmt::format("checkpoint vocabulary size {} does not match {} ({} tokens)",
                                 ck.config.vocab_size, vocab_path(c).string(), vocab.size()));
  }
  if (settings.max_len > static_cast<std::size_t>(ck.config.max_positions)) {
    throw ConfigError("task.max_len exceeds the model's max_positions");
  }

  std::optional<std::vector<std::string>> head_labels;
  const auto labels_it = ck.metadata.find("labels");
  const auto task_it = ck.metadata.find("task");
  if (labels_it != ck.metadata.end() && task_it != ck.metadata.end() && task_it->second == c.get_string("task.name")) {
    head_labels = split_list(labels_it->second);
  }
  const auto train_path = required_path(c, "paths.train");
  const auto val_path = required_path(c, "paths.val");
  m.input(train_path);
  m.input(val_path);
  if (task == Task::kTag && !head_labels) head_labels = tag_inventory({train_path, val_path});
  auto train_data = load_task(task, train_path, head_labels, vocab, lexicon, settings);
  const auto labels = train_data.labels;
  const auto val_data = load_task(task, val_path, labels, vocab, lexicon, settings);
  if (val_data.examples.empty()) throw InputError("validation file has no examples");

  const int n = static_cast<int>(labels.size());
  const auto seed = seed_of(c);
  auto& head = task == Task::kClassify ? ck.config.num_classes : ck.config.num_tags;
  if (head && *head != n) {
    throw InputError(fmt::format("{} labels in {} but the checkpoint head has {}", n, train_path.string(), *head));
  }
  if (!head) {
    if (task == Task::kClassify) {
      attach_classifier(ck.params, ck.config, n, derive_seed(seed, 1));
    } else {
      attach_tagger(ck.params, ck.config, n, derive_seed(seed, 2));
    }
  }
  const auto train = train_config(c);
  out << fmt::format("fine-tuning {}: {} train / {} val examples, {} labels, head {} tail {}\n",
                     c.get_string("task.name"), train_data.examples.size(), val_data.examples.size(), n,
                     settings.head, settings.tail);
  TrainHooks hooks;
  hooks.on_step = [&](const LossRecord& r) {
    if (r.step % train.eval_every == 0) out << fmt::format("step {} loss {:.4f}\n", r.step, r.loss);
  };
  const auto result = finetune(std::move(ck.params), ck.config, task, train_data.examples,
                               std::span<const Example>(val_data.examples), train, std::nullopt, hooks);

  std::map<std::string, std::string> meta{{"kind", "finetuned"},
                                          {"task", c.get_string("task.name")},
                                          {"labels", join_list(labels)},
                                          {"head", std::to_string(settings.head)},
                                          {"tail", std::to_string(settings.tail)},
                                          {"max_len", std::to_string(settings.max_len)},
                                          {"best_step", std::to_string(result.best_step)}};
  const auto ck_path = dir / "finetuned.ckpt";
  save_checkpoint(ck_path, {ck.config, result.best.cast<float>(), std::nullopt, meta});
  std::string history;
  for (const auto& h : result.history) history += fmt::format("{}\t{}\n", h.step, h.val_loss);
  const auto history_path = dir / "finetune_history.tsv";
  const auto log_path = dir / "finetune_loss.tsv";
  write_text(history_path, history);
  write_text(log_path, format_log(result.log));
  out << fmt::format("{} after {} steps; best validation loss {:.6f} at step {}\n",
                     result.early_stopped ? "early stopped" : "finished", result.steps_run, result.best_loss,
                     result.best_step);
  m.output(ck_path);
  m.output(history_path);
  m.output(log_path);
  m.stats() = {{"head", settings.head},
               {"tail", settings.tail},
               {"labels", labels},
               {"best_step", result.best_step},
               {"best_val_loss", result.best_loss},
               {"steps_run", result.steps_run},
               {"early_stopped", result.early_stopped}};
  m.write();
}

void cmd_evaluate(const RunConfig& c, std::ostream& out) {
  Manifest m("evaluate", c);
  const auto lexicon = load_lexicon(c, m);
  const auto vocab = load_vocab(c, m);
  const auto lm = load_finetuned(c, m);
  const auto test_path = required_path(c, "paths.test");
  m.input(test_path);
  const auto data = load_task(lm.task, test_path, lm.labels, vocab, lexicon, lm.settings);
  if (data.examples.empty()) throw InputError("test file has no examples");
  const auto batch = positive(c, "eval.batch_size");
  const auto dir = output_dir(c);

  std::vector<std::pair<std::string, MetricsReport>> reports;
  if (lm.task == Task::kClassify) {
    const auto pred = predict_all_classes(lm, data.examples, batch);
    std::vector<std::string> g, p;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      g.push_back(lm.labels.at(data.gold_classes[i]));
      p.push_back(lm.labels.at(pred[i]));
    }
    reports.emplace_back("eval_report", macro_prf(confusion(g, p)));
  } else {
    const auto pred = predict_all_tags(lm, data, batch, fallback_tag(lm.labels));
    std::vector<std::vector<std::string>> gold;
    for (const auto& s : data.sentences) gold.push_back(s.tags);
    TagMetricsOptions opts;
    opts.exclude_outside = c.get_bool("eval.exclude_outside");
    reports.emplace_back("eval_report", token_tag_metrics(gold, pred, opts));
    if (detect_scheme(lm.labels) == TagScheme::kIob) {
      std::vector<std::vector<Entity>> ge, pe;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        ge.push_back(extract_entities(gold[i]));
        pe.push_back(extract_entities(pred[i]));
      }
      reports.emplace_back("eval_entities", entity_prf(ge, pe));
    }
  }
  json stats = json::object();
  for (const auto& [name, r] : reports) {
    out << (name == "eval_report" ? "token/document level\n" : "entity level\n");
    out << emit_report(r, ReportFormat::kPlain);
    const auto txt = dir / (name + ".txt");
    const auto csv = dir / (name + ".csv");
    write_text(txt, emit_report(r, ReportFormat::kPlain));
    write_text(csv, emit_report(r, ReportFormat::kDelimited));
    m.output(txt);
    m.output(csv);
    stats[name] = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  }
  m.stats() = stats;
  m.write();
}

void cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Manifest m("predict", c);
  const auto lexicon = load_lexicon(c, m);
  const auto vocab = load_vocab(c, m);
  const auto lm = load_finetuned(c, m);
  const auto in_path = required_path(c, "paths.input");
  if (!fs::exists(in_path)) throw IoError("input not found: " + in_path.string());
  m.input(in_path);
  const auto lines = split_lines(read_text(in_path));
  const auto batch = positive(c, "eval.batch_size");
  const auto out_path = path_or(c, "paths.output", output_dir(c) / "predictions.txt");
  std::string text;

  if (lm.task == Task::kClassify) {
    std::vector<ClassifiedDocument> docs;
    const auto budget = lm.settings.head + lm.settings.tail;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      docs.push_back({unescape_breaks(lines[i]), 0});
      const auto n = encode(docs.back().text, vocab, lexicon).ids.size();
      if (n > budget) {
        err << fmt::format("warning: line {} has {} tokens, truncated to first {} + last {}\n", i + 1, n,
                           lm.settings.head, lm.settings.tail);
      }
    }
    const auto examples =
        make_classification_examples(docs, vocab, lexicon, lm.settings.head, lm.settings.tail, lm.settings.max_len);
    const auto pred = predict_all_classes(lm, examples, batch);
    for (std::size_t i = 0; i < lines.size(); ++i) text += lm.labels.at(pred[i]) + "\t" + lines[i] + "\n";
  } else {
    // Runs of non-blank lines are sentences; the first field of a line is the word.
    TaskData d;
    std::vector<std::size_t> sentence_of_line(lines.size(), SIZE_MAX);
    std::vector<TaggedSentence> sentences;
    bool open = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::istringstream fields(lines[i]);
      std::string word;
      if (!(fields >> word)) {
        open = false;
        continue;
      }
      if (!open) sentences.emplace_back();
      open = true;
      sentences.back().words.push_back(word);
      sentences.back().tags.push_back(lm.labels.front());
      sentence_of_line[i] = sentences.size() - 1;
    }
    for (auto& te : make_tagging_examples(sentences, lm.labels, vocab, lexicon, lm.settings.max_len)) {
      d.examples.push_back(std::move(te.example));
      d.word_starts.push_back(std::move(te.word_starts));
    }
    for (std::size_t s = 0; s < d.word_starts.size(); ++s) {
      const auto dropped = std::count(d.word_starts[s].begin(), d.word_starts[s].end(), -1);
      if (dropped > 0) {
        err << fmt::format("warning: sentence {} exceeds {} tokens; {} trailing words tagged '{}'\n", s + 1,
                           lm.settings.max_len, dropped, fallback_tag(lm.labels));
      }
    }
    const auto pred = predict_all_tags(lm, d, batch, fallback_tag(lm.labels));
    std::vector<std::size_t> next(sentences.size(), 0);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto s = sentence_of_line[i];
      if (s == SIZE_MAX) {
        text += "\n";
        continue;
      }
      const auto w = next[s]++;
      text += sentences[s].words[w] + " " + pred[s][w] + "\n";
    }
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_text(out_path, text);
  m.output(out_path);
  out << fmt::format("{} lines predicted, written to {}\n", lines.size(), out_path.string());
  m.stats() = {{"lines", lines.size()}};
  m.write();
}

void cmd_synth(const RunConfig& c, std::ostream& out) {
  Manifest m("synth", c);
  const auto kind = c.get_string("synth.kind");
  const auto seed = seed_of(c);
  const auto dir = output_dir(c);
  json stats = json::object();
  auto write_split = [&](const std::string& name, const std::string& body, std::size_t count) {
    const auto p = dir / name;
    write_text(p, body);
    m.output(p);
    stats[name] = count;
    out << fmt::format("{}: {} items\n", p.string(), count);
  };
  if (kind == "mlm") {
    const auto sentences = synth_mlm_corpus(positive(c, "synth.sentences"), seed);
    std::string body;
    for (const auto& s : sentences) body += s + "\n";
    write_split("corpus.txt", body, sentences.size());
  } else if (kind == "classify") {
    SynthClassificationOptions opts;
    opts.classes = static_cast<int>(positive(c, "synth.classes"));
    opts.documents = positive(c, "synth.documents");
    opts.min_words = positive(c, "synth.min_words");
    opts.max_words = positive(c, "synth.max_words");
    if (opts.min_words > opts.max_words) throw ConfigError("synth.min_words exceeds synth.max_words");
    const auto ds = synth_classification(opts, seed);
    const auto splits = split_80_10_10<ClassifiedDocument>(ds.documents);
    for (const auto& [name, docs] : {std::pair{"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}}) {
      write_split(fmt::format("classify.{}.txt", name), format_classification({ds.labels, *docs}), docs->size());
    }
  } else if (kind == "tag" || kind == "keywords") {
    const auto sentences = positive(c, "synth.tag_sentences");
    const auto ds = kind == "tag" ? synth_tagging(static_cast<int>(positive(c, "synth.entity_types")), sentences, seed)
                                  : synth_keywords(sentences, seed);
    const auto splits = split_80_10_10<TaggedSentence>(ds.sentences);
    for (const auto& [name, part] : {std::pair{"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}}) {
      write_split(fmt::format("{}.{}.txt", kind, name), format_tagging(*part), part->size());
    }
  } else {
    throw ConfigError(fmt::format("synth.kind must be mlm, classify, tag or keywords, got '{}'", kind));
  }
  m.stats() = stats;
  m.write();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Arabic legal BERT toolkit: vocabulary, pretraining, fine-tuning and evaluation"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  app.add_option("--config", config_path, "config file of key = value lines");
  app.add_option("--set", overrides, "override a config key (key=value, repeatable)")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--seed", seed, "shorthand for --set seed=N");
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print the config schema and exit");

  auto* build_vocab = app.add_subcommand("build-vocab", "train a WordPiece vocabulary on the corpus");
  auto* pretrain_cmd = app.add_subcommand("pretrain", "masked-language-model pretraining");
  auto* finetune_cmd = app.add_subcommand("finetune", "fine-tune on a classification or tagging task");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a fine-tuned model on the test file");
  auto* predict_cmd = app.add_subcommand("predict", "label an input file");
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic datasets");
  std::string task, kind, input;
  for (auto* sub : {finetune_cmd, evaluate_cmd}) {
    sub->add_option("task", task, "classify or tag (overrides task.name)");
  }
  predict_cmd->add_option("input", input, "input file (overrides paths.input)");
  synth_cmd->add_option("kind", kind, "mlm, classify, tag or keywords (overrides synth.kind)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  if (list_keys) {
    for (const auto& k : run_config_schema()) {
      out << fmt::format("{} = {}  # {}\n", k.name, k.default_value.value_or(""), k.help);
    }
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << "error: a subcommand is required\n" << app.help();
    return kExitUsage;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config.merge_file(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    if (seed) config.set("seed", std::to_string(*seed));
    if (!task.empty()) config.set("task.name", task);
    if (!kind.empty()) config.set("synth.kind", kind);
    if (!input.empty()) config.set("paths.input", input);

    if (*build_vocab) cmd_build_vocab(config, out);
    if (*pretrain_cmd) cmd_pretrain(config, out);
    if (*finetune_cmd) cmd_finetune(config, out);
    if (*evaluate_cmd) cmd_evaluate(config, out);
    if (*predict_cmd) cmd_predict(config, out, err);
    if (*synth_cmd) cmd_synth(config, out);
    return kExitOk;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace albt
