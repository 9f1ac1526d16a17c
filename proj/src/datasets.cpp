#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "albt/corpus.h"
#include "albt/error.h"

namespace albt {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Lines without their terminators; a trailing newline adds no empty line.
std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string strip_lines(std::string_view text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto next = text.find("\\n", pos);
    if (next == std::string_view::npos) return {};
    pos = next + 2;
  }
  return std::string(text.substr(pos));
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

std::string escape_breaks(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

ClassificationDataset parse_classification(std::string_view text,
                                           const ClassificationLoadOptions& options) {
  ClassificationDataset ds;
  std::unordered_map<std::string, std::int32_t> ids;
  if (options.fixed_labels) {
    ds.labels = *options.fixed_labels;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
      ids.emplace(ds.labels[i], static_cast<std::int32_t>(i));
    }
  }
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "missing label<TAB>text separator");
    const std::string label(line.substr(0, tab));
    if (label.empty()) throw ParseError(line_no, "empty label");
    auto it = ids.find(label);
    if (it == ids.end()) {
      if (options.fixed_labels) throw ParseError(line_no, "unknown label '" + label + "'");
      it = ids.emplace(label, static_cast<std::int32_t>(ds.labels.size())).first;
      ds.labels.push_back(label);
    }
    auto body = line.substr(tab + 1);
    std::string stripped = strip_lines(body, options.strip_head_lines);
    ds.documents.push_back({unescape_breaks(stripped), it->second});
  }
  return ds;
}

ClassificationDataset load_classification_file(const std::filesystem::path& path,
                                               const ClassificationLoadOptions& options) {
  return parse_classification(read_file(path), options);
}

std::string format_classification(const ClassificationDataset& dataset) {
  std::string out;
  for (const auto& doc : dataset.documents) {
    out += dataset.labels.at(doc.label);
    out += '\t';
    out += escape_breaks(doc.text);
    out += '\n';
  }
  return out;
}

TagScheme detect_scheme(std::span<const std::string> tags) {
  if (tags.empty()) return TagScheme::kOther;
  const bool binary =
      std::all_of(tags.begin(), tags.end(), [](const auto& t) { return t == "0" || t == "1"; });
  if (binary) return TagScheme::kBinary;
  const bool iob = std::all_of(tags.begin(), tags.end(), [](const std::string& t) {
    return t == "O" || ((t.starts_with("B-") || t.starts_with("I-")) && t.size() > 2);
  });
  return iob ? TagScheme::kIob : TagScheme::kOther;
}

void validate_iob(std::span<const TaggedSentence> sentences) {
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& tags = sentences[s].tags;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (!tags[i].starts_with("I-")) continue;
      const auto type = std::string_view(tags[i]).substr(2);
      const bool ok = i > 0 && tags[i - 1].size() > 2 && tags[i - 1][0] != 'O' &&
                      std::string_view(tags[i - 1]).substr(2) == type;
      if (!ok) {
        throw ValidationError(s, i, fmt::format("'{}' does not continue an entity of type {}",
                                                tags[i], type));
      }
    }
  }
}

TaggingDataset parse_tagging(std::string_view text) {
  TaggingDataset ds;
  std::unordered_map<std::string, bool> seen;
  TaggedSentence current;
  auto flush = [&] {
    if (!current.words.empty()) ds.sentences.push_back(std::move(current));
    current = {};
  };
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      flush();
      continue;
    }
    const auto sep = line.find_last_of(' ');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 == line.size()) {
      throw ParseError(line_no, "expected 'token tag'");
    }
    std::string tag(line.substr(sep + 1));
    current.words.emplace_back(line.substr(0, sep));
    if (seen.emplace(tag, true).second) ds.tag_set.push_back(tag);
    current.tags.push_back(std::move(tag));
  }
  flush();
  ds.scheme = detect_scheme(ds.tag_set);
  if (ds.scheme == TagScheme::kIob) validate_iob(ds.sentences);
  return ds;
}

TaggingDataset load_tagging_file(const std::filesystem::path& path) {
  return parse_tagging(read_file(path));
}

std::string format_tagging(std::span<const TaggedSentence> sentences) {
  std::string out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s > 0) out += '\n';
    for (std::size_t i = 0; i < sentences[s].words.size(); ++i) {
      out += sentences[s].words[i];
      out += ' ';
      out += sentences[s].tags[i];
      out += '\n';
    }
  }
  return out;
}

std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const auto end = std::min(order.size(), begin + batch_size);
    const auto rows = static_cast<std::int64_t>(end - begin);
    std::size_t cols = 1;
    for (auto i = begin; i < end; ++i) cols = std::max(cols, examples[order[i]].ids.size());
    Batch b;
    b.input_ids = IdMatrix::Constant(rows, cols, kPadId);
    b.attention_mask = IdMatrix::Zero(rows, cols);
    b.segment_ids = IdMatrix::Zero(rows, cols);
    b.token_labels = IdMatrix::Constant(rows, cols, kNoLabel);
    for (std::int64_t r = 0; r < rows; ++r) {
      const auto& ex = examples[order[begin + r]];
      for (std::size_t t = 0; t < ex.ids.size(); ++t) {
        b.input_ids(r, t) = ex.ids[t];
        b.attention_mask(r, t) = 1;
        if (t < ex.token_labels.size()) b.token_labels(r, t) = ex.token_labels[t];
      }
      b.sequence_labels.push_back(ex.sequence_label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<Example> make_classification_examples(std::span<const ClassifiedDocument> documents,
                                                  const Vocabulary& vocab,
                                                  const AffixLexicon& lexicon, std::size_t head,
                                                  std::size_t tail, std::size_t max_len) {
  std::vector<Example> out;
  out.reserve(documents.size());
  for (const auto& doc : documents) {
    const auto content = head_tails_truncate(encode(doc.text, vocab, lexicon).ids, head, tail, max_len);
    Example ex;
    ex.ids.push_back(kClsId);
    ex.ids.insert(ex.ids.end(), content.begin(), content.end());
    ex.ids.push_back(kSepId);
    ex.token_labels.assign(ex.ids.size(), kNoLabel);
    ex.sequence_label = doc.label;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TaggingExample> make_tagging_examples(std::span<const TaggedSentence> sentences,
                                                  std::span<const std::string> tag_set,
                                                  const Vocabulary& vocab,
                                                  const AffixLexicon& lexicon,
                                                  std::size_t max_len) {
  if (max_len < 3) throw ConfigError("max_len must leave room for content tokens");
  std::unordered_map<std::string, std::int32_t> tag_ids;
  for (std::size_t i = 0; i < tag_set.size(); ++i) {
    tag_ids.emplace(tag_set[i], static_cast<std::int32_t>(i));
  }
  const auto budget = max_len - 2;
  std::vector<TaggingExample> out;
  out.reserve(sentences.size());
  for (const auto& sentence : sentences) {
    TaggingExample te;
    auto& ex = te.example;
    ex.ids.push_back(kClsId);
    ex.token_labels.push_back(kNoLabel);
    bool full = false;
    for (std::size_t w = 0; w < sentence.words.size(); ++w) {
      std::int32_t label = kNoLabel;
      if (w < sentence.tags.size()) {
        auto it = tag_ids.find(sentence.tags[w]);
        if (it == tag_ids.end()) throw InputError("unknown tag '" + sentence.tags[w] + "'");
        label = it->second;
      }
      std::vector<std::int32_t> pieces;
      for (const auto& part : pretokenize(normalize(sentence.words[w]))) {
        const auto ids = encode_word(part, vocab, lexicon);
        pieces.insert(pieces.end(), ids.begin(), ids.end());
      }
      if (pieces.empty()) pieces.push_back(kUnkId);
      if (full || ex.ids.size() - 1 + pieces.size() > budget) {
        full = true;
        te.word_starts.push_back(-1);
        continue;
      }
      te.word_starts.push_back(static_cast<std::int32_t>(ex.ids.size()));
      for (std::size_t p = 0; p < pieces.size(); ++p) {
        ex.ids.push_back(pieces[p]);
        ex.token_labels.push_back(p == 0 ? label : kNoLabel);
      }
    }
    ex.ids.push_back(kSepId);
    ex.token_labels.push_back(kNoLabel);
    out.push_back(std::move(te));
  }
  return out;
}

}  // namespace albt
