#include "procstruct/eventlog.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "procstruct/error.hpp"

namespace procstruct {

VariantCounts variants(const EventLog& log) {
  VariantCounts counts;
  for (const auto& trace : log.traces) ++counts[trace];
  return counts;
}

std::size_t occ(const Variant& v, const EventLog& log) {
  return static_cast<std::size_t>(std::count(log.traces.begin(), log.traces.end(), v));
}

std::string join_labels(std::span<const std::string> labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ';';
    out += labels[i];
  }
  return out;
}

bool is_valid_label(std::string_view label) noexcept {
  if (label.empty()) return false;
  if (label == Vocabulary::kBos || label == Vocabulary::kEos || label == Vocabulary::kPad)
    return false;
  return label.find_first_of(";|,\n\r") == std::string_view::npos;
}

Vocabulary::Vocabulary(std::vector<std::string> activities) : activities_(std::move(activities)) {
  std::sort(activities_.begin(), activities_.end());
  for (std::size_t i = 0; i < activities_.size(); ++i) {
    if (!is_valid_label(activities_[i]))
      throw Error("invalid activity label '" + activities_[i] + "'");
    if (i > 0 && activities_[i] == activities_[i - 1])
      throw Error("duplicate activity label '" + activities_[i] + "'");
    index_.emplace(activities_[i], static_cast<Token>(i));
  }
}

std::optional<Token> Vocabulary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Token Vocabulary::index_of(std::string_view label) const {
  if (auto t = find(label)) return *t;
  throw Error("label '" + std::string(label) + "' is not in the vocabulary");
}

std::string_view Vocabulary::label(Token t) const {
  if (is_activity(t)) return activities_[static_cast<std::size_t>(t)];
  if (t == bos()) return kBos;
  if (t == eos()) return kEos;
  if (t == pad()) return kPad;
  throw Error("token index " + std::to_string(t) + " out of vocabulary");
}

Vocabulary build_vocabulary(const EventLog& log) {
  std::set<std::string> labels;
  for (const auto& trace : log.traces) labels.insert(trace.begin(), trace.end());
  return Vocabulary(std::vector<std::string>(labels.begin(), labels.end()));
}

namespace {

std::vector<Token> window_of(const Vocabulary& vocab, std::span<const Token> seq,
                             std::size_t window) {
  std::vector<Token> out(window, vocab.pad());
  const std::size_t keep = std::min(window, seq.size());
  std::copy(seq.end() - static_cast<std::ptrdiff_t>(keep), seq.end(),
            out.end() - static_cast<std::ptrdiff_t>(keep));
  return out;
}

}  // namespace

std::vector<Token> encode_prefix(const Vocabulary& vocab, std::span<const std::string> labels,
                                 std::size_t window) {
  std::vector<Token> seq;
  seq.reserve(labels.size() + 1);
  seq.push_back(vocab.bos());
  for (const auto& l : labels) seq.push_back(vocab.index_of(l));
  return window_of(vocab, seq, window);
}

std::vector<PrefixSample> prefixes(const EventLog& log, const Vocabulary& vocab,
                                   std::size_t window) {
  if (window == 0) throw Error("prefix window must be positive");
  std::vector<PrefixSample> samples;
  std::vector<Token> seq;
  for (const auto& trace : log.traces) {
    seq.assign(1, vocab.bos());
    for (const auto& label : trace) seq.push_back(vocab.index_of(label));
    for (std::size_t k = 1; k <= seq.size(); ++k) {
      const Token target = k < seq.size() ? seq[k] : vocab.eos();
      samples.push_back({window_of(vocab, std::span(seq).first(k), window), target});
    }
  }
  return samples;
}

EventLog parse_log(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Trace trace;
    if (!line.empty()) {
      std::size_t start = 0;
      while (true) {
        const auto end = line.find(';', start);
        std::string label = line.substr(start, end == std::string::npos ? end : end - start);
        if (!is_valid_label(label))
          throw ParseError(line_no, "malformed activity label '" + label + "'");
        trace.push_back(std::move(label));
        if (end == std::string::npos) break;
        start = end + 1;
      }
    }
    log.traces.push_back(std::move(trace));
  }
  return log;
}

void format_log(const EventLog& log, std::ostream& out) {
  for (const auto& trace : log.traces) out << join_labels(trace) << '\n';
}

EventLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open log file " + path.string());
  return parse_log(in);
}

void write_log(const EventLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write log file " + path.string());
  format_log(log, out);
}

}  // namespace procstruct
