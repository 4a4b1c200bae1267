#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace procstruct {

using Trace = std::vector<std::string>;
/// A variant is identified by its exact activity sequence.
using Variant = std::vector<std::string>;
/// Multiset of variants, ordered lexicographically by label sequence.
using VariantCounts = std::map<Variant, std::size_t>;

struct EventLog {
  std::vector<Trace> traces;

  std::size_t size() const noexcept { return traces.size(); }
  bool empty() const noexcept { return traces.empty(); }

  friend bool operator==(const EventLog&, const EventLog&) = default;
};

VariantCounts variants(const EventLog& log);
std::size_t occ(const Variant& v, const EventLog& log);

/// Join a label sequence with ';' (the on-disk trace separator).
std::string join_labels(std::span<const std::string> labels);

/// Labels must be non-empty, free of the log/CSV/manifest separators and
/// distinct from the special token names.
bool is_valid_label(std::string_view label) noexcept;

using Token = std::int32_t;

// Activity labels occupy indices [0, n) in sorted order; BOS, EOS and PAD follow.
class Vocabulary {
 public:
  static constexpr std::string_view kBos = "<BOS>";
  static constexpr std::string_view kEos = "<EOS>";
  static constexpr std::string_view kPad = "<PAD>";

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> activities);

  std::size_t size() const noexcept { return activities_.size() + 3; }
  std::size_t activity_count() const noexcept { return activities_.size(); }
  Token bos() const noexcept { return static_cast<Token>(activities_.size()); }
  Token eos() const noexcept { return bos() + 1; }
  Token pad() const noexcept { return bos() + 2; }

  bool is_activity(Token t) const noexcept { return t >= 0 && t < bos(); }
  std::optional<Token> find(std::string_view label) const;
  /// Throws Error for unknown labels.
  Token index_of(std::string_view label) const;
  std::string_view label(Token t) const;

  const std::vector<std::string>& activities() const noexcept { return activities_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.activities_ == b.activities_;
  }

 private:
  std::vector<std::string> activities_;
  std::unordered_map<std::string, Token> index_;
};

Vocabulary build_vocabulary(const EventLog& log);

struct PrefixSample {
  std::vector<Token> prefix;  // exactly `window` tokens, left-padded with PAD
  Token target = 0;

  friend bool operator==(const PrefixSample&, const PrefixSample&) = default;
};

/// BOS followed by `labels`, keeping the last `window` tokens and left-padding with PAD.
std::vector<Token> encode_prefix(const Vocabulary& vocab, std::span<const std::string> labels,
                                 std::size_t window);

/// All n+1 next-event samples of every trace, in log order.
std::vector<PrefixSample> prefixes(const EventLog& log, const Vocabulary& vocab,
                                   std::size_t window);

// One trace per line, labels separated by ';'. An empty line is an empty trace.
EventLog parse_log(std::istream& in);
void format_log(const EventLog& log, std::ostream& out);
EventLog read_log(const std::filesystem::path& path);
void write_log(const EventLog& log, const std::filesystem::path& path);

}  // namespace procstruct
