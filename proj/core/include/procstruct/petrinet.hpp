#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "procstruct/eventlog.hpp"

namespace procstruct {

struct Transition {
  std::string id;
  std::optional<std::string> label;  // nullopt for silent (routing) transitions

  bool silent() const noexcept { return !label.has_value(); }
};

/// Directed arc between a place and a transition (either direction).
struct Arc {
  std::string source;
  std::string target;
};

using MarkingSpec = std::map<std::string, std::uint32_t>;

/// Token counts indexed by place position within the owning net.
class Marking {
 public:
  Marking() = default;
  explicit Marking(std::vector<std::uint32_t> tokens) : tokens_(std::move(tokens)) {}

  std::uint32_t operator[](std::size_t place) const { return tokens_.at(place); }
  std::size_t place_count() const noexcept { return tokens_.size(); }
  std::uint64_t total() const noexcept;
  const std::vector<std::uint32_t>& tokens() const noexcept { return tokens_; }
  std::vector<std::uint32_t>& tokens() noexcept { return tokens_; }

  friend auto operator<=>(const Marking&, const Marking&) = default;

 private:
  std::vector<std::uint32_t> tokens_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept;
};

class PetriNet {
 public:
  /// Validates references and that at least one transition is labelled; throws InvalidNetError.
  PetriNet(std::vector<std::string> places, std::vector<Transition> transitions,
           std::vector<Arc> arcs, MarkingSpec initial, MarkingSpec final);

  const std::vector<std::string>& places() const noexcept { return places_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }

  const std::vector<std::size_t>& inputs(std::size_t t) const { return inputs_.at(t); }
  const std::vector<std::size_t>& outputs(std::size_t t) const { return outputs_.at(t); }

  std::optional<std::size_t> place_index(const std::string& id) const;
  std::optional<std::size_t> transition_index(const std::string& id) const;

  const Marking& initial_marking() const noexcept { return initial_; }
  const Marking& final_marking() const noexcept { return final_; }
  Marking marking(const MarkingSpec& spec) const;
  MarkingSpec describe(const Marking& m) const;

  /// Distinct labels of visible transitions, sorted.
  std::vector<std::string> activity_labels() const;

 private:
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  std::vector<Arc> arcs_;
  std::map<std::string, std::size_t> place_index_;
  std::map<std::string, std::size_t> transition_index_;
  std::vector<std::vector<std::size_t>> inputs_;
  std::vector<std::vector<std::size_t>> outputs_;
  Marking initial_;
  Marking final_;
};

/// Indices of transitions whose input places all hold at least one token, ascending.
std::vector<std::size_t> enabled(const PetriNet& net, const Marking& m);
bool is_enabled(const PetriNet& net, const Marking& m, std::size_t t);

/// Throws NotEnabledError when `t` is not enabled at `m`.
Marking fire(const PetriNet& net, const Marking& m, std::size_t t);

struct PlayoutConfig {
  std::size_t n_traces = 1000;
  std::size_t max_marking_visits = 3;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 100;    // per trace, before PlayoutError
  std::size_t max_steps = 100'000;   // firings per attempt
};

/// Random firing runs from the initial to the final marking; each step picks
/// uniformly among enabled transitions whose successor marking has not yet
/// been visited `max_marking_visits` times in the current run.
EventLog playout(const PetriNet& net, const PlayoutConfig& cfg);

/// Exhaustive DFS of the visit-bounded run tree. Throws BudgetExceededError
/// once more than `max_states` search nodes have been expanded.
std::set<Variant> enumerate_variants(const PetriNet& net, std::size_t max_marking_visits,
                                     std::size_t max_states = 5'000'000);

// JSON document with keys places, transitions, arcs, initial_marking, final_marking.
std::string net_to_json(const PetriNet& net);
PetriNet net_from_json(const std::string& text);
void write_net(const PetriNet& net, const std::filesystem::path& path);
PetriNet read_net(const std::filesystem::path& path);

}  // namespace procstruct
