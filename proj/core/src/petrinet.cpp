#include "procstruct/petrinet.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "procstruct/error.hpp"
#include "procstruct/random.hpp"

namespace procstruct {

std::uint64_t Marking::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : tokens_) sum += c;
  return sum;
}

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto c : m.tokens()) h = mix_seed(h ^ c);
  return static_cast<std::size_t>(h);
}

PetriNet::PetriNet(std::vector<std::string> places, std::vector<Transition> transitions,
                   std::vector<Arc> arcs, MarkingSpec initial, MarkingSpec final)
    : places_(std::move(places)), transitions_(std::move(transitions)), arcs_(std::move(arcs)) {
  for (std::size_t i = 0; i < places_.size(); ++i) {
    if (!place_index_.emplace(places_[i], i).second)
      throw InvalidNetError("duplicate place '" + places_[i] + "'");
  }
  bool any_labelled = false;
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const auto& t = transitions_[i];
    if (place_index_.count(t.id))
      throw InvalidNetError("identifier '" + t.id + "' names both a place and a transition");
    if (!transition_index_.emplace(t.id, i).second)
      throw InvalidNetError("duplicate transition '" + t.id + "'");
    if (t.label) {
      if (!is_valid_label(*t.label))
        throw InvalidNetError("transition '" + t.id + "' has invalid label '" + *t.label + "'");
      any_labelled = true;
    }
  }
  if (!any_labelled) throw InvalidNetError("net has no labelled transition");

  inputs_.resize(transitions_.size());
  outputs_.resize(transitions_.size());
  for (const auto& arc : arcs_) {
    auto src_p = place_index_.find(arc.source);
    auto tgt_p = place_index_.find(arc.target);
    auto src_t = transition_index_.find(arc.source);
    auto tgt_t = transition_index_.find(arc.target);
    if (src_p != place_index_.end() && tgt_t != transition_index_.end()) {
      inputs_[tgt_t->second].push_back(src_p->second);
    } else if (src_t != transition_index_.end() && tgt_p != place_index_.end()) {
      outputs_[src_t->second].push_back(tgt_p->second);
    } else {
      throw InvalidNetError("arc " + arc.source + " -> " + arc.target +
                            " does not connect an existing place and transition");
    }
  }
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    auto dup = [&](std::vector<std::size_t>& v) {
      std::sort(v.begin(), v.end());
      return std::adjacent_find(v.begin(), v.end()) != v.end();
    };
    if (dup(inputs_[t]) || dup(outputs_[t]))
      throw InvalidNetError("transition '" + transitions_[t].id + "' has parallel arcs");
  }
  initial_ = marking(initial);
  final_ = marking(final);
}

std::optional<std::size_t> PetriNet::place_index(const std::string& id) const {
  auto it = place_index_.find(id);
  if (it == place_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> PetriNet::transition_index(const std::string& id) const {
  auto it = transition_index_.find(id);
  if (it == transition_index_.end()) return std::nullopt;
  return it->second;
}

Marking PetriNet::marking(const MarkingSpec& spec) const {
  std::vector<std::uint32_t> tokens(places_.size(), 0);
  for (const auto& [place, count] : spec) {
    auto idx = place_index(place);
    if (!idx) throw InvalidNetError("marking references unknown place '" + place + "'");
    tokens[*idx] = count;
  }
  return Marking(std::move(tokens));
}

MarkingSpec PetriNet::describe(const Marking& m) const {
  MarkingSpec spec;
  for (std::size_t i = 0; i < m.place_count(); ++i)
    if (m[i] > 0) spec[places_[i]] = m[i];
  return spec;
}

std::vector<std::string> PetriNet::activity_labels() const {
  std::vector<std::string> labels;
  for (const auto& t : transitions_)
    if (t.label) labels.push_back(*t.label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

bool is_enabled(const PetriNet& net, const Marking& m, std::size_t t) {
  const auto& in = net.inputs(t);
  return std::all_of(in.begin(), in.end(), [&](std::size_t p) { return m[p] > 0; });
}

std::vector<std::size_t> enabled(const PetriNet& net, const Marking& m) {
  if (m.place_count() != net.places().size())
    throw InvalidNetError("marking does not match the net's places");
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < net.transitions().size(); ++t)
    if (is_enabled(net, m, t)) out.push_back(t);
  return out;
}

Marking fire(const PetriNet& net, const Marking& m, std::size_t t) {
  if (t >= net.transitions().size())
    throw NotEnabledError("transition index " + std::to_string(t) + " does not exist");
  if (m.place_count() != net.places().size())
    throw InvalidNetError("marking does not match the net's places");
  if (!is_enabled(net, m, t))
    throw NotEnabledError("transition '" + net.transitions()[t].id + "' is not enabled");
  Marking next = m;
  for (auto p : net.inputs(t)) --next.tokens()[p];
  for (auto p : net.outputs(t)) ++next.tokens()[p];
  return next;
}

namespace {

using VisitCounts = std::unordered_map<Marking, std::size_t, MarkingHash>;

struct Candidate {
  std::size_t transition;
  Marking next;
};

std::vector<Candidate> admissible(const PetriNet& net, const Marking& m, const VisitCounts& visits,
                                  std::size_t bound) {
  std::vector<Candidate> out;
  for (auto t : enabled(net, m)) {
    Marking next = fire(net, m, t);
    auto it = visits.find(next);
    if (it == visits.end() || it->second < bound) out.push_back({t, std::move(next)});
  }
  return out;
}

}  // namespace

EventLog playout(const PetriNet& net, const PlayoutConfig& cfg) {
  if (cfg.n_traces == 0) throw Error("playout needs n_traces >= 1");
  if (cfg.max_marking_visits == 0) throw Error("playout needs max_marking_visits >= 1");
  Rng rng(cfg.seed);
  EventLog log;
  log.traces.reserve(cfg.n_traces);
  for (std::size_t i = 0; i < cfg.n_traces; ++i) {
    bool done = false;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      Marking m = net.initial_marking();
      VisitCounts visits{{m, 1}};
      Trace trace;
      for (std::size_t step = 0; step <= cfg.max_steps; ++step) {
        if (m == net.final_marking()) {
          done = true;
          break;
        }
        auto cands = admissible(net, m, visits, cfg.max_marking_visits);
        if (cands.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
        auto& chosen = cands[pick(rng)];
        if (const auto& label = net.transitions()[chosen.transition].label) trace.push_back(*label);
        m = std::move(chosen.next);
        ++visits[m];
      }
      if (done) log.traces.push_back(std::move(trace));
    }
    if (!done)
      throw PlayoutError("trace " + std::to_string(i) + " did not reach the final marking within " +
                         std::to_string(cfg.max_attempts) + " attempts");
  }
  return log;
}

std::set<Variant> enumerate_variants(const PetriNet& net, std::size_t max_marking_visits,
                                     std::size_t max_states) {
  if (max_marking_visits == 0) throw Error("max_marking_visits must be >= 1");
  std::set<Variant> found;
  VisitCounts visits{{net.initial_marking(), 1}};
  Variant labels;
  std::size_t expanded = 0;

  std::function<void(const Marking&)> explore = [&](const Marking& m) {
    if (++expanded > max_states)
      throw BudgetExceededError("variant enumeration exceeded " + std::to_string(max_states) +
                                " search states");
    if (m == net.final_marking()) {
      found.insert(labels);
      return;
    }
    for (auto& cand : admissible(net, m, visits, max_marking_visits)) {
      const auto& label = net.transitions()[cand.transition].label;
      if (label) labels.push_back(*label);
      auto& count = visits[cand.next];
      ++count;
      explore(cand.next);
      if (--visits[cand.next] == 0) visits.erase(cand.next);
      if (label) labels.pop_back();
    }
  };
  explore(net.initial_marking());
  return found;
}

std::string net_to_json(const PetriNet& net) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["places"] = net.places();
  auto transitions = ordered_json::array();
  for (const auto& t : net.transitions()) {
    ordered_json jt;
    jt["id"] = t.id;
    jt["label"] = t.label ? ordered_json(*t.label) : ordered_json(nullptr);
    transitions.push_back(std::move(jt));
  }
  doc["transitions"] = std::move(transitions);
  auto arcs = ordered_json::array();
  for (const auto& a : net.arcs()) arcs.push_back({a.source, a.target});
  doc["arcs"] = std::move(arcs);
  doc["initial_marking"] = net.describe(net.initial_marking());
  doc["final_marking"] = net.describe(net.final_marking());
  return doc.dump(2) + "\n";
}

PetriNet net_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    std::vector<Transition> transitions;
    for (const auto& jt : doc.at("transitions")) {
      Transition t{jt.at("id").get<std::string>(), std::nullopt};
      if (jt.contains("label") && !jt.at("label").is_null()) t.label = jt.at("label").get<std::string>();
      transitions.push_back(std::move(t));
    }
    std::vector<Arc> arcs;
    for (const auto& ja : doc.at("arcs")) {
      if (!ja.is_array() || ja.size() != 2) throw InvalidNetError("arcs must be [source, target] pairs");
      arcs.push_back({ja[0].get<std::string>(), ja[1].get<std::string>()});
    }
    return PetriNet(doc.at("places").get<std::vector<std::string>>(), std::move(transitions),
                    std::move(arcs), doc.at("initial_marking").get<MarkingSpec>(),
                    doc.at("final_marking").get<MarkingSpec>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidNetError(std::string("malformed net document: ") + e.what());
  }
}

void write_net(const PetriNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write net file " + path.string());
  out << net_to_json(net);
}

PetriNet read_net(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open net file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return net_from_json(buf.str());
}

}  // namespace procstruct
