#include "procstruct/benchmarks.hpp"

#include <fstream>

#include "procstruct/error.hpp"

namespace procstruct {

ModelId::ModelId(int id) : id_(id) {
  if (id < kFirst || id > kLast)
    throw ConfigError("model id must be in 1..6, got " + std::to_string(id));
}

std::vector<ModelId> ModelId::all() {
  std::vector<ModelId> ids;
  for (int i = kFirst; i <= kLast; ++i) ids.emplace_back(i);
  return ids;
}

namespace {

class NetBuilder {
 public:
  explicit NetBuilder(std::string prefix) : prefix_(std::move(prefix)) {}

  std::string place() {
    places_.push_back("p" + std::to_string(places_.size()));
    return places_.back();
  }

  std::string label(const std::string& suffix) const { return prefix_ + "_" + suffix; }

  void visible(const std::string& label_suffix, const std::vector<std::string>& in,
               const std::vector<std::string>& out) {
    add(Transition{"t" + std::to_string(transitions_.size()), label(label_suffix)}, in, out);
  }

  void silent(const std::vector<std::string>& in, const std::vector<std::string>& out) {
    add(Transition{"tau" + std::to_string(transitions_.size()), std::nullopt}, in, out);
  }

  PetriNet build(const std::string& source, const std::string& sink) {
    return PetriNet(places_, transitions_, arcs_, {{source, 1}}, {{sink, 1}});
  }

 private:
  void add(Transition t, const std::vector<std::string>& in, const std::vector<std::string>& out) {
    for (const auto& p : in) arcs_.push_back({p, t.id});
    for (const auto& p : out) arcs_.push_back({t.id, p});
    transitions_.push_back(std::move(t));
  }

  std::string prefix_;
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  std::vector<Arc> arcs_;
};

// AND-split over `branches` sequences, joined again; split and join are silent.
PetriNet parallel_model(const std::string& prefix, const std::vector<std::vector<std::string>>& branches) {
  NetBuilder b(prefix);
  const auto source = b.place();
  std::vector<std::string> heads, tails;
  for (std::size_t i = 0; i < branches.size(); ++i) heads.push_back(b.place());
  b.silent({source}, heads);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    auto at = heads[i];
    for (const auto& act : branches[i]) {
      auto next = b.place();
      b.visible(act, {at}, {next});
      at = next;
    }
    tails.push_back(at);
  }
  const auto sink = b.place();
  b.silent(tails, {sink});
  return b.build(source, sink);
}

PetriNet model1() {
  std::vector<std::vector<std::string>> branches;
  for (int i = 1; i <= 5; ++i) branches.push_back({"A" + std::to_string(i)});
  return parallel_model("M1", branches);
}

PetriNet model2() {
  NetBuilder b("M2");
  const auto source = b.place();
  auto at = source;
  for (int i = 1; i <= 7; ++i) {
    auto next = b.place();
    b.visible("A" + std::to_string(i) + "a", {at}, {next});
    b.visible("A" + std::to_string(i) + "b", {at}, {next});
    at = next;
  }
  return b.build(source, at);
}

// The first choice leaves a token in a memory place that later enables only
// the matching branch of the eighth choice.
PetriNet model3() {
  NetBuilder b("M3");
  const auto source = b.place();
  const auto mem_a = b.place();
  const auto mem_b = b.place();
  auto at = b.place();
  b.visible("A1a", {source}, {at, mem_a});
  b.visible("A1b", {source}, {at, mem_b});
  for (int i = 2; i <= 7; ++i) {
    auto next = b.place();
    b.visible("A" + std::to_string(i) + "a", {at}, {next});
    b.visible("A" + std::to_string(i) + "b", {at}, {next});
    at = next;
  }
  const auto sink = b.place();
  b.visible("A8a", {at, mem_a}, {sink});
  b.visible("A8b", {at, mem_b}, {sink});
  return b.build(source, sink);
}

// Each inclusive-OR block offers <a>, <b>, or both in either order.
PetriNet model4() {
  NetBuilder b("M4");
  const auto source = b.place();
  auto at = source;
  for (int i = 1; i <= 3; ++i) {
    const auto a = "A" + std::to_string(i) + "a";
    const auto bb = "A" + std::to_string(i) + "b";
    const auto next = b.place();
    const auto only_a = b.place();
    const auto only_b = b.place();
    b.silent({at}, {only_a});
    b.visible(a, {only_a}, {next});
    b.silent({at}, {only_b});
    b.visible(bb, {only_b}, {next});
    const auto both_a = b.place();
    const auto both_b = b.place();
    const auto done_a = b.place();
    const auto done_b = b.place();
    b.silent({at}, {both_a, both_b});
    b.visible(a, {both_a}, {done_a});
    b.visible(bb, {both_b}, {done_b});
    b.silent({done_a, done_b}, {next});
    at = next;
  }
  return b.build(source, at);
}

PetriNet model5() {
  std::vector<std::string> first, second;
  for (int i = 1; i <= 5; ++i) first.push_back("A" + std::to_string(i));
  for (int i = 6; i <= 10; ++i) second.push_back("A" + std::to_string(i));
  return parallel_model("M5", {first, second});
}

// Three do-while loops; each body is a two-activity sequence run at least once.
PetriNet model6() {
  NetBuilder b("M6");
  const auto source = b.place();
  auto at = source;
  for (int i = 0; i < 3; ++i) {
    const auto mid = b.place();
    const auto end = b.place();
    b.visible("A" + std::to_string(2 * i + 1), {at}, {mid});
    b.visible("A" + std::to_string(2 * i + 2), {mid}, {end});
    b.silent({end}, {at});
    const auto next = b.place();
    b.silent({end}, {next});
    at = next;
  }
  return b.build(source, at);
}

}  // namespace

PetriNet build_model(ModelId id) {
  switch (id.value()) {
    case 1: return model1();
    case 2: return model2();
    case 3: return model3();
    case 4: return model4();
    case 5: return model5();
    case 6: return model6();
  }
  throw ConfigError("unknown model id");
}

ModelInfo model_info(ModelId id) {
  switch (id.value()) {
    case 1: return {id, "five-way parallel block of single activities", 3, 120};
    case 2: return {id, "seven sequential binary exclusive choices", 3, 128};
    case 3: return {id, "eight exclusive choices, the last tied to the first", 3, 128};
    case 4: return {id, "three sequential inclusive-or blocks over two activities", 3, 64};
    case 5: return {id, "two parallel sequences of five activities", 3, 126};
    case 6: return {id, "three sequential two-activity do-while loops", 3, 27};
  }
  throw ConfigError("unknown model id");
}

void export_models(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw Error("cannot write manifest in " + dir.string());
  manifest << "model,enumerated_variants,reported_variants,visit_bound\n";
  for (auto id : ModelId::all()) {
    const auto net = build_model(id);
    const auto info = model_info(id);
    write_net(net, dir / ("model_" + std::to_string(id.value()) + ".json"));
    manifest << id.value() << ',' << enumerate_variants(net, info.visit_bound).size() << ','
             << info.reported_variants << ',' << info.visit_bound << '\n';
  }
}

}  // namespace procstruct
