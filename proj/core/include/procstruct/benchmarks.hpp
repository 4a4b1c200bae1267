#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "procstruct/petrinet.hpp"

namespace procstruct {

/// Identifier of one of the six synthetic benchmark process models.
class ModelId {
 public:
  static constexpr int kFirst = 1;
  static constexpr int kLast = 6;

  /// Throws ConfigError outside 1..6.
  explicit ModelId(int id);
  int value() const noexcept { return id_; }

  static std::vector<ModelId> all();

  friend auto operator<=>(const ModelId&, const ModelId&) = default;

 private:
  int id_;
};

PetriNet build_model(ModelId id);

struct ModelInfo {
  ModelId id;
  std::string description;
  /// Marking-visit bound that defines the analysed variant set.
  std::size_t visit_bound;
  /// Variant count stated alongside the model's published description.
  std::size_t reported_variants;
};

ModelInfo model_info(ModelId id);

/// Writes model_<k>.json for every model plus manifest.csv with columns
/// model,enumerated_variants,reported_variants,visit_bound.
void export_models(const std::filesystem::path& dir);

}  // namespace procstruct
