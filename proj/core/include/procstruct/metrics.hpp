#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "procstruct/eventlog.hpp"

namespace procstruct {

// Each metric compares variant multiplicities. `sim_scale` multiplies every
// simulated count (and |Sim|) before the comparison; evaluate() sets it to
// (|Tr| + |Te|) / |Sim| so logs of different sizes remain comparable.

/// Share of training behaviour, by multiplicity, reproduced in the simulation.
double fitness(const VariantCounts& sim, const VariantCounts& tr, double sim_scale = 1.0);
double fitness(const EventLog& sim, const EventLog& tr, double sim_scale = 1.0);

/// Share of simulated behaviour, by multiplicity, that occurs in the full log.
double precision(const VariantCounts& sim, const VariantCounts& full, double sim_scale = 1.0);
double precision(const EventLog& sim, const EventLog& full, double sim_scale = 1.0);

/// Share of held-out behaviour, by multiplicity, reproduced in the simulation.
double generalisation(const VariantCounts& sim, const VariantCounts& te, double sim_scale = 1.0);
double generalisation(const EventLog& sim, const EventLog& te, double sim_scale = 1.0);

struct MetricsReport {
  double fitness = 0.0;
  double precision = 0.0;
  double generalisation = 0.0;
  std::size_t size_tr = 0;
  std::size_t size_te = 0;
  std::size_t size_sim = 0;
  double correction = 1.0;
};

/// Throws MetricsError if any of the three logs is empty.
MetricsReport evaluate(const EventLog& sim, const EventLog& tr, const EventLog& te);

inline constexpr const char* kFoldCsvHeader =
    "model,fold,test_variants,fitness,precision,generalisation,size_tr,size_te,size_sim,correction";

/// One folds.csv row (no trailing newline); values use fixed 6-digit precision.
std::string fold_csv_row(const std::string& model, std::size_t fold, const std::string& test_variants,
                         const MetricsReport& report);

}  // namespace procstruct
