#include "procstruct/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "procstruct/error.hpp"

namespace procstruct {

namespace {

std::size_t total(const VariantCounts& counts) {
  std::size_t n = 0;
  for (const auto& [v, c] : counts) n += c;
  return n;
}

std::size_t lookup(const VariantCounts& counts, const Variant& v) {
  auto it = counts.find(v);
  return it == counts.end() ? 0 : it->second;
}

void check_scale(double s) {
  if (!(s > 0.0)) throw MetricsError("simulation scale must be positive");
}

// Σ_{v in reference} min(scale * sim(v), ref(v)) / |reference|
double overlap_share(const VariantCounts& sim, const VariantCounts& ref, double scale) {
  const std::size_t n = total(ref);
  double sum = 0.0;
  for (const auto& [v, c] : ref)
    sum += std::min(scale * static_cast<double>(lookup(sim, v)), static_cast<double>(c));
  return sum / static_cast<double>(n);
}

}  // namespace

double fitness(const VariantCounts& sim, const VariantCounts& tr, double sim_scale) {
  check_scale(sim_scale);
  if (tr.empty()) throw MetricsError("fitness needs a non-empty training log");
  return overlap_share(sim, tr, sim_scale);
}

double precision(const VariantCounts& sim, const VariantCounts& full, double sim_scale) {
  check_scale(sim_scale);
  if (sim.empty()) throw MetricsError("precision needs a non-empty simulated log");
  double sum = 0.0;
  for (const auto& [v, c] : sim)
    sum += std::min(sim_scale * static_cast<double>(c), static_cast<double>(lookup(full, v)));
  return sum / (sim_scale * static_cast<double>(total(sim)));
}

double generalisation(const VariantCounts& sim, const VariantCounts& te, double sim_scale) {
  check_scale(sim_scale);
  if (te.empty()) throw MetricsError("generalisation needs a non-empty test log");
  return overlap_share(sim, te, sim_scale);
}

double fitness(const EventLog& sim, const EventLog& tr, double sim_scale) {
  return fitness(variants(sim), variants(tr), sim_scale);
}

double precision(const EventLog& sim, const EventLog& full, double sim_scale) {
  return precision(variants(sim), variants(full), sim_scale);
}

double generalisation(const EventLog& sim, const EventLog& te, double sim_scale) {
  return generalisation(variants(sim), variants(te), sim_scale);
}

MetricsReport evaluate(const EventLog& sim, const EventLog& tr, const EventLog& te) {
  if (tr.empty()) throw MetricsError("evaluate needs a non-empty training log");
  if (te.empty()) throw MetricsError("evaluate needs a non-empty test log");
  if (sim.empty()) throw MetricsError("evaluate needs a non-empty simulated log");
  const auto sim_counts = variants(sim);
  const auto tr_counts = variants(tr);
  const auto te_counts = variants(te);
  auto full_counts = tr_counts;
  for (const auto& [v, c] : te_counts) full_counts[v] += c;

  MetricsReport r;
  r.size_tr = tr.size();
  r.size_te = te.size();
  r.size_sim = sim.size();
  r.correction = sim.size() == tr.size() + te.size()
                     ? 1.0
                     : static_cast<double>(tr.size() + te.size()) / static_cast<double>(sim.size());
  r.fitness = fitness(sim_counts, tr_counts, r.correction);
  r.precision = precision(sim_counts, full_counts, r.correction);
  r.generalisation = generalisation(sim_counts, te_counts, r.correction);
  return r;
}

std::string fold_csv_row(const std::string& model, std::size_t fold, const std::string& test_variants,
                         const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%zu,%zu,%zu,%.6f", r.fitness, r.precision,
                r.generalisation, r.size_tr, r.size_te, r.size_sim, r.correction);
  return model + "," + std::to_string(fold) + "," + test_variants + buf;
}

}  // namespace procstruct
