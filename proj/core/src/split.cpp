#include "procstruct/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "procstruct/error.hpp"
#include "procstruct/random.hpp"

namespace procstruct {

LogPartition partition(std::shared_ptr<const EventLog> full, const SplitSpec& spec) {
  if (!full) throw SplitError("partition needs a source log");
  if (spec.test_variants.empty()) throw SplitError("split has no test variants");
  const std::set<Variant> test(spec.test_variants.begin(), spec.test_variants.end());
  LogPartition out;
  std::set<Variant> seen;
  for (const auto& trace : full->traces) {
    if (test.count(trace)) {
      out.test.traces.push_back(trace);
      seen.insert(trace);
    } else {
      out.train.traces.push_back(trace);
    }
  }
  if (seen.size() != test.size())
    throw SplitError("test variant not present in the source log");
  out.full = std::move(full);
  out.test_variants.assign(test.begin(), test.end());
  return out;
}

LogPartition partition(const EventLog& full, const SplitSpec& spec) {
  return partition(std::make_shared<const EventLog>(full), spec);
}

std::vector<SplitSpec> lovocv_specs(const EventLog& log) {
  const auto counts = variants(log);
  if (counts.size() < 2) throw SplitError("leave-one-variant-out needs at least two variants");
  std::vector<SplitSpec> specs;
  for (const auto& [v, n] : counts) specs.push_back({{v}, 0});
  return specs;
}

std::vector<LogPartition> lovocv_splits(const EventLog& log) {
  auto shared = std::make_shared<const EventLog>(log);
  std::vector<LogPartition> out;
  for (const auto& spec : lovocv_specs(log)) out.push_back(partition(shared, spec));
  return out;
}

std::size_t fraction_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

SplitSpec leave_fraction_out_spec(const std::vector<Variant>& candidates, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw SplitError("fraction must lie in (0, 1)");
  std::vector<Variant> pool(candidates);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const std::size_t k = fraction_count(fraction, pool.size());
  if (k < 1 || k >= pool.size())
    throw SplitError("fraction " + std::to_string(fraction) + " of " + std::to_string(pool.size()) +
                     " variants leaves an empty train or test part");
  Rng rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return {std::move(pool), seed};
}

LogPartition leave_fraction_out(const EventLog& log, double fraction, std::uint64_t seed) {
  std::vector<Variant> all;
  for (const auto& [v, n] : variants(log)) all.push_back(v);
  return partition(log, leave_fraction_out_spec(all, fraction, seed));
}

ValidationSplit validation_split(std::vector<PrefixSample> samples, double fraction,
                                 std::uint64_t seed) {
  if (samples.size() < 5) throw SplitError("validation split needs at least 5 samples");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw SplitError("validation fraction must lie in [0, 1)");
  const std::size_t k = fraction_count(fraction, samples.size());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> held(samples.size(), false);
  for (std::size_t i = 0; i < k; ++i) held[order[i]] = true;
  ValidationSplit out;
  out.validation.reserve(k);
  out.train.reserve(samples.size() - k);
  for (std::size_t i = 0; i < samples.size(); ++i)
    (held[i] ? out.validation : out.train).push_back(std::move(samples[i]));
  return out;
}

std::string format_variants(const std::vector<Variant>& variants) {
  std::string out;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (i) out += '|';
    out += join_labels(variants[i]);
  }
  return out;
}

void write_split_manifest(const std::vector<SplitSpec>& specs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write split manifest " + path.string());
  for (std::size_t i = 0; i < specs.size(); ++i)
    out << i << '\t' << specs[i].seed << '\t' << format_variants(specs[i].test_variants) << '\n';
}

std::vector<SplitSpec> read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open split manifest " + path.string());
  std::vector<SplitSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string fold, seed, list;
    if (!std::getline(fields, fold, '\t') || !std::getline(fields, seed, '\t') ||
        !std::getline(fields, list))
      throw ParseError(line_no, "expected fold, seed and variant list");
    SplitSpec spec;
    try {
      if (std::stoull(fold) != specs.size()) throw ParseError(line_no, "fold indices out of order");
      spec.seed = std::stoull(seed);
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "non-numeric fold or seed");
    }
    std::istringstream vs(list);
    std::string variant;
    while (std::getline(vs, variant, '|')) {
      std::istringstream one(variant);
      EventLog log;
      try {
        log = parse_log(one);
      } catch (const ParseError& e) {
        throw ParseError(line_no, e.what());
      }
      if (log.traces.size() != 1 || log.traces[0].empty())
        throw ParseError(line_no, "malformed variant '" + variant + "'");
      spec.test_variants.push_back(std::move(log.traces[0]));
    }
    if (spec.test_variants.empty()) throw ParseError(line_no, "empty variant list");
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace procstruct
