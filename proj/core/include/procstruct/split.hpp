#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "procstruct/eventlog.hpp"

namespace procstruct {

struct SplitSpec {
  std::vector<Variant> test_variants;  // sorted, unique
  std::uint64_t seed = 0;
};

/// Train/test partition of a source log at variant granularity.
struct LogPartition {
  EventLog train;
  EventLog test;
  std::shared_ptr<const EventLog> full;
  std::vector<Variant> test_variants;
};

/// Splits `full` by the spec's variants, preserving trace order within each part.
/// Throws SplitError if a test variant is absent or the spec is empty.
LogPartition partition(std::shared_ptr<const EventLog> full, const SplitSpec& spec);
LogPartition partition(const EventLog& full, const SplitSpec& spec);

/// One spec per variant in lexicographic variant order.
std::vector<SplitSpec> lovocv_specs(const EventLog& log);
std::vector<LogPartition> lovocv_splits(const EventLog& log);

/// round-half-up(fraction * n), the rounding used for every fractional count.
std::size_t fraction_count(double fraction, std::size_t n);

/// Uniform seeded choice of round(fraction * |candidates|) test variants.
SplitSpec leave_fraction_out_spec(const std::vector<Variant>& candidates, double fraction,
                                  std::uint64_t seed);
LogPartition leave_fraction_out(const EventLog& log, double fraction, std::uint64_t seed);

struct ValidationSplit {
  std::vector<PrefixSample> train;
  std::vector<PrefixSample> validation;
};

/// Prefix-level hold-out; both parts keep the input's relative order.
ValidationSplit validation_split(std::vector<PrefixSample> samples, double fraction,
                                 std::uint64_t seed);

// Manifest lines: "<fold>\t<seed>\t<variant>|<variant>..." with labels joined by ';'.
void write_split_manifest(const std::vector<SplitSpec>& specs, const std::filesystem::path& path);
std::vector<SplitSpec> read_split_manifest(const std::filesystem::path& path);
std::string format_variants(const std::vector<Variant>& variants);

}  // namespace procstruct
