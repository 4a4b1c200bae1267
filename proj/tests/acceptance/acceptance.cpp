// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   procstruct_acceptance [--work-dir DIR] [--only NAME]...

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "../support/oracles.hpp"
#include "procstruct/benchmarks.hpp"
#include "procstruct/harness.hpp"
#include "procstruct/metrics.hpp"
#include "procstruct/neural.hpp"

namespace fs = std::filesystem;
using namespace procstruct;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path g_work = "acceptance_work";

// Results of the desk-scale runs are shared by two criteria.
std::optional<ExperimentResult> g_m5_lovocv;

ExperimentResult desk_run(int model, const std::string& tag, SplitSettings split = {SplitMode::kLovocvFolds}) {
  ExperimentConfig c = ExperimentConfig::desk();
  c.model = model;
  c.split = split;
  c.output_dir = g_work / tag;
  auto res = run_experiment(c, [&](const FoldRow& r, std::size_t done, std::size_t total) {
    std::printf("    %s fold %zu/%zu: fit %.3f prec %.3f gen %.3f\n", tag.c_str(), done, total,
                r.report.fitness, r.report.precision, r.report.generalisation);
    std::fflush(stdout);
  });
  for (const auto& e : res.errors) std::printf("    %s fold %zu error: %s\n", tag.c_str(), e.fold, e.message.c_str());
  return res;
}

Outcome variant_counts() {
  const std::pair<int, std::size_t> expected[] = {{1, 120}, {2, 128}, {3, 128}, {4, 64}, {6, 27}};
  Outcome o{true, ""};
  for (auto [model, want] : expected) {
    const auto t0 = Clock::now();
    const auto got = enumerate_variants(build_model(ModelId{model}), model_info(ModelId{model}).visit_bound).size();
    const double dt = seconds_since(t0);
    o.detail += "M" + std::to_string(model) + "=" + std::to_string(got) + fmt(" (%.3fs) ", dt);
    if (got != want || dt >= 1.0) o.pass = false;
  }
  return o;
}

Outcome metric_correctness() {
  const auto t0 = Clock::now();
  auto log = [](std::initializer_list<std::pair<const char*, int>> spec) {
    EventLog l;
    for (const auto& [label, n] : spec)
      for (int i = 0; i < n; ++i) l.traces.push_back({label});
    return l;
  };
  const auto sim = log({{"A", 7}, {"B", 4}, {"C", 1}});
  const double f = fitness(sim, log({{"A", 6}, {"B", 4}}));
  const double p = precision(sim, log({{"A", 6}, {"B", 4}, {"C", 2}}));
  const double g = generalisation(sim, log({{"C", 2}}));
  bool ok = f == 1.0 && p == 11.0 / 12.0 && g == 0.5;

  std::mt19937_64 rng(31337);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto tr = oracle::random_log(rng, 35, 3, 3);
    const auto te = oracle::random_log(rng, 15, 3, 3);
    auto s = oracle::random_log(rng, 50, 3, 3);
    s.resize(tr.size() + te.size(), s.front());
    const auto want = oracle::scores_same_size(s, tr, te);
    const auto got = evaluate(EventLog{s}, EventLog{tr}, EventLog{te});
    if (got.fitness != want.fitness || got.precision != want.precision ||
        got.generalisation != want.generalisation)
      ++mismatches;
  }
  const double dt = seconds_since(t0);
  ok = ok && mismatches == 0 && dt < 10.0;
  return {ok, fmt("examples %.6f", f) + fmt(" %.6f", p) + fmt(" %.6f", g) + ", oracle mismatches " +
                  std::to_string(mismatches) + "/1000" + fmt(", %.2fs", dt)};
}

Outcome identity() {
  Outcome o{true, ""};
  for (auto id : ModelId::all()) {
    PlayoutConfig pc;
    pc.n_traces = 2000;
    pc.max_marking_visits = 1000;
    pc.seed = 1;
    const auto full = playout(build_model(id), pc);
    const auto part = partition(full, lovocv_specs(full).front());
    const auto r = evaluate(full, part.train, part.test);
    const bool ok = r.fitness == 1.0 && r.precision == 1.0 && r.generalisation == 1.0;
    o.pass = o.pass && ok;
    o.detail += "M" + std::to_string(id.value()) + (ok ? "=(1,1,1) " : "=mismatch ");
  }
  return o;
}

Outcome gradient() {
  const auto t0 = Clock::now();
  nn::NetworkShape s;
  s.vocab_size = 8;
  s.pad_token = 7;
  s.n_layers = 1;
  s.hidden_size = 16;
  s.window = 5;
  const auto params = nn::init_params(s, 2024);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Token> tok(0, 6);
  std::uniform_int_distribution<std::size_t> len(1, 5);
  std::vector<PrefixSample> batch(32);
  for (auto& b : batch) {
    b.prefix.assign(5, 7);
    for (std::size_t i = 5 - len(rng); i < 5; ++i) b.prefix[i] = tok(rng);
    b.target = tok(rng);
  }
  const auto r = nn::gradient_check(params, batch, {}, 1e-5, 1, nn::parameter_count(params));
  const double dt = seconds_since(t0);
  return {r.max_relative_error < 1e-4 && dt < 30.0,
          fmt("max relative error %.3e", r.max_relative_error) + " (" + r.worst_tensor + ") over " +
              std::to_string(r.checked) + " parameters" + fmt(", %.2fs", dt)};
}

Outcome baseline_sanity() {
  ExperimentConfig c = ExperimentConfig::desk();
  c.model = 2;
  c.baseline_order = kFullContext;
  c.output_dir = g_work / "baseline_m2";
  const auto res = run_experiment(c);
  if (!res.errors.empty()) return {false, res.errors.front().message};
  double min_fit = 1.0, max_gen = 0.0;
  for (const auto& r : res.rows) {
    min_fit = std::min(min_fit, r.report.fitness);
    max_gen = std::max(max_gen, r.report.generalisation);
  }
  return {min_fit >= 0.98 && max_gen == 0.0,
          std::to_string(res.rows.size()) + " folds, min fitness " + fmt("%.4f", min_fit) +
              " (need >= 0.98), max generalisation " + fmt("%.4f", max_gen) + " (need 0)"};
}

Outcome desk_table() {
  const auto t0 = Clock::now();
  const auto m2 = desk_run(2, "desk_m2");
  g_m5_lovocv = desk_run(5, "desk_m5");
  const double dt = seconds_since(t0);
  if (!m2.errors.empty() || !g_m5_lovocv->errors.empty()) return {false, "fold failures"};
  const auto& a2 = m2.aggregate.front();
  const auto& a5 = g_m5_lovocv->aggregate.front();
  const bool ok = a2.fitness_mean >= 0.85 && a2.precision_mean >= 0.85 && a2.generalisation_mean >= 0.70 &&
                  a5.generalisation_mean < a2.generalisation_mean && dt <= 3600.0;
  return {ok, "M2 fit " + fmt("%.3f", a2.fitness_mean) + fmt(" prec %.3f", a2.precision_mean) +
                  fmt(" gen %.3f", a2.generalisation_mean) + fmt("; M5 gen %.3f", a5.generalisation_mean) +
                  fmt("; %.0fs", dt)};
}

Outcome leave_fraction_direction() {
  const auto t0 = Clock::now();
  if (!g_m5_lovocv) g_m5_lovocv = desk_run(5, "desk_m5");
  const auto lf = desk_run(5, "desk_m5_leave", {SplitMode::kLeaveFraction, 8, 0.2, 3});
  const double dt = seconds_since(t0);
  if (!lf.errors.empty() || !g_m5_lovocv->errors.empty()) return {false, "fold failures"};
  const double a = lf.aggregate.front().generalisation_mean;
  const double b = g_m5_lovocv->aggregate.front().generalisation_mean;
  return {a <= b && dt <= 3600.0, fmt("leave-20%% gen %.3f", a) + fmt(" vs LOVOCV gen %.3f", b) + fmt("; %.0fs", dt)};
}

Outcome determinism() {
  const fs::path cfg_path = g_work / "determinism.json";
  fs::create_directories(g_work);
  {
    std::ofstream out(cfg_path);
    out << R"({"model": 4, "split": {"mode": "lovocv-k-folds", "k": 2}, "output_dir": ")"
        << (g_work / "determinism").string() << "\"}\n";
  }
  std::string files[2][2];
  for (int run = 0; run < 2; ++run) {
    const auto cfg = load_experiment_config(cfg_path);
    const auto res = run_experiment(cfg);
    files[run][0] = slurp(res.output_dir / "folds.csv");
    files[run][1] = slurp(res.output_dir / "aggregate.csv");
  }
  const bool ok = files[0][0] == files[1][0] && files[0][1] == files[1][1] && !files[0][0].empty();
  return {ok, ok ? "folds.csv and aggregate.csv identical across two runs" : "outputs differ"};
}

Outcome uniformity() {
  PlayoutConfig pc;
  pc.n_traces = 120000;
  pc.max_marking_visits = 3;
  pc.seed = 12;
  const auto net = build_model(ModelId{1});
  const auto counts = variants(playout(net, pc));
  std::vector<std::size_t> obs;
  for (const auto& v : enumerate_variants(net, 3)) {
    auto it = counts.find(v);
    obs.push_back(it == counts.end() ? 0 : it->second);
  }
  const double stat = oracle::chi_square_uniform(obs);
  boost::math::chi_squared dist(static_cast<double>(obs.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, stat));
  return {p > 0.01 && obs.size() == 120,
          std::to_string(obs.size()) + " variants, chi2 " + fmt("%.1f", stat) + fmt(", p = %.4f", p)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc)
      g_work = argv[++i];
    else if (arg == "--only" && i + 1 < argc)
      only.insert(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--work-dir DIR] [--only NAME]...\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"variant-counts", variant_counts},
      {"metric-correctness", metric_correctness},
      {"identity", identity},
      {"gradient-check", gradient},
      {"baseline-sanity", baseline_sanity},
      {"desk-table", desk_table},
      {"leave-fraction-direction", leave_fraction_direction},
      {"run-determinism", determinism},
      {"playout-uniformity", uniformity},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
