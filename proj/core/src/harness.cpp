#include "procstruct/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json_io.hpp"
#include "procstruct/benchmarks.hpp"
#include "procstruct/error.hpp"
#include "procstruct/random.hpp"

namespace procstruct {

using detail::json;

namespace {

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::size_t longest_trace(const EventLog& log) {
  std::size_t n = 0;
  for (const auto& t : log.traces) n = std::max(n, t.size());
  return n;
}

const char* split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::kLovocvExhaustive: return "lovocv-exhaustive";
    case SplitMode::kLovocvFolds: return "lovocv-k-folds";
    case SplitMode::kLeaveFraction: return "leave-fraction";
  }
  return "";
}

}  // namespace

std::string SplitSettings::name() const {
  switch (mode) {
    case SplitMode::kLovocvExhaustive: return "lovocv";
    case SplitMode::kLovocvFolds: return "lovocv-k" + std::to_string(k);
    case SplitMode::kLeaveFraction: return "leave-" + format_g(fraction) + "-out";
  }
  return "";
}

PredictorGrid PredictorGrid::full() {
  return {{false, true},
          PredictorConfig::layer_domain(),
          PredictorConfig::hidden_domain(),
          PredictorConfig::l1_l2_domain(),
          PredictorConfig::dropout_domain()};
}

std::vector<PredictorConfig> PredictorGrid::expand(const PredictorConfig& base) const {
  std::vector<PredictorConfig> out;
  for (bool emb : use_embedding)
    for (auto layers : n_layers)
      for (auto hidden : hidden_size)
        for (auto reg : l1_l2)
          for (auto drop : dropout) {
            PredictorConfig c = base;
            c.use_embedding = emb;
            c.n_layers = layers;
            c.hidden_size = hidden;
            c.l1_l2 = reg;
            c.dropout = drop;
            out.push_back(c);
          }
  return out;
}

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.n_traces = 2000;
  c.split.mode = SplitMode::kLovocvFolds;
  c.split.k = 8;
  return c;
}

void ExperimentConfig::validate() const {
  if (model.has_value() == net_file.has_value())
    throw ConfigError("exactly one of model and net_file must be given");
  if (model) ModelId{*model};
  if (n_traces == 0) throw ConfigError("n_traces must be positive");
  if (max_marking_visits == 0) throw ConfigError("max_marking_visits must be positive");
  if (analysis_visit_bound && *analysis_visit_bound == 0)
    throw ConfigError("analysis_visit_bound must be positive");
  if (split.mode == SplitMode::kLovocvFolds && split.k == 0) throw ConfigError("k must be positive");
  if (split.mode == SplitMode::kLeaveFraction) {
    if (!(split.fraction > 0.0 && split.fraction < 1.0)) throw ConfigError("fraction must lie in (0, 1)");
    if (split.repeats == 0) throw ConfigError("repeats must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in (0, 1)");
  if (sim_max_len && *sim_max_len == 0) throw ConfigError("sim_max_len must be positive");
  if (baseline_order && *baseline_order == 0) throw ConfigError("baseline_order must be positive");
  if (grid) {
    const auto points = grid->expand(predictor);
    if (points.empty()) throw ConfigError("grid has no points");
    for (const auto& p : points) p.validate();
  } else if (!baseline_order) {
    predictor.validate();
  }
}

std::string ExperimentConfig::model_name() const {
  if (model) return "M" + std::to_string(*model);
  if (net_file) return net_file->stem().string();
  return "unknown";
}

namespace {

SplitSettings split_from_json(const json& j, SplitSettings s) {
  detail::require_known_keys(j, {"mode", "k", "fraction", "repeats"}, "split");
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "lovocv-exhaustive")
    s.mode = SplitMode::kLovocvExhaustive;
  else if (mode == "lovocv-k-folds")
    s.mode = SplitMode::kLovocvFolds;
  else if (mode == "leave-fraction")
    s.mode = SplitMode::kLeaveFraction;
  else
    throw ConfigError("unknown split mode '" + mode + "'");
  if (j.contains("k")) s.k = j.at("k").get<std::size_t>();
  if (j.contains("fraction")) s.fraction = j.at("fraction").get<double>();
  if (j.contains("repeats")) s.repeats = j.at("repeats").get<std::size_t>();
  return s;
}

PredictorGrid grid_from_json(const json& j, const PredictorConfig& base) {
  if (j.is_string()) {
    if (j.get<std::string>() != "full") throw ConfigError("grid must be \"full\" or an object");
    return PredictorGrid::full();
  }
  detail::require_known_keys(j, {"use_embedding", "n_layers", "hidden_size", "l1_l2", "dropout"}, "grid");
  PredictorGrid g{{base.use_embedding}, {base.n_layers}, {base.hidden_size}, {base.l1_l2}, {base.dropout}};
  if (j.contains("use_embedding")) g.use_embedding = j.at("use_embedding").get<std::vector<bool>>();
  if (j.contains("n_layers")) g.n_layers = j.at("n_layers").get<std::vector<std::size_t>>();
  if (j.contains("hidden_size")) g.hidden_size = j.at("hidden_size").get<std::vector<std::size_t>>();
  if (j.contains("l1_l2")) g.l1_l2 = j.at("l1_l2").get<std::vector<double>>();
  if (j.contains("dropout")) g.dropout = j.at("dropout").get<std::vector<double>>();
  return g;
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key, std::optional<T> current) {
  if (!j.contains(key)) return current;
  if (j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text, ExperimentConfig c) {
  try {
    const auto j = json::parse(text);
    detail::require_known_keys(j,
                               {"model", "net_file", "n_traces", "max_marking_visits",
                                "analysis_visit_bound", "split", "predictor", "baseline_order",
                                "grid", "validation_fraction", "sim_max_len", "seeds", "output_dir"},
                               "experiment config");
    if (j.contains("model") || j.contains("net_file")) {
      c.model = optional_field<int>(j, "model", std::nullopt);
      if (j.contains("net_file") && !j.at("net_file").is_null())
        c.net_file = j.at("net_file").get<std::string>();
      else
        c.net_file.reset();
    }
    if (j.contains("n_traces")) c.n_traces = j.at("n_traces").get<std::size_t>();
    if (j.contains("max_marking_visits")) c.max_marking_visits = j.at("max_marking_visits").get<std::size_t>();
    c.analysis_visit_bound = optional_field<std::size_t>(j, "analysis_visit_bound", c.analysis_visit_bound);
    if (j.contains("split")) c.split = split_from_json(j.at("split"), c.split);
    if (j.contains("predictor")) c.predictor = detail::predictor_config_from_json(j.at("predictor"), c.predictor);
    if (j.contains("baseline_order")) {
      const auto& b = j.at("baseline_order");
      if (b.is_null())
        c.baseline_order.reset();
      else if (b.is_string() && b.get<std::string>() == "full")
        c.baseline_order = kFullContext;
      else
        c.baseline_order = b.get<std::size_t>();
    }
    if (j.contains("grid")) {
      if (j.at("grid").is_null())
        c.grid.reset();
      else
        c.grid = grid_from_json(j.at("grid"), c.predictor);
    }
    if (j.contains("validation_fraction")) c.validation_fraction = j.at("validation_fraction").get<double>();
    c.sim_max_len = optional_field<std::size_t>(j, "sim_max_len", c.sim_max_len);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      detail::require_known_keys(s, {"playout", "split", "train", "simulate"}, "seeds");
      if (s.contains("playout")) c.seeds.playout = s.at("playout").get<std::uint64_t>();
      if (s.contains("split")) c.seeds.split = s.at("split").get<std::uint64_t>();
      if (s.contains("train")) c.seeds.train = s.at("train").get<std::uint64_t>();
      if (s.contains("simulate")) c.seeds.simulate = s.at("simulate").get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return experiment_config_from_json(buf.str(), std::move(base));
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model ? json(*c.model) : json(nullptr);
  j["net_file"] = c.net_file ? json(c.net_file->string()) : json(nullptr);
  j["n_traces"] = c.n_traces;
  j["max_marking_visits"] = c.max_marking_visits;
  j["analysis_visit_bound"] = c.analysis_visit_bound ? json(*c.analysis_visit_bound) : json(nullptr);
  json split;
  split["mode"] = split_mode_name(c.split.mode);
  split["k"] = c.split.k;
  split["fraction"] = c.split.fraction;
  split["repeats"] = c.split.repeats;
  j["split"] = std::move(split);
  j["predictor"] = detail::predictor_config_to_json(c.predictor);
  if (!c.baseline_order)
    j["baseline_order"] = nullptr;
  else if (*c.baseline_order == kFullContext)
    j["baseline_order"] = "full";
  else
    j["baseline_order"] = *c.baseline_order;
  if (c.grid) {
    json g;
    g["use_embedding"] = c.grid->use_embedding;
    g["n_layers"] = c.grid->n_layers;
    g["hidden_size"] = c.grid->hidden_size;
    g["l1_l2"] = c.grid->l1_l2;
    g["dropout"] = c.grid->dropout;
    j["grid"] = std::move(g);
  } else {
    j["grid"] = nullptr;
  }
  j["validation_fraction"] = c.validation_fraction;
  j["sim_max_len"] = c.sim_max_len ? json(*c.sim_max_len) : json(nullptr);
  j["seeds"] = {{"playout", c.seeds.playout},
                {"split", c.seeds.split},
                {"train", c.seeds.train},
                {"simulate", c.seeds.simulate}};
  j["output_dir"] = c.output_dir.string();
  return j.dump(2) + "\n";
}

ExperimentPlan plan_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentPlan plan;
  plan.config = cfg;
  plan.net = std::make_shared<const PetriNet>(cfg.model ? build_model(ModelId{*cfg.model})
                                                        : read_net(*cfg.net_file));
  PlayoutConfig pc;
  pc.n_traces = cfg.n_traces;
  pc.max_marking_visits = cfg.max_marking_visits;
  pc.seed = cfg.seeds.playout;
  plan.log = std::make_shared<const EventLog>(playout(*plan.net, pc));
  plan.vocabulary = build_vocabulary(*plan.log);

  auto bound = cfg.analysis_visit_bound;
  if (!bound && cfg.model == 6) bound = model_info(ModelId{6}).visit_bound;
  std::vector<Variant> universe;
  const auto counts = variants(*plan.log);
  if (bound) {
    const auto allowed = enumerate_variants(*plan.net, *bound);
    for (const auto& [v, n] : counts)
      if (allowed.count(v)) universe.push_back(v);
  } else {
    for (const auto& [v, n] : counts) universe.push_back(v);
  }
  if (counts.size() < 2 || universe.empty())
    throw SplitError("the played-out log needs at least two variants and one candidate test variant");

  switch (cfg.split.mode) {
    case SplitMode::kLovocvExhaustive:
      for (const auto& v : universe) plan.folds.push_back({{v}, 0});
      break;
    case SplitMode::kLovocvFolds: {
      auto chosen = universe;
      if (cfg.split.k < chosen.size()) {
        Rng rng(cfg.seeds.split);
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(cfg.split.k);
        std::sort(chosen.begin(), chosen.end());
      }
      for (const auto& v : chosen) plan.folds.push_back({{v}, cfg.seeds.split});
      break;
    }
    case SplitMode::kLeaveFraction:
      for (std::size_t r = 0; r < cfg.split.repeats; ++r)
        plan.folds.push_back(
            leave_fraction_out_spec(universe, cfg.split.fraction, derive_seed(cfg.seeds.split, r)));
      break;
  }

  plan.window = cfg.predictor.window;
  // The long-term dependency model needs the window to reach back to its first choice.
  if (cfg.model == 3) plan.window = std::max<std::size_t>(1, longest_trace(*plan.log) - 1);
  return plan;
}

FoldResult run_fold(const ExperimentPlan& plan, std::size_t fold) {
  const auto& cfg = plan.config;
  FoldResult out;
  out.fold = fold;
  out.partition = partition(plan.log, plan.folds.at(fold));
  out.test_variants = format_variants(out.partition.test_variants);
  const auto& part = out.partition;

  if (cfg.baseline_order) {
    out.predictor = markov_baseline(part.train, *cfg.baseline_order, plan.vocabulary);
  } else {
    auto samples = prefixes(part.train, plan.vocabulary, plan.window);
    auto split = validation_split(std::move(samples), cfg.validation_fraction,
                                  derive_seed(cfg.seeds.split, 0x1000 + fold));
    PredictorConfig pc = cfg.predictor;
    pc.window = plan.window;
    pc.seed = derive_seed(cfg.seeds.train, fold);
    out.predictor = train(pc, split.train, split.validation, plan.vocabulary);
  }

  std::size_t max_len = 0;
  if (cfg.sim_max_len)
    max_len = *cfg.sim_max_len;
  else if (cfg.model == 6)
    max_len = 100;
  else
    max_len = std::max<std::size_t>(1, 2 * longest_trace(part.train));
  out.simulation = simulate_log(out.predictor, part.full->size(), max_len,
                                derive_seed(cfg.seeds.simulate, fold));
  out.report = evaluate(out.simulation.log, part.train, part.test);
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<FoldRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<const FoldRow*>> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.model == row.model && a.setting == row.setting;
    });
    if (it == out.end()) {
      out.push_back({row.model, row.setting});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&row);
  }
  auto stats = [](const std::vector<const FoldRow*>& g, double MetricsReport::*field, double& mean,
                  double& sd) {
    double sum = 0.0;
    for (const auto* r : g) sum += r->report.*field;
    mean = sum / static_cast<double>(g.size());
    double sq = 0.0;
    for (const auto* r : g) sq += (r->report.*field - mean) * (r->report.*field - mean);
    sd = std::sqrt(sq / static_cast<double>(g.size()));
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& a = out[i];
    a.folds = groups[i].size();
    stats(groups[i], &MetricsReport::fitness, a.fitness_mean, a.fitness_std);
    stats(groups[i], &MetricsReport::precision, a.precision_mean, a.precision_std);
    stats(groups[i], &MetricsReport::generalisation, a.generalisation_mean, a.generalisation_std);
  }
  return out;
}

std::string folds_csv(const std::vector<FoldRow>& rows) {
  std::string out = std::string(kFoldCsvHeader) + "\n";
  for (const auto& r : rows) out += fold_csv_row(r.model, r.fold, r.test_variants, r.report) + "\n";
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      "model,setting,folds,fitness_mean,fitness_std,precision_mean,precision_std,"
      "generalisation_mean,generalisation_std\n";
  char buf[256];
  for (const auto& a : rows) {
    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", a.folds, a.fitness_mean,
                  a.fitness_std, a.precision_mean, a.precision_std, a.generalisation_mean,
                  a.generalisation_std);
    out += a.model + "," + a.setting + buf;
  }
  return out;
}

std::string results_table_markdown(const std::vector<AggregateRow>& rows) {
  std::string out = "| Model | Setting | Folds | Prec. | Fit. | Gen. |\n|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& a : rows) {
    std::snprintf(buf, sizeof buf, " | %zu | %.2f ± %.2f | %.2f ± %.2f | %.2f ± %.2f |\n", a.folds,
                  a.precision_mean, a.precision_std, a.fitness_mean, a.fitness_std,
                  a.generalisation_mean, a.generalisation_std);
    out += "| " + a.model + " | " + a.setting + buf;
  }
  return out;
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_relative()) {
    if (const char* root = std::getenv("PROCSTRUCT_OUTPUT_ROOT"); root && *root)
      return std::filesystem::path(root) / dir;
  }
  return dir;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const FoldProgress& progress) {
  const auto plan = plan_experiment(cfg);
  ExperimentResult result;
  result.output_dir = resolve_output_dir(cfg.output_dir);
  const auto& dir = result.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", experiment_config_to_json(cfg));
  write_log(*plan.log, dir / "log.txt");
  write_split_manifest(plan.folds, dir / "splits.txt");

  const auto model = cfg.model_name();
  const auto setting = cfg.split.name();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    try {
      auto fold = run_fold(plan, f);
      char name[32];
      std::snprintf(name, sizeof name, "fold_%03zu", f);
      const auto fold_dir = dir / name;
      std::filesystem::create_directories(fold_dir);
      write_log(fold.partition.train, fold_dir / "train.log");
      write_log(fold.partition.test, fold_dir / "test.log");
      write_log(fold.simulation.log, fold_dir / "sim.log");
      write_text(fold_dir / "simulation.txt", simulation_report(fold.simulation));
      save_checkpoint(fold.predictor, fold_dir / "model.json");
      result.rows.push_back({model, setting, f, fold.test_variants, fold.report});
      if (progress) progress(result.rows.back(), f + 1, plan.folds.size());
    } catch (const std::exception& e) {
      result.errors.push_back({f, e.what()});
    }
  }

  result.aggregate = aggregate(result.rows);
  write_text(dir / "folds.csv", folds_csv(result.rows));
  write_text(dir / "aggregate.csv", aggregate_csv(result.rows.empty() ? std::vector<AggregateRow>{}
                                                                      : result.aggregate));
  write_text(dir / "table.md", results_table_markdown(result.aggregate));
  const auto errors_path = dir / "errors.csv";
  if (result.errors.empty()) {
    std::filesystem::remove(errors_path);
  } else {
    std::string text = "fold,message\n";
    for (const auto& e : result.errors) {
      std::string msg = e.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      text += std::to_string(e.fold) + "," + msg + "\n";
    }
    write_text(errors_path, text);
  }
  return result;
}

std::vector<GridEntry> grid_search(const ExperimentConfig& cfg) {
  if (!cfg.grid) throw ConfigError("grid search needs a grid");
  cfg.validate();
  const auto root = resolve_output_dir(cfg.output_dir);
  std::vector<GridEntry> ranked, failed;
  for (const auto& point : cfg.grid->expand(cfg.predictor)) {
    ExperimentConfig run = cfg;
    run.grid.reset();
    run.predictor = point;
    run.output_dir = root / point.grid_key();
    GridEntry entry;
    entry.config = point;
    try {
      const auto res = run_experiment(run);
      if (!res.errors.empty()) {
        entry.failure = std::to_string(res.errors.size()) + " fold(s) failed: " + res.errors.front().message;
      } else {
        const auto& a = res.aggregate.front();
        entry.fitness = a.fitness_mean;
        entry.precision = a.precision_mean;
        entry.generalisation = a.generalisation_mean;
        entry.score = (a.fitness_mean + a.precision_mean + a.generalisation_mean) / 3.0;
      }
    } catch (const std::exception& e) {
      entry.failure = e.what();
    }
    (entry.failure ? failed : ranked).push_back(std::move(entry));
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const GridEntry& a, const GridEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.config.grid_key() < b.config.grid_key();
  });

  std::string csv = "rank,config,fitness,precision,generalisation,score,failure\n";
  char buf[160];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,", e.fitness, e.precision, e.generalisation, e.score);
    csv += std::to_string(i + 1) + "," + e.config.grid_key() + buf + "\n";
  }
  for (const auto& e : failed) {
    std::string msg = *e.failure;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    csv += "," + e.config.grid_key() + ",,,,," + msg + "\n";
  }
  std::filesystem::create_directories(root);
  write_text(root / "grid.csv", csv);
  ranked.insert(ranked.end(), failed.begin(), failed.end());
  return ranked;
}

}  // namespace procstruct
