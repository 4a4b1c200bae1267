#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "procstruct/error.hpp"
#include "procstruct/predictor.hpp"

namespace procstruct {

namespace detail {

json predictor_config_to_json(const PredictorConfig& c) {
  json j;
  j["use_embedding"] = c.use_embedding;
  j["n_layers"] = c.n_layers;
  j["hidden_size"] = c.hidden_size;
  j["l1_l2"] = c.l1_l2;
  j["dropout"] = c.dropout;
  j["window"] = c.window;
  j["batch_size"] = c.batch_size;
  j["lr_start"] = c.lr_start;
  j["lr_decay"] = c.lr_decay;
  j["lr_patience"] = c.lr_patience;
  j["stop_patience"] = c.stop_patience;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  return j;
}

PredictorConfig predictor_config_from_json(const json& j, PredictorConfig c) {
  require_known_keys(j,
                     {"use_embedding", "n_layers", "hidden_size", "l1_l2", "dropout", "window",
                      "batch_size", "lr_start", "lr_decay", "lr_patience", "stop_patience",
                      "max_epochs", "seed"},
                     "predictor config");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("use_embedding", c.use_embedding);
    get("n_layers", c.n_layers);
    get("hidden_size", c.hidden_size);
    get("l1_l2", c.l1_l2);
    get("dropout", c.dropout);
    get("window", c.window);
    get("batch_size", c.batch_size);
    get("lr_start", c.lr_start);
    get("lr_decay", c.lr_decay);
    get("lr_patience", c.lr_patience);
    get("stop_patience", c.stop_patience);
    get("max_epochs", c.max_epochs);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad predictor config value: ") + e.what());
  }
  return c;
}

}  // namespace detail

using detail::json;

std::string checkpoint_to_json(const TrainedPredictor& p) {
  json doc;
  doc["format"] = "procstruct-checkpoint";
  doc["version"] = 1;
  doc["kind"] = p.kind == PredictorKind::kRecurrent ? "recurrent" : "markov";
  doc["vocabulary"] = p.vocabulary.activities();
  doc["config"] = detail::predictor_config_to_json(p.config);
  auto history = json::array();
  for (const auto& h : p.history)
    history.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"val_accuracy", h.val_accuracy},
                       {"learning_rate", h.learning_rate}});
  doc["history"] = std::move(history);

  if (const auto* params = std::get_if<nn::NetworkParams>(&p.model)) {
    const auto& s = params->shape;
    json net;
    net["shape"] = {{"vocab_size", s.vocab_size},   {"pad_token", s.pad_token},
                    {"embedding_dim", s.embedding_dim}, {"n_layers", s.n_layers},
                    {"hidden_size", s.hidden_size}, {"window", s.window}};
    auto tensors = json::array();
    for (const auto& t : nn::tensors(*params))
      tensors.push_back({{"name", t.name},
                         {"rows", t.rows},
                         {"cols", t.cols},
                         {"values", std::vector<double>(t.values.begin(), t.values.end())}});
    net["tensors"] = std::move(tensors);
    doc["network"] = std::move(net);
  } else {
    const auto& m = std::get<MarkovTables>(p.model);
    json markov;
    markov["order"] = m.order;
    auto tables = json::array();
    for (const auto& table : m.tables) {
      auto entries = json::array();
      for (const auto& [ctx, counts] : table) entries.push_back({{"context", ctx}, {"counts", counts}});
      tables.push_back(std::move(entries));
    }
    markov["tables"] = std::move(tables);
    doc["markov"] = std::move(markov);
  }
  return doc.dump() + "\n";
}

TrainedPredictor checkpoint_from_json(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    if (doc.at("format") != "procstruct-checkpoint") throw Error("not a procstruct checkpoint");
    TrainedPredictor p;
    p.vocabulary = Vocabulary(doc.at("vocabulary").get<std::vector<std::string>>());
    p.config = detail::predictor_config_from_json(doc.at("config"));
    for (const auto& h : doc.at("history"))
      p.history.push_back({h.at("epoch").get<std::size_t>(), h.at("loss").get<double>(),
                           h.at("val_accuracy").get<double>(), h.at("learning_rate").get<double>()});
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "recurrent") {
      p.kind = PredictorKind::kRecurrent;
      const auto& net = doc.at("network");
      const auto& js = net.at("shape");
      nn::NetworkShape s;
      s.vocab_size = js.at("vocab_size").get<std::size_t>();
      s.pad_token = js.at("pad_token").get<std::size_t>();
      s.embedding_dim = js.at("embedding_dim").get<std::size_t>();
      s.n_layers = js.at("n_layers").get<std::size_t>();
      s.hidden_size = js.at("hidden_size").get<std::size_t>();
      s.window = js.at("window").get<std::size_t>();
      if (s.vocab_size != p.vocabulary.size()) throw Error("checkpoint vocabulary does not match its network");
      auto params = nn::init_params(s, 0);
      auto views = nn::tensors(params);
      const auto& tensors = net.at("tensors");
      if (tensors.size() != views.size()) throw Error("checkpoint tensor count mismatch");
      for (std::size_t k = 0; k < views.size(); ++k) {
        const auto& jt = tensors[k];
        const auto values = jt.at("values").get<std::vector<double>>();
        if (jt.at("name").get<std::string>() != views[k].name || values.size() != views[k].values.size() ||
            jt.at("rows").get<Eigen::Index>() != views[k].rows ||
            jt.at("cols").get<Eigen::Index>() != views[k].cols)
          throw Error("checkpoint tensor '" + views[k].name + "' has the wrong shape");
        std::copy(values.begin(), values.end(), views[k].values.begin());
      }
      p.model = std::move(params);
    } else if (kind == "markov") {
      p.kind = PredictorKind::kMarkov;
      const auto& jm = doc.at("markov");
      MarkovTables m;
      m.order = jm.at("order").get<std::size_t>();
      for (const auto& table : jm.at("tables")) {
        auto& out = m.tables.emplace_back();
        for (const auto& e : table) {
          auto counts = e.at("counts").get<std::vector<std::uint64_t>>();
          if (counts.size() != p.vocabulary.size()) throw Error("Markov table width mismatch");
          out.emplace(e.at("context").get<std::vector<Token>>(), std::move(counts));
        }
      }
      if (m.tables.empty()) throw Error("Markov checkpoint has no tables");
      p.model = std::move(m);
    } else {
      throw Error("unknown predictor kind '" + kind + "'");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedPredictor& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(p);
}

TrainedPredictor load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace procstruct
