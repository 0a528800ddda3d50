#include "scgan/config.hpp"

#include <fstream>
#include <set>

#include "scgan/serialize.hpp"

namespace scgan {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section,
                    const std::set<std::string>& known) {
  if (!obj.is_object())
    throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key))
      throw ConfigError("unknown config key: " + (section.empty() ? key : section + "." + key));
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    f >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // plain string
  }
  json* node = &doc;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - start);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

TrainConfig parse_train_config(const json& doc) {
  reject_unknown(doc, "", {"dataset", "model", "objective", "sc", "optimizer", "run"});
  TrainConfig cfg;

  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    reject_unknown(d, "dataset", {"id", "root", "subset"});
    if (d.contains("id")) cfg.dataset_id = d.at("id").get<std::string>();
    if (d.contains("root")) cfg.data_root = d.at("root").get<std::string>();
    if (d.contains("subset")) cfg.subset = d.at("subset").get<int>();
  }

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m, "model",
                   {"noise_dim", "distribution", "code", "base_channels",
                    "dense_units", "batchnorm"});
    if (m.contains("noise_dim")) cfg.noise.dim = m.at("noise_dim").get<int>();
    if (m.contains("distribution"))
      cfg.noise.distribution =
          m.at("distribution").get<std::string>() == "normal" ? NoiseDist::normal
                                                              : NoiseDist::uniform;
    if (m.contains("code")) {
      reject_unknown(m.at("code"), "model.code", {"kind", "cardinality", "range"});
      cfg.code = m.at("code").get<CodeSpec>();
    }
    if (m.contains("base_channels")) cfg.base_channels = m.at("base_channels").get<int>();
    if (m.contains("dense_units")) cfg.dense_units = m.at("dense_units").get<int>();
    if (m.contains("batchnorm")) cfg.batchnorm = m.at("batchnorm").get<bool>();
  }

  if (doc.contains("objective")) {
    const json& o = doc.at("objective");
    reject_unknown(o, "objective", {"kind", "lambda_info", "literal_minimax"});
    cfg.objective.kind = objective_kind_from(o.at("kind").get<std::string>());
    if (o.contains("lambda_info"))
      cfg.objective.lambda_info = o.at("lambda_info").get<double>();
    if (o.contains("literal_minimax"))
      cfg.objective.literal_minimax = o.at("literal_minimax").get<bool>();
  }

  const bool wants_sc = cfg.objective.kind == ObjectiveKind::scgan ||
                        cfg.objective.kind == ObjectiveKind::modified;
  if (doc.contains("sc")) {
    const json& s = doc.at("sc");
    reject_unknown(s, "sc",
                   {"variant", "code_kind", "sim_measure", "term_family",
                    "lambda", "lambda1", "lambda2", "n1", "n2", "epsilon",
                    "eq7_verbatim", "scheme", "ssim"});
    if (s.contains("ssim"))
      reject_unknown(s.at("ssim"), "sc.ssim",
                     {"window_size", "window", "sigma", "k1", "k2",
                      "dynamic_range"});
    SCConfig sc;
    sc.variant = cfg.objective.kind == ObjectiveKind::scgan ? SCVariant::original
                                                            : SCVariant::modified;
    if (cfg.objective.kind == ObjectiveKind::scgan) {
      sc.sim_measure = SimMeasure::euclidean;
      sc.term_family = TermFamily::linear;
    }
    json merged = json(sc);
    merged.update(s);
    cfg.objective.sc = merged.get<SCConfig>();
  } else if (wants_sc) {
    SCConfig sc;
    if (cfg.objective.kind == ObjectiveKind::scgan) {
      sc.variant = SCVariant::original;
      sc.sim_measure = SimMeasure::euclidean;
      sc.term_family = TermFamily::linear;
    }
    cfg.objective.sc = sc;
  }
  if (cfg.objective.sc) cfg.objective.sc->code_kind = cfg.code.kind;

  if (doc.contains("optimizer")) {
    const json& o = doc.at("optimizer");
    reject_unknown(o, "optimizer", {"kind", "lr_g", "lr_d", "beta1", "beta2", "eps"});
    if (o.contains("kind") && o.at("kind").get<std::string>() != "adam")
      throw ConfigError("only the adam optimizer is supported");
    if (o.contains("lr_g")) cfg.adam_g.lr = o.at("lr_g").get<double>();
    if (o.contains("lr_d")) cfg.adam_d.lr = o.at("lr_d").get<double>();
    if (o.contains("beta1")) cfg.adam_g.beta1 = cfg.adam_d.beta1 = o.at("beta1").get<double>();
    if (o.contains("beta2")) cfg.adam_g.beta2 = cfg.adam_d.beta2 = o.at("beta2").get<double>();
    if (o.contains("eps")) cfg.adam_g.eps = cfg.adam_d.eps = o.at("eps").get<double>();
  }

  if (doc.contains("run")) {
    const json& r = doc.at("run");
    reject_unknown(r, "run",
                   {"epochs", "batch", "seed", "log_every", "checkpoint_every",
                    "out_dir", "threads", "stratified_codes"});
    if (r.contains("epochs")) cfg.epochs = r.at("epochs").get<int>();
    if (r.contains("batch")) cfg.batch = r.at("batch").get<int>();
    if (r.contains("seed")) cfg.seed = r.at("seed").get<uint64_t>();
    if (r.contains("log_every")) cfg.log_every = r.at("log_every").get<int>();
    if (r.contains("checkpoint_every"))
      cfg.checkpoint_every = r.at("checkpoint_every").get<int>();
    if (r.contains("out_dir")) cfg.out_dir = r.at("out_dir").get<std::string>();
    if (r.contains("threads")) cfg.threads = r.at("threads").get<int>();
    if (r.contains("stratified_codes"))
      cfg.stratified_codes = r.at("stratified_codes").get<bool>();
  }

  cfg.validate();
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  json doc;
  doc["dataset"] = {{"id", cfg.dataset_id},
                    {"root", cfg.resolved_root()},
                    {"subset", cfg.subset}};
  doc["model"] = {{"noise_dim", cfg.noise.dim},
                  {"distribution",
                   cfg.noise.distribution == NoiseDist::normal ? "normal" : "uniform"},
                  {"code", cfg.code},
                  {"base_channels", cfg.base_channels},
                  {"dense_units", cfg.dense_units},
                  {"batchnorm", cfg.batchnorm}};
  doc["objective"] = {{"kind", objective_kind_name(cfg.objective.kind)},
                      {"lambda_info", cfg.objective.lambda_info},
                      {"literal_minimax", cfg.objective.literal_minimax}};
  if (cfg.objective.sc) doc["sc"] = *cfg.objective.sc;
  doc["optimizer"] = {{"kind", "adam"},
                      {"lr_g", cfg.adam_g.lr},
                      {"lr_d", cfg.adam_d.lr},
                      {"beta1", cfg.adam_g.beta1},
                      {"beta2", cfg.adam_g.beta2},
                      {"eps", cfg.adam_g.eps}};
  doc["run"] = {{"epochs", cfg.epochs},
                {"batch", cfg.batch},
                {"seed", cfg.seed},
                {"log_every", cfg.log_every},
                {"checkpoint_every", cfg.checkpoint_every},
                {"out_dir", cfg.out_dir},
                {"threads", cfg.threads},
                {"stratified_codes", cfg.stratified_codes}};
  return doc;
}

ExperimentManifest ExperimentManifest::from_config(const TrainConfig& cfg) {
  ExperimentManifest m;
  m.resolved = train_config_to_json(cfg);
  m.hash = sha256_hex(m.resolved.dump());
  return m;
}

void ExperimentManifest::write(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write manifest: " + path);
  f << json{{"config", resolved}, {"config_hash", hash}}.dump(2) << "\n";
}

}  // namespace scgan
