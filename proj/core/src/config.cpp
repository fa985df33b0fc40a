#include "pcn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pcn {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "kind",           "layer_dims",     "activations",    "step_size",
    "weight_step_size", "max_iters",    "tol",            "warm_start",
    "clamp_mode",     "use_psi",        "drop_derivative", "use_zeta",
    "precision_mode", "weight_decay",   "label_smoothing",
    "train_images",   "train_labels",   "test_images",    "test_labels",
    "train_count",    "test_count",     "epochs",         "batch_size",
    "model_in",       "model_out",      "steps",          "state_dim",
    "obs_dim",        "dt",             "seed",           "out",
    "timing",
};

Mat json_to_mat(const json& j) {
  require(j.is_array() && !j.empty(), "expected a matrix (array of rows)");
  Mat m(j.size(), j.at(0).size());
  for (size_t r = 0; r < j.size(); ++r) {
    require(j.at(r).size() == static_cast<size_t>(m.cols()),
            "ragged matrix rows");
    for (size_t c = 0; c < j.at(r).size(); ++c)
      m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "train") return ExperimentKind::train;
  if (name == "classify") return ExperimentKind::classify;
  if (name == "generate") return ExperimentKind::generate;
  if (name == "kalman-compare") return ExperimentKind::kalman_compare;
  if (name == "backprop-compare") return ExperimentKind::backprop_compare;
  if (name == "pid-compare") return ExperimentKind::pid_compare;
  if (name == "precision-study") return ExperimentKind::precision_study;
  throw StructuralError("unknown experiment kind: " + name);
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::train: return "train";
    case ExperimentKind::classify: return "classify";
    case ExperimentKind::generate: return "generate";
    case ExperimentKind::kalman_compare: return "kalman-compare";
    case ExperimentKind::backprop_compare: return "backprop-compare";
    case ExperimentKind::pid_compare: return "pid-compare";
    case ExperimentKind::precision_study: return "precision-study";
  }
  return "train";
}

NetworkSpec ExperimentConfig::to_network_spec() const {
  NetworkSpec spec;
  spec.layer_dims = layer_dims;
  for (const std::string& a : activations)
    spec.activation.push_back(activation_from_string(a));
  require(!layer_dims.empty(), "layer_dims must be set");
  spec.prior_mean = Vec::Zero(layer_dims.back());
  spec.step_size = step_size;
  spec.weight_step_size = weight_step_size;
  spec.max_iters = max_iters;
  spec.tol = tol;
  spec.warm_start = warm_start;
  spec.validate();
  return spec;
}

void ExperimentConfig::validate() const {
  require(step_size > 0.0, "step_size must be positive");
  require(weight_step_size > 0.0, "weight_step_size must be positive");
  require(max_iters >= 1, "max_iters must be >= 1");
  require(tol > 0.0, "tol must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0,
          "label_smoothing must be in [0, 1)");
  require(train_count >= 0 && test_count >= 0, "counts must be non-negative");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(steps >= 1, "steps must be >= 1");
  require(state_dim >= 1 && obs_dim >= 1, "dimensions must be >= 1");
  require(dt > 0.0, "dt must be positive");
  if (kind == ExperimentKind::train || kind == ExperimentKind::classify ||
      kind == ExperimentKind::generate) {
    require(layer_dims.size() >= 2, "layer_dims must list at least two layers");
    require(activations.size() + 1 == layer_dims.size(),
            "need one activation per predicted layer");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("config is not valid JSON: ") + e.what());
  }
  require(doc.is_object(), "config document must be a JSON object");
  for (const auto& [key, value] : doc.items())
    require(kKnownKeys.count(key) > 0, "unknown config key: " + key);

  ExperimentConfig c;
  try {
    if (doc.contains("kind"))
      c.kind = experiment_kind_from_string(doc["kind"].get<std::string>());
    if (doc.contains("layer_dims"))
      c.layer_dims = doc["layer_dims"].get<std::vector<int>>();
    if (doc.contains("activations"))
      c.activations = doc["activations"].get<std::vector<std::string>>();
    if (doc.contains("step_size")) c.step_size = doc["step_size"].get<double>();
    if (doc.contains("weight_step_size"))
      c.weight_step_size = doc["weight_step_size"].get<double>();
    if (doc.contains("max_iters")) c.max_iters = doc["max_iters"].get<int>();
    if (doc.contains("tol")) c.tol = doc["tol"].get<double>();
    if (doc.contains("warm_start")) c.warm_start = doc["warm_start"].get<bool>();
    if (doc.contains("clamp_mode"))
      c.clamp_mode = clamp_mode_from_string(doc["clamp_mode"].get<std::string>());
    if (doc.contains("use_psi")) c.use_psi = doc["use_psi"].get<bool>();
    if (doc.contains("drop_derivative"))
      c.drop_derivative = doc["drop_derivative"].get<bool>();
    if (doc.contains("use_zeta")) c.use_zeta = doc["use_zeta"].get<bool>();
    if (doc.contains("precision_mode"))
      c.precision_mode =
          precision_mode_from_string(doc["precision_mode"].get<std::string>());
    if (doc.contains("weight_decay"))
      c.weight_decay = doc["weight_decay"].get<double>();
    if (doc.contains("label_smoothing"))
      c.label_smoothing = doc["label_smoothing"].get<double>();
    if (doc.contains("train_images"))
      c.train_images = doc["train_images"].get<std::string>();
    if (doc.contains("train_labels"))
      c.train_labels = doc["train_labels"].get<std::string>();
    if (doc.contains("test_images"))
      c.test_images = doc["test_images"].get<std::string>();
    if (doc.contains("test_labels"))
      c.test_labels = doc["test_labels"].get<std::string>();
    if (doc.contains("train_count")) c.train_count = doc["train_count"].get<int>();
    if (doc.contains("test_count")) c.test_count = doc["test_count"].get<int>();
    if (doc.contains("epochs")) c.epochs = doc["epochs"].get<int>();
    if (doc.contains("batch_size")) c.batch_size = doc["batch_size"].get<int>();
    if (doc.contains("model_in")) c.model_in = doc["model_in"].get<std::string>();
    if (doc.contains("model_out")) c.model_out = doc["model_out"].get<std::string>();
    if (doc.contains("steps")) c.steps = doc["steps"].get<int>();
    if (doc.contains("state_dim")) c.state_dim = doc["state_dim"].get<int>();
    if (doc.contains("obs_dim")) c.obs_dim = doc["obs_dim"].get<int>();
    if (doc.contains("dt")) c.dt = doc["dt"].get<double>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) c.out = doc["out"].get<std::string>();
    if (doc.contains("timing")) c.timing = doc["timing"].get<bool>();
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed config value: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const std::string& ov : overrides) {
    const auto pos = ov.find('=');
    require(pos != std::string::npos && pos > 0,
            "override must have the form key=value: " + ov);
    const std::string key = ov.substr(0, pos);
    const std::string value = ov.substr(pos + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;  // bare strings are taken verbatim
    }
    doc[key] = parsed;
  }
  return doc.dump();
}

void save_params(const std::string& path, const NetworkParams& params) {
  json doc;
  doc["theta"] = json::array();
  doc["precision"] = json::array();
  for (size_t l = 0; l < params.theta.size(); ++l)
    doc["theta"].push_back(params.theta[l].size() == 0
                               ? json(nullptr)
                               : mat_to_json(params.theta[l]));
  for (const Mat& p : params.precision) doc["precision"].push_back(mat_to_json(p));
  std::ofstream out(path);
  require(out.good(), "cannot open model file for writing: " + path);
  out << doc.dump(1) << '\n';
}

NetworkParams load_params(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open model file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("model file is not valid JSON: ") +
                          e.what());
  }
  NetworkParams params;
  for (const json& jt : doc.at("theta"))
    params.theta.push_back(jt.is_null() ? Mat() : json_to_mat(jt));
  for (const json& jp : doc.at("precision"))
    params.precision.push_back(json_to_mat(jp));
  return params;
}

}  // namespace pcn
