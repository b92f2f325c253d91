#include "config_file.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "seqscore/errors.hpp"

namespace seqscore::cli {
namespace {

const std::set<std::string> kExperimentKeys{"family", "scheme",       "theta0", "beta_true",
                                            "beta0",  "alpha",        "tau",    "batch",
                                            "cap_n",  "replications", "seed",   "method"};
const std::set<std::string> kMultipleKeys{"m", "effect_b", "reps"};

YAML::Node load_map(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config must be a mapping of keys to values");
  return root;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError("'" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' has an invalid value '" + node.Scalar() + "'");
  }
}

std::vector<double> number_list(const YAML::Node& node, const std::string& key) {
  if (node.IsScalar()) return {scalar<double>(node, key)};
  if (!node.IsSequence()) throw ConfigError("'" + key + "' must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(scalar<double>(item, key));
  return out;
}

Vector vector_value(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("'" + key + "' must be a list of numbers");
  const auto values = number_list(node, key);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void check_keys(const YAML::Node& root, bool multiple) {
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (kExperimentKeys.count(key) || (multiple && kMultipleKeys.count(key))) continue;
    throw ConfigError("unknown config key '" + key + "'");
  }
}

template <typename Fn>
void wrap(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig experiment_from(const YAML::Node& root) {
  ExperimentConfig cfg;
  wrap([&] {
    if (auto n = root["family"]) cfg.family = make_family(parse_family_kind(scalar<std::string>(n, "family")));
    if (auto n = root["scheme"]) cfg.scheme = parse_scheme(scalar<std::string>(n, "scheme"));
    if (auto n = root["method"]) cfg.method = parse_method(scalar<std::string>(n, "method"));
  });
  if (auto n = root["theta0"]) cfg.theta0 = vector_value(n, "theta0");
  if (auto n = root["beta_true"]) cfg.beta_true = vector_value(n, "beta_true");
  if (auto n = root["beta0"]) cfg.beta0 = vector_value(n, "beta0");
  if (auto n = root["alpha"]) cfg.alpha = scalar<double>(n, "alpha");
  if (auto n = root["tau"]) cfg.tau = scalar<double>(n, "tau");
  if (auto n = root["batch"]) cfg.batch = scalar<int>(n, "batch");
  if (auto n = root["cap_n"]) cfg.cap_n = scalar<std::int64_t>(n, "cap_n");
  if (auto n = root["replications"]) cfg.replications = scalar<int>(n, "replications");
  if (auto n = root["seed"]) cfg.seed = scalar<std::uint64_t>(n, "seed");
  return cfg;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& yaml_text) {
  const YAML::Node root = load_map(yaml_text);
  check_keys(root, false);
  ExperimentConfig cfg = experiment_from(root);
  cfg.validate();
  return cfg;
}

MultipleStudyConfig parse_multiple_study(const std::string& yaml_text) {
  const YAML::Node root = load_map(yaml_text);
  check_keys(root, true);
  MultipleStudyConfig study;
  study.base = experiment_from(root);
  if (auto n = root["reps"]) study.base.replications = scalar<int>(n, "reps");
  if (auto n = root["m"]) study.m = scalar<int>(n, "m");
  if (auto n = root["effect_b"]) study.effects = number_list(n, "effect_b");
  study.validate();
  return study;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace seqscore::cli
