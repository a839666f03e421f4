#include "sketchparse/interface/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sketchparse::interface {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void take(const json& obj, const std::string& where, const char* key, T& into) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    into = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void read_parser(const json& j, learn::TrainPlan& plan) {
  const std::string w = "parser.";
  reject_unknown(j, w,
                 {"preset", "lambda", "lr_body", "lr_seg_final", "lr_pose", "momentum", "max_iterations",
                  "class_balance", "balance_background", "augment", "freeze"});
  std::string preset = "desk";
  take(j, w, "preset", preset);
  if (preset == "full") {
    plan = learn::TrainPlan{};
  } else if (preset == "desk") {
    plan = learn::TrainPlan::desk_default();
  } else {
    throw ConfigError("parser.preset must be 'desk' or 'full', got '" + preset + "'");
  }
  take(j, w, "lambda", plan.lambda);
  take(j, w, "lr_body", plan.lr_body);
  take(j, w, "lr_seg_final", plan.lr_seg_final);
  take(j, w, "lr_pose", plan.lr_pose);
  take(j, w, "momentum", plan.momentum);
  take(j, w, "max_iterations", plan.max_iterations);
  take(j, w, "class_balance", plan.class_balance);
  take(j, w, "balance_background", plan.balance_background);
  take(j, w, "augment", plan.augment);
  take(j, w, "freeze", plan.freeze);
  plan.validate();
}

void read_router(const json& j, RunConfig& c) {
  const std::string w = "router.";
  reject_unknown(j, w,
                 {"width_divisor", "dropout", "lr", "momentum", "batch_size", "max_iterations", "augment",
                  "crop_fraction", "multi_view"});
  take(j, w, "width_divisor", c.router.width_divisor);
  take(j, w, "dropout", c.router.dropout);
  take(j, w, "lr", c.router_plan.lr);
  take(j, w, "momentum", c.router_plan.momentum);
  take(j, w, "batch_size", c.router_plan.batch_size);
  take(j, w, "max_iterations", c.router_plan.max_iterations);
  take(j, w, "augment", c.router_plan.augment);
  take(j, w, "crop_fraction", c.pooling.crop_fraction);
  take(j, w, "multi_view", c.pooling.multi_view);
  c.router_plan.validate();
  if (c.router.width_divisor == 0) throw ConfigError("router.width_divisor must be positive");
  if (!(c.router.dropout >= 0.0 && c.router.dropout < 1.0)) throw ConfigError("router.dropout must lie in [0,1)");
  if (!(c.pooling.crop_fraction > 0.0 && c.pooling.crop_fraction <= 1.0)) {
    throw ConfigError("router.crop_fraction must lie in (0,1]");
  }
}

void read_rerank(const json& j, RunConfig& c) {
  const std::string w = "rerank.";
  reject_unknown(j, w,
                 {"top", "sigma_angle", "sigma_centroid", "sigma_r", "sigma_theta", "alpha", "inflation",
                  "sinkhorn_iterations", "tolerance", "max_iterations"});
  take(j, w, "top", c.top);
  take(j, w, "sigma_angle", c.match.sigma_angle);
  take(j, w, "sigma_centroid", c.match.sigma_centroid);
  take(j, w, "sigma_r", c.match.sigma_r);
  take(j, w, "sigma_theta", c.match.sigma_theta);
  take(j, w, "alpha", c.match.alpha);
  take(j, w, "inflation", c.match.inflation);
  take(j, w, "sinkhorn_iterations", c.match.sinkhorn_iterations);
  take(j, w, "tolerance", c.match.tolerance);
  take(j, w, "max_iterations", c.match.max_iterations);
  if (c.top == 0) throw ConfigError("rerank.top must be positive");
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "", {"format_version", "taxonomy", "seed", "out", "corpus", "parser", "router", "rerank"});
  RunConfig c;
  int version = 1;
  take(j, "", "format_version", version);
  if (version != 1) throw ConfigError("unsupported config format_version " + std::to_string(version));
  std::string path;
  if (j.contains("taxonomy")) {
    take(j, "", "taxonomy", path);
    c.taxonomy = resolve(base, path);
  }
  take(j, "", "seed", c.seed);
  if (j.contains("out")) {
    take(j, "", "out", path);
    c.out = resolve(base, path);
  }
  if (j.contains("corpus")) {
    const auto& k = j["corpus"];
    reject_unknown(k, "corpus.", {"categories", "per_category", "image_size"});
    take(k, "corpus.", "categories", c.corpus.categories);
    take(k, "corpus.", "per_category", c.corpus.per_category);
    take(k, "corpus.", "image_size", c.corpus.image_size);
  }
  if (j.contains("parser")) read_parser(j["parser"], c.parser);
  if (j.contains("router")) read_router(j["router"], c);
  if (j.contains("rerank")) read_rerank(j["rerank"], c);
  c.parser.seed = c.seed;
  c.router_plan.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace sketchparse::interface
