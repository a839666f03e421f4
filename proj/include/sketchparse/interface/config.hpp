#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sketchparse/graphrank/graphrank.hpp"
#include "sketchparse/learn/learn.hpp"
#include "sketchparse/routercls/router.hpp"

namespace sketchparse::interface {

struct CorpusSettings {
  /// Empty means every category that has a drawing template.
  std::vector<std::string> categories;
  std::size_t per_category = 40;
  std::size_t image_size = 128;
};

/// Everything a subcommand may need. Defaults are the desk-scale settings;
/// a JSON file overrides any subset of them.
struct RunConfig {
  std::filesystem::path taxonomy;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  CorpusSettings corpus;
  learn::TrainPlan parser = learn::TrainPlan::desk_default();
  routercls::RouterConfig router{4, 0.7};
  learn::RouterPlan router_plan;
  routercls::PoolingConfig pooling;
  std::size_t top = 50;
  graphrank::MatchParams match;
};

/// Parses the JSON form. Relative paths resolve against `base`. Unknown keys
/// and ill-typed values raise ConfigError naming the key.
///
///   {"taxonomy": "...", "seed": 7, "out": "...",
///    "corpus": {"categories": [...], "per_category": 40, "image_size": 128},
///    "parser": {"preset": "desk"|"full", "lambda": ..., "lr_body": ..., ...},
///    "router": {"width_divisor": 4, "dropout": 0.7, "lr": ..., ...},
///    "rerank": {"top": 50, "alpha": 0.2, ...}}
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sketchparse::interface
