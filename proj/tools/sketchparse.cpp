// Command-line front end. Every subcommand reads an optional JSON run config
// and delegates to the library modules.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sketchparse/describe/describe.hpp"
#include "sketchparse/interface/config.hpp"
#include "sketchparse/interface/pipeline.hpp"
#include "sketchparse/interface/selfcheck.hpp"
#include "sketchparse/parsenet/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace sketchparse;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string taxonomy;
};

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--config", c.config, "JSON run config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "seed (overrides the config)");
  app->add_option("--taxonomy", c.taxonomy, "taxonomy file (overrides the config)");
  if (with_out) app->add_option("--out", c.out, "output directory (overrides the config)");
}

interface::RunConfig resolve(const Common& c) {
  interface::RunConfig cfg = c.config.empty() ? interface::RunConfig{} : interface::load_run_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.parser.seed = *c.seed;
    cfg.router_plan.seed = *c.seed;
  }
  if (!c.out.empty()) cfg.out = c.out;
  if (!c.taxonomy.empty()) cfg.taxonomy = c.taxonomy;
  return cfg;
}

taxonomy::Taxonomy need_taxonomy(const interface::RunConfig& cfg) {
  if (cfg.taxonomy.empty()) throw ConfigError("no taxonomy given (--taxonomy or config key 'taxonomy')");
  if (!fs::exists(cfg.taxonomy)) throw ConfigError("taxonomy " + cfg.taxonomy.string() + " does not exist");
  return taxonomy::Taxonomy::load(cfg.taxonomy);
}

void need_path(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " " + p.string() + " does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::size_t branch_by_name(const taxonomy::Taxonomy& tax, const std::string& name) {
  if (auto b = tax.find_branch(name)) return *b;
  try {
    return tax.branch_of(name);  // a category name picks its branch
  } catch (const std::out_of_range&) {
    throw ConfigError("'" + name + "' is neither a super-category nor a category of the taxonomy");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch part parser: corpus generation, training, inference and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> categories;
  std::size_t per_category = 0;
  auto* gen = app.add_subcommand("gen-corpus", "draw a seeded synthetic corpus of sketch/label pairs");
  add_common(gen, common);
  gen->add_option("--categories", categories, "categories to draw (default: config or all)")->delimiter(',');
  gen->add_option("--per-category", per_category, "samples per category");

  std::string photo, labels_path, sketch_out;
  auto* sk = app.add_subcommand("sketchify", "turn a grey photo and its label map into a line sketch");
  sk->add_option("photo", photo, "photo PGM")->required()->check(CLI::ExistingFile);
  sk->add_option("labels", labels_path, "label PGM")->required()->check(CLI::ExistingFile);
  sk->add_option("--out", sketch_out, "output sketch PGM")->required();

  std::string data_root, init_ckpt;
  bool freeze_shared = false;
  std::optional<std::size_t> iterations;
  auto* tp = app.add_subcommand("train-parser", "train the two-level parser on a corpus");
  add_common(tp, common);
  tp->add_option("corpus", data_root, "corpus root")->required();
  tp->add_option("--init", init_ckpt, "start from this parser checkpoint")->check(CLI::ExistingFile);
  tp->add_flag("--freeze-shared", freeze_shared, "keep the shared level fixed");
  tp->add_option("--iterations", iterations, "override max iterations");

  auto* tr = app.add_subcommand("train-router", "train the router classifier on a corpus");
  add_common(tr, common);
  tr->add_option("corpus", data_root, "corpus root")->required();
  tr->add_option("--iterations", iterations, "override max iterations");

  std::string input, parser_ckpt, router_ckpt, force_branch;
  auto* inf = app.add_subcommand("infer", "parse sketches; writes <id>.pred.pgm and <id>.json");
  add_common(inf, common);
  inf->add_option("input", input, "sketch PGM, directory or corpus root")->required();
  inf->add_option("--parser", parser_ckpt, "parser checkpoint")->required()->check(CLI::ExistingFile);
  inf->add_option("--router", router_ckpt, "router checkpoint")->check(CLI::ExistingFile);
  inf->add_option("--force-branch", force_branch, "bypass the router with this super-category (or category)");

  std::string pred_root, gt_root;
  bool merge4 = false;
  auto* ev = app.add_subcommand("eval", "IOU and pose scores of predictions against a corpus");
  add_common(ev, common);
  ev->add_option("predictions", pred_root, "directory of <id>.pred.pgm (and <id>.json)")->required();
  ev->add_option("ground_truth", gt_root, "corpus root")->required();
  ev->add_flag("--merge4", merge4, "also report poses merged to N/E/S/W");

  std::string query, ranking, db_root;
  std::optional<std::size_t> top;
  auto* rr = app.add_subcommand("rerank", "re-rank retrieved candidates by attribute-graph matching");
  add_common(rr, common);
  rr->add_option("query", query, "query label PGM")->required()->check(CLI::ExistingFile);
  rr->add_option("ranking", ranking, "file of candidate ids, best first")->required()->check(CLI::ExistingFile);
  rr->add_option("--db", db_root, "directory holding <id>.labels.pgm")->required();
  rr->add_option("--top", top, "re-rank this many leading candidates (default 50)");

  std::string desc_labels, pose_text = "E", category;
  auto* de = app.add_subcommand("describe", "sentence for a parsed label map");
  add_common(de, common, false);
  de->add_option("labels", desc_labels, "predicted label PGM")->required()->check(CLI::ExistingFile);
  de->add_option("--force-branch", force_branch, "super-category the labels belong to")->required();
  de->add_option("--pose", pose_text, "compass pose");
  de->add_option("--category", category, "category name, if known");

  auto* sc = app.add_subcommand("selfcheck", "run the gradient and oracle invariant suite");
  add_common(sc, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      dataprep::CorpusSpec spec;
      spec.taxonomy = &tax;
      spec.categories = categories.empty() ? cfg.corpus.categories : categories;
      if (spec.categories.empty()) {
        for (const auto& b : tax.branches())
          for (const auto& c : b.categories) spec.categories.push_back(c.name);
      }
      spec.per_category = per_category ? per_category : cfg.corpus.per_category;
      spec.image_size = cfg.corpus.image_size;
      spec.seed = cfg.seed;
      const auto n = dataprep::gen_corpus(spec, cfg.out);
      std::printf("wrote %zu samples to %s\n", n, cfg.out.string().c_str());
    } else if (sk->parsed()) {
      const auto s = dataprep::sketchify(imaging::read_raster(photo), imaging::read_labels(labels_path));
      if (fs::path(sketch_out).has_parent_path()) fs::create_directories(fs::path(sketch_out).parent_path());
      imaging::write_pgm(s, sketch_out);
    } else if (tp->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      need_path(data_root, "corpus");
      const auto items = dataprep::load_dataset(data_root, tax);
      auto model = init_ckpt.empty() ? parsenet::build_model(parsenet::ModelConfig::desk_default(), tax, cfg.seed)
                                     : parsenet::load_checkpoint(init_ckpt, tax);
      if (freeze_shared) cfg.parser.freeze.push_back("shared");
      if (iterations) cfg.parser.max_iterations = *iterations;
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t every = std::max<std::size_t>(1, cfg.parser.max_iterations / 20);
      const auto log = learn::train_parser(model, tax, items, cfg.parser, [&](const learn::LossRecord& r) {
        if ((r.iteration + 1) % every == 0) {
          std::fprintf(stderr, "iter %zu seg %.4f pose %.4f lr %.3g (%.0fs)\n", r.iteration + 1, r.seg, r.pose,
                       r.lr, seconds_since(t0));
        }
      });
      fs::create_directories(cfg.out);
      parsenet::save_checkpoint(model, cfg.out / "parser.ckpt");
      learn::write_loss_csv(log, cfg.out / "parser_loss.csv");
      std::printf("trained %zu iterations in %.1fs; wrote %s\n", log.size(), seconds_since(t0),
                  (cfg.out / "parser.ckpt").string().c_str());
    } else if (tr->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      need_path(data_root, "corpus");
      std::vector<learn::RouterSample> samples;
      for (auto& it : dataprep::load_dataset(data_root, tax)) samples.push_back({it.sample.sketch, it.branch});
      if (iterations) cfg.router_plan.max_iterations = *iterations;
      auto net = routercls::build_router(tax.branch_count(), cfg.seed, cfg.router);
      net.digest = tax.digest();
      const auto t0 = std::chrono::steady_clock::now();
      const auto log = learn::train_router(net, samples, cfg.router_plan);
      fs::create_directories(cfg.out);
      routercls::save_router(net, cfg.out / "router.ckpt");
      learn::write_loss_csv(log, cfg.out / "router_loss.csv");
      std::printf("trained %zu iterations in %.1fs; wrote %s\n", log.size(), seconds_since(t0),
                  (cfg.out / "router.ckpt").string().c_str());
    } else if (inf->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      const auto parser = parsenet::load_checkpoint(parser_ckpt, tax);
      std::optional<routercls::RouterNet> router;
      if (!router_ckpt.empty()) router = routercls::load_router(router_ckpt, tax);
      std::optional<std::size_t> forced;
      if (!force_branch.empty()) forced = branch_by_name(tax, force_branch);
      if (!router && !forced) throw ConfigError("infer needs --router or --force-branch");
      interface::Pipeline p{&tax, &parser, router ? &*router : nullptr, cfg.pooling};
      const auto sources = interface::find_sketches(input);
      for (const auto& s : sources) {
        const auto res = interface::infer_sketch(p, s.id, imaging::read_raster(s.path), forced);
        const fs::path stem = cfg.out / s.id;
        fs::create_directories(stem.parent_path());
        imaging::write_pgm(res.labels, stem.string() + ".pred.pgm");
        write_text(stem.string() + ".json", interface::record_json(res.record, tax));
        std::printf("%s: %s\n", s.id.c_str(), res.record.description.c_str());
      }
    } else if (ev->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      need_path(pred_root, "prediction directory");
      need_path(gt_root, "corpus");
      const auto r = interface::evaluate_dirs(pred_root, gt_root, tax, merge4);
      std::cout << eval::iou_table(r.iou);
      if (r.pose) std::cout << "\n" << eval::pose_table(*r.pose);
      if (!common.out.empty() || !common.config.empty()) {
        write_text(cfg.out / "iou.csv", eval::iou_csv(r.iou));
        if (r.pose) write_text(cfg.out / "pose.csv", eval::pose_csv(*r.pose));
      }
    } else if (rr->parsed()) {
      auto cfg = resolve(common);
      need_path(db_root, "candidate directory");
      const auto cands = interface::load_ranking(ranking, db_root);
      const auto ranked = graphrank::rerank(imaging::read_labels(query), cands, top.value_or(cfg.top), cfg.match);
      std::string csv = "rank,id,score\n";
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        char buf[64] = "";
        if (ranked[i].score) std::snprintf(buf, sizeof buf, "%.9g", *ranked[i].score);
        csv += std::to_string(i + 1) + "," + ranked[i].id + "," + buf + "\n";
      }
      std::cout << csv;
      if (!common.out.empty()) write_text(cfg.out / "rerank.csv", csv);
    } else if (de->parsed()) {
      auto cfg = resolve(common);
      const auto tax = need_taxonomy(cfg);
      const auto b = branch_by_name(tax, force_branch);
      describe::SketchSummary s;
      s.category = category;
      s.super_category = tax.branch(b).name;
      s.parts = describe::count_parts(imaging::read_labels(desc_labels), tax.branch(b).parts);
      s.pose = dataprep::parse_pose(pose_text);
      std::cout << describe::describe(s) << "\n";
    } else if (sc->parsed()) {
      auto cfg = resolve(common);
      bool ok = true;
      for (const auto& r : interface::run_selfcheck(cfg.seed)) {
        std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
