#include "msbin/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "msbin/cvs.hpp"
#include "msbin/errors.hpp"
#include "msbin/parallel.hpp"
#include "msbin/random.hpp"
#include "msbin/serialize.hpp"

namespace fs = std::filesystem;

namespace msbin {

namespace {

struct TrainConfig {
  double p = 0.2;
  std::size_t n_cv = 50;
  std::size_t budget = 50;
  std::string strategy = "cvs";
  int max_frequent = 5;
};

struct Settings {
  int threads = 0;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string config_path;
  bool verbose = false;

  Pipeline pipeline;
  OptimizerConfig optimizer;
  SynthConfig synth;
  TrainConfig train;
};

void merge_train(const Json& j, TrainConfig& t) {
  if (!j.is_object()) throw ConfigError("train: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    if (k == "p" && v.is_number()) {
      t.p = v.get<double>();
    } else if (k == "n_cv" && v.is_number_unsigned()) {
      t.n_cv = v.get<std::size_t>();
    } else if (k == "budget" && v.is_number_unsigned()) {
      t.budget = v.get<std::size_t>();
    } else if (k == "strategy" && v.is_string()) {
      t.strategy = v.get<std::string>();
    } else if (k == "max_frequent" && v.is_number_unsigned()) {
      t.max_frequent = v.get<int>();
    } else if (k == "p" || k == "n_cv" || k == "budget" || k == "strategy" || k == "max_frequent") {
      throw ConfigError("train." + k + ": wrong type");
    } else {
      throw ConfigError("train: unknown key '" + k + "'");
    }
  }
}

void load_config(Settings& s) {
  if (s.config_path.empty()) return;
  const Json j = read_json_file(s.config_path);
  try {
    if (!j.is_object()) throw ConfigError("top level must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "preprocess") {
        merge_json(it.value(), s.pipeline.preprocess);
      } else if (k == "kernel") {
        merge_json(it.value(), s.pipeline.kernel);
      } else if (k == "wrapper") {
        merge_json(it.value(), s.pipeline.wrapper);
      } else if (k == "optimizer") {
        merge_json(it.value(), s.optimizer);
      } else if (k == "synth") {
        merge_json(it.value(), s.synth);
      } else if (k == "train") {
        merge_train(it.value(), s.train);
      } else {
        throw ConfigError("unknown key '" + k + "'");
      }
    }
  } catch (const Error& e) {
    throw ConfigError("config '" + s.config_path + "': " + e.what());
  }
}

class Log {
 public:
  Log(std::ostream& err, bool verbose) : err_(err), verbose_(verbose) {}
  void info(const std::string& msg) const {
    if (verbose_) err_ << msg << '\n';
  }
  void warn(const std::string& msg) const { err_ << "warning: " << msg << '\n'; }

 private:
  std::ostream& err_;
  bool verbose_;
};

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t n = 6;
  std::string out;
  CLI::Option* width = nullptr;
  CLI::Option* height = nullptr;
  CLI::Option* bands = nullptr;
  CLI::Option* density = nullptr;
  int w = 0, h = 0, nb = 0;
  double d = 0.0;
};

int cmd_synth(Settings& s, const SynthArgs& a, std::ostream& out, const Log& log) {
  SynthConfig cfg = s.synth;
  if (a.width->count()) cfg.width = a.w;
  if (a.height->count()) cfg.height = a.h;
  if (a.bands->count()) cfg.n_band = a.nb;
  if (a.density->count()) cfg.text_density = a.d;
  const std::uint64_t seed = s.seed_set ? s.seed : cfg.seed;
  log.info("generating " + std::to_string(a.n) + " images into '" + a.out + "'");
  generate_dataset(a.n, seed, cfg, a.out);
  out << (fs::path(a.out) / kDatasetManifestName).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
  std::string dataset;
  std::string kernel;
  std::string mode;
  CLI::Option* tail = nullptr;
  int tail_count = 3;
  std::string out;
};

int cmd_optimize(Settings& s, const OptimizeArgs& a, std::ostream& out, const Log& log) {
  if (!a.kernel.empty()) merge_json(Json{{"kind", a.kernel}}, s.pipeline.kernel, "--kernel");
  if (!a.mode.empty()) merge_json(Json{{"mode", a.mode}}, s.optimizer, "--mode");
  if (a.tail->count()) s.optimizer.tail_count = a.tail_count;
  if (s.seed_set) s.optimizer.seed = s.seed;
  s.pipeline.validate();
  s.optimizer.validate();

  const fs::path manifest = dataset_manifest_path(a.dataset);
  auto all = load_dataset(manifest);
  std::vector<LabeledImage> dataset;
  for (auto& li : all) {
    if (li.gt) {
      dataset.push_back(std::move(li));
    } else {
      log.warn("image '" + li.image.name() + "' has no ground truth; skipped");
    }
  }
  if (dataset.empty()) throw Error("dataset '" + manifest.string() + "' has no image with ground truth");
  log.info("optimizing " + std::to_string(dataset.size()) + " images");

  RankingsFile r{s.pipeline, s.optimizer, dataset_best(dataset, s.pipeline, s.optimizer)};
  ensure_parent(a.out);
  write_json_file(a.out, to_json(r));
  int status = 0;
  for (const auto& im : r.images)
    if (!im.ranked) {
      out << "error: " << im.name << ": " << im.error << '\n';
      status = 1;
    }
  return status;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dataset;
  std::string rankings;
  CLI::Option* p = nullptr;
  double p_value = 0.2;
  std::string strategy;
  CLI::Option* n_cv = nullptr;
  std::size_t n_cv_value = 50;
  CLI::Option* budget = nullptr;
  std::size_t budget_value = 50;
  std::string out_model;
  std::string records;
  std::string summary;
};

Json record_json(const CvsRecord& r) {
  return {{"training_ids", r.training_ids}, {"validation_ids", r.validation_ids}, {"fm_typ", r.fm_typ},
          {"fm_bes", r.fm_bes},             {"fm_mul", r.fm_mul},                 {"cvs", r.cvs},
          {"fm_mul_std", r.fm_mul_std}};
}

int cmd_train(Settings& s, const TrainArgs& a, std::ostream& out, const Log& log) {
  TrainConfig t = s.train;
  if (a.p->count()) t.p = a.p_value;
  if (!a.strategy.empty()) t.strategy = a.strategy;
  if (a.n_cv->count()) t.n_cv = a.n_cv_value;
  if (a.budget->count()) t.budget = a.budget_value;
  if (t.strategy != "cvs" && t.strategy != "minstd" && t.strategy != "all3bs")
    throw ConfigError("strategy must be cvs, minstd or all3bs, got '" + t.strategy + "'");
  if (t.max_frequent < 0) throw ConfigError("train.max_frequent must be >= 0");
  const auto max_frequent = static_cast<std::size_t>(t.max_frequent);

  RankingsFile rf;
  try {
    rf = rankings_from_json(read_json_file(a.rankings));
  } catch (const ConfigError& e) {
    throw ConfigError("'" + a.rankings + "': " + e.what());
  }
  for (const auto& im : rf.images)
    if (!im.ranked) throw Error("'" + a.rankings + "': image '" + im.name + "' has no ranking (" + im.error + ")");
  if (rf.images.empty()) throw Error("'" + a.rankings + "': no images");

  const fs::path model_path = a.out_model;
  const fs::path records_path = a.records.empty() ? sibling(model_path, "_records.csv") : fs::path(a.records);
  const fs::path summary_path = a.summary.empty() ? sibling(model_path, "_summary.json") : fs::path(a.summary);
  ensure_parent(model_path);
  ensure_parent(records_path);
  ensure_parent(summary_path);

  Json summary{{"strategy", t.strategy}};
  ExpertEnsemble model;
  std::vector<CvsRecord> records;

  if (t.strategy == "all3bs") {
    // p is irrelevant: every image's triples are used
    std::vector<RankedTriples> lists;
    for (const auto& im : rf.images) {
      lists.push_back(*im.ranked);
      model.provenance.training_images.push_back(im.name);
    }
    const auto sel = select_experts_detailed(lists, max_frequent);
    model.experts = sel.experts;
    model.pipeline = rf.pipeline;
    summary["training_images"] = model.provenance.training_images;
  } else {
    if (a.dataset.empty()) throw ConfigError("--dataset is required for strategy '" + t.strategy + "'");
    const fs::path manifest = dataset_manifest_path(a.dataset);
    std::map<std::string, RankedTriples> by_name;
    for (const auto& im : rf.images) by_name.emplace(im.name, *im.ranked);
    std::vector<LabeledImage> dataset;
    std::vector<RankedTriples> rankings;
    for (auto& li : load_dataset(manifest)) {
      if (!li.gt) {
        log.warn("image '" + li.image.name() + "' has no ground truth; skipped");
        continue;
      }
      auto it = by_name.find(li.image.name());
      if (it == by_name.end())
        throw Error("'" + a.rankings + "' has no ranking for image '" + li.image.name() + "'");
      rankings.push_back(it->second);
      dataset.push_back(std::move(li));
    }
    const auto [train_count, validation_count] = holdout_sizes(dataset.size(), t.p);
    log.info("train " + std::to_string(train_count) + " / validate " + std::to_string(validation_count));
    const CvsContext ctx(std::move(dataset), std::move(rankings), rf.pipeline, max_frequent);

    const CvIterateResult cv = cv_iterate(ctx, t.p, t.n_cv, derive_seed(s.seed, 1));
    records = cv.records;
    const auto criterion = t.strategy == "cvs" ? SelectionCriterion::MaxCvs : SelectionCriterion::MinStd;
    const CvsSearchResult best = cvs_search(ctx, t.p, t.budget, derive_seed(s.seed, 2), criterion);
    model = best.ensemble;

    summary["p"] = t.p;
    summary["train_count"] = train_count;
    summary["validation_count"] = validation_count;
    summary["n_cv"] = t.n_cv;
    summary["budget"] = t.budget;
    summary["cv"] = {{"fm_avg", cv.fm_avg},
                     {"fm_std", cv.fm_std},
                     {"fm_avg_1", cv.fm_avg_1},
                     {"fm_std_1", cv.fm_std_1},
                     {"cvs_mean", cv.cvs_mean}};
    Json sel = record_json(best.record);
    sel["objective"] = best.objective;
    sel["evaluations"] = best.evaluations;
    summary["selected"] = sel;
  }

  Json experts = Json::array();
  for (const auto& e : model.experts) experts.push_back(to_json(e));
  summary["experts"] = experts;

  write_json_file(model_path, to_json(model));
  write_cvs_records_csv(records_path, records);
  write_json_file(summary_path, summary);
  out << model_path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string model;
  std::string input;
  std::string out;
};

bool is_dataset(const fs::path& p) {
  if (fs::is_directory(p)) return fs::exists(p / kDatasetManifestName) && !fs::exists(p / kImageManifestName);
  const Json j = read_json_file(p);
  return j.is_object() && j.contains("items");
}

int cmd_run(Settings&, const RunArgs& a, std::ostream& out, const Log& log) {
  ExpertEnsemble model;
  try {
    model = ensemble_from_json(read_json_file(a.model));
  } catch (const ConfigError& e) {
    throw ConfigError("'" + a.model + "': " + e.what());
  }
  std::vector<MsImage> images;
  if (is_dataset(a.input)) {
    for (auto& li : load_dataset(dataset_manifest_path(a.input))) images.push_back(std::move(li.image));
  } else {
    images.push_back(load_ms(a.input));
  }
  fs::create_directories(a.out);
  for (const auto& im : images) {
    log.info("binarizing '" + im.name() + "'");
    const fs::path dest = fs::path(a.out) / (im.name() + ".png");
    save_binary(combine(im, model), dest);
    out << dest.string() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string json;
  std::string method;
};

int cmd_eval(Settings&, const EvalArgs& a, std::ostream& out, const Log& log) {
  ScoreReport report;
  report.method = a.method.empty() ? fs::path(a.pred).filename().string() : a.method;
  for (auto& nm : load_dataset_gt(dataset_manifest_path(a.gt))) {
    if (!nm.gt) {
      log.warn("image '" + nm.name + "' has no ground truth; skipped");
      continue;
    }
    const fs::path pred = fs::path(a.pred) / (nm.name + ".png");
    const BinaryImage mask = load_binary(pred);
    if (!mask.same_shape(*nm.gt))
      throw LoadError("'" + pred.string() + "': dimensions do not match the ground truth of '" + nm.name + "'");
    report.per_image.push_back(evaluate(mask, *nm.gt, nm.name));
  }
  if (report.per_image.empty()) throw Error("no image with ground truth in '" + a.gt + "'");
  report.aggregates = aggregate(report.per_image);
  const fs::path csv = a.out;
  const fs::path json = a.json.empty() ? fs::path(csv).replace_extension(".json") : fs::path(a.json);
  ensure_parent(csv);
  ensure_parent(json);
  write_report_csv(csv, report);
  write_report_json(json, report);
  out << csv.string() << '\n' << json.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- rank

struct RankArgs {
  std::vector<std::string> reports;
  std::string out;
};

int cmd_rank(Settings&, const RankArgs& a, std::ostream& out, const Log& log) {
  std::vector<ScoreReport> reports;
  for (const auto& path : a.reports) reports.push_back(read_report_json(path));

  // images common to every report, in the first report's order
  std::vector<std::vector<const ImageScores*>> rows(reports.size());
  for (const auto& im : reports.front().per_image) {
    std::vector<const ImageScores*> found;
    bool complete = true;
    for (std::size_t m = 0; m < reports.size(); ++m) {
      const ImageScores* hit = nullptr;
      for (const auto& other : reports[m].per_image)
        if (other.name == im.name) hit = &other;
      if (!hit) throw Error("'" + a.reports[m] + "' has no scores for image '" + im.name + "'");
      if (!hit->fm || !hit->nrm || !hit->drd || !hit->kappa) complete = false;
      found.push_back(hit);
    }
    if (!complete) {
      log.warn("image '" + im.name + "' has an undefined metric in some report; excluded from ranking");
      continue;
    }
    for (std::size_t m = 0; m < reports.size(); ++m) rows[m].push_back(found[m]);
  }

  std::vector<std::vector<std::vector<double>>> values(reports.size());
  for (std::size_t m = 0; m < reports.size(); ++m)
    for (const auto* s : rows[m]) values[m].push_back({*s->fm, *s->nrm, *s->drd, *s->kappa});
  const auto dirs = standard_directions();
  const RankingResult r = ranking_scores(values, dirs);
  for (const auto& f : r.flagged)
    log.warn("zero divisor for method '" + reports[f.method].method + "', image '" + rows[f.method][f.image]->name +
             "', metric " + std::to_string(f.metric));

  std::ostringstream table;
  table << "method,S\n";
  char buf[64];
  for (std::size_t m = 0; m < reports.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%.6f", r.scores[m]);
    table << reports[m].method << ',' << buf << '\n';
  }
  out << table.str();
  if (!a.out.empty()) {
    ensure_parent(a.out);
    std::ofstream f(a.out);
    if (!f) throw Error("cannot write '" + a.out + "'");
    f << table.str();
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multispectral document binarization with band-triple expert ensembles", "msbin"};
  app.require_subcommand(1);
  app.fallthrough();

  Settings s;
  auto* seed_opt = app.add_option("--seed", s.seed, "Base seed for synth, optimize and train");
  app.add_option("--threads", s.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", s.config_path, "JSON file overriding module defaults")->check(CLI::ExistingFile);
  app.add_flag("--verbose,-v", s.verbose, "Progress messages on stderr");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multispectral dataset");
  synth->add_option("-n,--n", sa.n, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("-o,--out", sa.out, "Output directory")->required();
  sa.width = synth->add_option("--width", sa.w, "Image width");
  sa.height = synth->add_option("--height", sa.h, "Image height");
  sa.bands = synth->add_option("--bands", sa.nb, "Number of bands");
  sa.density = synth->add_option("--density", sa.d, "Text ink fraction");

  OptimizeArgs oa;
  auto* optimize = app.add_subcommand("optimize", "Per-image best and tailing band triples");
  optimize->add_option("-d,--dataset", oa.dataset, "Dataset manifest or directory")->required();
  optimize->add_option("-k,--kernel", oa.kernel, "otsu, niblack, sauvola or bg_suppressed");
  optimize->add_option("-m,--mode", oa.mode, "exhaustive or evolutionary");
  oa.tail = optimize->add_option("-t,--tail", oa.tail_count, "Number of tailing triples");
  optimize->add_option("-o,--out", oa.out, "Rankings JSON")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Select an expert ensemble from per-image rankings");
  train->add_option("-d,--dataset", ta.dataset, "Dataset manifest or directory (not needed for all3bs)");
  train->add_option("-r,--rankings", ta.rankings, "Rankings JSON from optimize")->required();
  ta.p = train->add_option("-p,--p", ta.p_value, "Holdout fraction");
  train->add_option("-s,--strategy", ta.strategy, "cvs, minstd or all3bs");
  ta.n_cv = train->add_option("--n-cv", ta.n_cv_value, "Random cross-validation iterations");
  ta.budget = train->add_option("--budget", ta.budget_value, "Partition evaluations for the search");
  train->add_option("-o,--out", ta.out_model, "Ensemble model JSON")->required();
  train->add_option("--records", ta.records, "CvsRecord CSV (default <model>_records.csv)");
  train->add_option("--summary", ta.summary, "Summary JSON (default <model>_summary.json)");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Binarize images with an ensemble model");
  run->add_option("-m,--model", ra.model, "Ensemble model JSON")->required();
  run->add_option("-i,--input", ra.input, "Image manifest, image directory or dataset")->required();
  run->add_option("-o,--out", ra.out, "Output directory for binary PNGs")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score binary images against ground truth");
  eval->add_option("-p,--pred", ea.pred, "Directory of <image>.png predictions")->required();
  eval->add_option("-g,--gt", ea.gt, "Dataset manifest or directory with ground truth")->required();
  eval->add_option("-o,--out", ea.out, "Report CSV")->required();
  eval->add_option("--json", ea.json, "Report JSON (default: CSV path with .json)");
  eval->add_option("--method", ea.method, "Method name stored in the report");

  RankArgs rka;
  auto* rank = app.add_subcommand("rank", "Ranking score S per method from report JSONs");
  rank->add_option("reports", rka.reports, "Report JSON files")->required()->check(CLI::ExistingFile);
  rank->add_option("-o,--out", rka.out, "CSV with method,S");

  std::vector<std::string> argv_store{"msbin"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const Log log(err, s.verbose);
  try {
    s.seed_set = seed_opt->count() > 0;
    set_thread_count(s.threads > 0 ? s.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    load_config(s);
    if (synth->parsed()) return cmd_synth(s, sa, out, log);
    if (optimize->parsed()) return cmd_optimize(s, oa, out, log);
    if (train->parsed()) return cmd_train(s, ta, out, log);
    if (run->parsed()) return cmd_run(s, ra, out, log);
    if (eval->parsed()) return cmd_eval(s, ea, out, log);
    if (rank->parsed()) return cmd_rank(s, rka, out, log);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace msbin
