// Command-line front end: dataset generation, surrogate training, prediction,
// evaluation, benchmarking, and container inspection. One JSON run-config
// drives everything; flags mirror config paths one-to-one and win over the
// file. Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardiograph/dataset.hpp"
#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/eval.hpp"
#include "cardiograph/fno.hpp"
#include "cardiograph/geometry.hpp"
#include "cardiograph/kol.hpp"
#include "cardiograph/monodomain.hpp"
#include "cardiograph/run_config.hpp"
#include "cardiograph/threading.hpp"
#include "cardiograph/version.hpp"
#include "cardiograph/vtk.hpp"

namespace cg = cardiograph;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricsRow {
  std::string source;
  std::string dataset;
  std::string target;
  std::string split;
  std::size_t n = 0;
  double train_rel_l2 = kNaN;
  double test_rel_l2 = kNaN;
  double fit_seconds = kNaN;
  double predict_seconds = kNaN;
  std::string config_hash;
  std::uint64_t seed = 0;
};

void append_metrics(const std::string& path, const MetricsRow& r) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) cg::raise(cg::errc::IoError, "cannot open '" + path + "' for writing");
  if (fresh)
    out << "source,dataset,target,split,n,train_rel_l2,test_rel_l2,"
           "fit_seconds,predict_seconds,config_hash,seed,tool_version\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt(v); };
  out << r.source << ',' << r.dataset << ',' << r.target << ',' << r.split << ',' << r.n << ','
      << cell(r.train_rel_l2) << ',' << cell(r.test_rel_l2) << ',' << cell(r.fit_seconds) << ','
      << cell(r.predict_seconds) << ',' << r.config_hash << ',' << r.seed << ','
      << cg::kToolVersion << '\n';
  if (!out) cg::raise(cg::errc::IoError, "failed writing '" + path + "'");
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
  std::optional<std::string> out_dir;
  std::vector<int> grid;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON run-config merged over built-in defaults");
  cmd->add_option("--seed", o.seed, "config key 'seed'");
  cmd->add_option("--grid", o.grid, "config key 'geometry.dims'; one value means a square grid")
      ->delimiter(',');
  cmd->add_option("--threads", o.threads, "worker cap for parallel regions");
  cmd->add_flag("--deterministic", o.deterministic,
                "single-worker mode with a fixed reduction order");
  cmd->add_option("--out-dir", o.out_dir, "config key 'paths.out_dir'");
}

// Defaults <- file <- flag overrides; --grid may change the grid rank, in
// which case the extent falls back to the unit square/cube.
json merged_config(const CommonOpts& o, const json& extra) {
  json ov = extra.is_object() ? extra : json::object();
  if (o.seed) ov["seed"] = *o.seed;
  if (o.out_dir) ov["paths"]["out_dir"] = *o.out_dir;
  json cfg = cg::load_run_config(o.config_path, ov);
  if (!o.grid.empty()) {
    std::vector<int> dims = o.grid;
    if (dims.size() == 1) dims.push_back(dims[0]);
    ov["geometry"]["dims"] = dims;
    if (cfg["geometry"]["extent"].size() != dims.size())
      ov["geometry"]["extent"] = std::vector<double>(dims.size(), 1.0);
    cfg = cg::load_run_config(o.config_path, ov);
  }
  if (o.threads) cg::threading::set_worker_count(*o.threads);
  if (o.deterministic) cg::threading::set_deterministic(true);
  return cfg;
}

std::string out_path(const json& cfg, const std::string& explicit_path,
                     const std::string& fallback_name) {
  if (!explicit_path.empty()) return explicit_path;
  const fs::path dir = cfg["paths"]["out_dir"].get<std::string>();
  if (!dir.empty()) fs::create_directories(dir);
  return (dir / fallback_name).string();
}

std::uint64_t dataset_seed(const cg::Dataset& ds, const json& cfg) {
  if (ds.meta.contains("seed")) return ds.meta["seed"].get<std::uint64_t>();
  return cfg["seed"].get<std::uint64_t>();
}

std::string sniff_kind(const std::string& path) {
  const cg::epds::Container c = cg::epds::read_container(path);
  return c.meta.contains("kind") ? c.meta["kind"].get<std::string>() : std::string();
}

std::vector<std::size_t> split_indices(const cg::Split& split, std::size_t n,
                                       const std::string& which) {
  if (which == "train") return split.train;
  if (which == "test") return split.test;
  if (which == "all") {
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    return ids;
  }
  cg::raise(cg::errc::ConfigError, "unknown split '" + which + "' (train|test|all)");
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
  CommonOpts common;
  std::size_t n = 0;
  std::string out;
  std::string dump_vtk;
};

int run_generate(const GenerateOpts& o) {
  const json cfg = merged_config(o.common, json::object());
  const cg::Geometry g = cg::geometry_from(cfg);
  const cg::ConductivityField cond = cg::conductivity_from(cfg, g);
  const cg::MonodomainConfig mc = cg::monodomain_from(cfg);
  const cg::StimulusParams sp = cg::stimulus_from(cfg);
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();

  cg::Dataset d;
  const double secs = timed([&] { d = cg::generate(o.n, g, cond, mc, sp, seed); });
  d.meta["config_hash"] = cg::config_hash(cfg);
  const std::string out = out_path(cfg, o.out, "dataset.epds");
  cg::save_dataset(d, out);

  if (!o.dump_vtk.empty() && d.size() > 0) {
    std::vector<double> mask(d.inputs[0].begin(), d.inputs[0].end());
    cg::write_vtk(g,
                  {{"stimulus", mask},
                   {"activation", d.activation[0]},
                   {"repolarization", d.repolarization[0]}},
                  o.dump_vtk);
  }

  std::cout << "dataset: " << out << "\nsamples: " << d.size() << ", nodes: " << g.node_count()
            << "\nconfig_hash: " << cg::config_hash(cfg) << "\nseed: " << seed
            << "\nwall_seconds: " << fmt(secs) << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainOpts {
  CommonOpts common;
  std::string model;
  std::string data;
  std::string out;
  std::optional<std::string> kernel;
  std::optional<int> epochs;
  std::optional<std::string> target;
  std::string history;
  std::string metrics;
};

int train_kol(const TrainOpts& o, const json& cfg, const cg::Dataset& ds, const cg::Split& split) {
  const std::string target = cfg["kol"]["target"].get<std::string>();
  if (target != "activation" && target != "repolarization" && target != "both")
    cg::raise(cg::errc::ConfigError,
              "kol.target must be activation, repolarization, or both; got '" + target + "'");
  const bool want_act = target != "repolarization";
  const bool want_rep = target != "activation";
  const std::size_t nodes = ds.geometry.node_count();
  const std::size_t cols = (want_act && want_rep ? 2 : 1) * nodes;

  std::vector<std::vector<std::uint8_t>> masks(split.train.size());
  std::vector<double> targets(split.train.size() * cols);
  for (std::size_t r = 0; r < split.train.size(); ++r) {
    const std::size_t i = split.train[r];
    masks[r] = ds.inputs[i];
    double* row = targets.data() + r * cols;
    if (want_act) {
      std::copy(ds.activation[i].begin(), ds.activation[i].end(), row);
      row += nodes;
    }
    if (want_rep) std::copy(ds.repolarization[i].begin(), ds.repolarization[i].end(), row);
  }

  const cg::KernelSpec spec = cg::kernel_spec_from(cfg);
  const double reg = cfg["kol"]["reg"].get<double>();
  cg::KolModel model;
  const double fit_s =
      timed([&] { model = cg::fit_kol(spec, std::move(masks), targets, cols, ds.geometry, reg); });

  auto eval_split = [&](const std::vector<std::size_t>& ids, double& act_err, double& rep_err) {
    act_err = rep_err = kNaN;
    if (ids.empty()) return;
    std::vector<double> pred_act, pred_rep, true_act, true_rep;
    for (const std::size_t i : ids) {
      const std::vector<double> p = cg::predict_kol(model, ds.inputs[i]);
      const double* row = p.data();
      if (want_act) {
        pred_act.insert(pred_act.end(), row, row + nodes);
        true_act.insert(true_act.end(), ds.activation[i].begin(), ds.activation[i].end());
        row += nodes;
      }
      if (want_rep) {
        pred_rep.insert(pred_rep.end(), row, row + nodes);
        true_rep.insert(true_rep.end(), ds.repolarization[i].begin(), ds.repolarization[i].end());
      }
    }
    if (want_act) act_err = cg::rel_l2(pred_act, true_act, nodes);
    if (want_rep) rep_err = cg::rel_l2(pred_rep, true_rep, nodes);
  };
  double train_act = kNaN, train_rep = kNaN, test_act = kNaN, test_rep = kNaN;
  eval_split(split.train, train_act, train_rep);
  eval_split(split.test, test_act, test_rep);

  const std::string hash = cg::config_hash(cfg);
  const std::uint64_t seed = dataset_seed(ds, cfg);
  json extra;
  extra["config_hash"] = hash;
  extra["seed"] = seed;
  extra["target"] = target;
  const std::string out = out_path(cfg, o.out, "kol_model.epds");
  cg::save_kol(model, out, extra);

  const std::string metrics = out_path(cfg, o.metrics, "metrics.csv");
  const std::string source = "kol:" + spec.preset_name;
  if (want_act)
    append_metrics(metrics, {source, o.data, "activation", "train/test", split.train.size(),
                             train_act, test_act, fit_s, kNaN, hash, seed});
  if (want_rep)
    append_metrics(metrics, {source, o.data, "repolarization", "train/test", split.train.size(),
                             train_rep, test_rep, fit_s, kNaN, hash, seed});

  std::cout << "model: " << out << "\nkernel: " << spec.preset_name
            << "\ntrain_samples: " << split.train.size() << ", test_samples: " << split.test.size()
            << "\nfit_seconds: " << fmt(fit_s) << "\n";
  if (want_act)
    std::cout << "activation rel_l2: train " << fmt(train_act) << ", test " << fmt(test_act)
              << "\n";
  if (want_rep)
    std::cout << "repolarization rel_l2: train " << fmt(train_rep) << ", test " << fmt(test_rep)
              << "\n";
  return 0;
}

int train_fno(const TrainOpts& o, const json& cfg, const cg::Dataset& ds, const cg::Split& split) {
  const json& f = cfg["fno"];
  cg::FnoConfig fc;
  fc.width = f["width"].get<int>();
  fc.layers = f["layers"].get<int>();
  fc.modes = f["modes"].get<std::vector<int>>();
  fc.lr0 = f["lr"].get<double>();
  fc.batch = f["batch"].get<int>();
  fc.epochs = f["epochs"].get<int>();
  fc.plateau_factor = f["plateau_factor"].get<double>();
  fc.min_lr = f["min_lr"].get<double>();
  fc.target = f["target"].get<std::string>();
  const std::string act = f["activation"].get<std::string>();
  if (act == "gelu")
    fc.activation = cg::FnoActivation::Gelu;
  else if (act == "identity")
    fc.activation = cg::FnoActivation::Identity;
  else
    cg::raise(cg::errc::ConfigError, "fno.activation must be gelu or identity; got '" + act + "'");
  fc.seed = cfg["seed"].get<std::uint64_t>();

  cg::FnoTrainResult res;
  const double fit_s = timed([&] { res = cg::fno_train(ds, split, fc); });

  const std::string hash = cg::config_hash(cfg);
  json extra;
  extra["config_hash"] = hash;
  extra["seed"] = fc.seed;
  extra["target"] = fc.target;
  const std::string out = out_path(cfg, o.out, "fno_model.epds");
  cg::save_fno(res.params, extra, out);

  const std::string history = out_path(cfg, o.history, "loss_history.csv");
  {
    std::ofstream hist(history);
    if (!hist) cg::raise(cg::errc::IoError, "cannot open '" + history + "' for writing");
    hist << "epoch,train_loss,test_loss,lr\n";
    for (const cg::FnoHistoryRow& r : res.history)
      hist << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.test_loss) << ',' << fmt(r.lr)
           << '\n';
  }

  const double final_train = res.history.empty() ? kNaN : res.history.back().train_loss;
  const std::string metrics = out_path(cfg, o.metrics, "metrics.csv");
  append_metrics(metrics, {"fno", o.data, fc.target, "train/test", split.train.size(), final_train,
                           res.best_test, fit_s, kNaN, hash, fc.seed});

  std::cout << "model: " << out << "\nhistory: " << history << "\nepochs: " << res.history.size()
            << "\nbest_test: " << fmt(res.best_test) << "\ntrain_seconds: " << fmt(fit_s) << "\n";
  return 0;
}

int run_train(const TrainOpts& o) {
  json extra = json::object();
  if (o.kernel) extra["kol"]["preset"] = *o.kernel;
  if (o.epochs) extra["fno"]["epochs"] = *o.epochs;
  if (o.target) {
    if (o.model == "kol")
      extra["kol"]["target"] = *o.target;
    else
      extra["fno"]["target"] = *o.target;
  }
  const json cfg = merged_config(o.common, extra);

  const cg::Dataset ds = cg::load_dataset(o.data);
  const cg::Split split = cg::split_80_20(ds.size(), dataset_seed(ds, cfg));
  if (o.model == "kol") return train_kol(o, cfg, ds, split);
  if (o.model == "fno") return train_fno(o, cfg, ds, split);
  cg::raise(cg::errc::ConfigError, "unknown model '" + o.model + "' (kol|fno)");
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  CommonOpts common;
  std::string model;
  std::string data;
  std::string split = "test";
  std::string out;
  std::string metrics;
};

int run_predict(const PredictOpts& o) {
  const json cfg = merged_config(o.common, json::object());
  const cg::Dataset ds = cg::load_dataset(o.data);
  const cg::Split split = cg::split_80_20(ds.size(), dataset_seed(ds, cfg));
  const std::vector<std::size_t> ids = split_indices(split, ds.size(), o.split);
  if (ids.empty()) cg::raise(cg::errc::TooSmall, "selected split is empty");
  const std::size_t nodes = ds.geometry.node_count();

  const std::string kind = sniff_kind(o.model);
  json model_meta;
  std::vector<double> act, rep;
  bool want_act = false, want_rep = false;
  double single_s = kNaN;

  if (kind == "kol_model") {
    const cg::KolModel m = cg::load_kol(o.model, &model_meta);
    if (m.geometry.dims != ds.geometry.dims)
      cg::raise(cg::errc::GeometryMismatch, "model and dataset grids disagree");
    std::string target = model_meta.value("target", "");
    if (target.empty())
      target = m.out_cols == 2 * nodes ? "both" : "activation";
    want_act = target != "repolarization";
    want_rep = target != "activation";
    if (m.out_cols != (want_act && want_rep ? 2 : 1) * nodes)
      cg::raise(cg::errc::ShapeMismatch, "model output columns do not match the dataset nodes");
    if (want_act) act.reserve(ids.size() * nodes);
    if (want_rep) rep.reserve(ids.size() * nodes);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      std::vector<double> p;
      const double s = timed([&] { p = cg::predict_kol(m, ds.inputs[ids[r]]); });
      if (r == 0) single_s = s;
      const double* row = p.data();
      if (want_act) {
        act.insert(act.end(), row, row + nodes);
        row += nodes;
      }
      if (want_rep) rep.insert(rep.end(), row, row + nodes);
    }
  } else if (kind == "fno_model") {
    const cg::FnoParams p = cg::load_fno(o.model, &model_meta);
    const std::string target = model_meta.value("target", "activation");
    want_act = target == "activation";
    want_rep = !want_act;
    std::vector<double>& dst = want_act ? act : rep;
    dst.resize(ids.size() * nodes);
    const int in_ch = cg::fno_in_channels(ds.geometry);
    const std::size_t chunk = 20;
    for (std::size_t lo = 0; lo < ids.size(); lo += chunk) {
      const std::size_t hi = std::min(ids.size(), lo + chunk);
      const std::size_t b = hi - lo;
      std::vector<double> x(static_cast<std::size_t>(in_ch) * b * nodes);
      for (std::size_t r = 0; r < b; ++r) {
        const std::vector<double> feat = cg::fno_featurize(ds.inputs[ids[lo + r]], ds.geometry);
        for (int c = 0; c < in_ch; ++c)
          std::copy(feat.begin() + static_cast<std::ptrdiff_t>(c * nodes),
                    feat.begin() + static_cast<std::ptrdiff_t>((c + 1) * nodes),
                    x.begin() + static_cast<std::ptrdiff_t>((c * b + r) * nodes));
      }
      std::vector<double> out;
      const double s = timed([&] { out = cg::fno_forward(p, x, b, ds.geometry.dims); });
      if (lo == 0) single_s = s / static_cast<double>(b);
      std::copy(out.begin(), out.end(), dst.begin() + static_cast<std::ptrdiff_t>(lo * nodes));
    }
  } else {
    cg::raise(cg::errc::IoError, "'" + o.model + "' is not a model container");
  }

  cg::epds::Container c;
  c.meta["kind"] = "predictions";
  c.meta["model_kind"] = kind;
  c.meta["model_path"] = o.model;
  c.meta["dataset_path"] = o.data;
  c.meta["split"] = o.split;
  c.meta["config_hash"] = cg::config_hash(cfg);
  c.meta["seed"] = dataset_seed(ds, cfg);
  c.meta["tool_version"] = cg::kToolVersion;
  {
    std::vector<double> idx(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) idx[i] = static_cast<double>(ids[i]);
    c.add("indices", {ids.size()}, std::move(idx));
  }
  if (want_act) c.add("activation", {ids.size(), nodes}, std::move(act));
  if (want_rep) c.add("repolarization", {ids.size(), nodes}, std::move(rep));
  const std::string out = out_path(cfg, o.out, "predictions.epds");
  cg::epds::write_container(c, out);

  const std::string metrics = out_path(cfg, o.metrics, "metrics.csv");
  append_metrics(metrics, {"predict:" + kind, o.data, model_meta.value("target", "both"), o.split,
                           ids.size(), kNaN, kNaN, kNaN, single_s,
                           cg::config_hash(cfg), dataset_seed(ds, cfg)});

  std::cout << "predictions: " << out << "\nsamples: " << ids.size() << " (" << o.split
            << ")\nsingle_predict_seconds: " << fmt(single_s) << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  CommonOpts common;
  std::string pred;
  std::string data;
  std::string metrics;
  std::string per_sample;
  std::string hist;
};

int run_evaluate(const EvaluateOpts& o) {
  const json cfg = merged_config(o.common, json::object());
  const cg::epds::Container pc = cg::epds::read_container(o.pred);
  const cg::Dataset ds = cg::load_dataset(o.data);
  const std::size_t nodes = ds.geometry.node_count();

  std::vector<std::string> targets;
  for (const char* name : {"activation", "repolarization"})
    if (pc.has(name)) targets.push_back(name);
  if (targets.empty())
    cg::raise(cg::errc::EmptyList, "'" + o.pred + "' holds no activation/repolarization arrays");

  std::vector<std::size_t> ids;
  if (pc.has("indices")) {
    for (const double v : pc.at("indices").data) ids.push_back(static_cast<std::size_t>(v));
  } else {
    ids.resize(pc.at(targets.front()).dims[0]);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  }
  for (const std::size_t i : ids)
    if (i >= ds.size())
      cg::raise(cg::errc::ShapeMismatch, "prediction index exceeds the dataset size");

  const std::size_t bins = cfg["eval"]["bins"].get<std::size_t>();
  const double threshold = cfg["eval"]["outlier_threshold"].get<double>();
  const std::string split = pc.meta.value("split", "all");
  const std::string hash = cg::config_hash(cfg);
  const std::uint64_t seed = dataset_seed(ds, cfg);

  const std::string metrics = out_path(cfg, o.metrics, "metrics.csv");
  const std::string per_sample_path = out_path(cfg, o.per_sample, "per_sample.csv");
  const std::string hist_path = out_path(cfg, o.hist, "hist.csv");
  std::ofstream ps(per_sample_path);
  std::ofstream hs(hist_path);
  if (!ps || !hs) cg::raise(cg::errc::IoError, "cannot open per-sample/histogram csv for writing");
  ps << "target,index,rel_l2\n";
  hs << "target,bin_lo,bin_hi,count\n";

  for (const std::string& target : targets) {
    const cg::epds::Array& arr = pc.at(target);
    if (arr.dims.size() != 2 || arr.dims[0] != ids.size() || arr.dims[1] != nodes)
      cg::raise(cg::errc::ShapeMismatch, "array '" + target + "' does not match the dataset");
    std::vector<double> truth(ids.size() * nodes);
    const auto& maps = target == "activation" ? ds.activation : ds.repolarization;
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy(maps[ids[r]].begin(), maps[ids[r]].end(),
                truth.begin() + static_cast<std::ptrdiff_t>(r * nodes));

    const std::vector<double> errs = cg::rel_l2_per_sample(arr.data, truth, nodes);
    const double mean = cg::rel_l2(arr.data, truth, nodes);
    const cg::ErrorDistribution dist = cg::error_distribution(errs, bins, threshold);

    for (std::size_t r = 0; r < errs.size(); ++r)
      ps << target << ',' << ids[r] << ',' << fmt(errs[r]) << '\n';
    for (std::size_t b = 0; b < dist.counts.size(); ++b)
      hs << target << ',' << fmt(dist.bin_edges[b]) << ',' << fmt(dist.bin_edges[b + 1]) << ','
         << dist.counts[b] << '\n';

    append_metrics(metrics, {"evaluate", o.data, target, split, ids.size(), kNaN, mean, kNaN,
                             kNaN, hash, seed});

    std::cout << target << ": mean rel_l2 " << fmt(mean) << "\n  five-number: min "
              << fmt(dist.summary.min) << ", q1 " << fmt(dist.summary.q1) << ", median "
              << fmt(dist.summary.median) << ", q3 " << fmt(dist.summary.q3) << ", max "
              << fmt(dist.summary.max) << "\n  whiskers: [" << fmt(dist.summary.whisker_lo)
              << ", " << fmt(dist.summary.whisker_hi) << "]\n  outliers > " << fmt(threshold)
              << ": " << fmt(100.0 * dist.outlier_fraction) << "%\n";
  }
  std::cout << "per_sample: " << per_sample_path << "\nhist: " << hist_path << "\n";
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchOpts {
  CommonOpts common;
  std::string data;
  std::string model;
  std::size_t sample = 0;
  std::string metrics;
};

int run_bench(const BenchOpts& o) {
  const json cfg = merged_config(o.common, json::object());
  const cg::Dataset ds = cg::load_dataset(o.data);
  if (o.sample >= ds.size())
    cg::raise(cg::errc::ConfigError, "--sample exceeds the dataset size");

  const cg::Geometry& g = ds.geometry;
  const cg::ConductivityField cond = cg::conductivity_from(cfg, g);
  cg::MonodomainConfig mc = cg::monodomain_from(cfg);
  mc.dt = ds.meta.value("dt", mc.dt);
  mc.t_end = ds.meta.value("t_end", mc.t_end);
  cg::Stimulus stim;
  stim.mask = ds.inputs[o.sample];
  stim.intensity = ds.meta.value("intensity", stim.intensity);
  stim.duration = ds.meta.value("duration", stim.duration);

  const cg::MonodomainSolver solver(g, cond, mc);
  const cg::BenchResult mono = cg::bench([&] { (void)solver.simulate(stim); }, 1);

  const std::string kind = sniff_kind(o.model);
  cg::BenchResult sur;
  if (kind == "kol_model") {
    const cg::KolModel m = cg::load_kol(o.model);
    if (m.geometry.dims != g.dims)
      cg::raise(cg::errc::GeometryMismatch, "model and dataset grids disagree");
    sur = cg::bench([&] { (void)cg::predict_kol(m, stim.mask); }, 5);
  } else if (kind == "fno_model") {
    const cg::FnoParams p = cg::load_fno(o.model);
    const std::vector<double> x = cg::fno_featurize(stim.mask, g);
    sur = cg::bench([&] { (void)cg::fno_forward(p, x, 1, g.dims); }, 5);
  } else {
    cg::raise(cg::errc::IoError, "'" + o.model + "' is not a model container");
  }

  const double ratio = mono.per_call_seconds / sur.per_call_seconds;
  append_metrics(out_path(cfg, o.metrics, "metrics.csv"),
                 {"bench:" + kind, o.data, "", "", 1, kNaN, kNaN, mono.per_call_seconds,
                  sur.per_call_seconds, cg::config_hash(cfg), dataset_seed(ds, cfg)});

  std::cout << "monodomain_seconds: " << fmt(mono.per_call_seconds)
            << "\nsurrogate_seconds: " << fmt(sur.per_call_seconds) << " (" << kind
            << ", mean of " << sur.calls << ")\nspeedup: " << fmt(ratio)
            << "\npeak_rss_kb: " << sur.peak_rss_kb << "\n";
  return 0;
}

// ----------------------------------------------------------------- inspect

int run_inspect(const std::vector<std::string>& paths) {
  for (const std::string& path : paths) {
    const cg::epds::Container c = cg::epds::read_container(path);
    std::cout << path << ": EPDS v" << cg::epds::kFormatVersion << "\n";
    const json& top = c.meta;
    const json& provenance = top.contains("dataset") ? top["dataset"] : top;
    for (const char* key : {"kind", "config_hash", "seed", "tool_version"})
      if (provenance.contains(key))
        std::cout << "  " << key << ": "
                  << (provenance[key].is_string() ? provenance[key].get<std::string>()
                                                  : provenance[key].dump())
                  << "\n";
      else if (top.contains(key))
        std::cout << "  " << key << ": "
                  << (top[key].is_string() ? top[key].get<std::string>() : top[key].dump())
                  << "\n";
    std::cout << "  meta: " << top.dump() << "\n  arrays:\n";
    for (const auto& [name, arr] : c.arrays) {
      std::cout << "    " << name << " dims=[";
      for (std::size_t d = 0; d < arr.dims.size(); ++d)
        std::cout << (d ? "," : "") << arr.dims[d];
      std::cout << "] (" << arr.data.size() << " values)\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monodomain cardiac simulation data and operator-learning surrogates"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* cgen = app.add_subcommand("generate", "simulate a dataset of stimulus -> time maps");
  add_common(cgen, gen.common);
  cgen->add_option("--n", gen.n, "number of samples")->required();
  cgen->add_option("--out", gen.out, "output dataset path (default <out_dir>/dataset.epds)");
  cgen->add_option("--dump-vtk", gen.dump_vtk, "write the first sample's fields as legacy VTK");

  TrainOpts tr;
  CLI::App* ctr = app.add_subcommand("train", "fit a surrogate on a dataset");
  add_common(ctr, tr.common);
  ctr->add_option("model", tr.model, "surrogate family: kol | fno")->required();
  ctr->add_option("--data", tr.data, "input dataset")->required();
  ctr->add_option("--out", tr.out, "output model path");
  ctr->add_option("--kernel", tr.kernel, "config key 'kol.preset'");
  ctr->add_option("--epochs", tr.epochs, "config key 'fno.epochs'");
  ctr->add_option("--target", tr.target, "map(s) to learn: activation | repolarization | both");
  ctr->add_option("--history", tr.history, "loss history csv (default <out_dir>/loss_history.csv)");
  ctr->add_option("--metrics", tr.metrics, "metrics csv to append (default <out_dir>/metrics.csv)");

  PredictOpts pr;
  CLI::App* cpr = app.add_subcommand("predict", "run a trained surrogate over a dataset split");
  add_common(cpr, pr.common);
  cpr->add_option("--model", pr.model, "trained model container")->required();
  cpr->add_option("--data", pr.data, "input dataset")->required();
  cpr->add_option("--split", pr.split, "train | test | all (default test)");
  cpr->add_option("--out", pr.out, "output predictions path (default <out_dir>/predictions.epds)");
  cpr->add_option("--metrics", pr.metrics, "metrics csv to append");

  EvaluateOpts ev;
  CLI::App* cev = app.add_subcommand("evaluate", "compare predictions against simulated truth");
  add_common(cev, ev.common);
  cev->add_option("--pred", ev.pred, "predictions container (a dataset also works)")->required();
  cev->add_option("--data", ev.data, "truth dataset")->required();
  cev->add_option("--metrics", ev.metrics, "metrics csv to append");
  cev->add_option("--per-sample", ev.per_sample, "per-sample csv (default <out_dir>/per_sample.csv)");
  cev->add_option("--hist", ev.hist, "histogram csv (default <out_dir>/hist.csv)");

  BenchOpts be;
  CLI::App* cbe = app.add_subcommand("bench", "time one simulation against one surrogate call");
  add_common(cbe, be.common);
  cbe->add_option("--data", be.data, "dataset supplying the stimulus")->required();
  cbe->add_option("--model", be.model, "trained model container")->required();
  cbe->add_option("--sample", be.sample, "dataset sample index (default 0)");
  cbe->add_option("--metrics", be.metrics, "metrics csv to append");

  std::vector<std::string> inspect_paths;
  CLI::App* cin = app.add_subcommand("inspect", "print container metadata and array shapes");
  cin->add_option("paths", inspect_paths, "container files")->required();

  int rc = 0;
  cgen->callback([&] { rc = run_generate(gen); });
  ctr->callback([&] { rc = run_train(tr); });
  cpr->callback([&] { rc = run_predict(pr); });
  cev->callback([&] { rc = run_evaluate(ev); });
  cbe->callback([&] { rc = run_bench(be); });
  cin->callback([&] { rc = run_inspect(inspect_paths); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
