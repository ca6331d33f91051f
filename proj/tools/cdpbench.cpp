// Copyright 2026 The cdpbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch front end for the pipeline:
//   gen     synthesize templates and print originals
//   attack  add estimation-and-reprint fakes to a dataset
//   train   train authenticators for a setup across seeds
//   eval    score trained checkpoints into metrics.csv
//   report  aggregate metrics and emit plot-ready kde/pca/roc data
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cdp/cdp.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

cdp::RunConfig load_config(const std::string& path) {
  if (path.empty()) return cdp::default_run_config();
  try {
    return cdp::load_run_config(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<cdp::SetupSpec> load_setups(const std::string& config_path,
                                        const cdp::RunConfig& cfg) {
  if (config_path.empty()) return cdp::make_setup_presets(cfg.defenders, cfg.attackers);
  try {
    return cdp::setups_from_ini(cdp::parse_ini_file(config_path), cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string default_out_dir() {
  const char* env = std::getenv("CDPBENCH_OUT");
  return env && *env ? env : "out";
}

std::string checkpoint_path(const fs::path& out, const std::string& setup, std::uint64_t seed) {
  return (out / ("ckpt_" + setup + "_" + std::to_string(seed) + ".ckpt")).string();
}

struct CommonArgs {
  std::string dataset;
  std::string config;
  std::string out = default_out_dir();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t split_seed = 42;
  std::vector<std::string> setup_names;
};

int run_gen(int n, int size, double density, const std::string& profiles_path,
            std::uint64_t seed, const std::string& out) {
  cdp::RunConfig cfg = load_config(profiles_path);
  auto tuples = cdp::generate_tuples(n, size, density, cfg.profiles_for(cfg.defenders), seed);
  const auto manifest = cdp::save_dataset(tuples, out, seed);
  std::cout << "wrote " << tuples.size() << " tuples (" << size << "x" << size << ", "
            << cfg.defenders.size() << " printers) to " << manifest.string() << "\n";
  return 0;
}

int run_attack(const std::string& dataset, const std::string& config_path,
               const std::string& estimator_name, const std::vector<std::string>& attacker_ids,
               std::uint64_t seed, bool rescan) {
  cdp::RunConfig cfg = load_config(config_path);
  cdp::EstimatorSpec estimator = cfg.estimator;
  if (!estimator_name.empty()) {
    if (estimator_name == "otsu")
      estimator.method = cdp::EstimatorSpec::Method::GlobalOtsu;
    else if (estimator_name == "fixed")
      estimator.method = cdp::EstimatorSpec::Method::FixedThreshold;
    else if (estimator_name == "wiener")
      estimator.method = cdp::EstimatorSpec::Method::WienerThenThreshold;
    else
      throw ConfigError("unknown estimator \"" + estimator_name + "\"");
  }

  std::vector<cdp::PrinterId> ids = attacker_ids.empty()
                                        ? cfg.attackers
                                        : std::vector<cdp::PrinterId>(attacker_ids.begin(),
                                                                      attacker_ids.end());
  std::vector<cdp::PrinterProfile> attackers;
  try {
    attackers = cfg.profiles_for(ids);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  cdp::DatasetManifest manifest;
  auto tuples = cdp::load_dataset(dataset, &manifest);
  std::vector<cdp::PrinterProfile> defender_profiles;
  try {
    defender_profiles = cfg.profiles_for(manifest.defender_printers);
  } catch (const std::invalid_argument& e) {
    if (rescan) throw ConfigError(e.what());
    // Defender ids unknown to this config: fine without rescan.
  }
  cdp::attack_tuples(tuples, estimator, attackers, seed,
                     rescan ? &defender_profiles : nullptr, manifest.seed);
  cdp::save_dataset(tuples, dataset, manifest.seed, estimator.summary());
  std::cout << "added " << attackers.size() << "x" << manifest.defender_printers.size()
            << " fakes per tuple (" << estimator.summary() << ") across " << tuples.size()
            << " tuples\n";
  return 0;
}

int run_train(const CommonArgs& args) {
  cdp::RunConfig cfg = load_config(args.config);
  auto setups = load_setups(args.config, cfg);
  auto tuples = cdp::load_dataset(args.dataset);
  std::vector<int> ids;
  for (const auto& t : tuples) ids.push_back(t.id());
  const cdp::SplitIds split = cdp::split_dataset(ids, {0.4, 0.1, 0.5}, args.split_seed);

  fs::create_directories(args.out);
  for (const auto& name : args.setup_names) {
    const cdp::SetupSpec& setup = cdp::find_setup(setups, name);
    for (std::uint64_t seed : args.seeds) {
      cdp::TrainConfig tc = cfg.train;
      tc.seeds = {seed};
      cdp::TrainResult r = cdp::train(tuples, split, setup, tc, seed);
      cdp::Checkpoint ck;
      ck.spec = r.model.spec();
      ck.params = r.model.snapshot_params();
      ck.has_optimizer = true;
      ck.adam_step = r.adam_step;
      ck.adam_m = r.adam_m;
      ck.adam_v = r.adam_v;
      ck.epoch = static_cast<std::uint64_t>(r.best_epoch);
      ck.rng_state = "seed=" + std::to_string(seed);
      cdp::save_checkpoint(checkpoint_path(args.out, name, seed), ck);
      cdp::write_train_log(
          (fs::path(args.out) / ("train_log_" + name + "_" + std::to_string(seed) + ".csv"))
              .string(),
          r.log);
      std::cout << name << " seed " << seed << ": best epoch " << r.best_epoch << ", val loss "
                << r.best_val_loss << " (" << r.log.size() << " epochs)\n";
    }
  }
  return 0;
}

int run_eval(const CommonArgs& args) {
  cdp::RunConfig cfg = load_config(args.config);
  auto setups = load_setups(args.config, cfg);
  auto tuples = cdp::load_dataset(args.dataset);
  std::vector<int> ids;
  for (const auto& t : tuples) ids.push_back(t.id());
  const cdp::SplitIds split = cdp::split_dataset(ids, {0.4, 0.1, 0.5}, args.split_seed);

  fs::create_directories(args.out);
  const std::string metrics_path = (fs::path(args.out) / "metrics.csv").string();
  std::vector<cdp::MetricsRecord> records;
  for (const auto& name : args.setup_names) {
    const cdp::SetupSpec& setup = cdp::find_setup(setups, name);
    for (std::uint64_t seed : args.seeds) {
      const std::string ck_path = checkpoint_path(args.out, name, seed);
      if (!fs::exists(ck_path))
        throw ConfigError("missing checkpoint " + ck_path + " (run train first)");
      try {
        cdp::Model model = cdp::model_from_checkpoint(cdp::load_checkpoint(ck_path));
        for (const auto& [d_test, a_test] : setup.cells) {
          auto scores = cdp::score_cell(model, tuples, split.test, d_test, a_test);
          auto [p_miss, p_fa] = cdp::confusion_rates(scores.originals, scores.fakes, cfg.train.tau);
          cdp::MetricsRecord rec;
          rec.setup = setup.name;
          rec.d_train = cdp::join_ids(setup.d_train);
          rec.a_train = cdp::join_ids(setup.a_train);
          rec.d_test = d_test;
          rec.a_test = a_test;
          rec.seed = seed;
          rec.p_miss = p_miss;
          rec.p_fa = p_fa;
          rec.auc = cdp::auc(scores.originals, scores.fakes);
          rec.n_test = static_cast<int>(split.test.size());
          records.push_back(rec);
        }
      } catch (...) {
        cdp::write_metrics_csv(metrics_path, records, /*failed_marker=*/true);
        throw;
      }
    }
  }
  cdp::write_metrics_csv(metrics_path, records);
  std::cout << "wrote " << records.size() << " rows to " << metrics_path << "\n";
  return 0;
}

int run_report(const CommonArgs& args) {
  cdp::RunConfig cfg = load_config(args.config);
  auto setups = load_setups(args.config, cfg);
  cdp::DatasetManifest manifest;
  auto tuples = cdp::load_dataset(args.dataset, &manifest);
  std::vector<int> ids;
  for (const auto& t : tuples) ids.push_back(t.id());
  const cdp::SplitIds split = cdp::split_dataset(ids, {0.4, 0.1, 0.5}, args.split_seed);
  const fs::path out(args.out);
  fs::create_directories(out);

  const std::string metrics_path = (out / "metrics.csv").string();
  if (!fs::exists(metrics_path))
    throw ConfigError("missing " + metrics_path + " (run eval first)");
  auto records = cdp::parse_metrics_csv(metrics_path);
  cdp::write_metrics_agg_csv((out / "metrics_agg.csv").string(),
                             cdp::aggregate_records(records));

  // Correlation densities per population over the full dataset.
  auto emit_kde = [&](const std::string& name, const std::vector<double>& samples) {
    if (samples.size() < 2) return;
    const double h = cdp::silverman_bandwidth(samples);
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const auto grid = cdp::linspace(*lo_it - 3 * h, *hi_it + 3 * h, 256);
    cdp::write_tsv((out / ("kde_" + name + ".tsv")).string(),
                   {grid, cdp::kde_estimate(samples, grid, h)}, "value\tdensity");
  };
  for (const auto& d : manifest.defender_printers) {
    std::vector<double> corr;
    for (const auto& t : tuples)
      corr.push_back(cdp::normalized_correlation(t.tpl.pixels, t.original(d).pixels));
    emit_kde("x_" + d, corr);
  }
  for (const auto& a : manifest.attacker_printers)
    for (const auto& d : manifest.defender_printers) {
      std::vector<double> corr;
      for (const auto& t : tuples)
        corr.push_back(cdp::normalized_correlation(t.tpl.pixels, t.fake({a, d}).pixels));
      emit_kde("f_" + a + "_" + d, corr);
    }

  // Backbone projections and ROC points per requested setup, using the
  // first seed's checkpoint.
  std::set<std::string> names(args.setup_names.begin(), args.setup_names.end());
  if (names.empty())
    for (const auto& r : records) names.insert(r.setup);
  for (const auto& name : names) {
    const cdp::SetupSpec& setup = cdp::find_setup(setups, name);
    const std::string ck_path = checkpoint_path(args.out, name, args.seeds.front());
    if (!fs::exists(ck_path))
      throw ConfigError("missing checkpoint " + ck_path + " for report of " + name);
    cdp::Model model = cdp::model_from_checkpoint(cdp::load_checkpoint(ck_path));

    // PCA over the first test cell's defender printer: originals coded 0,
    // fakes coded 1..k in attacker order.
    const cdp::PrinterId d_test = setup.cells.front().first;
    std::vector<std::vector<double>> features;
    std::vector<double> codes;
    std::map<int, const cdp::CdpTuple*> index;
    for (const auto& t : tuples) index[t.id()] = &t;
    for (int id : split.test) {
      const cdp::CdpTuple& t = *index.at(id);
      auto f = model.features(cdp::aggregate(t.original(d_test), t.tpl));
      features.push_back(f.data);
      codes.push_back(0.0);
      double code = 1.0;
      for (const auto& a : manifest.attacker_printers) {
        auto ff = model.features(cdp::aggregate(t.fake({a, d_test}), t.tpl));
        features.push_back(ff.data);
        codes.push_back(code);
        code += 1.0;
      }
    }
    auto pca = cdp::pca2(features);
    std::vector<double> pc1, pc2;
    for (const auto& p : pca.projections) {
      pc1.push_back(p[0]);
      pc2.push_back(p[1]);
    }
    cdp::write_tsv((out / ("pca_" + name + ".tsv")).string(), {pc1, pc2, codes},
                   "pc1\tpc2\tclass (0=original, then fakes in attacker order)");

    for (const auto& [d, a] : setup.cells) {
      auto scores = cdp::score_cell(model, tuples, split.test, d, a);
      auto pts = cdp::roc_points(scores.originals, scores.fakes);
      std::vector<double> fpr, tpr;
      for (const auto& [x, y] : pts) {
        fpr.push_back(x);
        tpr.push_back(y);
      }
      cdp::write_tsv((out / ("roc_" + name + "_" + d + "_" + a + ".tsv")).string(), {fpr, tpr},
                     "p_fa\t1-p_miss");
    }
  }
  std::cout << "report written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cdpbench: synthetic print-channel benchmark for copy-detection-pattern "
               "authentication"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate templates and print originals");
  int gen_n = 0, gen_size = 64;
  double gen_density = 0.5;
  std::string gen_profiles, gen_out = default_out_dir() + "/dataset";
  std::uint64_t gen_seed = 1;
  gen->add_option("--n", gen_n, "Number of tuples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "Template side length")->check(CLI::Range(8, 4096));
  gen->add_option("--density", gen_density, "White-pixel density in (0,1)");
  gen->add_option("--profiles", gen_profiles, "Printer profile config file");
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output dataset directory");

  // attack
  auto* attack = app.add_subcommand("attack", "Estimate templates and reprint fakes");
  std::string atk_dataset, atk_config, atk_estimator;
  std::vector<std::string> atk_profiles;
  std::uint64_t atk_seed = 1;
  bool atk_rescan = false;
  attack->add_option("--dataset", atk_dataset, "Dataset directory")->required();
  attack->add_option("--config", atk_config, "Config file (profiles + estimator)");
  attack->add_option("--estimator", atk_estimator, "otsu | fixed | wiener");
  attack->add_option("--attacker-profiles", atk_profiles, "Attacker printer ids")
      ->delimiter(',');
  attack->add_option("--seed", atk_seed, "Attack seed");
  attack->add_flag("--rescan", atk_rescan,
                   "Estimate from the attacker's own lower-noise scans when profiles "
                   "configure attack_noise_sigma");

  auto add_common = [&](CLI::App* cmd, CommonArgs& c, bool need_setup) {
    cmd->add_option("--dataset", c.dataset, "Dataset directory")->required();
    auto* s = cmd->add_option("--setup", c.setup_names, "Setup name (repeatable)");
    if (need_setup) s->required();
    cmd->add_option("--config", c.config, "Config file");
    cmd->add_option("--seeds", c.seeds, "Training seeds")->delimiter(',');
    cmd->add_option("--split-seed", c.split_seed, "Split shuffle seed");
    cmd->add_option("--out", c.out, "Output directory (env CDPBENCH_OUT)");
  };

  CommonArgs train_args, eval_args, report_args;
  auto* train = app.add_subcommand("train", "Train authenticators per (setup, seed)");
  add_common(train, train_args, true);
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints into metrics.csv");
  add_common(eval, eval_args, true);
  auto* report = app.add_subcommand("report", "Aggregate metrics and emit kde/pca/roc files");
  add_common(report, report_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // parse problems are usage errors
  }

  try {
    if (gen->parsed()) return run_gen(gen_n, gen_size, gen_density, gen_profiles, gen_seed, gen_out);
    if (attack->parsed())
      return run_attack(atk_dataset, atk_config, atk_estimator, atk_profiles, atk_seed, atk_rescan);
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (report->parsed()) return run_report(report_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
