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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdp/authenticator.hpp"
#include "cdp/setup.hpp"
#include "cdp/split.hpp"
#include "cdp/types.hpp"

namespace cdp {

// ---------------------------------------------------------------------------
// Score metrics

/// Error rates at a fixed acceptance threshold. A probe is accepted when
/// its score is >= tau (ties accept), so P_miss counts originals strictly
/// below tau and P_fa counts fakes at or above it.
inline std::pair<double, double> confusion_rates(const std::vector<double>& original_scores,
                                                 const std::vector<double>& fake_scores,
                                                 double tau) {
  if (original_scores.empty() || fake_scores.empty())
    throw std::invalid_argument("confusion_rates: empty score list");
  std::size_t missed = 0, accepted_fakes = 0;
  for (double s : original_scores)
    if (s < tau) ++missed;
  for (double s : fake_scores)
    if (s >= tau) ++accepted_fakes;
  return {static_cast<double>(missed) / original_scores.size(),
          static_cast<double>(accepted_fakes) / fake_scores.size()};
}

/// Area under the ROC via the rank-sum (Mann-Whitney) statistic with ties
/// counted one half.
inline double auc(const std::vector<double>& original_scores,
                  const std::vector<double>& fake_scores) {
  if (original_scores.empty() || fake_scores.empty())
    throw std::invalid_argument("auc: empty score list");
  const std::size_t n = original_scores.size(), m = fake_scores.size();
  struct Entry {
    double score;
    bool original;
  };
  std::vector<Entry> all;
  all.reserve(n + m);
  for (double s : original_scores) all.push_back({s, true});
  for (double s : fake_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  double rank_sum_orig = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    // Average rank of the tie group, 1-based.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].original) rank_sum_orig += avg_rank;
    i = j;
  }
  const double u = rank_sum_orig - 0.5 * static_cast<double>(n) * (n + 1);
  return u / (static_cast<double>(n) * static_cast<double>(m));
}

/// ROC curve points (P_fa, 1 - P_miss) swept over every distinct score,
/// sorted by increasing false-accept rate, endpoints included.
inline std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& original_scores, const std::vector<double>& fake_scores) {
  if (original_scores.empty() || fake_scores.empty())
    throw std::invalid_argument("roc_points: empty score list");
  std::vector<double> thresholds;
  thresholds.reserve(original_scores.size() + fake_scores.size());
  thresholds.insert(thresholds.end(), original_scores.begin(), original_scores.end());
  thresholds.insert(thresholds.end(), fake_scores.begin(), fake_scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(1.0, 1.0);  // tau below every score: accept all
  for (double tau : thresholds) {
    auto [p_miss, p_fa] = confusion_rates(original_scores, fake_scores, tau);
    pts.emplace_back(p_fa, 1.0 - p_miss);
  }
  pts.emplace_back(0.0, 0.0);  // tau above every score: reject all
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Trapezoidal area under a ROC polyline; agrees with auc() to float
/// round-off and serves as its independent cross-check.
inline double trapezoid_auc(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) throw std::invalid_argument("trapezoid_auc: need at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
  return area;
}

// ---------------------------------------------------------------------------
// Density and projection analysis

inline double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("silverman_bandwidth: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0))
    throw std::invalid_argument("silverman_bandwidth: zero-variance sample");
  return 1.06 * sd * std::pow(n, -0.2);
}

/// Gaussian kernel density estimate evaluated on a grid. Bandwidth
/// defaults to Silverman's rule.
inline std::vector<double> kde_estimate(const std::vector<double>& samples,
                                        const std::vector<double>& grid,
                                        double bandwidth = 0.0) {
  if (samples.size() < 2) throw std::invalid_argument("kde_estimate: need at least 2 samples");
  const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * 3.14159265358979323846));
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (g - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.push_back(norm * acc);
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

struct Pca2Result {
  std::vector<std::array<double, 2>> projections;
  std::array<double, 2> explained_variance{};
};

/// Projects feature vectors onto the top two principal axes. Covariance
/// uses the n-1 normalization; eigenvector signs are fixed so the largest
/// magnitude loading of each axis is positive.
inline Pca2Result pca2(const std::vector<std::vector<double>>& features) {
  if (features.size() < 3) throw std::invalid_argument("pca2: need at least 3 vectors");
  const std::size_t dim = features.front().size();
  if (dim < 2) throw std::invalid_argument("pca2: feature dimension must be >= 2");
  for (const auto& f : features)
    if (f.size() != dim) throw std::invalid_argument("pca2: inconsistent feature dimensions");

  const std::size_t n = features.size();
  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = features[i][j];
  x.rowwise() -= x.colwise().mean();
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("pca2: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top two.
  Pca2Result result;
  Eigen::MatrixXd axes(dim, 2);
  for (int k = 0; k < 2; ++k) {
    const auto idx = static_cast<Eigen::Index>(dim) - 1 - k;
    Eigen::VectorXd v = solver.eigenvectors().col(idx);
    Eigen::Index max_row = 0;
    v.cwiseAbs().maxCoeff(&max_row);
    if (v(max_row) < 0.0) v = -v;
    axes.col(k) = v;
    result.explained_variance[k] = solver.eigenvalues()(idx);
  }
  Eigen::MatrixXd proj = x * axes;
  result.projections.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    result.projections[i] = {proj(static_cast<Eigen::Index>(i), 0),
                             proj(static_cast<Eigen::Index>(i), 1)};
  return result;
}

// ---------------------------------------------------------------------------
// Experiment matrix

struct MetricsRecord {
  std::string setup;
  std::string d_train;  // joined with '+'
  std::string a_train;
  PrinterId d_test;
  PrinterId a_test;
  std::uint64_t seed = 0;
  double p_miss = 0.0;
  double p_fa = 0.0;
  double auc = 0.0;
  int n_test = 0;
};

struct AggregateRecord {
  std::string setup;
  std::string d_train;
  std::string a_train;
  PrinterId d_test;
  PrinterId a_test;
  double p_miss_mean = 0.0, p_miss_std = 0.0;
  double p_fa_mean = 0.0, p_fa_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  int n_seeds = 0;
  int n_test = 0;
};

inline std::string join_ids(const std::vector<PrinterId>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : "+") + id;
  return out;
}

/// Scores every test tuple of one evaluation cell with a trained model.
struct CellScores {
  std::vector<double> originals;
  std::vector<double> fakes;
};

inline CellScores score_cell(Model& model, const std::vector<CdpTuple>& tuples,
                             const std::vector<int>& test_ids, const PrinterId& d_test,
                             const PrinterId& a_test) {
  std::map<int, const CdpTuple*> index;
  for (const auto& t : tuples) index[t.id()] = &t;
  CellScores scores;
  for (int id : test_ids) {
    auto it = index.find(id);
    if (it == index.end())
      throw std::invalid_argument("score_cell: unknown tuple id " + std::to_string(id));
    const CdpTuple& t = *it->second;
    scores.originals.push_back(classify(model, t.original(d_test), t.tpl));
    scores.fakes.push_back(classify(model, t.fake({a_test, d_test}), t.tpl));
  }
  return scores;
}

/// Per-seed metric records for the given setups, in block order. Trains
/// one model per (setup, seed) on the fixed split and evaluates every
/// cell on the held-out test tuples. The split never varies with the
/// model seed.
inline std::vector<MetricsRecord> run_experiment_matrix(
    const std::vector<CdpTuple>& tuples, const std::vector<SetupSpec>& setups,
    const TrainConfig& cfg, std::uint64_t split_seed,
    const std::function<void(const SetupSpec&, std::uint64_t, TrainResult&)>& sink = {}) {
  cfg.validate();
  if (tuples.empty()) throw std::invalid_argument("run_experiment_matrix: empty dataset");

  // Configuration errors surface before any training starts.
  std::vector<PrinterId> defenders, attackers;
  for (const auto& [d, code] : tuples.front().originals) defenders.push_back(d);
  for (const auto& [key, code] : tuples.front().fakes) {
    if (std::find(attackers.begin(), attackers.end(), key.first) == attackers.end())
      attackers.push_back(key.first);
  }
  for (const auto& s : setups) s.validate(defenders, attackers);

  std::vector<int> ids;
  for (const auto& t : tuples) ids.push_back(t.id());
  const SplitIds split = split_dataset(ids, {0.4, 0.1, 0.5}, split_seed);

  // Test tuples must never appear in a training split.
  require_disjoint(split);

  std::vector<MetricsRecord> records;
  for (const auto& setup : setups) {
    for (std::uint64_t seed : cfg.seeds) {
      TrainResult trained = train(tuples, split, setup, cfg, seed);
      for (const auto& [d_test, a_test] : setup.cells) {
        CellScores scores = score_cell(trained.model, tuples, split.test, d_test, a_test);
        auto [p_miss, p_fa] = confusion_rates(scores.originals, scores.fakes, cfg.tau);
        MetricsRecord rec;
        rec.setup = setup.name;
        rec.d_train = join_ids(setup.d_train);
        rec.a_train = join_ids(setup.a_train);
        rec.d_test = d_test;
        rec.a_test = a_test;
        rec.seed = seed;
        rec.p_miss = p_miss;
        rec.p_fa = p_fa;
        rec.auc = auc(scores.originals, scores.fakes);
        rec.n_test = static_cast<int>(split.test.size());
        records.push_back(rec);
      }
      if (sink) sink(setup, seed, trained);
    }
  }
  return records;
}

/// Mean and sample standard deviation per cell, first-appearance order
/// (which is Table block order when records come from the matrix runner).
inline std::vector<AggregateRecord> aggregate_records(const std::vector<MetricsRecord>& records) {
  std::vector<AggregateRecord> out;
  std::map<std::string, std::size_t> index;
  auto key_of = [](const MetricsRecord& r) {
    return r.setup + "|" + r.d_train + "|" + r.a_train + "|" + r.d_test + "|" + r.a_test;
  };
  std::map<std::string, std::vector<const MetricsRecord*>> groups;
  std::vector<std::string> order;
  for (const auto& r : records) {
    const auto key = key_of(r);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : order) {
    const auto& g = groups[key];
    AggregateRecord agg;
    agg.setup = g.front()->setup;
    agg.d_train = g.front()->d_train;
    agg.a_train = g.front()->a_train;
    agg.d_test = g.front()->d_test;
    agg.a_test = g.front()->a_test;
    agg.n_seeds = static_cast<int>(g.size());
    agg.n_test = g.front()->n_test;
    auto mean_std = [&](auto field) {
      double mean = 0.0;
      for (const auto* r : g) mean += r->*field;
      mean /= static_cast<double>(g.size());
      double ss = 0.0;
      for (const auto* r : g) ss += (r->*field - mean) * (r->*field - mean);
      const double sd = g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0;
      return std::make_pair(mean, sd);
    };
    std::tie(agg.p_miss_mean, agg.p_miss_std) = mean_std(&MetricsRecord::p_miss);
    std::tie(agg.p_fa_mean, agg.p_fa_std) = mean_std(&MetricsRecord::p_fa);
    std::tie(agg.auc_mean, agg.auc_std) = mean_std(&MetricsRecord::auc);
    out.push_back(agg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records,
                              bool failed_marker = false) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  os << "setup,d_train,a_train,d_test,a_test,seed,p_miss,p_fa,auc,n_test\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%s,%llu,%.10g,%.10g,%.10g,%d\n", r.setup.c_str(),
                  r.d_train.c_str(), r.a_train.c_str(), r.d_test.c_str(), r.a_test.c_str(),
                  static_cast<unsigned long long>(r.seed), r.p_miss, r.p_fa, r.auc, r.n_test);
    os << buf;
  }
  if (failed_marker) os << "FAILED,,,,,,,,,\n";
}

inline std::vector<MetricsRecord> parse_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("parse_metrics_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line.rfind("setup,d_train,a_train,d_test,a_test,seed,p_miss,p_fa,auc,n_test", 0) != 0)
    throw std::runtime_error("parse_metrics_csv: unexpected header in " + path);
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty() || line.rfind("FAILED", 0) == 0) continue;
    std::vector<std::string> cols;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) cols.push_back(item);
    if (cols.size() != 10)
      throw std::runtime_error("parse_metrics_csv: malformed row: " + line);
    MetricsRecord r;
    r.setup = cols[0];
    r.d_train = cols[1];
    r.a_train = cols[2];
    r.d_test = cols[3];
    r.a_test = cols[4];
    r.seed = std::stoull(cols[5]);
    r.p_miss = std::stod(cols[6]);
    r.p_fa = std::stod(cols[7]);
    r.auc = std::stod(cols[8]);
    r.n_test = std::stoi(cols[9]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_metrics_agg_csv(const std::string& path,
                                  const std::vector<AggregateRecord>& aggs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_metrics_agg_csv: cannot open " + path);
  os << "# split fixed across seeds; seeds vary model init, shuffling and augmentation\n";
  os << "setup,d_train,a_train,d_test,a_test,p_miss_mean,p_miss_std,p_fa_mean,p_fa_std,"
        "auc_mean,auc_std,n_seeds,n_test\n";
  char buf[320];
  for (const auto& a : aggs) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%d\n",
                  a.setup.c_str(), a.d_train.c_str(), a.a_train.c_str(), a.d_test.c_str(),
                  a.a_test.c_str(), a.p_miss_mean, a.p_miss_std, a.p_fa_mean, a.p_fa_std,
                  a.auc_mean, a.auc_std, a.n_seeds, a.n_test);
    os << buf;
  }
}

inline void write_tsv(const std::string& path, const std::vector<std::vector<double>>& columns,
                      const std::string& header = "") {
  if (columns.empty()) throw std::invalid_argument("write_tsv: no columns");
  for (const auto& c : columns)
    if (c.size() != columns.front().size())
      throw std::invalid_argument("write_tsv: ragged columns");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_tsv: cannot open " + path);
  if (!header.empty()) os << "# " << header << "\n";
  char buf[64];
  for (std::size_t i = 0; i < columns.front().size(); ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.10g", columns[c][i]);
      os << (c ? "\t" : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace cdp
