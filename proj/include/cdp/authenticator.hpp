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

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/image.hpp"
#include "cdp/nn.hpp"
#include "cdp/optim.hpp"
#include "cdp/parallel.hpp"
#include "cdp/rng.hpp"
#include "cdp/setup.hpp"
#include "cdp/split.hpp"
#include "cdp/types.hpp"

namespace cdp {

// Supervised authentication over (probe, template) pairs. A probe is
// accepted as original when the classifier score is >= tau; originals are
// labeled 1 and fakes 0.

/// Channel-wise stack of probe and template: channel 0 carries the probe
/// intensities, channel 1 the binary template.
inline Tensor aggregate(const Image& probe, const Image& tpl) {
  require_same_shape(probe, tpl, "aggregate");
  Tensor t({2, tpl.height(), tpl.width()});
  const std::size_t plane = tpl.size();
  for (std::size_t i = 0; i < plane; ++i) {
    t[i] = probe[i];
    t[plane + i] = tpl[i];
  }
  return t;
}

inline Tensor aggregate(const PrintedCode& probe, const DigitalTemplate& tpl) {
  return aggregate(probe.pixels, tpl.pixels);
}

/// Classifier score in (0,1); the sigmoid clamp keeps it inside
/// [1e-7, 1 - 1e-7].
inline double classify(Model& model, const Image& probe, const Image& tpl) {
  Tensor out = model.forward(aggregate(probe, tpl));
  if (out.numel() != 1)
    throw std::invalid_argument("classify: model output is not a single score");
  return out[0];
}

inline double classify(Model& model, const PrintedCode& probe, const DigitalTemplate& tpl) {
  return classify(model, probe.pixels, tpl.pixels);
}

/// Binary cross-entropy with the prediction clamped to [1e-7, 1 - 1e-7].
inline double bce(double pred, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("bce: label must be 0 or 1");
  const double p = pred < kSigmoidClamp ? kSigmoidClamp
                                        : (pred > 1.0 - kSigmoidClamp ? 1.0 - kSigmoidClamp : pred);
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

inline double mean_bce(const std::vector<double>& preds, int label) {
  if (preds.empty()) throw std::invalid_argument("mean_bce: empty prediction list");
  double acc = 0.0;
  for (double p : preds) acc += bce(p, label);
  return acc / static_cast<double>(preds.size());
}

/// Original-rejection term: average cross-entropy against label 1 over
/// the training defender printers.
inline double miss_loss(Model& model, const CdpTuple& tuple, const std::vector<PrinterId>& d_train) {
  if (d_train.empty()) throw std::invalid_argument("miss_loss: empty d_train");
  std::vector<double> preds;
  preds.reserve(d_train.size());
  for (const auto& d : d_train) preds.push_back(classify(model, tuple.original(d), tuple.tpl));
  return mean_bce(preds, 1);
}

/// Fake-acceptance term: average cross-entropy against label 0 over the
/// (attacker, defender) training pairs.
inline double fa_loss(Model& model, const CdpTuple& tuple, const std::vector<PrinterId>& a_train,
                      const std::vector<PrinterId>& d_train) {
  if (a_train.empty() || d_train.empty())
    throw std::invalid_argument("fa_loss: empty printer set");
  std::vector<double> preds;
  preds.reserve(a_train.size() * d_train.size());
  for (const auto& a : a_train)
    for (const auto& d : d_train) preds.push_back(classify(model, tuple.fake({a, d}), tuple.tpl));
  return mean_bce(preds, 0);
}

/// Mean of miss + fa terms over a batch of tuples.
inline double total_loss(Model& model, const std::vector<const CdpTuple*>& batch,
                         const std::vector<PrinterId>& d_train,
                         const std::vector<PrinterId>& a_train) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  double acc = 0.0;
  for (const CdpTuple* t : batch)
    acc += miss_loss(model, *t, d_train) + fa_loss(model, *t, a_train, d_train);
  return acc / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Tuple-consistent augmentation

struct AugmentDraw {
  bool hflip = false;
  bool vflip = false;
  int rot_quarters = 0;
  double gamma = 1.0;
};

inline AugmentDraw draw_augment(std::mt19937_64& eng, bool allow_quarter_turns = true) {
  AugmentDraw d;
  d.hflip = uniform01(eng) < 0.5;
  d.vflip = uniform01(eng) < 0.5;
  d.rot_quarters = allow_quarter_turns ? static_cast<int>(uniform_index(eng, 4))
                                       : 2 * static_cast<int>(uniform_index(eng, 2));
  d.gamma = uniform_range(eng, 0.4, 1.3);
  return d;
}

inline Image apply_augment(const Image& img, const AugmentDraw& d, bool grayscale) {
  Image out = rotate90(img, d.rot_quarters);
  if (d.hflip) out = flip_horizontal(out);
  if (d.vflip) out = flip_vertical(out);
  if (grayscale) out = apply_gamma(out, d.gamma);
  return out;
}

/// Applies one shared random draw of flips, quarter turns and gamma to
/// every member of the tuple. Geometry touches everything; gamma only the
/// grayscale prints, so the template stays binary.
inline CdpTuple augment_tuple(const CdpTuple& tuple, std::mt19937_64& eng) {
  const bool square = tuple.tpl.width() == tuple.tpl.height();
  const AugmentDraw d = draw_augment(eng, square);
  CdpTuple out;
  out.tpl = DigitalTemplate(apply_augment(tuple.tpl.pixels, d, false), tuple.tpl.id);
  for (const auto& [id, code] : tuple.originals) {
    PrintedCode c = code;
    c.pixels = apply_augment(code.pixels, d, true);
    out.originals.emplace(id, std::move(c));
  }
  for (const auto& [key, code] : tuple.fakes) {
    PrintedCode c = code;
    c.pixels = apply_augment(code.pixels, d, true);
    out.fakes.emplace(key, std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 1000;
  double lr = 0.005;
  int early_stop_patience = 50;  // epochs without validation improvement
  int batch_size = 16;           // tuples per optimizer step
  double tau = 0.5;              // acceptance threshold
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool augment = true;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (early_stop_patience < 0 || early_stop_patience >= epochs)
      throw std::invalid_argument("TrainConfig: patience must lie in [0, epochs)");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("TrainConfig: tau must lie in (0,1)");
    if (seeds.empty()) throw std::invalid_argument("TrainConfig: need at least one seed");
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  long long wall_ms = 0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  // Final optimizer state and the master seed, for checkpointing. All RNG
  // streams derive from the seed, so it is the complete generator state.
  std::int64_t adam_step = 0;
  std::vector<Tensor> adam_m, adam_v;
  std::uint64_t seed = 0;
};

inline void write_train_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_train_log: cannot open " + path);
  os << "epoch,train_loss,val_loss,wall_ms\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%lld\n", e.epoch, e.train_loss, e.val_loss,
                  e.wall_ms);
    os << buf;
  }
}

namespace train_detail {

inline const CdpTuple& tuple_by_id(const std::map<int, const CdpTuple*>& index, int id) {
  auto it = index.find(id);
  if (it == index.end())
    throw std::invalid_argument("train: split references unknown tuple id " + std::to_string(id));
  return *it->second;
}

struct Sample {
  const Image* probe;
  const Image* tpl;
  int label;
  double weight;  // term weight within its tuple's miss/fa average
};

inline void collect_samples(const CdpTuple& tuple, const std::vector<PrinterId>& d_train,
                            const std::vector<PrinterId>& a_train, std::vector<Sample>& out) {
  const double w_miss = 1.0 / static_cast<double>(d_train.size());
  const double w_fa = 1.0 / static_cast<double>(a_train.size() * d_train.size());
  for (const auto& d : d_train)
    out.push_back({&tuple.original(d).pixels, &tuple.tpl.pixels, 1, w_miss});
  for (const auto& a : a_train)
    for (const auto& d : d_train)
      out.push_back({&tuple.fake({a, d}).pixels, &tuple.tpl.pixels, 0, w_fa});
}

/// Runs samples on two model replicas, one per lane, keeping per-sample
/// results in index order. Parameters are mirrored before each pass and
/// every gradient reduction walks samples 0..n-1 serially, so outputs are
/// bitwise identical with or without the helper lane.
class DualLaneRunner {
 public:
  DualLaneRunner(Model& main, const ModelSpec& spec) : main_(main), replica_(spec) {}

  /// Per-sample scores, parallel forward passes.
  void scores(const std::vector<Sample>& samples, std::vector<double>& out) {
    out.assign(samples.size(), 0.0);
    sync_replica();
    WorkerLane::instance().split(
        static_cast<int>(samples.size()), [&](int lane, int begin, int end) {
          Model& model = lane == 1 ? main_ : replica_;
          for (int i = begin; i < end; ++i) {
            Tensor result = model.forward(aggregate(*samples[i].probe, *samples[i].tpl));
            out[i] = result[0];
          }
        });
  }

  /// Accumulates d(total)/d(params) into the main model's gradient
  /// tensors, where total = sum_i weight_i * scale * bce_i. Returns the
  /// unscaled weighted loss sum; per-sample losses and gradients are
  /// reduced in sample order.
  double batch_gradients(const std::vector<Sample>& samples, double scale) {
    const std::size_t n = samples.size();
    losses_.assign(n, 0.0);
    if (sample_grads_.size() < n) sample_grads_.resize(n);
    sync_replica();

    WorkerLane::instance().split(static_cast<int>(n), [&](int lane, int begin, int end) {
      Model& model = lane == 1 ? main_ : replica_;
      for (int i = begin; i < end; ++i) {
        const Sample& s = samples[i];
        model.zero_grad();
        Tensor result = model.forward(aggregate(*s.probe, *s.tpl));
        const double p = result[0];
        losses_[i] = s.weight * bce(p, s.label);
        Tensor g({1});
        // d(bce)/d(pred); the sigmoid layer folds this back to (p - label).
        g[0] = s.weight * scale * (p - static_cast<double>(s.label)) / (p * (1.0 - p));
        model.backward(g);
        auto grads = model.gradients();
        auto& buf = sample_grads_[i];
        buf.resize(grads.size());
        for (std::size_t k = 0; k < grads.size(); ++k) buf[k] = *grads[k];
      }
    });

    main_.zero_grad();
    auto grads = main_.gradients();
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss_sum += losses_[i];
      const auto& buf = sample_grads_[i];
      for (std::size_t k = 0; k < grads.size(); ++k) {
        double* dst = grads[k]->data.data();
        const double* src = buf[k].data.data();
        for (std::size_t j = 0; j < buf[k].numel(); ++j) dst[j] += src[j];
      }
    }
    return loss_sum;
  }

 private:
  void sync_replica() {
    if (!WorkerLane::instance().enabled()) return;
    auto src = main_.parameters();
    auto dst = replica_.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->data = src[i]->data;
  }

  Model& main_;
  Model replica_;
  std::vector<double> losses_;
  std::vector<std::vector<Tensor>> sample_grads_;
};

}  // namespace train_detail

/// Trains one classifier for a setup on the train split, early-stopping on
/// the validation split, and returns the parameters of the epoch with
/// minimum validation loss. Bit-deterministic given (tuples, setup,
/// config, seed).
inline TrainResult train(const std::vector<CdpTuple>& tuples, const SplitIds& split,
                         const SetupSpec& setup, const TrainConfig& cfg, std::uint64_t seed,
                         ModelSpec model_spec = default_model_spec()) {
  cfg.validate();
  require_disjoint(split);
  if (split.train.empty() || split.val.empty())
    throw std::invalid_argument("train: empty train or validation split");

  std::map<int, const CdpTuple*> index;
  for (const auto& t : tuples) index[t.id()] = &t;

  // Every train/val tuple must carry the originals and fakes this setup
  // trains on; missing printers are a configuration error, caught now.
  for (const auto& ids : {split.train, split.val})
    for (int id : ids) {
      const CdpTuple& t = train_detail::tuple_by_id(index, id);
      for (const auto& d : setup.d_train) t.original(d);
      for (const auto& a : setup.a_train)
        for (const auto& d : setup.d_train) t.fake({a, d});
    }

  const CdpTuple& first = train_detail::tuple_by_id(index, split.train.front());
  const std::vector<int> input_shape{2, first.tpl.height(), first.tpl.width()};

  Model model(model_spec);
  model.check_shapes(input_shape);
  model.init_params(seed);
  Adam opt(model.parameters(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  TrainResult result{std::move(model), {}, 0, 0.0};
  Model& m = result.model;
  train_detail::DualLaneRunner runner(m, model_spec);

  std::vector<Tensor> best_params = m.snapshot_params();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_without_improvement = 0;

  // Validation samples are fixed (no augmentation); scores reduce to the
  // same per-tuple miss/fa means the serial loss evaluation uses.
  std::vector<train_detail::Sample> val_samples;
  for (int id : split.val)
    train_detail::collect_samples(train_detail::tuple_by_id(index, id), setup.d_train,
                                  setup.a_train, val_samples);
  const std::size_t miss_terms = setup.d_train.size();
  const std::size_t fa_terms = setup.a_train.size() * setup.d_train.size();
  const std::size_t terms_per_tuple = miss_terms + fa_terms;
  std::vector<double> val_scores;

  auto val_loss_from_scores = [&]() {
    double acc = 0.0;
    for (std::size_t t = 0; t < split.val.size(); ++t) {
      const std::size_t base = t * terms_per_tuple;
      double miss = 0.0, fa = 0.0;
      for (std::size_t k = 0; k < miss_terms; ++k) miss += bce(val_scores[base + k], 1);
      for (std::size_t k = 0; k < fa_terms; ++k) fa += bce(val_scores[base + miss_terms + k], 0);
      acc += miss / static_cast<double>(miss_terms) + fa / static_cast<double>(fa_terms);
    }
    return acc / static_cast<double>(split.val.size());
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<int> order = split.train;
    auto shuffle_eng = make_engine(mix_seed({seed, fnv1a64("shuffle"),
                                             static_cast<std::uint64_t>(epoch)}));
    deterministic_shuffle(order, shuffle_eng);

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    std::vector<CdpTuple> augmented;
    std::vector<train_detail::Sample> samples;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      augmented.clear();
      augmented.reserve(end - start);
      samples.clear();
      for (std::size_t k = start; k < end; ++k) {
        const CdpTuple& t = train_detail::tuple_by_id(index, order[k]);
        if (cfg.augment) {
          auto aug_eng = make_engine(mix_seed({seed, fnv1a64("augment"),
                                               static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(t.id())}));
          augmented.push_back(augment_tuple(t, aug_eng));
          train_detail::collect_samples(augmented.back(), setup.d_train, setup.a_train, samples);
        } else {
          train_detail::collect_samples(t, setup.d_train, setup.a_train, samples);
        }
      }
      const double batch_loss = runner.batch_gradients(samples, inv_batch) * inv_batch;
      opt.step(m.gradients());
      epoch_loss += batch_loss;
      ++n_batches;
    }
    epoch_loss /= static_cast<double>(n_batches);

    runner.scores(val_samples, val_scores);
    const double val_loss = val_loss_from_scores();
    const auto t_end = std::chrono::steady_clock::now();
    result.log.push_back(
        {epoch, epoch_loss, val_loss,
         std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count()});

    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      best_epoch = epoch;
      best_params = m.snapshot_params();
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement > cfg.early_stop_patience) break;
    }
  }

  m.restore_params(best_params);
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  result.adam_step = opt.step_count();
  result.adam_m = opt.first_moments();
  result.adam_v = opt.second_moments();
  result.seed = seed;
  return result;
}

}  // namespace cdp
