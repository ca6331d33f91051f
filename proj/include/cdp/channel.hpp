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

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/image.hpp"
#include "cdp/rng.hpp"
#include "cdp/types.hpp"

namespace cdp {

/// Parameter set of one virtual print-and-scan channel.
///
/// The channel runs in a fixed order: binary ink placement, dot-gain
/// spread, Gaussian point-spread blur, additive intensity noise, clamp to
/// [0,1], power-law scan response. Printing is deterministic given
/// (input, profile, print_seed).
struct PrinterProfile {
  PrinterId id;
  double dot_gain = 0.0;     // ink spread radius, pixels
  double psf_sigma = 0.0;    // Gaussian blur std-dev, pixels
  double noise_sigma = 0.0;  // additive intensity noise std-dev
  double scan_gamma = 1.0;   // acquisition power-law response
  std::uint64_t seed_salt = 0;

  // Optional lower-noise acquisition for the attack path, standing in for
  // the attacker scanning published prints at a higher resolution.
  std::optional<double> attack_noise_sigma;

  void validate() const {
    if (id.empty()) throw std::invalid_argument("PrinterProfile: empty id");
    if (dot_gain < 0.0) throw std::invalid_argument("PrinterProfile " + id + ": dot_gain < 0");
    if (psf_sigma < 0.0) throw std::invalid_argument("PrinterProfile " + id + ": psf_sigma < 0");
    if (noise_sigma < 0.0)
      throw std::invalid_argument("PrinterProfile " + id + ": noise_sigma < 0");
    if (!(scan_gamma >= 0.1 && scan_gamma <= 10.0))
      throw std::invalid_argument("PrinterProfile " + id + ": scan_gamma outside [0.1, 10]");
    if (attack_noise_sigma && *attack_noise_sigma < 0.0)
      throw std::invalid_argument("PrinterProfile " + id + ": attack_noise_sigma < 0");
  }
};

/// Spreads ink from every inked pixel onto its neighbourhood within
/// Euclidean distance <= radius. The contribution decays linearly with
/// distance, weight (radius + 1 - r) / (radius + 1), and contributions
/// combine by elementwise max, so saturated regions stay saturated.
inline Image dot_gain_spread(const Image& ink, double radius) {
  if (radius < 0.0) throw std::invalid_argument("dot_gain_spread: negative radius");
  if (!ink.is_binary()) throw std::invalid_argument("dot_gain_spread: ink mask must be binary");
  if (radius == 0.0) return ink;

  struct Offset {
    int dy, dx;
    double weight;
  };
  std::vector<Offset> offsets;
  const int r = static_cast<int>(std::floor(radius));
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double dist = std::hypot(static_cast<double>(dy), static_cast<double>(dx));
      if (dist <= radius) offsets.push_back({dy, dx, (radius + 1.0 - dist) / (radius + 1.0)});
    }

  const int w = ink.width(), h = ink.height();
  Image out(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (ink.at(y, x) != 1.0) continue;
      for (const auto& o : offsets) {
        const int ny = y + o.dy, nx = x + o.dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        if (o.weight > out.at(ny, nx)) out.at(ny, nx) = o.weight;
      }
    }
  return out;
}

/// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    sum += k[i + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace detail {
// Mirror an index into [0, n) across the pixel edge (..., 1, 0 | 0, 1, ...).
// This fold keeps the total mass of a symmetric kernel exactly conserved.
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - 1 - i;
  return i;
}
}  // namespace detail

/// Separable Gaussian blur with reflective boundary handling.
inline Image gaussian_blur(const Image& img, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: negative sigma");
  if (sigma == 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();

  Image tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(detail::reflect_index(y + i, h), x);
      tmp.at(y, x) = acc;
    }
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(y, detail::reflect_index(x + i, w));
      out.at(y, x) = acc;
    }
  return out;
}

/// Intermediate stages of one channel pass, for instrumentation.
struct ChannelTrace {
  Image ink;         // binary ink placement (1 = ink)
  Image spread;      // after dot gain
  Image blurred;     // after point-spread blur (still ink domain)
  Image noisy;       // intensity domain, noise added, before clamp
  Image clamped;     // after clamp to [0,1]
  Image scanned;     // after gamma response
};

namespace detail {

inline ChannelTrace run_channel(const Image& input, const PrinterProfile& profile,
                                std::uint64_t print_seed, double noise_sigma) {
  ChannelTrace t;
  t.ink = Image(input.width(), input.height());
  for (std::size_t i = 0; i < input.size(); ++i) t.ink[i] = 1.0 - input[i];
  t.spread = dot_gain_spread(t.ink, profile.dot_gain);
  t.blurred = gaussian_blur(t.spread, profile.psf_sigma);

  t.noisy = Image(input.width(), input.height());
  auto eng = make_engine(mix_seed({print_seed, profile.seed_salt, fnv1a64(profile.id)}));
  GaussianSampler gauss(eng);
  for (std::size_t i = 0; i < t.noisy.size(); ++i) {
    const double intensity = 1.0 - t.blurred[i];
    t.noisy[i] = noise_sigma > 0.0 ? intensity + noise_sigma * gauss() : intensity;
  }
  t.clamped = clamp_unit(t.noisy);
  t.scanned = apply_gamma(t.clamped, profile.scan_gamma);
  return t;
}

}  // namespace detail

/// Prints a template through the profile and scans it back. Deterministic
/// in (template, profile, print_seed).
inline PrintedCode print_and_scan(const DigitalTemplate& tpl, const PrinterProfile& profile,
                                  std::uint64_t print_seed) {
  tpl.validate();
  profile.validate();
  auto trace = detail::run_channel(tpl.pixels, profile, print_seed, profile.noise_sigma);
  return PrintedCode(std::move(trace.scanned), tpl.id, Kind::Original, profile.id);
}

/// Same channel pass but returning every intermediate stage.
inline ChannelTrace print_and_scan_traced(const DigitalTemplate& tpl,
                                          const PrinterProfile& profile,
                                          std::uint64_t print_seed) {
  tpl.validate();
  profile.validate();
  return detail::run_channel(tpl.pixels, profile, print_seed, profile.noise_sigma);
}

/// Prints an attacker's template estimate through an attacker profile.
/// Channel physics are identical to print_and_scan; only provenance differs.
inline PrintedCode reprint(const Image& estimate, const PrinterProfile& profile,
                           std::uint64_t print_seed, const PrinterId& attacker_id,
                           const PrinterId& defender_id, int template_id) {
  profile.validate();
  if (!estimate.is_binary()) throw std::invalid_argument("reprint: estimate must be binary");
  auto trace = detail::run_channel(estimate, profile, print_seed, profile.noise_sigma);
  return PrintedCode(std::move(trace.scanned), template_id, Kind::Fake, defender_id, attacker_id);
}

/// The attacker's own acquisition of a published print. Reuses the
/// deterministic print stages (same print_seed) and redraws only the scan
/// noise at the profile's attack_noise_sigma, modelling a better scanner
/// pointed at the same physical object. Returns the defender's scan when
/// no override is configured.
inline Image attack_scan(const DigitalTemplate& tpl, const PrinterProfile& profile,
                         std::uint64_t print_seed) {
  tpl.validate();
  profile.validate();
  if (!profile.attack_noise_sigma)
    return detail::run_channel(tpl.pixels, profile, print_seed, profile.noise_sigma).scanned;
  PrinterProfile rescan = profile;
  rescan.seed_salt = mix_seed({profile.seed_salt, fnv1a64("rescan")});
  return detail::run_channel(tpl.pixels, rescan, print_seed, *profile.attack_noise_sigma).scanned;
}

/// Seed for one print, derived from stable identifiers so that parallel
/// generation cannot change outputs.
inline std::uint64_t print_seed_for(std::uint64_t dataset_seed, int tuple_id,
                                    const std::string& role) {
  return mix_seed({dataset_seed, static_cast<std::uint64_t>(tuple_id), fnv1a64(role)});
}

}  // namespace cdp
