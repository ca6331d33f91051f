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

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/channel.hpp"
#include "cdp/image.hpp"
#include "cdp/types.hpp"

namespace cdp {

/// Classical template estimators standing in for learned attacks. The
/// downstream interface only sees the binary estimate, so stronger
/// estimators can be swapped in without touching callers.
struct EstimatorSpec {
  enum class Method { GlobalOtsu, FixedThreshold, WienerThenThreshold };

  Method method = Method::GlobalOtsu;
  double level = 0.5;        // FixedThreshold only
  double psf_sigma = 0.8;    // WienerThenThreshold only
  double noise_ratio = 0.05; // WienerThenThreshold only
  bool sharpen = false;

  void validate() const {
    switch (method) {
      case Method::GlobalOtsu:
        break;
      case Method::FixedThreshold:
        if (!(level > 0.0 && level < 1.0))
          throw std::invalid_argument("EstimatorSpec: threshold level must lie in (0,1)");
        break;
      case Method::WienerThenThreshold:
        if (psf_sigma < 0.0)
          throw std::invalid_argument("EstimatorSpec: psf_sigma must be >= 0");
        if (!(noise_ratio > 0.0))
          throw std::invalid_argument("EstimatorSpec: noise_ratio must be > 0");
        break;
    }
  }

  std::string summary() const {
    switch (method) {
      case Method::GlobalOtsu:
        return std::string("otsu") + (sharpen ? "+sharpen" : "");
      case Method::FixedThreshold:
        return "fixed(level=" + std::to_string(level) + ")" + (sharpen ? "+sharpen" : "");
      case Method::WienerThenThreshold:
        return "wiener(psf_sigma=" + std::to_string(psf_sigma) +
               ",noise_ratio=" + std::to_string(noise_ratio) + ")" +
               (sharpen ? "+sharpen" : "");
    }
    return "?";
  }
};

/// Otsu's threshold over a 256-bin histogram of [0,1] intensities.
/// Returns the threshold value; pixels strictly above it are class 1.
/// Plateaus of the between-class variance (empty bins between the modes)
/// are resolved by averaging the maximizing bin indices.
inline double otsu_threshold(const Image& img) {
  std::array<std::int64_t, 256> hist{};
  for (double v : img.pixels()) {
    int bin = static_cast<int>(v * 256.0);
    if (bin < 0) bin = 0;
    if (bin > 255) bin = 255;
    ++hist[bin];
  }
  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int k = 0; k < 256; ++k) sum_all += static_cast<double>(k) * hist[k];

  double best = 0.0;
  double w0 = 0.0, sum0 = 0.0;
  long k_sum = 0, k_count = 0;
  for (int k = 0; k < 256; ++k) {
    w0 += hist[k];
    sum0 += static_cast<double>(k) * hist[k];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double var_between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (var_between > best * (1.0 + 1e-12)) {
      best = var_between;
      k_sum = k;
      k_count = 1;
    } else if (var_between >= best * (1.0 - 1e-12) && var_between > 0.0) {
      k_sum += k;
      ++k_count;
    }
  }
  if (best <= 0.0 || k_count == 0)
    throw std::invalid_argument("otsu_threshold: no threshold separates classes");
  const double k_avg = static_cast<double>(k_sum) / static_cast<double>(k_count);
  return (k_avg + 0.5) / 256.0;
}

inline Image threshold_image(const Image& img, double level) {
  Image out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] > level ? 1.0 : 0.0;
  return out;
}

/// Frequency-domain Wiener deconvolution against a Gaussian PSF with the
/// given noise-to-signal ratio. Output is clamped back to [0,1].
inline Image wiener_deconvolve(const Image& img, double psf_sigma, double noise_ratio) {
  if (psf_sigma < 0.0) throw std::invalid_argument("wiener_deconvolve: negative psf_sigma");
  if (!(noise_ratio > 0.0))
    throw std::invalid_argument("wiener_deconvolve: noise_ratio must be > 0");
  const int w = img.width(), h = img.height();
  const int nc = w / 2 + 1;  // r2c output width

  // PSF embedded circularly so its center sits at (0,0).
  const auto k = gaussian_kernel(psf_sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> psf(static_cast<std::size_t>(w) * h, 0.0);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int y = ((dy % h) + h) % h;
      const int x = ((dx % w) + w) % w;
      psf[static_cast<std::size_t>(y) * w + x] += k[dy + r] * k[dx + r];
    }

  std::vector<double> in(img.pixels());
  std::vector<std::complex<double>> img_f(static_cast<std::size_t>(h) * nc);
  std::vector<std::complex<double>> psf_f(static_cast<std::size_t>(h) * nc);

  fftw_plan fwd_img = fftw_plan_dft_r2c_2d(h, w, in.data(),
                                           reinterpret_cast<fftw_complex*>(img_f.data()),
                                           FFTW_ESTIMATE);
  fftw_execute(fwd_img);
  fftw_destroy_plan(fwd_img);

  fftw_plan fwd_psf = fftw_plan_dft_r2c_2d(h, w, psf.data(),
                                           reinterpret_cast<fftw_complex*>(psf_f.data()),
                                           FFTW_ESTIMATE);
  fftw_execute(fwd_psf);
  fftw_destroy_plan(fwd_psf);

  for (std::size_t i = 0; i < img_f.size(); ++i) {
    const std::complex<double> H = psf_f[i];
    const double denom = std::norm(H) + noise_ratio;
    img_f[i] *= std::conj(H) / denom;
  }

  std::vector<double> restored(static_cast<std::size_t>(w) * h);
  fftw_plan bwd = fftw_plan_dft_c2r_2d(h, w, reinterpret_cast<fftw_complex*>(img_f.data()),
                                       restored.data(), FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  Image out(w, h);
  const double scale = 1.0 / (static_cast<double>(w) * h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = restored[i] * scale;
    out[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return out;
}

/// Unsharp mask with a fixed 1-pixel Gaussian and unit amount.
inline Image sharpen_image(const Image& img) {
  Image blurred = gaussian_blur(img, 1.0);
  Image out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = img[i] + (img[i] - blurred[i]);
    out[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return out;
}

/// Recovers a binary template estimate from a raw observation.
inline Image estimate_template(const Image& observed, const EstimatorSpec& spec) {
  spec.validate();
  double lo = observed[0], hi = observed[0];
  for (double v : observed.pixels()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi)
    throw std::invalid_argument(
        "estimate_template: constant intensity input, no threshold separates classes");

  Image work = spec.sharpen ? sharpen_image(observed) : observed;
  switch (spec.method) {
    case EstimatorSpec::Method::FixedThreshold:
      return threshold_image(work, spec.level);
    case EstimatorSpec::Method::WienerThenThreshold:
      work = wiener_deconvolve(work, spec.psf_sigma, spec.noise_ratio);
      [[fallthrough]];
    case EstimatorSpec::Method::GlobalOtsu:
      return threshold_image(work, otsu_threshold(work));
  }
  throw std::logic_error("estimate_template: unknown method");
}

/// Overload checking provenance: estimation starts from a printed original.
inline Image estimate_template(const PrintedCode& original, const EstimatorSpec& spec) {
  if (original.kind != Kind::Original)
    throw std::invalid_argument("estimate_template: input must be an original");
  return estimate_template(original.pixels, spec);
}

/// Full attack on one tuple: estimate the template from every original,
/// then reprint each estimate through every attacker profile. Produces
/// exactly |attackers| x |originals| fakes keyed by (attacker, defender).
///
/// When rescan_templates is given and a profile configures
/// attack_noise_sigma, estimation runs on the attacker's own lower-noise
/// scan of the published print instead of the defender's scan.
inline CdpTuple fabricate_fakes(const CdpTuple& tuple_in, const EstimatorSpec& spec,
                                const std::vector<PrinterProfile>& attacker_profiles,
                                std::uint64_t seed,
                                const std::vector<PrinterProfile>* defender_profiles = nullptr,
                                std::uint64_t dataset_seed = 0) {
  spec.validate();
  if (tuple_in.originals.empty())
    throw std::invalid_argument("fabricate_fakes: tuple has no originals");
  if (attacker_profiles.empty())
    throw std::invalid_argument("fabricate_fakes: no attacker profiles");
  for (const auto& p : attacker_profiles) p.validate();

  CdpTuple out = tuple_in;
  for (const auto& [d, original] : tuple_in.originals) {
    Image estimate;
    try {
      const PrinterProfile* dp = nullptr;
      if (defender_profiles)
        for (const auto& p : *defender_profiles)
          if (p.id == d) dp = &p;
      if (dp && dp->attack_noise_sigma) {
        Image observed = attack_scan(tuple_in.tpl, *dp,
                                     print_seed_for(dataset_seed, tuple_in.id(), "x:" + d));
        estimate = estimate_template(observed, spec);
      } else {
        estimate = estimate_template(original, spec);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("fabricate_fakes: tuple " + std::to_string(tuple_in.id()) +
                               ", printer " + d + ": " + e.what());
    }
    for (const auto& a : attacker_profiles) {
      const std::uint64_t print_seed =
          mix_seed({seed, static_cast<std::uint64_t>(tuple_in.id()),
                    fnv1a64("f:" + a.id + "/" + d)});
      out.add_fake(reprint(estimate, a, print_seed, a.id, d, tuple_in.id()));
    }
  }
  return out;
}

}  // namespace cdp
