#include "osr/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "osr/error.hpp"

namespace osr {

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::GenP: return "gen.p";
    case Channel::LoadP: return "load.p";
    case Channel::LineFMax: return "line.f_max";
    case Channel::LineX: return "line.x";
  }
  return "?";
}

double PiecewiseLinearCdf::operator()(double v) const {
  if (xs.empty()) return 0.5;
  if (v <= xs.front()) return ys.front();
  if (v >= xs.back()) return ys.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), v) - xs.begin());
  const auto lo = hi - 1;
  const double t = (v - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

PiecewiseLinearCdf PiecewiseLinearCdf::fit(std::vector<double> samples, int knots) {
  if (samples.empty()) fail(ErrorCode::Invalid, "fit_normalizer: no samples for a channel");
  if (knots < 2) fail(ErrorCode::Invalid, "fit_normalizer: need at least 2 knots");
  std::sort(samples.begin(), samples.end());
  const auto n = samples.size();
  const auto last = static_cast<std::size_t>(knots - 1);

  // Quantile knots at evenly spaced probabilities, then runs of equal
  // abscissae collapse into one knot.
  std::vector<double> qx(knots), qp(knots);
  for (std::size_t k = 0; k <= last; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(last);
    const double pos = p * static_cast<double>(n - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    qx[k] = (i + 1 < n) ? samples[i] + frac * (samples[i + 1] - samples[i]) : samples[n - 1];
    qp[k] = p;
  }
  qx[0] = samples.front();
  qx[last] = samples.back();

  PiecewiseLinearCdf out;
  std::size_t k = 0;
  while (k <= last) {
    std::size_t j = k;
    while (j + 1 <= last && qx[j + 1] <= qx[k]) ++j;
    double y;
    if (k == 0 && j == last) {
      y = 0.5;  // constant channel
    } else if (k == 0) {
      y = 0.0;
    } else if (j == last) {
      y = 1.0;
    } else {
      y = 0.5 * (qp[k] + qp[j]);
    }
    out.xs.push_back(qx[k]);
    out.ys.push_back(y);
    k = j + 1;
  }
  return out;
}

EcdfNormalizer fit_normalizer(std::span<const Grid> grids, int knots) {
  if (grids.empty()) fail(ErrorCode::Invalid, "fit_normalizer: empty collection");
  std::array<std::vector<double>, kNumChannels> samples;
  for (const auto& g : grids) {
    for (const auto& e : g.generators) samples[0].push_back(e.p);
    for (const auto& e : g.loads) samples[1].push_back(e.p);
    for (const auto& l : g.lines) {
      if (!l.in_service) continue;
      samples[2].push_back(l.f_max);
      samples[3].push_back(l.x);
    }
  }
  EcdfNormalizer norm;
  norm.knots = knots;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    // A class absent from every grid still gets a valid (constant) map.
    if (samples[c].empty()) samples[c].push_back(0.0);
    norm.channels[c] = PiecewiseLinearCdf::fit(std::move(samples[c]), knots);
  }
  return norm;
}

namespace {

FeatureMatrix injection_features(const std::vector<Injection>& items, const PiecewiseLinearCdf& cdf) {
  FeatureMatrix m{items.size(), 3, std::vector<double>(items.size() * 3)};
  for (std::size_t i = 0; i < items.size(); ++i) {
    m.at(i, 0) = cdf(items[i].p);
    m.at(i, 1) = items[i].in_z1 ? 1.0 : 0.0;
    m.at(i, 2) = items[i].in_z2 ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace

GridFeatures apply_normalizer(const EcdfNormalizer& norm, const Grid& g) {
  GridFeatures f;
  f.gen = injection_features(g.generators, norm[Channel::GenP]);
  f.load = injection_features(g.loads, norm[Channel::LoadP]);
  f.sw = FeatureMatrix{g.switches.size(), kSwitchFeatures, std::vector<double>(g.switches.size(), 1.0)};
  f.line = FeatureMatrix{g.lines.size(), kLineFeatures, std::vector<double>(g.lines.size() * kLineFeatures, 0.0)};
  for (std::size_t i = 0; i < g.lines.size(); ++i) {
    const auto& l = g.lines[i];
    if (!l.in_service) continue;
    f.line.at(i, 0) = norm[Channel::LineFMax](l.f_max);
    f.line.at(i, 1) = norm[Channel::LineX](l.x);
    f.line.at(i, 2) = static_cast<double>(l.orientation);
    f.line.at(i, 3) = 1.0;
  }
  return f;
}

}  // namespace osr
