#pragma once

// Feature normalization by a piecewise-linear approximation of each numeric
// channel's empirical CDF. Discrete channels (zone flags, orientation,
// service flag) pass through unchanged.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "osr/h2mg.hpp"

namespace osr {

// Monotone piecewise-linear map with strictly increasing abscissae.
struct PiecewiseLinearCdf {
  std::vector<double> xs;
  std::vector<double> ys;

  double operator()(double v) const;
  static PiecewiseLinearCdf fit(std::vector<double> samples, int knots);
};

enum class Channel : int { GenP = 0, LoadP = 1, LineFMax = 2, LineX = 3 };
inline constexpr std::size_t kNumChannels = 4;
std::string_view channel_name(Channel c);

struct EcdfNormalizer {
  int knots = 0;
  std::array<PiecewiseLinearCdf, kNumChannels> channels;

  const PiecewiseLinearCdf& operator[](Channel c) const { return channels[static_cast<int>(c)]; }
};

// Row-major feature block for one hyper-edge class.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Per-class inputs for the GNN.
//   gen/load: [P, in_Z1, in_Z2]
//   switch:   [1]
//   line:     [F_bar, X, S, in_service]; out-of-service lines carry zeros and flag 0
struct GridFeatures {
  FeatureMatrix gen, load, sw, line;
};

inline constexpr std::size_t kGenFeatures = 3;
inline constexpr std::size_t kLoadFeatures = 3;
inline constexpr std::size_t kSwitchFeatures = 1;
inline constexpr std::size_t kLineFeatures = 4;

EcdfNormalizer fit_normalizer(std::span<const Grid> grids, int knots);
GridFeatures apply_normalizer(const EcdfNormalizer& norm, const Grid& grid);

}  // namespace osr
