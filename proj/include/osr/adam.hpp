#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace osr {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 0.04;  // element-wise gradient clip range [-clip, clip]
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;

  static AdamState zeros(std::size_t n, AdamConfig config = {});
};

// Clips, then applies one bias-corrected Adam update. A non-finite gradient
// component leaves params and state untouched and returns false.
bool adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace osr
