#include "finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

osr::ModelConfig check_config() {
  osr::ModelConfig c = osr::ModelConfig::tiny();
  c.encoder_hidden = {6, 6};
  c.encoder_out = 4;
  c.latent = 4;
  c.message_hidden = {6, 6};
  c.decoder_hidden = {6, 6};
  return c;
}

std::vector<BlockCheck> gnn_gradient_check(const osr::ModelConfig& config, const osr::Grid& grid, std::uint64_t seed,
                                           double rel, double abs_floor, double h) {
  std::mt19937_64 rng(seed);
  osr::H2mgNodeModel model(config);
  model.initialize(rng);
  // Non-zero biases so every parameter influences the output.
  {
    auto p = model.mutable_params();
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (const auto& b : model.layout().blocks) {
      if (b.fan_in == 0) {
        for (std::size_t i = 0; i < b.size(); ++i) p[b.offset + i] = u(rng);
      }
    }
  }
  const osr::Grid grids[1] = {grid};
  const auto feats = osr::apply_normalizer(osr::fit_normalizer(grids, 8), grid);
  std::vector<double> up(grid.num_switches());
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : up) v = n(rng);

  osr::Tape tape;
  model.forward(grid, feats, &tape);
  std::vector<double> analytic(model.layout().total, 0.0);
  model.backward(tape, up, analytic);

  std::vector<double> params(model.params().begin(), model.params().end());
  osr::H2mgNodeModel probe(config);
  auto loss = [&](const std::vector<double>& p) {
    probe.set_params(p);
    const auto z = probe.forward(grid, feats);
    double s = 0;
    for (std::size_t e = 0; e < up.size(); ++e) s += up[e] * z.logits[e];
    return s;
  };
  const auto fd = central_difference(loss, params, h);

  std::vector<BlockCheck> out;
  for (const auto& b : model.layout().blocks) {
    BlockCheck c{b.name, b.size(), 0.0, true};
    for (std::size_t i = b.offset; i < b.offset + b.size(); ++i) {
      const double allowed = std::max(abs_floor, rel * std::max(std::abs(analytic[i]), std::abs(fd[i])));
      c.worst_ratio = std::max(c.worst_ratio, std::abs(analytic[i] - fd[i]) / allowed);
    }
    c.pass = c.worst_ratio <= 1.0;
    out.push_back(c);
  }
  return out;
}

}  // namespace oracle
