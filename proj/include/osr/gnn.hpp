#pragma once

// H2MGNODE: per-class encoders, latent neural-ODE dynamics over addresses
// integrated with explicit Euler, and a per-switch decoder.
//
//   enc_e      = E^c(x_e)
//   h_a(0)     = 0
//   dh_a/dt    = F[h_a, tanh(sum_{(c,e,o): o(e)=a} M^{c,o}(h_e, enc_e))]
//   z_e        = D(enc_e, h_e(1))            (switches only)
//
// h_e concatenates the latents at every port of e. Reverse mode replays the
// recorded Euler steps (discretize-then-differentiate).

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osr/h2mg.hpp"
#include "osr/mlp.hpp"
#include "osr/normalizer.hpp"
#include "osr/surrogate.hpp"

namespace osr {

struct ModelConfig {
  std::string profile = "tiny";
  std::vector<int> encoder_hidden{16, 16};
  int encoder_out = 8;
  int latent = 8;
  std::vector<int> message_hidden{16, 16};
  std::vector<int> decoder_hidden{16, 16};
  double slope = 0.01;
  double dt = 0.05;
  int steps = 20;

  static ModelConfig paper();
  static ModelConfig tiny();
  static ModelConfig from_profile(const std::string& name);
  bool operator==(const ModelConfig&) const = default;
};

enum class EdgeClass : int { Gen = 0, Load = 1, Switch = 2, Line = 3 };
inline constexpr std::size_t kNumClasses = 4;

// Port address indices per class: one column for gen/load, two (from, to)
// for switches and lines.
struct GraphIndex {
  std::size_t num_addresses = 0;
  std::array<std::vector<std::array<int, 2>>, kNumClasses> ports;
  std::array<int, kNumClasses> arity{1, 1, 2, 2};

  static GraphIndex build(const Grid& grid);
};

// Activations recorded by a forward pass.
struct Tape {
  std::uint64_t model_version = 0;
  const void* model = nullptr;
  GraphIndex graph;
  std::array<MlpCache, kNumClasses> encoder;
  std::array<Mat, kNumClasses> encoded;
  struct Step {
    std::array<std::array<MlpCache, 2>, kNumClasses> message;
    Mat aggregated;  // tanh of summed messages
    MlpCache dynamics;
  };
  std::vector<Step> steps;
  MlpCache decoder;
  Mat final_latent;
};

class H2mgNodeModel {
 public:
  explicit H2mgNodeModel(ModelConfig config = ModelConfig::tiny());

  // Uniform fan-in weights, zero biases.
  void initialize(Rng& rng);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<const double> params() const { return params_; }
  // Mutable access invalidates recorded tapes.
  std::span<double> mutable_params();
  void set_params(std::vector<double> p);
  std::uint64_t version() const { return version_; }

  Scores forward(const Grid& grid, const GridFeatures& features, Tape* tape = nullptr) const;

  // Accumulates d(upstream . z)/d(theta) into `grads` (size layout().total).
  // Throws ErrorCode::Invalid for a tape recorded under other parameters.
  void backward(const Tape& tape, std::span<const double> upstream, std::span<double> grads) const;

  // Zeroes the decoder's final layer so every score is exactly 0.
  void zero_decoder_output();

  // Latents after the last Euler step, one row per address.
  Mat final_latent(const Grid& grid, const GridFeatures& features) const;

 private:
  ModelConfig config_;
  ParamLayout layout_;
  std::array<Mlp, kNumClasses> encoders_;
  std::array<std::array<Mlp, 2>, kNumClasses> messages_;
  Mlp dynamics_;
  Mlp decoder_;
  std::vector<double> params_;
  std::uint64_t version_ = 1;
};

}  // namespace osr
