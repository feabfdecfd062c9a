#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace osr {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Named slice of a flat parameter vector; biases are (rows x 1).
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  std::size_t fan_in = 0;  // 0 for biases
};

struct ParamLayout {
  std::vector<ParamBlock> blocks;
  std::size_t total = 0;

  std::size_t add(std::string name, std::size_t rows, std::size_t cols, std::size_t fan_in);
};

struct MlpSpec {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  bool activate_output = false;
};

struct MlpCache {
  std::vector<Mat> inputs;  // per layer
  std::vector<Mat> pre;     // per layer, before activation
};

// Dense layers with leaky-rectifier activations on hidden layers (and on the
// output when requested). Rows of the input are independent samples.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, const std::string& name, ParamLayout& layout);

  Mat forward(std::span<const double> params, const Mat& x, double slope, MlpCache* cache) const;
  // Accumulates parameter gradients into `grads`; returns d(loss)/d(input).
  Mat backward(std::span<const double> params, const MlpCache& cache, const Mat& dy, double slope,
               std::span<double> grads) const;

  const MlpSpec& spec() const { return spec_; }
  // Offsets of the last layer's weight and bias blocks.
  std::size_t last_weight_offset() const { return layers_.back().w; }
  std::size_t last_bias_offset() const { return layers_.back().b; }
  std::size_t last_layer_size() const { return layers_.back().out * (layers_.back().in + 1); }

 private:
  struct Layer {
    int in = 0, out = 0;
    std::size_t w = 0, b = 0;
    bool act = false;
  };
  MlpSpec spec_;
  std::vector<Layer> layers_;
};

}  // namespace osr
