#include "osr/mlp.hpp"

#include "osr/error.hpp"

namespace osr {

std::size_t ParamLayout::add(std::string name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  blocks.push_back({std::move(name), total, rows, cols, fan_in});
  total += rows * cols;
  return blocks.back().offset;
}

Mlp::Mlp(const MlpSpec& spec, const std::string& name, ParamLayout& layout) : spec_(spec) {
  if (spec.input < 1 || spec.output < 1) fail(ErrorCode::Config, "mlp " + name + ": dimensions must be >= 1");
  int in = spec.input;
  std::vector<int> outs = spec.hidden;
  outs.push_back(spec.output);
  for (std::size_t l = 0; l < outs.size(); ++l) {
    if (outs[l] < 1) fail(ErrorCode::Config, "mlp " + name + ": dimensions must be >= 1");
    Layer layer;
    layer.in = in;
    layer.out = outs[l];
    const auto base = name + ".l" + std::to_string(l);
    layer.w = layout.add(base + ".W", static_cast<std::size_t>(layer.out), static_cast<std::size_t>(in),
                         static_cast<std::size_t>(in));
    layer.b = layout.add(base + ".b", static_cast<std::size_t>(layer.out), 1, 0);
    layer.act = (l + 1 < outs.size()) || spec.activate_output;
    layers_.push_back(layer);
    in = layer.out;
  }
}

namespace {

using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;

}  // namespace

Mat Mlp::forward(std::span<const double> params, const Mat& x, double slope, MlpCache* cache) const {
  if (x.cols() != spec_.input) fail(ErrorCode::Invalid, "mlp: input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Mat h = x;
  for (const auto& l : layers_) {
    ConstMap w(params.data() + l.w, l.out, l.in);
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + l.b, l.out);
    Mat pre = h * w.transpose();
    pre.rowwise() += b;
    if (cache) cache->inputs.push_back(std::move(h));
    if (l.act) {
      h = pre.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    } else {
      h = pre;
    }
    if (cache) cache->pre.push_back(std::move(pre));
  }
  return h;
}

Mat Mlp::backward(std::span<const double> params, const MlpCache& cache, const Mat& dy, double slope,
                  std::span<double> grads) const {
  Mat d = dy;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    if (l.act) {
      d = d.cwiseProduct(cache.pre[k].unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
    }
    MutMap gw(grads.data() + l.w, l.out, l.in);
    Eigen::Map<Eigen::RowVectorXd> gb(grads.data() + l.b, l.out);
    gw.noalias() += d.transpose() * cache.inputs[k];
    gb += d.colwise().sum();
    ConstMap w(params.data() + l.w, l.out, l.in);
    Mat dx = d * w;
    d = std::move(dx);
  }
  return d;
}

}  // namespace osr
