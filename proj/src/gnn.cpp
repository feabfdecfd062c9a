#include "osr/gnn.hpp"

#include <cmath>

#include "osr/error.hpp"

namespace osr {

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.profile = "paper";
  c.encoder_hidden = {128, 128};
  c.encoder_out = 64;
  c.latent = 64;
  c.message_hidden = {128, 128};
  c.decoder_hidden = {128, 128};
  return c;
}

ModelConfig ModelConfig::tiny() { return ModelConfig{}; }

ModelConfig ModelConfig::from_profile(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "tiny" || name == "desk") return tiny();
  fail(ErrorCode::Config, "unknown model profile '" + name + "' (expected tiny or paper)");
}

namespace {

constexpr std::array<int, kNumClasses> kFeatureWidth{static_cast<int>(kGenFeatures), static_cast<int>(kLoadFeatures),
                                                     static_cast<int>(kSwitchFeatures),
                                                     static_cast<int>(kLineFeatures)};
constexpr std::array<const char*, kNumClasses> kClassName{"gen", "load", "switch", "line"};

int port_index(const Grid& g, Address a) {
  const auto i = g.address_index(a);
  if (i < 0) fail(ErrorCode::Invalid, "gnn: dangling port " + std::to_string(a));
  return static_cast<int>(i);
}

const FeatureMatrix& features_of(const GridFeatures& f, std::size_t c) {
  switch (static_cast<EdgeClass>(c)) {
    case EdgeClass::Gen: return f.gen;
    case EdgeClass::Load: return f.load;
    case EdgeClass::Switch: return f.sw;
    case EdgeClass::Line: return f.line;
  }
  return f.gen;
}

// Row e: [h at each port of e ..., enc_e]
Mat gather_input(const GraphIndex& gi, std::size_t c, const Mat& h, const Mat& enc) {
  const auto& ports = gi.ports[c];
  const int arity = gi.arity[c];
  const auto d = h.cols();
  Mat in(static_cast<Eigen::Index>(ports.size()), arity * d + enc.cols());
  for (std::size_t e = 0; e < ports.size(); ++e) {
    const auto r = static_cast<Eigen::Index>(e);
    for (int o = 0; o < arity; ++o) in.block(r, o * d, 1, d) = h.row(ports[e][o]);
    in.block(r, arity * d, 1, enc.cols()) = enc.row(r);
  }
  return in;
}

}  // namespace

GraphIndex GraphIndex::build(const Grid& g) {
  GraphIndex gi;
  gi.num_addresses = g.addresses.size();
  for (const auto& e : g.generators) gi.ports[0].push_back({port_index(g, e.port), -1});
  for (const auto& e : g.loads) gi.ports[1].push_back({port_index(g, e.port), -1});
  for (const auto& s : g.switches) gi.ports[2].push_back({port_index(g, s.port_from), port_index(g, s.port_to)});
  for (const auto& l : g.lines) gi.ports[3].push_back({port_index(g, l.port_from), port_index(g, l.port_to)});
  return gi;
}

H2mgNodeModel::H2mgNodeModel(ModelConfig config) : config_(std::move(config)) {
  const int d = config_.latent;
  const int k = config_.encoder_out;
  if (d < 1 || k < 1 || config_.steps < 1 || !(config_.dt > 0.0)) {
    fail(ErrorCode::Config, "model: latent, encoder output, steps and dt must be positive");
  }
  const std::array<int, kNumClasses> arity{1, 1, 2, 2};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    encoders_[c] = Mlp({kFeatureWidth[c], config_.encoder_hidden, k, false}, std::string("enc.") + kClassName[c], layout_);
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (int o = 0; o < arity[c]; ++o) {
      const std::string port = arity[c] == 1 ? "o" : (o == 0 ? "of" : "ot");
      messages_[c][o] = Mlp({arity[c] * d + k, config_.message_hidden, d, false},
                            std::string("msg.") + kClassName[c] + "." + port, layout_);
    }
  }
  dynamics_ = Mlp({2 * d, {}, d, true}, "dyn", layout_);
  decoder_ = Mlp({k + 2 * d, config_.decoder_hidden, 1, false}, "dec.switch", layout_);
  params_.assign(layout_.total, 0.0);
}

void H2mgNodeModel::initialize(Rng& rng) {
  for (const auto& b : layout_.blocks) {
    if (b.fan_in == 0) {
      std::fill_n(params_.begin() + static_cast<long>(b.offset), b.size(), 0.0);
      continue;
    }
    const double r = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
    std::uniform_real_distribution<double> u(-r, r);
    for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = u(rng);
  }
  ++version_;
}

std::span<double> H2mgNodeModel::mutable_params() {
  ++version_;
  return params_;
}

void H2mgNodeModel::set_params(std::vector<double> p) {
  if (p.size() != layout_.total) fail(ErrorCode::Invalid, "model: parameter count mismatch");
  params_ = std::move(p);
  ++version_;
}

void H2mgNodeModel::zero_decoder_output() {
  std::fill_n(params_.begin() + static_cast<long>(decoder_.last_weight_offset()),
              decoder_.last_layer_size(), 0.0);
  ++version_;
}

Scores H2mgNodeModel::forward(const Grid& grid, const GridFeatures& feats, Tape* tape) const {
  GraphIndex gi = GraphIndex::build(grid);
  const auto A = static_cast<Eigen::Index>(gi.num_addresses);
  const auto d = static_cast<Eigen::Index>(config_.latent);
  const double slope = config_.slope;

  std::array<Mat, kNumClasses> enc;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& fm = features_of(feats, c);
    if (fm.rows != gi.ports[c].size() || (fm.rows > 0 && fm.cols != static_cast<std::size_t>(kFeatureWidth[c]))) {
      fail(ErrorCode::Invalid, std::string("gnn: feature block for class ") + kClassName[c] +
                                   " does not match the grid or the model");
    }
    if (fm.rows == 0) continue;
    Eigen::Map<const Mat> x(fm.data.data(), static_cast<Eigen::Index>(fm.rows), static_cast<Eigen::Index>(fm.cols));
    enc[c] = encoders_[c].forward(params_, x, slope, tape ? &tape->encoder[c] : nullptr);
  }
  if (tape) tape->steps.assign(static_cast<std::size_t>(config_.steps), {});

  Mat h = Mat::Zero(A, d);
  for (int k = 0; k < config_.steps; ++k) {
    Tape::Step* rec = tape ? &tape->steps[static_cast<std::size_t>(k)] : nullptr;
    Mat sum = Mat::Zero(A, d);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& ports = gi.ports[c];
      if (ports.empty()) continue;
      const Mat in = gather_input(gi, c, h, enc[c]);
      for (int o = 0; o < gi.arity[c]; ++o) {
        const Mat msg = messages_[c][o].forward(params_, in, slope, rec ? &rec->message[c][o] : nullptr);
        for (std::size_t e = 0; e < ports.size(); ++e) sum.row(ports[e][o]) += msg.row(static_cast<Eigen::Index>(e));
      }
    }
    Mat agg = sum.array().tanh().matrix();
    Mat fin(A, 2 * d);
    fin << h, agg;
    const Mat fout = dynamics_.forward(params_, fin, slope, rec ? &rec->dynamics : nullptr);
    h += config_.dt * fout;
    if (rec) rec->aggregated = std::move(agg);
  }

  Scores z;
  const auto& sw = gi.ports[static_cast<int>(EdgeClass::Switch)];
  z.logits.assign(sw.size(), 0.0);
  if (!sw.empty()) {
    const Mat in = gather_input(gi, static_cast<int>(EdgeClass::Switch), h, enc[static_cast<int>(EdgeClass::Switch)]);
    // Decoder input order is [enc_e, h_from, h_to].
    Mat dec_in(in.rows(), in.cols());
    dec_in << in.rightCols(enc[2].cols()), in.leftCols(2 * d);
    const Mat out = decoder_.forward(params_, dec_in, slope, tape ? &tape->decoder : nullptr);
    for (std::size_t e = 0; e < sw.size(); ++e) z.logits[e] = out(static_cast<Eigen::Index>(e), 0);
  }
  if (tape) {
    tape->model_version = version_;
    tape->model = this;
    tape->graph = std::move(gi);
    tape->encoded = std::move(enc);
    tape->final_latent = h;
  }
  return z;
}

Mat H2mgNodeModel::final_latent(const Grid& grid, const GridFeatures& features) const {
  Tape t;
  forward(grid, features, &t);
  return t.final_latent;
}

void H2mgNodeModel::backward(const Tape& tape, std::span<const double> upstream, std::span<double> grads) const {
  if (tape.model != this || tape.model_version != version_) {
    fail(ErrorCode::Invalid, "gnn backward: stale tape (parameters changed since the forward pass)");
  }
  if (grads.size() != layout_.total) fail(ErrorCode::Invalid, "gnn backward: gradient buffer size mismatch");
  const auto& gi = tape.graph;
  const auto& sw = gi.ports[2];
  if (upstream.size() != sw.size()) fail(ErrorCode::Invalid, "gnn backward: upstream length mismatch");
  const auto A = static_cast<Eigen::Index>(gi.num_addresses);
  const auto d = static_cast<Eigen::Index>(config_.latent);
  const auto k = static_cast<Eigen::Index>(config_.encoder_out);
  const double slope = config_.slope;

  std::array<Mat, kNumClasses> denc;
  for (std::size_t c = 0; c < kNumClasses; ++c) denc[c] = Mat::Zero(static_cast<Eigen::Index>(gi.ports[c].size()), k);
  Mat dh = Mat::Zero(A, d);

  if (!sw.empty()) {
    Mat dz(static_cast<Eigen::Index>(sw.size()), 1);
    for (std::size_t e = 0; e < sw.size(); ++e) dz(static_cast<Eigen::Index>(e), 0) = upstream[e];
    const Mat din = decoder_.backward(params_, tape.decoder, dz, slope, grads);
    denc[2] += din.leftCols(k);
    for (std::size_t e = 0; e < sw.size(); ++e) {
      const auto r = static_cast<Eigen::Index>(e);
      dh.row(sw[e][0]) += din.block(r, k, 1, d);
      dh.row(sw[e][1]) += din.block(r, k + d, 1, d);
    }
  }

  for (std::size_t s = tape.steps.size(); s-- > 0;) {
    const auto& rec = tape.steps[s];
    // h_{k+1} = h_k + dt * F([h_k, agg_k])
    const Mat dfin = dynamics_.backward(params_, rec.dynamics, config_.dt * dh, slope, grads);
    Mat dprev = dh + dfin.leftCols(d);
    const Mat dsum = dfin.rightCols(d).cwiseProduct((1.0 - rec.aggregated.array().square()).matrix());
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& ports = gi.ports[c];
      if (ports.empty()) continue;
      const int arity = gi.arity[c];
      const auto n = static_cast<Eigen::Index>(ports.size());
      for (int o = 0; o < arity; ++o) {
        Mat dmsg(n, d);
        for (std::size_t e = 0; e < ports.size(); ++e) dmsg.row(static_cast<Eigen::Index>(e)) = dsum.row(ports[e][o]);
        const Mat din = messages_[c][o].backward(params_, rec.message[c][o], dmsg, slope, grads);
        for (std::size_t e = 0; e < ports.size(); ++e) {
          const auto r = static_cast<Eigen::Index>(e);
          for (int p = 0; p < arity; ++p) dprev.row(ports[e][p]) += din.block(r, p * d, 1, d);
        }
        denc[c] += din.rightCols(k);
      }
    }
    dh = std::move(dprev);
  }

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (gi.ports[c].empty()) continue;
    encoders_[c].backward(params_, tape.encoder[c], denc[c], slope, grads);
  }
}

}  // namespace osr
