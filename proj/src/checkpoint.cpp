#include "osr/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "osr/error.hpp"
#include "osr/io.hpp"

namespace osr {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    fail(ErrorCode::Invalid, "checkpoint: bad number '" + token + "'");
  }
  return v;
}

H2mgNodeModel Checkpoint::instantiate() const {
  H2mgNodeModel m(model);
  m.set_params(params);
  return m;
}

namespace {

void write_ints(std::ostream& out, const char* key, const std::vector<int>& v) {
  out << key << ' ' << v.size();
  for (int x : v) out << ' ' << x;
  out << '\n';
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::vector<std::string> line(const std::string& key) {
    std::string l;
    while (std::getline(in_, l)) {
      if (l.empty()) continue;
      std::istringstream is(l);
      std::vector<std::string> tok;
      for (std::string t; is >> t;) tok.push_back(t);
      if (tok.front() != key) fail(ErrorCode::Invalid, "checkpoint: expected '" + key + "', got '" + tok.front() + "'");
      tok.erase(tok.begin());
      return tok;
    }
    fail(ErrorCode::Invalid, "checkpoint: truncated before '" + key + "'");
  }
  std::string peek_key() {
    const auto pos = in_.tellg();
    std::string l;
    while (std::getline(in_, l) && l.empty()) {
    }
    in_.seekg(pos);
    std::istringstream is(l);
    std::string t;
    is >> t;
    return t;
  }

 private:
  std::istringstream in_;
};

long to_int(const std::string& s) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') fail(ErrorCode::Invalid, "checkpoint: bad integer '" + s + "'");
  return v;
}

std::vector<int> read_ints(Reader& r, const std::string& key) {
  auto tok = r.line(key);
  if (tok.empty()) fail(ErrorCode::Invalid, "checkpoint: empty '" + key + "'");
  const auto n = static_cast<std::size_t>(to_int(tok[0]));
  if (tok.size() != n + 1) fail(ErrorCode::Invalid, "checkpoint: count mismatch in '" + key + "'");
  std::vector<int> v;
  for (std::size_t i = 1; i <= n; ++i) v.push_back(static_cast<int>(to_int(tok[i])));
  return v;
}

std::string single(Reader& r, const std::string& key) {
  auto tok = r.line(key);
  if (tok.size() != 1) fail(ErrorCode::Invalid, "checkpoint: '" + key + "' takes one value");
  return tok[0];
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& c) {
  std::ostringstream out;
  out << kCheckpointFormat << '\n';
  const auto& m = c.model;
  out << "profile " << m.profile << '\n';
  write_ints(out, "encoder_hidden", m.encoder_hidden);
  out << "encoder_out " << m.encoder_out << '\n';
  out << "latent " << m.latent << '\n';
  write_ints(out, "message_hidden", m.message_hidden);
  write_ints(out, "decoder_hidden", m.decoder_hidden);
  out << "slope " << hex_double(m.slope) << '\n';
  out << "dt " << hex_double(m.dt) << '\n';
  out << "steps " << m.steps << '\n';
  out << "knots " << c.normalizer.knots << '\n';
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const auto& cdf = c.normalizer.channels[ch];
    out << "channel " << channel_name(static_cast<Channel>(ch)) << ' ' << cdf.xs.size() << '\n';
    for (std::size_t i = 0; i < cdf.xs.size(); ++i) out << "knot " << hex_double(cdf.xs[i]) << ' ' << hex_double(cdf.ys[i]) << '\n';
  }
  for (const auto& [k, v] : c.meta) out << "meta " << k << ' ' << v << '\n';
  out << "params " << c.params.size() << '\n';
  for (double p : c.params) out << hex_double(p) << '\n';
  out << "end\n";
  return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
  Reader r(text);
  if (r.peek_key() != kCheckpointFormat) fail(ErrorCode::Invalid, "checkpoint: missing header " + std::string(kCheckpointFormat));
  r.line(kCheckpointFormat);
  Checkpoint c;
  auto& m = c.model;
  m.profile = single(r, "profile");
  m.encoder_hidden = read_ints(r, "encoder_hidden");
  m.encoder_out = static_cast<int>(to_int(single(r, "encoder_out")));
  m.latent = static_cast<int>(to_int(single(r, "latent")));
  m.message_hidden = read_ints(r, "message_hidden");
  m.decoder_hidden = read_ints(r, "decoder_hidden");
  m.slope = parse_double(single(r, "slope"));
  m.dt = parse_double(single(r, "dt"));
  m.steps = static_cast<int>(to_int(single(r, "steps")));
  c.normalizer.knots = static_cast<int>(to_int(single(r, "knots")));
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    auto tok = r.line("channel");
    if (tok.size() != 2 || tok[0] != channel_name(static_cast<Channel>(ch))) {
      fail(ErrorCode::Invalid, "checkpoint: channel block out of order");
    }
    const auto n = static_cast<std::size_t>(to_int(tok[1]));
    auto& cdf = c.normalizer.channels[ch];
    for (std::size_t i = 0; i < n; ++i) {
      auto kt = r.line("knot");
      if (kt.size() != 2) fail(ErrorCode::Invalid, "checkpoint: knot takes two values");
      cdf.xs.push_back(parse_double(kt[0]));
      cdf.ys.push_back(parse_double(kt[1]));
    }
  }
  while (r.peek_key() == "meta") {
    auto tok = r.line("meta");
    if (tok.size() != 2) fail(ErrorCode::Invalid, "checkpoint: meta takes a key and one value");
    c.meta[tok[0]] = tok[1];
  }
  const auto n = static_cast<std::size_t>(to_int(single(r, "params")));
  c.params.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = r.peek_key();
    if (key.empty() || key == "end") fail(ErrorCode::Invalid, "checkpoint: truncated parameter list");
    r.line(key);
    c.params.push_back(parse_double(key));
  }
  r.line("end");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text_file(path, checkpoint_to_text(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_text(read_text_file(path)); }

}  // namespace osr
