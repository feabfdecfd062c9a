#include "osr/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "osr/error.hpp"

namespace osr {

using nlohmann::json;

namespace {

json injection_json(const Injection& e) {
  return {{"port_o", e.port}, {"P", e.p}, {"in_Z1", e.in_z1}, {"in_Z2", e.in_z2}};
}

Injection injection_from(const json& j) {
  return {j.at("port_o").get<Address>(), j.at("P").get<double>(), j.at("in_Z1").get<bool>(),
          j.at("in_Z2").get<bool>()};
}

}  // namespace

std::string grid_to_json(const Grid& g) {
  json j;
  j["format"] = kGridFormat;
  j["context_id"] = g.context_id;
  j["addresses"] = g.addresses;
  j["generators"] = json::array();
  for (const auto& e : g.generators) j["generators"].push_back(injection_json(e));
  j["loads"] = json::array();
  for (const auto& e : g.loads) j["loads"].push_back(injection_json(e));
  j["switches"] = json::array();
  for (const auto& s : g.switches) {
    j["switches"].push_back({{"port_of", s.port_from}, {"port_ot", s.port_to}, {"substation_id", s.substation}});
  }
  j["lines"] = json::array();
  for (const auto& l : g.lines) {
    j["lines"].push_back({{"port_of", l.port_from},
                          {"port_ot", l.port_to},
                          {"F_bar", l.f_max},
                          {"X", l.x},
                          {"S", l.orientation},
                          {"in_service", l.in_service}});
  }
  return j.dump(1);
}

Grid grid_from_json(const std::string& text) {
  Grid g;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{kGridFormat}) != kGridFormat) {
      fail(ErrorCode::Invalid, "grid: unsupported format " + j.at("format").get<std::string>());
    }
    g.context_id = j.value("context_id", std::string{});
    g.addresses = j.at("addresses").get<std::vector<Address>>();
    for (const auto& e : j.at("generators")) g.generators.push_back(injection_from(e));
    for (const auto& e : j.at("loads")) g.loads.push_back(injection_from(e));
    for (const auto& s : j.at("switches")) {
      g.switches.push_back(
          {s.at("port_of").get<Address>(), s.at("port_ot").get<Address>(), s.at("substation_id").get<std::string>()});
    }
    for (const auto& l : j.at("lines")) {
      g.lines.push_back({l.at("port_of").get<Address>(), l.at("port_ot").get<Address>(), l.at("F_bar").get<double>(),
                         l.at("X").get<double>(), l.at("S").get<int>(), l.value("in_service", true)});
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::Invalid, std::string("grid: malformed document: ") + ex.what());
  }
  canonicalize(g);
  if (auto v = validate_grid(g); !v.empty()) fail(ErrorCode::Invalid, "grid " + g.context_id + ": " + v.front());
  return g;
}

Grid load_grid(const std::filesystem::path& path) { return grid_from_json(read_text_file(path)); }

void save_grid(const std::filesystem::path& path, const Grid& grid) { write_text_file(path, grid_to_json(grid)); }

std::string decision_to_json(const std::string& context_id, const Decision& d) {
  json j;
  j["format"] = kDecisionFormat;
  j["context_id"] = context_id;
  j["states"] = json::array();
  for (auto s : d.states) j["states"].push_back(static_cast<int>(s));
  return j.dump();
}

Decision decision_from_json(const std::string& text, std::string* context_id) {
  try {
    const json j = json::parse(text);
    Decision d;
    for (const auto& s : j.at("states")) {
      const int v = s.get<int>();
      if (v != 0 && v != 1) fail(ErrorCode::Invalid, "decision: entries must be 0 or 1");
      d.states.push_back(static_cast<std::uint8_t>(v));
    }
    if (context_id) *context_id = j.value("context_id", std::string{});
    return d;
  } catch (const json::exception& ex) {
    fail(ErrorCode::Invalid, std::string("decision: malformed document: ") + ex.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::Io, "sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

}  // namespace osr
