#include "osr/datagen.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"
#include "osr/error.hpp"
#include "osr/io.hpp"
#include "osr/powerlp.hpp"

namespace osr {

using nlohmann::json;

int BaseCase::zone_of(const std::string& substation) const {
  for (const auto& s : substations) {
    if (s.id == substation) return s.zone;
  }
  fail(ErrorCode::Invalid, "base case: unknown substation '" + substation + "'");
}

LineGroup BaseCase::group_of(const LineSpec& line) const {
  const int zf = zone_of(line.from.substation);
  const int zt = zone_of(line.to.substation);
  if (zf != zt) return LineGroup::Border;
  return zf == 1 ? LineGroup::Z1 : LineGroup::Z2;
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::Invalid, "base case: " + where + " lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Invalid, "base case: " + where + " has a malformed '" + key + "'");
  }
}

Attachment attachment(const json& j, const char* sub_key, const char* node_key, const std::string& where) {
  return {field<std::string>(j, sub_key, where), field<int>(j, node_key, where)};
}

std::size_t substation_index(const BaseCase& b, const std::string& id) {
  for (std::size_t i = 0; i < b.substations.size(); ++i) {
    if (b.substations[i].id == id) return i;
  }
  fail(ErrorCode::Invalid, "base case: reference to absent substation '" + id + "'");
}

Address address_of(const BaseCase& b, const Attachment& at) {
  const auto i = substation_index(b, at.substation);
  const auto& type = b.types.at(b.substations[i].type);
  if (at.node < 0 || at.node >= type.nodes) {
    fail(ErrorCode::Invalid, "base case: node " + std::to_string(at.node) + " out of range in substation '" +
                                 at.substation + "'");
  }
  return static_cast<Address>(100 * i + static_cast<std::size_t>(at.node));
}

double gauss(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> n(0.0, 1.0);
  return mean + sd * n(rng);
}

// Redraws until positive; gives up after kMaxRedraws.
double positive_gauss(Rng& rng, double mean, double sd, const char* what) {
  for (int k = 0; k <= kMaxRedraws; ++k) {
    const double v = gauss(rng, mean, sd);
    if (v > 0.0) return v;
  }
  fail(ErrorCode::Numerical, std::string("datagen: ") + what + " stayed non-positive after " +
                                 std::to_string(kMaxRedraws) + " redraws");
}

// Three-factor injection sampling for one class.
void sample_injections(std::vector<Injection>& items, const NoiseConfig& noise, Rng& rng, const char* cls) {
  std::vector<double> local(items.size());
  std::array<double, 2> local_sum{0.0, 0.0}, base_zone{0.0, 0.0};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int k = items[i].in_z1 ? 0 : 1;
    local[i] = gauss(rng, items[i].p, noise.sigma_l);
    local_sum[k] += local[i];
    base_zone[k] += items[i].p;
  }
  for (int k = 0; k < 2; ++k) {
    if (!(base_zone[k] > 0.0)) {
      fail(ErrorCode::Invalid, std::string("datagen: zone Z") + std::to_string(k + 1) + " has no positive base " + cls +
                                   " total");
    }
  }
  std::array<double, 2> zone{};
  zone[0] = positive_gauss(rng, base_zone[0], noise.sigma_z, "zone draw");
  zone[1] = positive_gauss(rng, base_zone[1], noise.sigma_z, "zone draw");
  const double total = positive_gauss(rng, base_zone[0] + base_zone[1], noise.sigma_t, "total draw");
  const double global = total / (zone[0] + zone[1]);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int k = items[i].in_z1 ? 0 : 1;
    // Grouped so that zero noise reproduces the base value exactly.
    items[i].p = local[i] * (zone[k] / local_sum[k]) * global;
  }
}

json noise_json(const NoiseConfig& n) {
  return {{"sigma_L", n.sigma_l}, {"sigma_Z", n.sigma_z},         {"sigma_T", n.sigma_t},
          {"sigma_F", n.sigma_f}, {"p_one_line", n.p_one_line}, {"p_two_lines", n.p_two_lines}};
}

}  // namespace

BaseCase parse_base_case(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Invalid, std::string("base case: ") + e.what());
  }
  if (j.value("format", "") != kBaseCaseFormat) fail(ErrorCode::Invalid, "base case: format must be " + std::string(kBaseCaseFormat));
  BaseCase b;
  b.name = field<std::string>(j, "name", "template");
  const auto types = field<json>(j, "substation_types", "template");
  for (const auto& [name, t] : types.items()) {
    SubstationType st;
    st.nodes = field<int>(t, "nodes", "type " + name);
    for (const auto& s : field<json>(t, "switches", "type " + name)) {
      const auto pair = s.get<std::array<int, 2>>();
      for (int v : pair) {
        if (v < 0 || v >= st.nodes) fail(ErrorCode::Invalid, "base case: type " + name + " switch node out of range");
      }
      st.switches.push_back(pair);
    }
    b.types[name] = st;
  }
  for (const auto& s : field<json>(j, "substations", "template")) {
    SubstationSpec sp{field<std::string>(s, "id", "substation"), field<std::string>(s, "type", "substation"),
                      field<int>(s, "zone", "substation")};
    if (!b.types.count(sp.type)) fail(ErrorCode::Invalid, "base case: substation '" + sp.id + "' has unknown type");
    if (sp.zone != 1 && sp.zone != 2) fail(ErrorCode::Invalid, "base case: substation '" + sp.id + "' zone must be 1 or 2");
    b.substations.push_back(sp);
  }
  for (const char* cls : {"generators", "loads"}) {
    auto& dst = std::string(cls) == "generators" ? b.generators : b.loads;
    for (const auto& e : field<json>(j, cls, "template")) {
      dst.push_back({attachment(e, "substation", "node", cls), field<double>(e, "P", cls)});
    }
  }
  for (const auto& l : field<json>(j, "lines", "template")) {
    b.lines.push_back({attachment(l, "from", "from_node", "line"), attachment(l, "to", "to_node", "line"),
                       field<double>(l, "X", "line")});
  }
  const auto lim = field<json>(j, "thermal_limits", "template");
  b.f_bar = {field<double>(lim, "Z1", "thermal_limits"), field<double>(lim, "Z2", "thermal_limits"),
             field<double>(lim, "border", "thermal_limits")};
  return b;
}

BaseCase load_base_case(const std::filesystem::path& path) { return parse_base_case(read_text_file(path)); }

Grid build_base_case(const BaseCase& b) {
  Grid g;
  g.context_id = b.name + "-base";
  for (std::size_t i = 0; i < b.substations.size(); ++i) {
    const auto& s = b.substations[i];
    const auto& type = b.types.at(s.type);
    for (int k = 0; k < type.nodes; ++k) g.addresses.push_back(static_cast<Address>(100 * i + static_cast<std::size_t>(k)));
    for (const auto& sw : type.switches) {
      g.switches.push_back({static_cast<Address>(100 * i + static_cast<std::size_t>(sw[0])),
                            static_cast<Address>(100 * i + static_cast<std::size_t>(sw[1])), s.id});
    }
  }
  auto inject = [&](const InjectionSpec& e) {
    const int z = b.zone_of(e.at.substation);
    return Injection{address_of(b, e.at), e.p, z == 1, z == 2};
  };
  for (const auto& e : b.generators) g.generators.push_back(inject(e));
  for (const auto& e : b.loads) g.loads.push_back(inject(e));
  for (const auto& l : b.lines) {
    const auto grp = b.group_of(l);
    int s = 0;
    if (grp == LineGroup::Border) s = b.zone_of(l.from.substation) == 1 ? 1 : -1;
    g.lines.push_back({address_of(b, l.from), address_of(b, l.to), b.f_bar[static_cast<int>(grp)], l.x, s, true});
  }
  canonicalize(g);
  const auto errs = validate_grid(g);
  if (!errs.empty()) fail(ErrorCode::Invalid, "base case '" + b.name + "': " + errs.front());
  return g;
}

void NoiseConfig::check() const {
  if (sigma_l < 0 || sigma_z < 0 || sigma_t < 0 || sigma_f < 0) fail(ErrorCode::Config, "noise: sigmas must be >= 0");
  if (p_one_line < 0 || p_two_lines < 0 || p_one_line + p_two_lines > 1.0) {
    fail(ErrorCode::Config, "noise: need p_one, p_two >= 0 and p_one + p_two <= 1");
  }
}

Grid sample_context(const BaseCase& base, const NoiseConfig& noise, Rng& rng) {
  noise.check();
  Grid g = build_base_case(base);
  sample_injections(g.generators, noise, rng, "generator");
  sample_injections(g.loads, noise, rng, "load");

  std::array<double, 3> limit{};
  for (int k = 0; k < 3; ++k) limit[k] = positive_gauss(rng, base.f_bar[k], noise.sigma_f, "thermal limit draw");
  for (std::size_t i = 0; i < g.lines.size(); ++i) g.lines[i].f_max = limit[static_cast<int>(base.group_of(base.lines[i]))];

  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  std::size_t drop = 0;
  if (r < noise.p_one_line) {
    drop = 1;
  } else if (r < noise.p_one_line + noise.p_two_lines) {
    drop = 2;
  }
  drop = std::min(drop, g.lines.size());
  std::vector<std::size_t> idx(g.lines.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t k = 0; k < drop; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
    g.lines[idx[k]].in_service = false;
  }
  return g;
}

Rng context_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Manifest generate_dataset(const BaseCase& base, const NoiseConfig& noise, std::size_t n, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  Manifest m{base.name, seed, noise, {}};
  json entries = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = context_rng(seed, i);
    Grid g = sample_context(base, noise, rng);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%06zu", prefix.c_str(), i);
    g.context_id = id;
    const std::string text = grid_to_json(g);
    ManifestEntry e{std::string(id) + ".grid.json", id, sha256_hex(text), true, 0.0};
    write_text_file(out_dir / e.file, text);
    const auto cap = exchange_capacity(g, Decision::all_closed(g.num_switches()));
    e.all_closed_feasible = cap.feasible();
    e.all_closed_mw = cap.feasible() ? cap.capacity_mw : 0.0;
    entries.push_back({{"file", e.file},
                       {"context_id", e.context_id},
                       {"sha256", e.sha256},
                       {"all_closed_feasible", e.all_closed_feasible},
                       {"all_closed_mw", e.all_closed_mw}});
    m.contexts.push_back(std::move(e));
  }
  json j{{"format", kManifestFormat}, {"base", base.name}, {"seed", seed},
         {"noise", noise_json(noise)}, {"count", n}, {"contexts", entries}};
  write_text_file(out_dir / "manifest.json", j.dump(1) + "\n");
  return m;
}

Manifest load_manifest(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::Invalid, "manifest in " + dir.string() + ": " + e.what());
  }
  if (j.value("format", "") != kManifestFormat) fail(ErrorCode::Invalid, "manifest: unexpected format");
  Manifest m;
  m.base = j.value("base", "");
  m.seed = j.value("seed", std::uint64_t{0});
  const auto& nz = j.at("noise");
  m.noise = {nz.at("sigma_L").get<double>(), nz.at("sigma_Z").get<double>(), nz.at("sigma_T").get<double>(),
             nz.at("sigma_F").get<double>(), nz.at("p_one_line").get<double>(), nz.at("p_two_lines").get<double>()};
  for (const auto& e : j.at("contexts")) {
    m.contexts.push_back({e.at("file").get<std::string>(), e.at("context_id").get<std::string>(),
                          e.at("sha256").get<std::string>(), e.at("all_closed_feasible").get<bool>(),
                          e.at("all_closed_mw").get<double>()});
  }
  return m;
}

std::vector<Grid> load_dataset(const std::filesystem::path& dir) {
  const auto m = load_manifest(dir);
  std::vector<Grid> out;
  out.reserve(m.contexts.size());
  for (const auto& e : m.contexts) {
    const auto text = read_text_file(dir / e.file);
    if (sha256_hex(text) != e.sha256) fail(ErrorCode::Io, "checksum mismatch for " + (dir / e.file).string());
    out.push_back(grid_from_json(text));
  }
  return out;
}

std::vector<SplitSpec> profile_splits(const std::string& profile) {
  if (profile == "desk") return {{"train", 2000}, {"valid", 500}, {"test", 500}};
  if (profile == "paper") return {{"train_large", 850000}, {"train_small", 10000}, {"valid", 100000}, {"test", 10000}};
  fail(ErrorCode::Config, "unknown data profile '" + profile + "' (expected desk or paper)");
}

}  // namespace osr
