#pragma once

// Base-case templates and randomized operating contexts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "osr/h2mg.hpp"
#include "osr/surrogate.hpp"

namespace osr {

inline constexpr const char* kBaseCaseFormat = "osr.basecase/1";
inline constexpr const char* kManifestFormat = "osr.manifest/1";

// Internal layout of one substation kind: `nodes` local connection points
// and the switches between them.
struct SubstationType {
  int nodes = 0;
  std::vector<std::array<int, 2>> switches;
};

struct SubstationSpec {
  std::string id;
  std::string type;
  int zone = 1;
};

struct Attachment {
  std::string substation;
  int node = 0;
};

enum class LineGroup : int { Z1 = 0, Z2 = 1, Border = 2 };

struct InjectionSpec {
  Attachment at;
  double p = 0.0;
};

struct LineSpec {
  Attachment from, to;
  double x = 0.0;
};

struct BaseCase {
  std::string name;
  std::map<std::string, SubstationType> types;
  std::vector<SubstationSpec> substations;
  std::vector<InjectionSpec> generators, loads;
  std::vector<LineSpec> lines;
  std::array<double, 3> f_bar{};  // per LineGroup

  int zone_of(const std::string& substation) const;
  LineGroup group_of(const LineSpec& line) const;
};

BaseCase parse_base_case(const std::string& json_text);
BaseCase load_base_case(const std::filesystem::path& path);

// Address of local node k in the i-th substation: 100 * i + k.
Grid build_base_case(const BaseCase& base);

struct NoiseConfig {
  double sigma_l = 50.0;
  double sigma_z = 200.0;
  double sigma_t = 500.0;
  double sigma_f = 50.0;
  double p_one_line = 0.6;
  double p_two_lines = 0.1;

  static NoiseConfig zero() { return {0, 0, 0, 0, 0, 0}; }
  void check() const;
};

inline constexpr int kMaxRedraws = 100;

Grid sample_context(const BaseCase& base, const NoiseConfig& noise, Rng& rng);

// Stream for context `index` of a dataset drawn with `seed`.
Rng context_rng(std::uint64_t seed, std::uint64_t index);

struct ManifestEntry {
  std::string file;
  std::string context_id;
  std::string sha256;
  bool all_closed_feasible = true;
  double all_closed_mw = 0.0;
};

struct Manifest {
  std::string base;
  std::uint64_t seed = 0;
  NoiseConfig noise;
  std::vector<ManifestEntry> contexts;
};

// Writes `<prefix>-<index>.grid.json` files and manifest.json into out_dir.
Manifest generate_dataset(const BaseCase& base, const NoiseConfig& noise, std::size_t n, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const std::string& prefix = "ctx");

Manifest load_manifest(const std::filesystem::path& dir);
// Loads every listed grid; a checksum mismatch is ErrorCode::Io.
std::vector<Grid> load_dataset(const std::filesystem::path& dir);

struct SplitSpec {
  std::string name;
  std::size_t n = 0;
};
// desk: train 2000 / valid 500 / test 500; paper: train_large 850000,
// train_small 10000, valid 100000, test 10000.
std::vector<SplitSpec> profile_splits(const std::string& profile);

}  // namespace osr
