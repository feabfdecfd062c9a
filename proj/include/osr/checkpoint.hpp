#pragma once

// Line-oriented text container; every double is written as a C99 hex float
// so a save/load round trip is bit-exact. Layout in docs/FORMATS.md.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "osr/gnn.hpp"
#include "osr/normalizer.hpp"

namespace osr {

inline constexpr const char* kCheckpointFormat = "osr.checkpoint/1";

struct Checkpoint {
  ModelConfig model;
  EcdfNormalizer normalizer;
  std::vector<double> params;
  std::map<std::string, std::string> meta;  // single-token values

  // Builds a model with these parameters; size mismatch is ErrorCode::Invalid.
  H2mgNodeModel instantiate() const;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string hex_double(double v);
double parse_double(const std::string& token);

}  // namespace osr
