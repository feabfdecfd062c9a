#pragma once

#include <filesystem>
#include <string>

#include "osr/h2mg.hpp"

namespace osr {

inline constexpr const char* kGridFormat = "osr.grid/1";
inline constexpr const char* kDecisionFormat = "osr.decision/1";

std::string grid_to_json(const Grid& grid);
// Parses, canonicalizes, and validates; violations raise ErrorCode::Invalid.
Grid grid_from_json(const std::string& text);

Grid load_grid(const std::filesystem::path& path);
void save_grid(const std::filesystem::path& path, const Grid& grid);

std::string decision_to_json(const std::string& context_id, const Decision& decision);
Decision decision_from_json(const std::string& text, std::string* context_id = nullptr);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);

}  // namespace osr
