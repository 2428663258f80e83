#pragma once

#include <armadillo>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dagreg {

/// Headerless, row-major CSV with %.17g formatting.
void write_csv(const arma::mat& m, const std::filesystem::path& path);
void write_csv(const arma::umat& m, const std::filesystem::path& path);
arma::mat read_csv(const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits. Stable across platforms.
std::string fnv1a_hex(std::string_view bytes);

inline constexpr const char* kArtifactVersion = "dagreg 1.0.0";

}  // namespace dagreg
