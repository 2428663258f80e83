#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagreg/core_model.hpp"

namespace dagreg {

enum class ChainKind { Ess, TesStep1, TesStep2 };

const char* to_string(ChainKind kind);
ChainKind chain_kind_from_string(const std::string& s);

struct CoefCell {
  std::uint32_t row = 0;  // predictor k
  std::uint32_t col = 0;  // response j
  double value = 0.0;
  bool operator==(const CoefCell&) const = default;
};

/// One stored MCMC state. Coefficient draws list only the cells with gamma = 1.
/// l_values follows the DAG's edges ordered by child, then parent.
struct ChainDraw {
  std::vector<CoefCell> coef;
  std::optional<OrderedDag> dag;
  std::vector<double> l_values;
  std::vector<double> d;
  bool operator==(const ChainDraw&) const = default;
};

/// Post burn-in, thinned draws plus the configuration that produced them.
struct ChainRecord {
  ChainKind kind = ChainKind::Ess;
  std::size_t p = 0;
  std::size_t q = 0;
  bool has_coef_values = false;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ChainDraw> draws;
};

/// Number of stored draws for a run of `iterations` with the first `burn_in`
/// discarded and every `thin`-th kept afterwards.
inline std::size_t stored_draw_count(std::size_t iterations, std::size_t burn_in,
                                     std::size_t thin) {
  return iterations > burn_in ? (iterations - burn_in) / thin : 0;
}

inline bool is_stored_iteration(std::size_t it, std::size_t burn_in, std::size_t thin) {
  return it >= burn_in && (it - burn_in + 1) % thin == 0;
}

/// Binary stream of draws plus a JSON sidecar (<path>.json) with kind, sizes,
/// seed and config.
void write_chain(const ChainRecord& chain, const std::filesystem::path& path);
ChainRecord read_chain(const std::filesystem::path& path);

/// Long-format CSV: draw,field,row,col,value with 1-based indices.
void export_chain_csv(const ChainRecord& chain, const std::filesystem::path& path);

}  // namespace dagreg
