#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gwmut/exact.hpp"
#include "gwmut/laws.hpp"

namespace gwmut {

// 17 significant digits, '.' decimal point whatever the locale.
std::string format_double(double v);

// {"probs": [...], "tail": {"alpha", "scale"} | null, "truncation_mass": m, "p": p}
nlohmann::json law_to_json(const OffspringLaw& law, std::optional<double> p = std::nullopt);
OffspringLaw law_from_json(const nlohmann::json& j, std::optional<double>* p = nullptr);

// "lstar", "subcritical", "stable:<alpha>" or a path to a law JSON file.
// The shortcuts that fix a mutation probability report it through p.
OffspringLaw parse_law_spec(const std::string& spec, std::optional<double>* p = nullptr);

// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Relative paths go under $GWMUT_OUT_DIR when it is set.
std::string output_path(const std::string& path);

// Writes <path>.meta.json next to an output file.
void write_sidecar(const std::string& path, const nlohmann::json& config, std::uint64_t seed);

// k,l,prob for the non-zero cells.
void write_pair_pmf_csv(std::ostream& os, const PairPmf& pmf);

}  // namespace gwmut
