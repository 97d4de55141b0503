#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "pkgloss/errors.hpp"
#include "pkgloss/lossbudget.hpp"

namespace pkgloss {

/// gamma in 1/m keyed by (resonator id, package id, region name). Ordered,
/// so iteration is canonical.
struct GammaTable {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, budget::GammaValue> entries;

  /// Value of a cell only known to be below this bound.
  static constexpr double blank_bound = 0.005;

  void set(const std::string& resonator, const std::string& package, const std::string& region,
           budget::GammaValue v) {
    if (!(v.value >= 0.0)) throw DomainError("gamma must be >= 0");
    entries[{resonator, package, region}] = v;
  }

  std::optional<budget::GammaValue> find(const std::string& resonator, const std::string& package,
                                         const std::string& region) const {
    const auto it = entries.find({resonator, package, region});
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }

  /// All regions of one (resonator, package) pair.
  std::map<std::string, budget::GammaValue> regions(const std::string& resonator, const std::string& package) const {
    std::map<std::string, budget::GammaValue> out;
    for (const auto& [k, v] : entries)
      if (std::get<0>(k) == resonator && std::get<1>(k) == package) out[std::get<2>(k)] = v;
    return out;
  }
};

}  // namespace pkgloss
