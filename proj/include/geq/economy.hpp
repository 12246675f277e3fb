#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geq/types.hpp"
#include "geq/utility.hpp"

namespace geq {

enum class Parameterization { income, endowment };

struct Consumer {
  std::string name;
  UtilityFunction utility;
  std::optional<Vector> endowment;
  std::optional<double> income;
};

/// A validated exchange economy: N consumers, K goods, positive supply w, and
/// either per-consumer endowments summing to w or incomes summing to one.
class Economy {
 public:
  std::size_t consumers() const noexcept { return consumers_.size(); }
  std::size_t goods() const noexcept { return static_cast<std::size_t>(supply_.size()); }
  const Vector& supply() const noexcept { return supply_; }
  const std::vector<std::string>& good_names() const noexcept { return good_names_; }
  const std::vector<Consumer>& consumer_list() const noexcept { return consumers_; }
  const Consumer& consumer(std::size_t i) const { return consumers_.at(i); }
  const UtilityFunction& utility(std::size_t i) const { return consumers_.at(i).utility; }
  Parameterization parameterization() const noexcept { return mode_; }

  /// N x K endowment matrix. Endowment mode only.
  Allocation endowments() const;
  /// Fixed incomes. Income mode only.
  Vector incomes() const;
  /// Incomes at prices p: the fixed m in income mode, <p|omega_i> otherwise.
  Vector incomes_at(const VectorRef& prices) const;

  /// Copy of this economy in income mode with the given distribution.
  Economy with_incomes(const Vector& incomes) const;
  /// Copy of this economy in endowment mode.
  Economy with_endowments(const Allocation& endowments) const;
  /// Copy with consumer i's utility replaced.
  Economy with_utility(std::size_t i, UtilityFunction utility) const;

 private:
  friend Economy make_economy(std::vector<std::string>, Vector, std::vector<Consumer>);

  std::vector<std::string> good_names_;
  Vector supply_;
  std::vector<Consumer> consumers_;
  Parameterization mode_ = Parameterization::income;
};

/// Validates and assembles an economy from already-built utilities.
/// Throws ValidationError listing every problem.
Economy make_economy(std::vector<std::string> goods, Vector supply, std::vector<Consumer> consumers);

/// Unvalidated economy description as read from a file.
struct ConsumerDescription {
  std::string name;
  std::string family;
  std::vector<double> params;
  std::string expression;
  /// Replace the utility by its quasiconcave envelope on [0, w].
  bool quasiconcavify = false;
  std::optional<std::vector<double>> endowment;
  std::optional<double> income;
};

struct EconomyDescription {
  std::vector<std::string> goods;
  std::vector<double> supply;
  std::vector<ConsumerDescription> consumers;
};

/// Checks dimensions, signs, sums and utility parameters and builds the economy.
Economy validate_economy(const EconomyDescription& raw);

/// JSON <-> description. Numeric fields also accept constant expressions as
/// strings ("2/3", "sqrt(3)-1"). Throws ValidationError with JSON pointers.
EconomyDescription description_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EconomyDescription& d);
EconomyDescription describe(const Economy& economy);

/// Parses economy text; syntax errors carry "line L, column C" anchors.
Economy parse_economy(std::string_view text);
Economy load_economy(const std::filesystem::path& path);
nlohmann::json to_json(const Economy& economy);

/// Stable 64-bit FNV-1a digest of the canonical JSON form, as 16 hex digits.
std::string economy_digest(const Economy& economy);

}  // namespace geq
