#include "geq/economy.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "geq/duality.hpp"
#include "geq/expression.hpp"

namespace geq {

using nlohmann::json;

Allocation Economy::endowments() const {
  if (mode_ != Parameterization::endowment) {
    throw Error(ErrorCode::invalid_parameter, "economy is income-parameterized and has no endowments");
  }
  Allocation omega(consumers(), goods());
  for (std::size_t i = 0; i < consumers(); ++i) omega.row(static_cast<Eigen::Index>(i)) = consumers_[i].endowment->transpose();
  return omega;
}

Vector Economy::incomes() const {
  if (mode_ != Parameterization::income) {
    throw Error(ErrorCode::invalid_parameter, "economy is endowment-parameterized; incomes depend on prices");
  }
  Vector m(consumers());
  for (std::size_t i = 0; i < consumers(); ++i) m[static_cast<Eigen::Index>(i)] = *consumers_[i].income;
  return m;
}

Vector Economy::incomes_at(const VectorRef& prices) const {
  if (mode_ == Parameterization::income) return incomes();
  Vector m(consumers());
  for (std::size_t i = 0; i < consumers(); ++i) m[static_cast<Eigen::Index>(i)] = consumers_[i].endowment->dot(prices);
  return m;
}

Economy Economy::with_incomes(const Vector& incomes) const {
  auto list = consumers_;
  if (static_cast<std::size_t>(incomes.size()) != list.size()) {
    throw Error(ErrorCode::dimension_mismatch, "one income per consumer is required");
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i].endowment.reset();
    list[i].income = incomes[static_cast<Eigen::Index>(i)];
  }
  return make_economy(good_names_, supply_, std::move(list));
}

Economy Economy::with_endowments(const Allocation& endowments) const {
  auto list = consumers_;
  if (static_cast<std::size_t>(endowments.rows()) != list.size() || endowments.cols() != supply_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "endowment matrix must be N x K");
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i].income.reset();
    list[i].endowment = Vector(endowments.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return make_economy(good_names_, supply_, std::move(list));
}

Economy Economy::with_utility(std::size_t i, UtilityFunction utility) const {
  auto list = consumers_;
  list.at(i).utility = std::move(utility);
  return make_economy(good_names_, supply_, std::move(list));
}

namespace {

std::string pointer(std::size_t i, const std::string& field) {
  return "/consumers/" + std::to_string(i) + "/" + field;
}

}  // namespace

Economy make_economy(std::vector<std::string> goods, Vector supply, std::vector<Consumer> consumers) {
  std::vector<Diagnostic> d;
  const auto K = static_cast<std::size_t>(supply.size());
  if (K == 0) d.push_back({ErrorCode::dimension_mismatch, "/supply", "at least one good is required"});
  if (goods.empty()) {
    for (std::size_t k = 0; k < K; ++k) goods.push_back("x" + std::to_string(k + 1));
  } else if (goods.size() != K) {
    d.push_back({ErrorCode::dimension_mismatch, "/goods",
                 std::to_string(goods.size()) + " good names for " + std::to_string(K) + " supply entries"});
  }
  for (std::size_t k = 0; k < K; ++k) {
    const double w = supply[static_cast<Eigen::Index>(k)];
    if (!std::isfinite(w) || w <= 0.0) {
      d.push_back({ErrorCode::negative_quantity, "/supply/" + std::to_string(k), "supply must be positive"});
    }
  }
  if (consumers.empty()) d.push_back({ErrorCode::dimension_mismatch, "/consumers", "at least one consumer is required"});

  std::size_t with_endowment = 0, with_income = 0;
  for (std::size_t i = 0; i < consumers.size(); ++i) {
    auto& c = consumers[i];
    if (c.name.empty()) c.name = "consumer" + std::to_string(i + 1);
    if (c.utility.goods() != K) {
      d.push_back({ErrorCode::dimension_mismatch, pointer(i, "utility"),
                   "utility is defined over " + std::to_string(c.utility.goods()) + " goods, economy has " +
                       std::to_string(K)});
    }
    if (c.endowment && c.income) {
      d.push_back({ErrorCode::invalid_parameter, pointer(i, ""), "give either an endowment or an income, not both"});
    } else if (!c.endowment && !c.income) {
      d.push_back({ErrorCode::invalid_parameter, pointer(i, ""), "an endowment or an income is required"});
    }
    if (c.endowment) {
      ++with_endowment;
      if (static_cast<std::size_t>(c.endowment->size()) != K) {
        d.push_back({ErrorCode::dimension_mismatch, pointer(i, "endowment"), "endowment needs one entry per good"});
      } else if (!c.endowment->allFinite() || (c.endowment->array() < 0.0).any()) {
        d.push_back({ErrorCode::negative_quantity, pointer(i, "endowment"), "endowments must be nonnegative"});
      }
    }
    if (c.income) {
      ++with_income;
      if (!std::isfinite(*c.income) || *c.income < 0.0) {
        d.push_back({ErrorCode::negative_quantity, pointer(i, "income"), "incomes must be nonnegative"});
      }
    }
  }
  if (with_endowment > 0 && with_income > 0) {
    d.push_back({ErrorCode::invalid_parameter, "/consumers", "consumers mix endowments and incomes"});
  }

  if (d.empty() && with_endowment == consumers.size()) {
    Vector total = Vector::Zero(static_cast<Eigen::Index>(K));
    for (const auto& c : consumers) total += *c.endowment;
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      if (std::abs(total[kk] - supply[kk]) > 1e-12 * std::max(1.0, supply[kk])) {
        std::ostringstream os;
        os.precision(15);
        os << "endowments of good " << k + 1 << " sum to " << total[kk] << ", supply is " << supply[kk];
        d.push_back({ErrorCode::endowment_sum_mismatch, "/supply/" + std::to_string(k), os.str()});
      }
    }
  }
  if (d.empty() && with_income == consumers.size()) {
    double total = 0.0;
    for (const auto& c : consumers) total += *c.income;
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(15);
      os << "incomes sum to " << total << ", expected 1";
      d.push_back({ErrorCode::income_sum_mismatch, "/consumers", os.str()});
    }
  }
  if (!d.empty()) throw ValidationError(std::move(d));

  Economy e;
  e.good_names_ = std::move(goods);
  e.supply_ = std::move(supply);
  e.consumers_ = std::move(consumers);
  e.mode_ = with_income > 0 ? Parameterization::income : Parameterization::endowment;
  return e;
}

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

UtilityFunction build_utility(const ConsumerDescription& c, std::size_t goods, const Vector& supply) {
  const Family family = family_from_string(c.family);
  UtilityFunction u = [&] {
    switch (family) {
      case Family::cobb_douglas: return UtilityFunction::cobb_douglas(to_vector(c.params));
      case Family::leontief: return UtilityFunction::leontief(to_vector(c.params));
      case Family::max_linear: return UtilityFunction::max_linear(to_vector(c.params));
      case Family::linear: return UtilityFunction::linear(to_vector(c.params));
      case Family::fenchel: return UtilityFunction::fenchel();
      case Family::custom: return UtilityFunction::custom(c.expression, goods);
      case Family::quasiconcavified: break;
    }
    throw Error(ErrorCode::unknown_family, "use \"quasiconcavify\": true on a base family instead");
  }();
  if (c.quasiconcavify) u = quasiconcavify(u, supply);
  return u;
}

}  // namespace

Economy validate_economy(const EconomyDescription& raw) {
  std::vector<Diagnostic> d;
  const Vector supply = to_vector(raw.supply);
  std::vector<Consumer> consumers;
  consumers.reserve(raw.consumers.size());
  for (std::size_t i = 0; i < raw.consumers.size(); ++i) {
    const auto& c = raw.consumers[i];
    Consumer out{c.name, UtilityFunction::linear(Vector::Ones(std::max<Eigen::Index>(supply.size(), 1))), {}, c.income};
    if (c.endowment) out.endowment = to_vector(*c.endowment);
    const bool sized = c.family == "fenchel" || c.family == "custom" || c.family == "custom-expression" ||
                       c.params.size() == raw.supply.size();
    bool known = true;
    try {
      family_from_string(c.family);
    } catch (const Error& e) {
      d.push_back({e.code(), pointer(i, "utility/family"), e.what()});
      known = false;
    }
    if (!known) {
      // already reported; the placeholder utility stays
    } else if (!sized) {
      d.push_back({ErrorCode::dimension_mismatch, pointer(i, "utility/params"),
                   std::to_string(c.params.size()) + " parameters for " + std::to_string(raw.supply.size()) + " goods"});
    } else if (c.family == "fenchel" && raw.supply.size() != 2) {
      d.push_back({ErrorCode::dimension_mismatch, pointer(i, "utility"), "fenchel utility needs exactly two goods"});
    } else if (!raw.supply.empty()) {
      try {
        out.utility = build_utility(c, raw.supply.size(), supply);
      } catch (const Error& e) {
        d.push_back({e.code(), pointer(i, "utility"), e.what()});
      }
    }
    consumers.push_back(std::move(out));
  }
  try {
    Economy e = make_economy(raw.goods, supply, std::move(consumers));
    if (d.empty()) return e;
  } catch (const ValidationError& e) {
    for (const auto& x : e.diagnostics()) {
      // placeholder utilities for rejected consumers would repeat errors already reported
      if (x.code == ErrorCode::dimension_mismatch && x.where.ends_with("/utility") && !d.empty()) continue;
      d.push_back(x);
    }
  }
  throw ValidationError(std::move(d));
}

namespace {

struct Reader {
  std::vector<Diagnostic>& diagnostics;

  void fail(ErrorCode code, const std::string& where, const std::string& message) {
    diagnostics.push_back({code, where, message});
  }

  std::optional<double> number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
      try {
        return evaluate_constant(j.get<std::string>());
      } catch (const Error& e) {
        fail(ErrorCode::parse_error, where, e.what());
        return std::nullopt;
      }
    }
    fail(ErrorCode::parse_error, where, "expected a number");
    return std::nullopt;
  }

  std::vector<double> numbers(const json& j, const std::string& where) {
    std::vector<double> out;
    if (!j.is_array()) {
      fail(ErrorCode::parse_error, where, "expected an array of numbers");
      return out;
    }
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (auto v = number(j[k], where + "/" + std::to_string(k))) out.push_back(*v);
    }
    return out;
  }
};

}  // namespace

EconomyDescription description_from_json(const json& j) {
  std::vector<Diagnostic> d;
  Reader r{d};
  EconomyDescription out;
  if (!j.is_object()) throw ValidationError({{ErrorCode::parse_error, "", "economy must be a JSON object"}});
  for (const auto& [key, _] : j.items()) {
    if (key != "goods" && key != "supply" && key != "consumers" && key != "name" && key != "description") {
      r.fail(ErrorCode::parse_error, "/" + key, "unknown field");
    }
  }
  if (j.contains("goods")) {
    const auto& g = j["goods"];
    if (!g.is_array()) r.fail(ErrorCode::parse_error, "/goods", "expected an array of names");
    else
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (g[k].is_string()) out.goods.push_back(g[k].get<std::string>());
        else r.fail(ErrorCode::parse_error, "/goods/" + std::to_string(k), "expected a string");
      }
  }
  if (!j.contains("supply")) r.fail(ErrorCode::parse_error, "/supply", "missing field");
  else out.supply = r.numbers(j["supply"], "/supply");
  if (!j.contains("consumers") || !j["consumers"].is_array()) {
    r.fail(ErrorCode::parse_error, "/consumers", "expected an array of consumers");
  } else {
    const auto& cs = j["consumers"];
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string at = "/consumers/" + std::to_string(i);
      const auto& c = cs[i];
      ConsumerDescription cd;
      if (!c.is_object()) {
        r.fail(ErrorCode::parse_error, at, "expected an object");
        continue;
      }
      for (const auto& [key, _] : c.items()) {
        if (key != "name" && key != "utility" && key != "endowment" && key != "income") {
          r.fail(ErrorCode::parse_error, at + "/" + key, "unknown field");
        }
      }
      if (c.contains("name")) {
        if (c["name"].is_string()) cd.name = c["name"].get<std::string>();
        else r.fail(ErrorCode::parse_error, at + "/name", "expected a string");
      }
      if (!c.contains("utility") || !c["utility"].is_object()) {
        r.fail(ErrorCode::parse_error, at + "/utility", "expected a utility object");
      } else {
        const auto& u = c["utility"];
        if (!u.contains("family") || !u["family"].is_string()) {
          r.fail(ErrorCode::parse_error, at + "/utility/family", "expected a family name");
        } else {
          cd.family = u["family"].get<std::string>();
        }
        if (u.contains("params")) cd.params = r.numbers(u["params"], at + "/utility/params");
        if (u.contains("expression")) {
          if (u["expression"].is_string()) cd.expression = u["expression"].get<std::string>();
          else r.fail(ErrorCode::parse_error, at + "/utility/expression", "expected a string");
        }
        if (u.contains("quasiconcavify")) {
          if (u["quasiconcavify"].is_boolean()) cd.quasiconcavify = u["quasiconcavify"].get<bool>();
          else r.fail(ErrorCode::parse_error, at + "/utility/quasiconcavify", "expected true or false");
        }
      }
      if (c.contains("endowment")) cd.endowment = r.numbers(c["endowment"], at + "/endowment");
      if (c.contains("income")) cd.income = r.number(c["income"], at + "/income");
      out.consumers.push_back(std::move(cd));
    }
  }
  if (!d.empty()) throw ValidationError(std::move(d));
  return out;
}

json to_json(const EconomyDescription& desc) {
  json j;
  j["goods"] = desc.goods;
  j["supply"] = desc.supply;
  j["consumers"] = json::array();
  for (const auto& c : desc.consumers) {
    json cj;
    if (!c.name.empty()) cj["name"] = c.name;
    json u;
    u["family"] = c.family;
    if (!c.params.empty()) u["params"] = c.params;
    if (!c.expression.empty()) u["expression"] = c.expression;
    if (c.quasiconcavify) u["quasiconcavify"] = true;
    cj["utility"] = std::move(u);
    if (c.endowment) cj["endowment"] = *c.endowment;
    if (c.income) cj["income"] = *c.income;
    j["consumers"].push_back(std::move(cj));
  }
  return j;
}

EconomyDescription describe(const Economy& economy) {
  EconomyDescription out;
  out.goods = economy.good_names();
  out.supply.assign(economy.supply().data(), economy.supply().data() + economy.supply().size());
  for (const auto& c : economy.consumer_list()) {
    ConsumerDescription cd;
    cd.name = c.name;
    const UtilityFunction* u = &c.utility;
    if (const auto* src = u->source()) {
      cd.quasiconcavify = true;
      u = src;
    }
    cd.family = to_string(u->family());
    cd.params.assign(u->params().data(), u->params().data() + u->params().size());
    cd.expression = u->expression_text();
    if (c.endowment) cd.endowment = std::vector<double>(c.endowment->data(), c.endowment->data() + c.endowment->size());
    cd.income = c.income;
    out.consumers.push_back(std::move(cd));
  }
  return out;
}

Economy parse_economy(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    const std::string where = "line " + std::to_string(line) + ", column " + std::to_string(column);
    throw ValidationError({{ErrorCode::parse_error, where, "malformed JSON"}});
  }
  return validate_economy(description_from_json(j));
}

Economy load_economy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({{ErrorCode::parse_error, path.string(), "cannot open file"}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_economy(buffer.str());
}

json to_json(const Economy& economy) { return to_json(describe(economy)); }

std::string economy_digest(const Economy& economy) {
  const std::string text = to_json(economy).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace geq
