#pragma once

#include <optional>
#include <string>
#include <vector>

#include "norm_dsl.hpp"

namespace ownnorm {

// Object-specific permission. `certainty` is the probability that the action
// is forbidden on the object; the polarity is derived from it.
struct Permission {
  std::string action;
  std::string object;
  double certainty = 1.0;
  std::string source;  // agent who issued it, empty for self-recorded entries

  Polarity polarity() const { return certainty >= 0.5 ? Polarity::forbid : Polarity::allow; }

  static Permission forbid(std::string action, std::string object, double certainty = 1.0) {
    return {std::move(action), std::move(object), certainty, {}};
  }
  static Permission allow(std::string action, std::string object, double certainty_forbid = 0.0) {
    return {std::move(action), std::move(object), certainty_forbid, {}};
  }

  bool operator==(const Permission&) const = default;
};

struct Claim {
  std::string object;
  std::string agent;
  double probability = 1.0;
  bool exclusive = false;

  bool operator==(const Claim&) const = default;
};

// One teaching message: any subset of {claims, permission, rule}.
struct Instruction {
  std::vector<Claim> claims;
  std::optional<Permission> permission;
  std::optional<Rule> rule;
  std::string source;
  double timestamp = 0.0;

  bool empty() const { return claims.empty() && !permission && !rule; }
};

}  // namespace ownnorm
