#pragma once

// Forbiddenness of atoms, rules and rule sets under uncertain predicate truth
// values. Atoms are treated as independent events (ProbLog-style): a rule is
// the product of its conditions, `ownedBy any` and a set of rules for one
// action are noisy-ors.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permission.hpp"
#include "rule_logic.hpp"

namespace ownnorm {

inline constexpr double kCoverageThreshold = 0.5;

// Everything rule evaluation needs to know about one object.
struct Grounding {
  std::string color;
  std::optional<std::string> area;
  std::vector<std::pair<std::string, double>> ownership;  // one entry per known agent

  double owned_by(const std::string& agent) const {
    for (const auto& [a, p] : ownership)
      if (a == agent) return p;
    throw std::invalid_argument("unknown agent: " + agent);
  }

  Grounding with_owner_probability(const std::string& agent, double p) const {
    Grounding g = *this;
    for (auto& [a, q] : g.ownership)
      if (a == agent) {
        q = p;
        return g;
      }
    throw std::invalid_argument("unknown agent: " + agent);
  }
};

inline double eval_atom(const Atom& atom, const Grounding& g) {
  double p = 0.0;
  if (atom.predicate == "ownedBy") {
    if (atom.is_any()) {
      double none = 1.0;
      for (const auto& [agent, q] : g.ownership) none *= 1.0 - q;
      p = 1.0 - none;
    } else {
      p = g.owned_by(atom.argument);
    }
  } else if (atom.predicate == "isColored") {
    p = g.color == atom.argument ? 1.0 : 0.0;
  } else if (atom.predicate == "inArea") {
    p = g.area && *g.area == atom.argument ? 1.0 : 0.0;
  } else {
    throw std::invalid_argument("no evaluator for predicate " + atom.predicate);
  }
  return atom.negated ? 1.0 - p : p;
}

inline double eval_rule(const Rule& rule, const Grounding& g) {
  double p = 1.0;
  for (const auto& a : rule.conditions) p *= eval_atom(a, g);
  return p;
}

// Noisy-or over the set's rules for `action`, ignoring object permissions.
inline double eval_rules(const RuleSet& set, const std::string& action, const Grounding& g) {
  double none = 1.0;
  for (const auto& r : set)
    if (r.action == action) none *= 1.0 - eval_rule(r, g);
  return 1.0 - none;
}

inline bool permission_is_certain(const Permission& p) {
  return p.certainty >= 0.95 || p.certainty <= 0.05;
}

// Rule-set forbiddenness, overridden by a near-certain object permission.
inline double eval_rule_set(const RuleSet& set, const std::string& action, const Grounding& g,
                            const std::optional<Permission>& stored = std::nullopt) {
  if (stored && stored->action == action && permission_is_certain(*stored))
    return stored->polarity() == Polarity::forbid ? 1.0 : 0.0;
  return eval_rules(set, action, g);
}

// A permission bundled with the grounding of its object at induction time.
struct Example {
  Permission permission;
  Grounding facts;

  const std::string& action() const { return permission.action; }
  double certainty() const { return permission.certainty; }
};

// Forbidden-ness a rule assigns to one example: TP = c*p, FP = (1-c)*p.
struct Coverage {
  double true_positive = 0.0;
  double false_positive = 0.0;
};

inline Coverage coverage(const Rule& rule, const Example& e) {
  double p = eval_rule(rule, e.facts);
  return {e.certainty() * p, (1.0 - e.certainty()) * p};
}

inline double true_positive_value(const Rule& rule, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : examples) sum += coverage(rule, e).true_positive;
  return sum / static_cast<double>(examples.size());
}

inline double false_positive_value(const Rule& rule, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : examples) sum += coverage(rule, e).false_positive;
  return sum / static_cast<double>(examples.size());
}

inline std::vector<Rule> find_cover_rules(const RuleSet& set, const Example& example,
                                          double tau = kCoverageThreshold) {
  std::vector<Rule> out;
  for (const auto& r : set)
    if (r.action == example.action() && eval_rule(r, example.facts) >= tau) out.push_back(r);
  return out;
}

inline std::vector<Example> find_covered_examples(const Rule& rule, std::span<const Example> examples,
                                                  double tau = kCoverageThreshold) {
  std::vector<Example> out;
  for (const auto& e : examples)
    if (e.action() == rule.action && eval_rule(rule, e.facts) >= tau) out.push_back(e);
  return out;
}

}  // namespace ownnorm
