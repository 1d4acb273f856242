#pragma once

// Shared fixtures and brute-force oracles. Oracles deliberately avoid the
// library's evaluators: they ground rules on crisp objects and enumerate
// ownership worlds directly.

#include <ownnorm/sim.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using namespace ownnorm;

inline const std::vector<std::string> kAgents{"agent1", "agent2", "agent3"};
inline const std::vector<std::string> kColors{"red", "green", "blue", "yellow"};
inline const std::vector<std::string> kAreas{"shelf", "table"};

inline Vocabulary vocab_with(const std::vector<std::string>& agents, bool areas = false) {
  auto v = Vocabulary::builtin();
  for (const auto& a : agents) v.add_constant(Sort::agent, a);
  if (areas)
    for (const auto& a : kAreas) v.add_constant(Sort::area, a);
  return v;
}

inline Rule rule(const std::string& text, const Vocabulary& v) {
  return parse_rule(text, v, ActionRegistry::builtin());
}

inline Rule rule(const std::string& text) { return rule(text, vocab_with(kAgents)); }

// A fully specified object: one color, optional area, a set of owners.
struct CrispObject {
  std::string color;
  std::string area;  // empty = none
  std::vector<bool> owned;
};

inline std::vector<CrispObject> all_crisp_objects(std::size_t agents, bool areas) {
  std::vector<CrispObject> out;
  std::vector<std::string> area_choices{""};
  if (areas) area_choices.insert(area_choices.end(), kAreas.begin(), kAreas.end());
  for (const auto& c : kColors)
    for (const auto& ar : area_choices)
      for (unsigned mask = 0; mask < (1u << agents); ++mask) {
        CrispObject o{c, ar, std::vector<bool>(agents)};
        for (std::size_t i = 0; i < agents; ++i) o.owned[i] = (mask >> i) & 1u;
        out.push_back(o);
      }
  return out;
}

inline bool holds(const Atom& a, const CrispObject& o) {
  bool v = false;
  if (a.predicate == "isColored") v = o.color == a.argument;
  else if (a.predicate == "inArea") v = o.area == a.argument;
  else if (a.predicate == "ownedBy") {
    for (std::size_t i = 0; i < o.owned.size(); ++i)
      if (o.owned[i] && (a.is_any() || kAgents[i] == a.argument)) v = true;
  }
  return a.negated ? !v : v;
}

inline bool fires(const Rule& r, const CrispObject& o) {
  for (const auto& a : r.conditions)
    if (!holds(a, o)) return false;
  return true;
}

// Grounded extension of a rule over every crisp object.
inline std::vector<bool> extension(const std::vector<Rule>& rules, const std::vector<CrispObject>& objects) {
  std::vector<bool> out;
  for (const auto& o : objects) {
    bool f = false;
    for (const auto& r : rules) f = f || fires(r, o);
    out.push_back(f);
  }
  return out;
}

inline Atom random_atom(std::mt19937_64& rng, std::size_t agents, bool areas) {
  std::uniform_int_distribution<int> pick(0, areas ? 2 : 1);
  std::bernoulli_distribution neg(0.35);
  Atom a;
  switch (pick(rng)) {
    case 0: {
      std::uniform_int_distribution<std::size_t> who(0, agents);
      std::size_t k = who(rng);
      a = {"ownedBy", k == agents ? std::string(kAny) : kAgents[k], false};
      break;
    }
    case 1: a = {"isColored", kColors[std::uniform_int_distribution<std::size_t>(0, 3)(rng)], false}; break;
    default: a = {"inArea", kAreas[std::uniform_int_distribution<std::size_t>(0, 1)(rng)], false};
  }
  a.negated = neg(rng);
  return a;
}

// Canonical random rule with up to `max_atoms` conditions; contradictory
// draws are retried.
inline Rule random_rule(std::mt19937_64& rng, std::size_t agents, bool areas, std::size_t max_atoms,
                        const std::string& action = "trash") {
  for (;;) {
    Rule r{Polarity::forbid, action, {}};
    std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_atoms)(rng);
    for (std::size_t i = 0; i < n; ++i) r.conditions.push_back(random_atom(rng, agents, areas));
    try {
      return canonicalize(r);
    } catch (const std::invalid_argument&) {
    }
  }
}

inline ObjectState object(const std::string& id, double x, double y, const std::string& color,
                          std::map<std::string, double> last = {}) {
  return {id, {x, y, 0.0}, color, std::move(last), std::nullopt};
}

inline Grounding grounding(const std::string& color, std::vector<std::pair<std::string, double>> owners) {
  return {color, std::nullopt, std::move(owners)};
}

inline Example example(const std::string& action, double certainty, Grounding g) {
  return {Permission{action, "x", certainty, {}}, std::move(g)};
}

// Exhaustive enumeration over independent Bernoulli ownership worlds. Rules
// are drawn so no ownership variable is shared between atoms, the regime in
// which the independence assumption is exact.
inline double enumerate(const std::vector<Rule>& rules, const std::string& color, const std::vector<double>& p) {
  const std::size_t n = p.size();
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double weight = 1.0;
    CrispObject o{color, "", std::vector<bool>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      o.owned[i] = (mask >> i) & 1u;
      weight *= o.owned[i] ? p[i] : 1.0 - p[i];
    }
    bool f = false;
    for (const auto& r : rules) f = f || fires(r, o);
    if (f) total += weight;
  }
  return total;
}

struct Draw {
  std::vector<Rule> rules;
  std::vector<double> p;
  std::string color;
};

inline Draw disjoint_draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n_agents(1, 3), n_rules(1, 3);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Draw d;
  const std::size_t agents = n_agents(rng);
  for (std::size_t i = 0; i < agents; ++i) d.p.push_back(prob(rng));
  d.color = kColors[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
  std::vector<std::size_t> free_agents(agents);
  std::iota(free_agents.begin(), free_agents.end(), 0);
  std::shuffle(free_agents.begin(), free_agents.end(), rng);
  bool any_used = false;
  const std::size_t rules = n_rules(rng);
  for (std::size_t k = 0; k < rules; ++k) {
    Rule r{Polarity::forbid, "trash", {}};
    if (coin(rng)) r.conditions.push_back({"isColored", kColors[std::uniform_int_distribution<std::size_t>(0, 3)(rng)], coin(rng)});
    if (!any_used && free_agents.size() == agents && k == 0 && coin(rng)) {
      r.conditions.push_back({"ownedBy", "any", coin(rng)});
      any_used = true;
    } else if (!any_used && !free_agents.empty() && coin(rng)) {
      r.conditions.push_back({"ownedBy", kAgents[free_agents.back()], coin(rng)});
      free_agents.pop_back();
    }
    d.rules.push_back(canonicalize(r));
    if (any_used) break;
  }
  return d;
}

inline Grounding as_grounding(const Draw& d) {
  Grounding g{d.color, std::nullopt, {}};
  for (std::size_t i = 0; i < d.p.size(); ++i) g.ownership.emplace_back(kAgents[i], d.p[i]);
  return g;
}

// Exact posterior by enumerating joint ownership worlds with independent
// priors; the observation is deterministic given a crisp world.
inline double joint_posterior(const std::vector<Rule>& rules, const std::string& color,
                              const std::vector<double>& prior, std::size_t agent, bool observed_forbid) {
  const std::size_t n = prior.size();
  double num = 0.0, den = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    CrispObject o{color, "", std::vector<bool>(n)};
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      o.owned[i] = (mask >> i) & 1u;
      w *= o.owned[i] ? prior[i] : 1.0 - prior[i];
    }
    bool forbid = false;
    for (const auto& r : rules) forbid = forbid || fires(r, o);
    if (forbid != observed_forbid) continue;
    den += w;
    if (o.owned[agent]) num += w;
  }
  return num / den;
}

inline const std::vector<std::string> kPalette{"blue", "green", "red", "yellow"};

inline TrainingPoint point(ObjectState o, double target) { return {std::move(o), target, Provenance::claim}; }

inline KlrModel train(const std::vector<TrainingPoint>& data, double clock = 100.0, KlrConfig config = {}) {
  return KlrModel::train("a", data, clock, kPalette, config);
}

inline std::vector<TrainingPoint> random_klr_data(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 10);
  std::uniform_real_distribution<double> pos(-1, 1), prob(0, 1), t(0, 1e4);
  std::vector<TrainingPoint> data;
  for (int i = size(rng); i > 0; --i) {
    std::map<std::string, double> last;
    if (prob(rng) < 0.7) last["a"] = t(rng);
    data.push_back(point(object("o" + std::to_string(i), pos(rng), pos(rng), kPalette[static_cast<std::size_t>(prob(rng) * 4) % 4], last),
                         prob(rng) < 0.3 ? prob(rng) : std::round(prob(rng))));
  }
  return data;
}

// ||analytic - central difference|| / ||analytic|| at weights w.
inline double gradient_relative_error(const KlrModel& m, const std::vector<double>& w, double h = 1e-5) {
  auto g = m.gradient(w);
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto plus = w, minus = w;
    plus[i] += h;
    minus[i] -= h;
    double fd = (m.loss(plus) - m.loss(minus)) / (2 * h);
    diff2 += (fd - g[i]) * (fd - g[i]);
    norm2 += g[i] * g[i];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-8);
}

}  // namespace testing_support
