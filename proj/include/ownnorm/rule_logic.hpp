#pragma once

// Logical operations on rules: atom implication, subsumption, the
// redundancy-removing merge, rule subtraction, and refinement generation.
//
// Implication is syntactic but aware of two facts about the built-in sorts:
// ownedBy(a) implies ownedBy(any), and color/area sorts are single-valued, so
// isColored(red) implies not isColored(blue). Both are sound for every
// grounded object.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "norm_dsl.hpp"

namespace ownnorm {

inline const Vocabulary& builtin_vocabulary() {
  static const Vocabulary v = Vocabulary::builtin();
  return v;
}

namespace detail {

inline bool single_valued(const Vocabulary& vocab, const std::string& predicate) {
  const auto* s = vocab.find(predicate);
  return s && s->sort != Sort::agent;
}

// Every object has exactly one value (areas are optional, colors are not).
inline bool total(const Vocabulary& vocab, const std::string& predicate) {
  const auto* s = vocab.find(predicate);
  return s && s->sort == Sort::color;
}

}  // namespace detail

// a => b on every grounded object.
inline bool implies(const Atom& a, const Atom& b, const Vocabulary& vocab = builtin_vocabulary()) {
  if (a == b) return true;
  if (a.predicate != b.predicate) return false;
  if (detail::single_valued(vocab, a.predicate))
    return !a.negated && b.negated && a.argument != b.argument;
  // Multi-valued, wildcard-capable sort.
  if (!a.negated && !b.negated) return b.is_any() && !a.is_any();
  if (a.negated && b.negated) return a.is_any() && !b.is_any();
  return false;
}

inline bool contradicts(const Atom& a, const Atom& b, const Vocabulary& vocab = builtin_vocabulary()) {
  return implies(a, b.negation(), vocab);
}

inline bool satisfiable(const Rule& rule, const Vocabulary& vocab = builtin_vocabulary()) {
  const auto& c = rule.conditions;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if (contradicts(c[i], c[j], vocab)) return false;
  return true;
}

// `general` fires on every grounded object `specific` fires on.
inline bool subsumes(const Rule& general, const Rule& specific,
                     const Vocabulary& vocab = builtin_vocabulary()) {
  if (general.action != specific.action || general.polarity != specific.polarity) return false;
  return std::all_of(general.conditions.begin(), general.conditions.end(), [&](const Atom& g) {
    return std::any_of(specific.conditions.begin(), specific.conditions.end(),
                       [&](const Atom& s) { return implies(s, g, vocab); });
  });
}

// Drops every atom implied by another atom of the same rule, and replaces
// negations of all but one value of a total predicate by that value. Grounded
// meaning is unchanged; evaluation no longer counts one uncertain fact twice.
inline Rule simplify(Rule rule, const Vocabulary& vocab = builtin_vocabulary()) {
  const auto original = rule.conditions;
  std::erase_if(rule.conditions, [&](const Atom& a) {
    return std::any_of(original.begin(), original.end(), [&](const Atom& b) { return !(a == b) && implies(b, a, vocab); });
  });
  for (const auto& schema : vocab.predicates()) {
    if (!detail::total(vocab, schema.name)) continue;
    const auto& values = vocab.constants(schema.sort);
    std::vector<std::string> open;
    for (const auto& v : values)
      if (std::find(rule.conditions.begin(), rule.conditions.end(), Atom{schema.name, v, true}) == rule.conditions.end())
        open.push_back(v);
    if (open.size() != 1 || values.size() < 2) continue;
    std::erase_if(rule.conditions, [&](const Atom& a) { return a.predicate == schema.name; });
    rule.conditions.push_back({schema.name, open.front(), false});
    rule = canonicalize(std::move(rule));
  }
  return rule;
}

// Forbid-polarity rules kept sorted, with no member subsuming another.
class RuleSet {
 public:
  using const_iterator = std::vector<Rule>::const_iterator;

  RuleSet() = default;

  const_iterator begin() const { return rules_.begin(); }
  const_iterator end() const { return rules_.end(); }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const std::vector<Rule>& rules() const { return rules_; }

  bool contains(const Rule& r) const { return std::binary_search(rules_.begin(), rules_.end(), r); }

  std::vector<Rule> for_action(const std::string& action) const {
    std::vector<Rule> out;
    for (const auto& r : rules_)
      if (r.action == action) out.push_back(r);
    return out;
  }

  bool mentions_predicate(const std::string& action, const std::string& predicate) const {
    for (const auto& r : rules_)
      if (r.action == action)
        for (const auto& a : r.conditions)
          if (a.predicate == predicate) return true;
    return false;
  }

  // Adds `rule` unless an existing member subsumes it, then drops members the
  // new rule subsumes. Unsatisfiable rules fire on nothing and are ignored.
  void merge(const Rule& rule, const Vocabulary& vocab = builtin_vocabulary()) {
    if (rule.polarity != Polarity::forbid)
      throw std::invalid_argument("rule sets hold forbid rules only: " + format_rule(rule));
    Rule r = canonicalize(rule);
    if (!satisfiable(r, vocab)) return;
    r = simplify(std::move(r), vocab);
    for (const auto& existing : rules_)
      if (subsumes(existing, r, vocab)) return;
    std::erase_if(rules_, [&](const Rule& existing) { return subsumes(r, existing, vocab); });
    rules_.insert(std::upper_bound(rules_.begin(), rules_.end(), r), std::move(r));
  }

  bool remove(const Rule& rule) {
    auto it = std::lower_bound(rules_.begin(), rules_.end(), rule);
    if (it == rules_.end() || *it != rule) return false;
    rules_.erase(it);
    return true;
  }

  bool operator==(const RuleSet&) const = default;

 private:
  std::vector<Rule> rules_;
};

inline RuleSet merge_rule(RuleSet set, const Rule& rule,
                          const Vocabulary& vocab = builtin_vocabulary()) {
  set.merge(rule, vocab);
  return set;
}

inline bool is_covered(const Rule& rule, const RuleSet& set,
                       const Vocabulary& vocab = builtin_vocabulary()) {
  return std::any_of(set.begin(), set.end(),
                     [&](const Rule& r) { return subsumes(r, rule, vocab); });
}

// minuend minus subtrahend, where the subtrahend implies every minuend
// condition and adds atoms d1..dk (canonical order). Remainder i is
// minuend & d1 & ... & d(i-1) & not di; the pieces are pairwise disjoint.
// Pieces that cannot fire are omitted. Polarity of the subtrahend is ignored.
inline std::vector<Rule> rule_diff(const Rule& minuend, const Rule& subtrahend,
                                   const Vocabulary& vocab = builtin_vocabulary()) {
  if (minuend.action != subtrahend.action)
    throw std::invalid_argument("rule_diff: actions differ");
  std::vector<Atom> extra;
  for (const auto& m : minuend.conditions)
    if (std::none_of(subtrahend.conditions.begin(), subtrahend.conditions.end(),
                     [&](const Atom& s) { return implies(s, m, vocab); }))
      throw std::invalid_argument("rule_diff: '" + format_rule(subtrahend) +
                                  "' is not a refinement of '" + format_rule(minuend) + "'");
  for (const auto& s : subtrahend.conditions)
    if (std::find(minuend.conditions.begin(), minuend.conditions.end(), s) ==
        minuend.conditions.end())
      extra.push_back(s);
  std::sort(extra.begin(), extra.end());

  std::vector<Rule> out;
  Rule prefix = minuend;
  for (const auto& d : extra) {
    Rule piece = prefix;
    piece.conditions.push_back(d.negation());
    bool ok = true;
    try {
      piece = canonicalize(std::move(piece));
    } catch (const std::invalid_argument&) {
      ok = false;
    }
    if (ok && satisfiable(piece, vocab)) out.push_back(simplify(std::move(piece), vocab));
    prefix.conditions.push_back(d);
    prefix = canonicalize(std::move(prefix));
  }
  return out;
}

// One-atom specializations of `rule` over the vocabulary's constants (plus
// `any` where legal), positive and negated. Skips atoms already implied by the
// rule and atoms that would make it unsatisfiable; a new atom replaces the
// conditions it implies.
inline std::vector<Rule> refinements(const Rule& rule, const Vocabulary& vocab,
                                     std::size_t max_conditions) {
  std::vector<Rule> out;
  if (rule.conditions.size() >= max_conditions) return out;
  for (const auto& schema : vocab.predicates()) {
    std::vector<std::string> args(vocab.constants(schema.sort).begin(),
                                  vocab.constants(schema.sort).end());
    if (schema.allows_any) args.emplace_back(kAny);
    std::sort(args.begin(), args.end());
    for (const auto& arg : args) {
      for (bool negated : {false, true}) {
        Atom atom{schema.name, arg, negated};
        bool skip = false;
        for (const auto& existing : rule.conditions)
          if (implies(existing, atom, vocab) || contradicts(existing, atom, vocab)) {
            skip = true;
            break;
          }
        if (!skip) out.push_back(simplify(with_condition(rule, atom), vocab));
      }
    }
  }
  return out;
}

}  // namespace ownnorm
