#pragma once

// Typed predicate vocabulary, action registry, and the rule text format:
//
//   (forbid|allow) <action> [if <atom> (and <atom>)*]
//   <atom> := [not] <predicate> <argument>
//
// The target object is implicit. `any` is the existential wildcard and is
// legal only for sorts that allow it (ownedBy).

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace ownnorm {

inline constexpr std::string_view kAny = "any";

enum class Sort { agent, color, area };

inline std::string_view to_string(Sort s) {
  switch (s) {
    case Sort::agent: return "agent";
    case Sort::color: return "color";
    case Sort::area: return "area";
  }
  return "?";
}

enum class Polarity { forbid, allow };

inline std::string_view to_string(Polarity p) {
  return p == Polarity::forbid ? "forbid" : "allow";
}

struct PredicateSchema {
  std::string name;
  Sort sort = Sort::agent;
  bool allows_any = false;
};

// Predicate schemas plus the constants known for each sort. Agents form an
// open sort (new agents may appear at any time); colors and areas are closed
// once any constant has been registered for them.
class Vocabulary {
 public:
  static Vocabulary builtin() {
    Vocabulary v;
    v.add_predicate({"ownedBy", Sort::agent, true});
    v.add_predicate({"isColored", Sort::color, false});
    v.add_predicate({"inArea", Sort::area, false});
    for (auto c : {"red", "green", "blue", "yellow"}) v.add_constant(Sort::color, c);
    return v;
  }

  void add_predicate(PredicateSchema schema) {
    if (find(schema.name)) throw std::invalid_argument("duplicate predicate: " + schema.name);
    predicates_.push_back(std::move(schema));
    std::sort(predicates_.begin(), predicates_.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
  }

  void add_constant(Sort sort, std::string name) {
    if (name == kAny) throw std::invalid_argument("'any' is reserved");
    constants_[sort].insert(std::move(name));
  }

  const PredicateSchema* find(std::string_view name) const {
    for (const auto& p : predicates_)
      if (p.name == name) return &p;
    return nullptr;
  }

  const std::vector<PredicateSchema>& predicates() const { return predicates_; }

  const std::set<std::string>& constants(Sort sort) const {
    static const std::set<std::string> empty;
    auto it = constants_.find(sort);
    return it == constants_.end() ? empty : it->second;
  }

  bool is_constant(Sort sort, std::string_view name) const {
    const auto& c = constants(sort);
    return c.find(std::string(name)) != c.end();
  }

  bool closed(Sort sort) const { return sort != Sort::agent && !constants(sort).empty(); }

  bool empty() const { return predicates_.empty(); }

 private:
  std::vector<PredicateSchema> predicates_;
  std::map<Sort, std::set<std::string>> constants_;
};

class ActionRegistry {
 public:
  static ActionRegistry builtin() {
    ActionRegistry r;
    r.register_action("pickUp", {});
    r.register_action("collect", {"pickUp"});
    r.register_action("trash", {"pickUp"});
    return r;
  }

  // Prerequisites must already be registered, so the only possible cycle is a
  // self-reference.
  const std::string& register_action(const std::string& name,
                                     const std::vector<std::string>& prerequisites) {
    if (name.empty() || name == kAny) throw std::invalid_argument("invalid action name");
    if (contains(name)) throw std::invalid_argument("duplicate action: " + name);
    for (const auto& p : prerequisites) {
      if (p == name) throw std::invalid_argument("prerequisite cycle on action: " + name);
      if (!contains(p)) throw std::invalid_argument("unknown prerequisite: " + p);
    }
    auto [it, ok] = prerequisites_.emplace(name, prerequisites);
    order_.push_back(name);
    return it->first;
  }

  bool contains(std::string_view name) const {
    return prerequisites_.find(std::string(name)) != prerequisites_.end();
  }

  const std::vector<std::string>& prerequisites(const std::string& name) const {
    auto it = prerequisites_.find(name);
    if (it == prerequisites_.end()) throw std::invalid_argument("unknown action: " + name);
    return it->second;
  }

  // The action followed by its transitive prerequisites, each listed once.
  std::vector<std::string> chain(const std::string& name) const {
    std::vector<std::string> out{name};
    for (std::size_t i = 0; i < out.size(); ++i)
      for (const auto& p : prerequisites(out[i]))
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    return out;
  }

  const std::vector<std::string>& actions() const { return order_; }
  bool empty() const { return order_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>> prerequisites_;
  std::vector<std::string> order_;
};

struct Atom {
  std::string predicate;
  std::string argument;  // ground constant or kAny
  bool negated = false;

  bool is_any() const { return argument == kAny; }
  Atom negation() const { return {predicate, argument, !negated}; }

  // Positive atoms sort before negated ones.
  auto operator<=>(const Atom& o) const {
    return std::tie(negated, predicate, argument) <=> std::tie(o.negated, o.predicate, o.argument);
  }
  bool operator==(const Atom&) const = default;
};

struct Rule {
  Polarity polarity = Polarity::forbid;
  std::string action;
  std::vector<Atom> conditions;

  auto operator<=>(const Rule&) const = default;
  bool operator==(const Rule&) const = default;
};

// Sorted by (negation, predicate, argument), duplicates dropped. Throws if an
// atom occurs together with its own negation.
inline Rule canonicalize(Rule rule) {
  auto& c = rule.conditions;
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (const auto& a : c)
    if (!a.negated && std::binary_search(c.begin(), c.end(), a.negation()))
      throw std::invalid_argument("contradictory conditions on " + a.predicate + " " + a.argument);
  return rule;
}

inline bool is_canonical(const Rule& rule) {
  try {
    return canonicalize(rule) == rule;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

inline Rule with_condition(const Rule& rule, Atom atom) {
  Rule r = rule;
  r.conditions.push_back(std::move(atom));
  return canonicalize(std::move(r));
}

inline std::string format_atom(const Atom& a) {
  return (a.negated ? "not " : "") + a.predicate + " " + a.argument;
}

inline std::string format_rule(const Rule& rule) {
  std::string out{to_string(rule.polarity)};
  out += " " + rule.action;
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    out += i == 0 ? " if " : " and ";
    out += format_atom(rule.conditions[i]);
  }
  return out;
}

enum class ParseErrorKind {
  syntax,
  unknown_action,
  unknown_predicate,
  unknown_constant,
  sort_mismatch,
  wildcard_not_allowed,
  contradiction,
};

inline std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::syntax: return "syntax";
    case ParseErrorKind::unknown_action: return "unknown_action";
    case ParseErrorKind::unknown_predicate: return "unknown_predicate";
    case ParseErrorKind::unknown_constant: return "unknown_constant";
    case ParseErrorKind::sort_mismatch: return "sort_mismatch";
    case ParseErrorKind::wildcard_not_allowed: return "wildcard_not_allowed";
    case ParseErrorKind::contradiction: return "contradiction";
  }
  return "?";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t position, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(position) +
                           ": " + what),
        kind_(kind),
        position_(position) {}

  ParseErrorKind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t position;
};

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto ch = static_cast<unsigned char>(text[i]);
    if (std::isspace(ch)) {
      ++i;
      continue;
    }
    if (!(std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.'))
      throw ParseError(ParseErrorKind::syntax, i, std::string("unexpected character '") + text[i] + "'");
    std::size_t start = i;
    while (i < text.size()) {
      auto c = static_cast<unsigned char>(text[i]);
      if (!(std::isalnum(c) || c == '_' || c == '-' || c == '.')) break;
      ++i;
    }
    out.push_back({std::string(text.substr(start, i - start)), start});
  }
  return out;
}

}  // namespace detail

inline Rule parse_rule(std::string_view text, const Vocabulary& vocab,
                       const ActionRegistry& actions) {
  if (vocab.empty() || actions.empty())
    throw std::invalid_argument("parse_rule needs a non-empty vocabulary and action registry");
  const auto tokens = detail::tokenize(text);
  std::size_t i = 0;
  auto end_pos = text.size();
  auto expect = [&](std::string_view what) -> const detail::Token& {
    if (i >= tokens.size())
      throw ParseError(ParseErrorKind::syntax, end_pos, "expected " + std::string(what));
    return tokens[i++];
  };

  Rule rule;
  const auto& pol = expect("forbid or allow");
  if (pol.text == "forbid") rule.polarity = Polarity::forbid;
  else if (pol.text == "allow") rule.polarity = Polarity::allow;
  else throw ParseError(ParseErrorKind::syntax, pol.position, "expected forbid or allow, got '" + pol.text + "'");

  const auto& act = expect("action");
  if (!actions.contains(act.text))
    throw ParseError(ParseErrorKind::unknown_action, act.position, "unknown action '" + act.text + "'");
  rule.action = act.text;

  if (i < tokens.size()) {
    const auto& kw = tokens[i++];
    if (kw.text != "if")
      throw ParseError(ParseErrorKind::syntax, kw.position, "expected 'if', got '" + kw.text + "'");
    for (;;) {
      Atom atom;
      const auto* tok = &expect("predicate");
      if (tok->text == "not") {
        atom.negated = true;
        tok = &expect("predicate");
      }
      const auto* schema = vocab.find(tok->text);
      if (!schema)
        throw ParseError(ParseErrorKind::unknown_predicate, tok->position, "unknown predicate '" + tok->text + "'");
      atom.predicate = schema->name;
      const auto& arg = expect("argument");
      if (arg.text == kAny) {
        if (!schema->allows_any)
          throw ParseError(ParseErrorKind::wildcard_not_allowed, arg.position,
                           "'any' not allowed for " + schema->name);
      } else if (!vocab.is_constant(schema->sort, arg.text)) {
        for (Sort other : {Sort::agent, Sort::color, Sort::area})
          if (other != schema->sort && vocab.is_constant(other, arg.text))
            throw ParseError(ParseErrorKind::sort_mismatch, arg.position,
                             "'" + arg.text + "' is a " + std::string(to_string(other)) + ", " +
                                 schema->name + " expects a " + std::string(to_string(schema->sort)));
        if (vocab.closed(schema->sort))
          throw ParseError(ParseErrorKind::unknown_constant, arg.position,
                           "unknown " + std::string(to_string(schema->sort)) + " '" + arg.text + "'");
      }
      atom.argument = arg.text;
      rule.conditions.push_back(std::move(atom));
      if (i == tokens.size()) break;
      const auto& conj = tokens[i++];
      if (conj.text != "and")
        throw ParseError(ParseErrorKind::syntax, conj.position, "expected 'and', got '" + conj.text + "'");
    }
  }
  try {
    return canonicalize(std::move(rule));
  } catch (const std::invalid_argument& e) {
    throw ParseError(ParseErrorKind::contradiction, 0, e.what());
  }
}

}  // namespace ownnorm
