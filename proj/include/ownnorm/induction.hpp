#pragma once

// Incremental rule induction under dual-mode instruction: covering forbidden
// examples, uncovering allowed ones, and specializing directly instructed
// rules before adding (forbid) or subtracting (allow) them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prob_eval.hpp"
#include "rule_logic.hpp"

namespace ownnorm {

struct LearnerConfig {
  double score_thresh = 0.1;
  std::size_t beam_width = 3;
  std::size_t max_conditions = 3;
  double tau = kCoverageThreshold;
};

// Search objective: `primary` is minimized; among ties, larger `secondary`
// wins, then fewer conditions, then larger `coverage`, then the canonically
// smaller rule.
struct SearchScore {
  double primary = 0.0;
  double secondary = 0.0;
  double coverage = 0.0;
};

using ScoreFn = std::function<SearchScore(const Rule&)>;

struct SearchResult {
  Rule rule;
  double score = std::numeric_limits<double>::infinity();
  bool admissible = false;
};

namespace detail {

inline constexpr double kScoreEps = 1e-12;

struct Scored {
  Rule rule;
  SearchScore score;
};

inline bool better(const Scored& a, const Scored& b) {
  if (std::abs(a.score.primary - b.score.primary) > kScoreEps) return a.score.primary < b.score.primary;
  if (std::abs(a.score.secondary - b.score.secondary) > kScoreEps)
    return a.score.secondary > b.score.secondary;
  if (a.rule.conditions.size() != b.rule.conditions.size())
    return a.rule.conditions.size() < b.rule.conditions.size();
  if (std::abs(a.score.coverage - b.score.coverage) > kScoreEps) return a.score.coverage > b.score.coverage;
  return a.rule < b.rule;
}

}  // namespace detail

// Beam search over specializations of `init`. Candidates that no longer cover
// `must_cover` at tau are pruned; since adding a condition never raises a
// rule's value, their specializations are pruned with them. With `strict`,
// `init` itself is not a valid answer.
inline SearchResult rule_search(const Rule& init, const Example* must_cover, const ScoreFn& score_fn,
                                const Vocabulary& vocab, const LearnerConfig& config, bool strict = false) {
  auto admissible = [&](const Rule& r) {
    return !must_cover || eval_rule(r, must_cover->facts) >= config.tau;
  };
  SearchResult result{init};
  if (!admissible(init)) return result;

  detail::Scored best{init, score_fn(init)};
  std::vector<detail::Scored> beam{best};
  if (strict) best.score = {std::numeric_limits<double>::infinity(), 0.0, 0.0};
  while (!beam.empty() && best.score.primary > detail::kScoreEps) {
    std::vector<Rule> candidates;
    for (const auto& b : beam)
      for (auto& r : refinements(b.rule, vocab, config.max_conditions))
        if (admissible(r)) candidates.push_back(std::move(r));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<detail::Scored> scored;
    scored.reserve(candidates.size());
    for (auto& r : candidates) {
      auto s = score_fn(r);
      scored.push_back({std::move(r), s});
    }
    std::sort(scored.begin(), scored.end(), detail::better);
    if (!scored.empty() && detail::better(scored.front(), best)) best = scored.front();
    if (scored.size() > config.beam_width) scored.resize(config.beam_width);
    beam = std::move(scored);
  }
  result.rule = best.rule;
  result.score = best.score.primary;
  result.admissible = !std::isinf(result.score);
  return result;
}

inline SearchResult rule_search(const Rule& init, const Example* must_cover,
                                const std::function<double(const Rule&)>& score_fn,
                                const Vocabulary& vocab, const LearnerConfig& config) {
  return rule_search(init, must_cover,
                     ScoreFn([&](const Rule& r) { return SearchScore{score_fn(r), 0.0}; }), vocab,
                     config);
}

// Mean value of the rule over every stored example's object, whatever the
// action or label.
inline double coverage_value(const Rule& rule, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : examples) sum += eval_rule(rule, e.facts);
  return sum / static_cast<double>(examples.size());
}

struct LearnStep {
  bool changed = false;
  double score = std::numeric_limits<double>::infinity();
  std::vector<Rule> added;
  std::vector<Rule> removed;
};

class Learner {
 public:
  Learner() = default;
  explicit Learner(LearnerConfig config) : config_(config) {}

  const RuleSet& rules() const { return rules_; }
  const RuleSet& pinned() const { return pinned_; }
  const LearnerConfig& config() const { return config_; }

  // Replaces the active set (used when rules are given up front).
  void set_rules(RuleSet rules, bool pin) {
    rules_ = rules;
    if (pin) pinned_ = std::move(rules);
  }

  LearnStep cover_example(std::span<const Example> examples, const Example& target,
                          const Vocabulary& vocab) {
    LearnStep step;
    const auto& action = target.action();
    if (eval_rules(rules_, action, target.facts) >= config_.tau) return step;
    auto same = of_action(examples, action);
    Rule init{Polarity::forbid, action, {}};
    auto found = rule_search(
        init, &target,
        ScoreFn([&](const Rule& r) {
          return SearchScore{false_positive_value(r, same), true_positive_value(r, same), coverage_value(r, examples)};
        }),
        vocab, config_);
    step.score = found.score;
    if (found.admissible && found.score < config_.score_thresh) apply_merge(found.rule, step, vocab);
    return step;
  }

  LearnStep uncover_example(std::span<const Example> examples, const Example& target,
                            const Vocabulary& vocab) {
    LearnStep step;
    auto same = of_action(examples, target.action());
    step.score = 0.0;
    for (const auto& cov : find_cover_rules(rules_, target, config_.tau)) {
      if (!rules_.contains(cov)) continue;
      auto covered = find_covered_examples(cov, same, config_.tau);
      auto found = rule_search(
          cov, &target,
          ScoreFn([&](const Rule& r) {
            return SearchScore{true_positive_value(r, covered), false_positive_value(r, same), coverage_value(r, examples)};
          }),
          vocab, config_, pinned_.contains(cov));
      step.score = std::max(step.score, found.score);
      if (!found.admissible || found.score >= config_.score_thresh) continue;
      subtract(cov, found.rule, step, vocab);
    }
    return step;
  }

  LearnStep cover_rule(std::span<const Example> examples, const Rule& given, const Vocabulary& vocab) {
    LearnStep step;
    Rule rule = canonicalize(given);
    rule.polarity = Polarity::forbid;
    if (is_covered(rule, rules_, vocab)) {
      step.score = 0.0;
      return step;
    }
    auto same = of_action(examples, rule.action);
    auto found = rule_search(
        rule, nullptr,
        ScoreFn([&](const Rule& r) {
          return SearchScore{false_positive_value(r, same), true_positive_value(r, same), coverage_value(r, examples)};
        }),
        vocab, config_);
    step.score = found.score;
    if (found.score < config_.score_thresh) {
      apply_merge(found.rule, step, vocab);
      pinned_.merge(found.rule, vocab);
    }
    return step;
  }

  LearnStep uncover_rule(std::span<const Example> examples, const Rule& given, const Vocabulary& vocab) {
    LearnStep step;
    Rule probe = canonicalize(given);
    probe.polarity = Polarity::forbid;
    auto same = of_action(examples, probe.action);
    auto found = rule_search(
        probe, nullptr,
        ScoreFn([&](const Rule& r) {
          return SearchScore{true_positive_value(r, same), false_positive_value(r, same), coverage_value(r, examples)};
        }),
        vocab, config_);
    step.score = found.score;
    if (found.score >= config_.score_thresh) return step;
    for (const auto& active : rules_.for_action(probe.action)) {
      if (!rules_.contains(active)) continue;
      Rule subtrahend = active;
      for (const auto& a : found.rule.conditions) subtrahend.conditions.push_back(a);
      try {
        subtrahend = canonicalize(std::move(subtrahend));
      } catch (const std::invalid_argument&) {
        continue;
      }
      if (!satisfiable(subtrahend, vocab)) continue;
      subtract(active, subtrahend, step, vocab);
    }
    return step;
  }

  // Rebuilds the active set from the pinned (directly instructed) rules by
  // replaying every stored permission in order against the full example set.
  void batch_reinduce(std::span<const Example> database, const Vocabulary& vocab) {
    rules_ = pinned_;
    for (const auto& e : database) {
      if (e.permission.polarity() == Polarity::forbid) cover_example(database, e, vocab);
      else uncover_example(database, e, vocab);
    }
  }

 private:
  static std::vector<Example> of_action(std::span<const Example> examples, const std::string& action) {
    std::vector<Example> out;
    for (const auto& e : examples)
      if (e.action() == action) out.push_back(e);
    return out;
  }

  void apply_merge(const Rule& rule, LearnStep& step, const Vocabulary& vocab) {
    RuleSet before = rules_;
    rules_.merge(rule, vocab);
    note_changes(before, step);
  }

  // Replaces `minuend` by minuend - subtrahend. Pinned rules are carved but
  // never removed outright.
  void subtract(const Rule& minuend, const Rule& subtrahend, LearnStep& step, const Vocabulary& vocab) {
    auto remainder = rule_diff(minuend, subtrahend, vocab);
    const bool is_pinned = pinned_.contains(minuend);
    if (is_pinned && remainder.empty()) return;
    RuleSet before = rules_;
    rules_.remove(minuend);
    for (const auto& r : remainder) rules_.merge(r, vocab);
    if (is_pinned) {
      pinned_.remove(minuend);
      for (const auto& r : remainder) pinned_.merge(r, vocab);
    }
    note_changes(before, step);
  }

  void note_changes(const RuleSet& before, LearnStep& step) const {
    for (const auto& r : rules_)
      if (!before.contains(r)) {
        step.added.push_back(r);
        step.changed = true;
      }
    for (const auto& r : before)
      if (!rules_.contains(r)) {
        step.removed.push_back(r);
        step.changed = true;
      }
  }

  LearnerConfig config_;
  RuleSet rules_;
  RuleSet pinned_;
};

}  // namespace ownnorm
