#pragma once

// Rule-based ownership inference and the policy that ties induction,
// percept prediction and inference together.
//
// Data flows one way: claims train the percept model, percept predictions
// (or claims) are the priors, and observed permissions update priors into
// posteriors through the current rules. Induction reads priors only, and the
// percept model never sees a posterior.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "induction.hpp"
#include "world.hpp"

namespace ownnorm {

struct BayesResult {
  double posterior = 0.0;
  bool inconsistent = false;
};

// P(ownedBy(o, agent) | observation) for one agent, other agents held at
// their current marginals.
inline BayesResult bayes_update(const RuleSet& rules, const std::string& action, const Grounding& g,
                                const std::string& agent, bool observed_forbid) {
  const double prior = g.owned_by(agent);
  const double p_forbid = eval_rules(rules, action, g);
  const double p_forbid_owned = eval_rules(rules, action, g.with_owner_probability(agent, 1.0));
  const double likelihood = observed_forbid ? p_forbid_owned : 1.0 - p_forbid_owned;
  const double evidence = observed_forbid ? p_forbid : 1.0 - p_forbid;
  if (evidence <= 0.0) return {prior, true};
  return {std::clamp(likelihood * prior / evidence, 0.0, 1.0), false};
}

struct SystemConfig {
  LearnerConfig learner;
  bool induction = true;
  bool inference = true;
  double conflict_threshold = 0.10;
};

struct Observation {
  std::string action;
  std::string object;
  bool forbidden = true;
};

struct InstructionReport {
  double conflict_before = 0.0;
  bool reinduced = false;
  bool inconsistent_observation = false;
  std::optional<LearnStep> rule_step;
  RuleSet rules_before;
};

class OwnershipSystem {
 public:
  explicit OwnershipSystem(World world, SystemConfig config = {})
      : world_(std::move(world)), config_(config), learner_(config.learner) {}

  const World& world() const { return world_; }
  World& world() { return world_; }
  const Learner& learner() const { return learner_; }
  Learner& learner() { return learner_; }
  const RuleSet& rules() const { return learner_.rules(); }
  const SystemConfig& config() const { return config_; }
  const std::vector<Observation>& observations() const { return observations_; }

  void give_rules(const RuleSet& rules) { learner_.set_rules(rules, true); }

  double prior(const std::string& object, const std::string& agent) const {
    return world_.ownership_prior(object, agent);
  }

  // Prior replayed through every recorded observation on the object against
  // the current rules. Claimed pairs keep their claim.
  Grounding posterior_grounding(const std::string& object) const {
    Grounding g = world_.grounding(object);
    if (!config_.inference) return g;
    for (const auto& obs : observations_) {
      if (obs.object != object) continue;
      Grounding next = g;
      for (auto& [agent, p] : next.ownership) {
        if (world_.claimed(object, agent)) continue;
        p = bayes_update(rules(), obs.action, g, agent, obs.forbidden).posterior;
      }
      g = std::move(next);
    }
    return g;
  }

  double posterior(const std::string& object, const std::string& agent) const {
    return posterior_grounding(object).owned_by(agent);
  }

  // Forbiddenness used for acting: posterior ownership, stored permission
  // overrides when near-certain.
  double forbiddenness(const std::string& action, const std::string& object) const {
    return eval_rule_set(rules(), action, posterior_grounding(object), world_.permission(action, object));
  }

  // Share of stored permissions whose polarity the rules (on priors) get wrong.
  double conflict_fraction() const {
    const auto& db = world_.permissions();
    if (db.empty()) return 0.0;
    std::size_t wrong = 0;
    for (const auto& p : db) {
      bool predicted = eval_rules(rules(), p.action, world_.grounding(p.object)) >= config_.learner.tau;
      bool instructed = p.polarity() == Polarity::forbid;
      if (predicted != instructed) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(db.size());
  }

  // Claims first, then the permission (re-induction when the rules already
  // conflict with more than the threshold share of stored permissions,
  // otherwise an inference observation), then the rule by polarity.
  InstructionReport handle_instruction(const Instruction& instr) {
    if (instr.empty()) throw std::invalid_argument("empty instruction");
    InstructionReport report;
    report.rules_before = rules();
    for (const auto& c : instr.claims) world_.record_claim(c);
    if (instr.permission) {
      Permission perm = *instr.permission;
      if (perm.source.empty()) perm.source = instr.source;
      report.conflict_before = conflict_fraction();
      world_.record_permission(perm);
      if (config_.induction && report.conflict_before > config_.conflict_threshold) {
        learner_.batch_reinduce(world_.examples(), world_.vocabulary());
        report.reinduced = true;
      } else {
        Observation obs{perm.action, perm.object, perm.polarity() == Polarity::forbid};
        const auto g = posterior_grounding(perm.object);
        for (const auto& agent : world_.agents())
          if (bayes_update(rules(), obs.action, g, agent, obs.forbidden).inconsistent)
            report.inconsistent_observation = true;
        observations_.push_back(std::move(obs));
      }
    }
    if (instr.rule) {
      auto examples = world_.examples();
      report.rule_step = instr.rule->polarity == Polarity::forbid
                             ? learner_.cover_rule(examples, *instr.rule, world_.vocabulary())
                             : learner_.uncover_rule(examples, *instr.rule, world_.vocabulary());
    }
    return report;
  }

 private:
  World world_;
  SystemConfig config_;
  Learner learner_;
  std::vector<Observation> observations_;
};

}  // namespace ownnorm
