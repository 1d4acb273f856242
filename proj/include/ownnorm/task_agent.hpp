#pragma once

// Task execution under the obedience threshold, with the correction protocol:
// a wrong act or a wrong refusal is corrected with the true permissions for
// the whole prerequisite chain (plus the true owners when ownership appears in
// the applicable rules); a correct decision self-records its prediction.

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ownership_infer.hpp"

namespace ownnorm {

struct GroundTruth {
  std::map<std::string, std::vector<std::string>> owners;  // object -> owners, empty = unowned
  RuleSet rules;

  bool owns(const std::string& object, const std::string& agent) const {
    auto it = owners.find(object);
    if (it == owners.end()) return false;
    return std::find(it->second.begin(), it->second.end(), agent) != it->second.end();
  }

  Grounding grounding(const World& world, const std::string& object) const {
    const auto& o = world.object(object);
    Grounding g{o.color, o.area, {}};
    for (const auto& a : world.agents()) g.ownership.emplace_back(a, owns(object, a) ? 1.0 : 0.0);
    return g;
  }

  bool forbidden(const World& world, const std::string& action, const std::string& object) const {
    return eval_rules(rules, action, grounding(world, object)) >= 0.5;
  }

  // Agents whose ownership appears in the true rules of any of `actions`.
  std::vector<std::string> relevant_agents(const World& world, const std::vector<std::string>& actions) const {
    std::vector<std::string> out;
    auto add = [&](const std::string& a) {
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    };
    for (const auto& r : rules) {
      if (std::find(actions.begin(), actions.end(), r.action) == actions.end()) continue;
      for (const auto& atom : r.conditions) {
        if (atom.predicate != "ownedBy") continue;
        if (atom.is_any())
          for (const auto& a : world.agents()) add(a);
        else
          add(atom.argument);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

enum class Task { collectAll, trashAll };

inline std::string task_action(Task t) { return t == Task::collectAll ? "collect" : "trash"; }
inline std::string to_string(Task t) { return t == Task::collectAll ? "collectAll" : "trashAll"; }

inline Task parse_task(const std::string& s) {
  if (s == "collectAll") return Task::collectAll;
  if (s == "trashAll") return Task::trashAll;
  throw std::invalid_argument("unknown task: " + s);
}

enum class Decision { act, refuse };

struct DecisionDetail {
  Decision decision = Decision::act;
  std::vector<std::pair<std::string, double>> forbiddenness;  // action chain, task action first
  double max_forbiddenness = 0.0;
};

// Refuse iff any action in the prerequisite chain is forbidden at or above
// the threshold.
inline DecisionDetail decide_action(const OwnershipSystem& system, const std::string& action,
                                    const std::string& object, double threshold) {
  DecisionDetail d;
  for (const auto& a : system.world().actions().chain(action)) {
    double f = system.forbiddenness(a, object);
    d.forbiddenness.emplace_back(a, f);
    d.max_forbiddenness = std::max(d.max_forbiddenness, f);
  }
  d.decision = d.max_forbiddenness >= threshold ? Decision::refuse : Decision::act;
  return d;
}

struct DecisionRecord {
  std::string object;
  std::vector<std::pair<std::string, double>> forbiddenness;
  Decision decision = Decision::act;
  bool truly_forbidden = false;
  bool mistake = false;
};

struct TaskRun {
  Task task = Task::trashAll;
  double obedience_threshold = 0.5;
  std::vector<std::string> visit_order;
  std::size_t mistakes = 0;
  std::vector<DecisionRecord> log;
};

struct FeedbackConfig {
  double obedience_threshold = 0.5;
  bool learning = true;
};

// Instructions the oracle gives after a mistake on `object`.
inline std::vector<Instruction> oracle_correction(const World& world, const GroundTruth& truth,
                                                  const std::vector<std::string>& chain, const std::string& object) {
  std::vector<Instruction> out;
  for (const auto& a : chain) {
    Instruction instr;
    instr.source = "oracle";
    instr.permission = Permission{a, object, truth.forbidden(world, a, object) ? 1.0 : 0.0, "oracle"};
    out.push_back(std::move(instr));
  }
  for (const auto& agent : truth.relevant_agents(world, chain))
    out.front().claims.push_back({object, agent, truth.owns(object, agent) ? 1.0 : 0.0, false});
  return out;
}

template <typename Rng>
TaskRun run_task_with_feedback(OwnershipSystem& system, Task task, const GroundTruth& truth, Rng& rng,
                               const FeedbackConfig& config = {}) {
  TaskRun run;
  run.task = task;
  run.obedience_threshold = config.obedience_threshold;
  const auto action = task_action(task);
  const auto chain = system.world().actions().chain(action);
  for (const auto& o : system.world().objects()) run.visit_order.push_back(o.id);
  std::shuffle(run.visit_order.begin(), run.visit_order.end(), rng);

  for (const auto& object : run.visit_order) {
    auto detail = decide_action(system, action, object, config.obedience_threshold);
    DecisionRecord rec{object, detail.forbiddenness, detail.decision, false, false};
    for (const auto& a : chain) rec.truly_forbidden = rec.truly_forbidden || truth.forbidden(system.world(), a, object);
    rec.mistake = (detail.decision == Decision::refuse) != rec.truly_forbidden;
    if (rec.mistake) ++run.mistakes;
    if (config.learning) {
      if (rec.mistake) {
        for (const auto& instr : oracle_correction(system.world(), truth, chain, object))
          system.handle_instruction(instr);
      } else {
        for (const auto& [a, f] : detail.forbiddenness) {
          Instruction instr;
          instr.permission = Permission{a, object, f, {}};
          system.handle_instruction(instr);
        }
      }
    }
    run.log.push_back(std::move(rec));
  }
  return run;
}

}  // namespace ownnorm
