#pragma once

// Simulated workspace (clustered colored blocks, three agents) and the three
// experiments: norm learning from permissions, ownership prediction with and
// without rule-based inference, and task execution with corrective feedback.
// Every entry point is deterministic per (seed, config); trial t draws from
// its own generator seeded with (seed, t).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "task_agent.hpp"

namespace ownnorm {

struct SimConfig {
  std::size_t objects_per_category = 5;
  std::size_t agents = 3;
  double cluster_radius_min = 0.4;
  double cluster_radius_max = 0.8;
  double block_scatter = 0.3;
  double owner_interaction_rate = 0.1;
  double non_owner_interaction_rate = 0.001;
  std::size_t trials = 100;
  std::uint64_t seed = 7;
  double clock = 1e4;  // seconds since session start at evaluation time
  std::size_t threads = 0;  // 0 = hardware concurrency
  SystemConfig system;

  void validate() const {
    if (objects_per_category == 0 || agents == 0 || trials == 0) throw std::invalid_argument("counts must be positive");
    if (!(cluster_radius_min > 0 && cluster_radius_max >= cluster_radius_min && block_scatter > 0))
      throw std::invalid_argument("geometry must be positive");
    if (!(owner_interaction_rate > non_owner_interaction_rate && non_owner_interaction_rate > 0))
      throw std::invalid_argument("owner interaction rate must exceed the non-owner rate");
  }
};

using SimRng = std::mt19937_64;

inline SimRng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return SimRng(seq);
}

inline std::string agent_name(std::size_t i) { return "agent" + std::to_string(i + 1); }

inline RuleSet ground_truth_rules(const World& world) {
  RuleSet rules;
  for (auto text : {"forbid trash if ownedBy any", "forbid pickUp if ownedBy agent2", "forbid collect if isColored red"})
    rules.merge(parse_rule(text, world.vocabulary(), world.actions()), world.vocabulary());
  return rules;
}

struct SimWorld {
  World world;
  GroundTruth truth;
  std::vector<std::array<double, 3>> cluster_centers;  // index 0 = unowned
};

template <typename Rng>
SimWorld generate_world(const SimConfig& config, Rng& rng, WorldConfig world_config = {}) {
  config.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimWorld sim{World(Vocabulary::builtin(), ActionRegistry::builtin(), world_config), {}, {}};
  auto& world = sim.world;
  for (std::size_t a = 0; a < config.agents; ++a) world.add_agent(agent_name(a));
  world.set_clock(config.clock);

  sim.cluster_centers.push_back({0.0, 0.0, 0.0});
  const double sector = 2.0 * std::numbers::pi / static_cast<double>(config.agents);
  for (std::size_t a = 0; a < config.agents; ++a) {
    double r = config.cluster_radius_min + (config.cluster_radius_max - config.cluster_radius_min) * unit(rng);
    double theta = sector * (static_cast<double>(a) + unit(rng));
    sim.cluster_centers.push_back({r * std::cos(theta), r * std::sin(theta), 0.0});
  }

  const auto palette = world.palette();
  std::exponential_distribution<double> owner_gap(config.owner_interaction_rate);
  std::exponential_distribution<double> other_gap(config.non_owner_interaction_rate);
  std::size_t next_id = 1;
  for (std::size_t c = 0; c <= config.agents; ++c) {
    for (std::size_t k = 0; k < config.objects_per_category; ++k) {
      ObjectState o;
      o.id = "o" + std::to_string(next_id++);
      double r = config.block_scatter * std::sqrt(unit(rng));
      double theta = 2.0 * std::numbers::pi * unit(rng);
      o.position = {sim.cluster_centers[c][0] + r * std::cos(theta), sim.cluster_centers[c][1] + r * std::sin(theta), 0.0};
      o.color = palette[static_cast<std::size_t>(unit(rng) * static_cast<double>(palette.size())) % palette.size()];
      std::vector<std::string> owners;
      if (c > 0) owners.push_back(agent_name(c - 1));
      for (std::size_t a = 0; a < config.agents; ++a) {
        bool owner = c == a + 1;
        double gap = owner ? owner_gap(rng) : other_gap(rng);
        if (gap <= config.clock) o.last_interaction[agent_name(a)] = config.clock - gap;
      }
      sim.truth.owners[o.id] = owners;
      world.add_object(std::move(o));
    }
  }
  sim.truth.rules = ground_truth_rules(world);
  return sim;
}

// ---------------------------------------------------------------------------
// Metrics

struct BinaryMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
};

// Positive = predicted >= threshold. F1 = 2TP / (2TP + FP + FN), taken as 0
// when there are no positives on either side.
inline BinaryMetrics metrics_accuracy_f1(const std::vector<double>& predicted, const std::vector<bool>& truth,
                                         double threshold = 0.5) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/truth size mismatch");
  if (predicted.empty()) throw std::invalid_argument("no instances");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    bool p = predicted[i] >= threshold;
    if (p && truth[i]) ++tp;
    else if (p) ++fp;
    else if (truth[i]) ++fn;
    else ++tn;
  }
  BinaryMetrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(predicted.size());
  const auto denom = 2 * tp + fp + fn;
  m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return m;
}

inline BinaryMetrics metrics_accuracy_f1(const std::map<std::string, double>& predicted,
                                         const std::map<std::string, bool>& truth, double threshold = 0.5) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("key sets differ");
  std::vector<double> p;
  std::vector<bool> t;
  for (const auto& [k, v] : predicted) {
    auto it = truth.find(k);
    if (it == truth.end()) throw std::invalid_argument("key sets differ: " + k);
    p.push_back(v);
    t.push_back(it->second);
  }
  return metrics_accuracy_f1(p, t, threshold);
}

// Rule quality averaged over `actions`: each object classified by the rules
// (on the world's prior ownership) against the true permission.
inline BinaryMetrics rule_metrics(const RuleSet& rules, const World& world, const GroundTruth& truth,
                                  const std::vector<std::string>& actions) {
  BinaryMetrics sum;
  for (const auto& action : actions) {
    std::vector<double> p;
    std::vector<bool> t;
    for (const auto& o : world.objects()) {
      p.push_back(eval_rules(rules, action, world.grounding(o.id)));
      t.push_back(truth.forbidden(world, action, o.id));
    }
    auto m = metrics_accuracy_f1(p, t);
    sum.accuracy += m.accuracy;
    sum.f1 += m.f1;
  }
  sum.accuracy /= static_cast<double>(actions.size());
  sum.f1 /= static_cast<double>(actions.size());
  return sum;
}

// Ownership quality over (object, agent) pairs using the system's posteriors.
inline BinaryMetrics ownership_metrics(const OwnershipSystem& system, const GroundTruth& truth,
                                       const std::vector<std::string>& objects) {
  std::vector<double> p;
  std::vector<bool> t;
  for (const auto& o : objects) {
    auto g = system.posterior_grounding(o);
    for (const auto& [agent, prob] : g.ownership) {
      p.push_back(prob);
      t.push_back(truth.owns(o, agent));
    }
  }
  return metrics_accuracy_f1(p, t);
}

// ---------------------------------------------------------------------------
// Trial fan-out

template <typename Row, typename Fn>
std::vector<Row> run_trials(const SimConfig& config, Fn&& trial_fn) {
  std::vector<Row> rows(config.trials);
  std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, config.trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < config.trials; t = next++) rows[t] = trial_fn(t);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  return rows;
}

template <typename Row, typename Get>
double mean_of(const std::vector<Row>& rows, Get get) {
  double s = 0.0;
  for (const auto& r : rows) s += get(r);
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// Norm learning

struct NormRow {
  std::size_t trial = 0;
  double fraction = 1.0;
  bool noisy = false;
  double accuracy = 0.0;
  double f1 = 0.0;
  double baseline_accuracy = 0.0;
  double baseline_f1 = 0.0;
  std::size_t rules = 0;
};

inline NormRow norm_learning_trial(const SimConfig& config, double fraction, bool noisy, std::size_t trial) {
  auto rng = trial_rng(config.seed, trial);
  WorldConfig wc;
  wc.percept_prediction = false;
  auto sim = generate_world(config, rng, wc);
  auto& world = sim.world;
  std::uniform_real_distribution<double> owner_noise(0.4, 0.8), other_noise(0.0, 0.2);
  for (const auto& o : world.objects())
    for (const auto& a : world.agents()) {
      bool owner = sim.truth.owns(o.id, a);
      double p = noisy ? (owner ? owner_noise(rng) : other_noise(rng)) : (owner ? 1.0 : 0.0);
      world.record_claim({o.id, a, p, false});
    }

  std::vector<std::string> ids;
  for (const auto& o : world.objects()) ids.push_back(o.id);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(ids.size())));
  ids.resize(std::min(n, ids.size()));
  const std::vector<std::string> actions{"pickUp", "collect", "trash"};
  std::vector<Permission> stream;
  for (const auto& id : ids)
    for (const auto& a : actions) stream.push_back({a, id, sim.truth.forbidden(world, a, id) ? 1.0 : 0.0, "oracle"});
  std::shuffle(stream.begin(), stream.end(), rng);

  Learner learner(config.system.learner);
  for (const auto& p : stream) {
    world.record_permission(p);
    auto examples = world.examples();
    auto target = world.example(p);
    if (p.polarity() == Polarity::forbid) learner.cover_example(examples, target, world.vocabulary());
    else learner.uncover_example(examples, target, world.vocabulary());
  }

  NormRow row{trial, fraction, noisy};
  auto m = rule_metrics(learner.rules(), world, sim.truth, actions);
  auto b = rule_metrics(RuleSet{}, world, sim.truth, actions);
  row.accuracy = m.accuracy;
  row.f1 = m.f1;
  row.baseline_accuracy = b.accuracy;
  row.baseline_f1 = b.f1;
  row.rules = learner.rules().size();
  return row;
}

inline std::vector<NormRow> run_norm_learning(const SimConfig& config, double fraction, bool noisy) {
  return run_trials<NormRow>(config, [&](std::size_t t) { return norm_learning_trial(config, fraction, noisy, t); });
}

// ---------------------------------------------------------------------------
// Ownership prediction and inference

enum class InferenceCondition { noneOff, learnOn, givenOn };

inline std::string to_string(InferenceCondition c) {
  switch (c) {
    case InferenceCondition::noneOff: return "noneOff";
    case InferenceCondition::learnOn: return "learnOn";
    case InferenceCondition::givenOn: return "givenOn";
  }
  return "?";
}

inline InferenceCondition parse_condition(const std::string& s) {
  if (s == "noneOff") return InferenceCondition::noneOff;
  if (s == "learnOn") return InferenceCondition::learnOn;
  if (s == "givenOn") return InferenceCondition::givenOn;
  throw std::invalid_argument("unknown condition: " + s);
}

struct PredictionRow {
  std::size_t trial = 0;
  InferenceCondition condition = InferenceCondition::noneOff;
  double accuracy = 0.0;
  double f1 = 0.0;
};

inline PredictionRow prediction_trial(const SimConfig& config, InferenceCondition condition, std::size_t trial) {
  auto rng = trial_rng(config.seed, trial);
  auto sim = generate_world(config, rng);
  SystemConfig sc = config.system;
  sc.induction = condition == InferenceCondition::learnOn;
  sc.inference = condition != InferenceCondition::noneOff;
  OwnershipSystem system(std::move(sim.world), sc);
  if (condition == InferenceCondition::givenOn) system.give_rules(sim.truth.rules);

  std::vector<std::string> ids;
  for (const auto& o : system.world().objects()) ids.push_back(o.id);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t half = ids.size() / 2;
  const std::vector<std::string> actions{"pickUp", "collect", "trash"};
  for (std::size_t i = 0; i < half; ++i) {
    const auto& id = ids[i];
    for (std::size_t k = 0; k < actions.size(); ++k) {
      Instruction instr;
      instr.source = "oracle";
      if (k == 0)
        for (const auto& a : system.world().agents())
          instr.claims.push_back({id, a, sim.truth.owns(id, a) ? 1.0 : 0.0, false});
      instr.permission = Permission{actions[k], id, sim.truth.forbidden(system.world(), actions[k], id) ? 1.0 : 0.0, "oracle"};
      system.handle_instruction(instr);
    }
  }
  std::vector<std::string> held_out(ids.begin() + static_cast<std::ptrdiff_t>(half), ids.end());
  auto m = ownership_metrics(system, sim.truth, held_out);
  return {trial, condition, m.accuracy, m.f1};
}

inline std::vector<PredictionRow> run_prediction_inference(const SimConfig& config, InferenceCondition condition) {
  return run_trials<PredictionRow>(config, [&](std::size_t t) { return prediction_trial(config, condition, t); });
}

// ---------------------------------------------------------------------------
// Task-based evaluation

struct TaskRow {
  std::size_t trial = 0;
  Task task = Task::trashAll;
  bool learning = true;
  double mistakes = 0.0;
  double rule_accuracy = 0.0;
  double rule_f1 = 0.0;
  double ownership_accuracy = 0.0;
  double ownership_f1 = 0.0;
};

inline TaskRow task_trial(const SimConfig& config, Task task, bool learning, std::size_t trial) {
  auto rng = trial_rng(config.seed, trial);
  auto sim = generate_world(config, rng);
  OwnershipSystem system(std::move(sim.world), config.system);
  FeedbackConfig fc;
  fc.learning = learning;
  auto run = run_task_with_feedback(system, task, sim.truth, rng, fc);
  TaskRow row{trial, task, learning, static_cast<double>(run.mistakes)};
  auto chain = system.world().actions().chain(task_action(task));
  auto rm = rule_metrics(system.rules(), system.world(), sim.truth, chain);
  std::vector<std::string> all;
  for (const auto& o : system.world().objects()) all.push_back(o.id);
  auto om = ownership_metrics(system, sim.truth, all);
  row.rule_accuracy = rm.accuracy;
  row.rule_f1 = rm.f1;
  row.ownership_accuracy = om.accuracy;
  row.ownership_f1 = om.f1;
  return row;
}

inline std::vector<TaskRow> run_task_experiment(const SimConfig& config, Task task, bool learning = true) {
  return run_trials<TaskRow>(config, [&](std::size_t t) { return task_trial(config, task, learning, t); });
}

}  // namespace ownnorm
