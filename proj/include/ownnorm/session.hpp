#pragma once

// Live teaching sessions. A session owns one OwnershipSystem and a simulated
// clock. Actions are announced, held open for an interruption window, then
// executed (or refused if the decision flipped meanwhile). Every mutation is
// reported as a sequenced event; `replay_event` folds events into a snapshot
// so that subscribers can rebuild queryState from the stream.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json_io.hpp"
#include "sim.hpp"

namespace ownnorm {

inline const std::vector<std::string>& event_kinds() {
  static const std::vector<std::string> kinds{"stateSnapshot", "actionAnnounced", "actionExecuted",
                                              "actionRefused", "ruleLearned",     "ownershipUpdated",
                                              "mistakeCorrected", "taskDone"};
  return kinds;
}

inline const std::vector<std::string>& command_types() {
  static const std::vector<std::string> types{"startTask", "requestAction", "instruct", "interrupt", "advance"};
  return types;
}

struct SessionEvent {
  std::uint64_t seq = 0;
  std::string kind;
  double time = 0.0;
  json payload;
};

inline json event_to_json(const SessionEvent& e) {
  return {{"version", kProtocolVersion}, {"seq", e.seq}, {"kind", e.kind}, {"time", e.time}, {"payload", e.payload}};
}

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SessionConfig {
  std::uint64_t seed = 7;
  double announce_window = 2.0;
  double obedience_threshold = 0.5;
  SystemConfig system;
  WorldConfig world;
  SimConfig sim;                             // used when `objects` is empty
  std::vector<std::string> agents;           // custom world
  std::vector<ObjectState> objects;          // custom world
  std::optional<double> clock;               // custom world
  std::vector<Claim> claims;                 // prior knowledge
  std::vector<std::string> rules;            // given rules, pinned
};

// Keys: version, seed, announceWindow, obedienceThreshold, induction,
// inference, perceptPrediction, conflictThreshold, agents, objects, clock,
// claims, rules. Unknown keys are rejected.
inline SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("invalidConfig", "config must be an object");
  static const std::set<std::string> known{"version",   "seed",   "announceWindow", "obedienceThreshold",
                                           "induction", "inference", "perceptPrediction", "conflictThreshold",
                                           "agents",    "objects", "clock", "claims", "rules"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ProtocolError("invalidConfig", "unknown config key: " + k);
  if (j.value("version", kProtocolVersion) != kProtocolVersion)
    throw ProtocolError("unsupportedVersion", "unsupported protocol version");
  SessionConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.announce_window = j.value("announceWindow", c.announce_window);
    c.obedience_threshold = j.value("obedienceThreshold", c.obedience_threshold);
    c.system.induction = j.value("induction", c.system.induction);
    c.system.inference = j.value("inference", c.system.inference);
    c.system.conflict_threshold = j.value("conflictThreshold", c.system.conflict_threshold);
    c.world.percept_prediction = j.value("perceptPrediction", c.world.percept_prediction);
    if (j.contains("agents")) c.agents = j.at("agents").get<std::vector<std::string>>();
    if (j.contains("objects"))
      for (const auto& o : j.at("objects")) c.objects.push_back(object_from_json(o));
    if (j.contains("clock")) c.clock = j.at("clock").get<double>();
    if (j.contains("claims"))
      for (const auto& cl : j.at("claims"))
        c.claims.push_back({cl.at("object").get<std::string>(), cl.at("agent").get<std::string>(),
                            cl.value("probability", 1.0), cl.value("exclusive", false)});
    if (j.contains("rules")) c.rules = j.at("rules").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ProtocolError("invalidConfig", e.what());
  }
  if (!(c.announce_window >= 0.0)) throw ProtocolError("invalidConfig", "announceWindow must be >= 0");
  if (!(c.obedience_threshold > 0.0 && c.obedience_threshold <= 1.0))
    throw ProtocolError("invalidConfig", "obedienceThreshold must be in (0,1]");
  if (j.contains("agents") && c.agents.empty()) throw ProtocolError("invalidConfig", "at least one agent required");
  if (!c.objects.empty() && c.agents.empty()) throw ProtocolError("invalidConfig", "custom world needs agents");
  return c;
}

// Folds one event into a snapshot produced by Session::query_state.
inline void replay_event(json& state, const json& event) {
  const auto& kind = event.at("kind").get_ref<const std::string&>();
  const auto& p = event.at("payload");
  auto clear_pending = [&] { state["pending"] = nullptr; };
  if (kind == "stateSnapshot") {
    state = p;
  } else if (kind == "actionAnnounced") {
    state["pending"] = {{"action", p.at("action")}, {"object", p.at("object")}, {"deadline", p.at("deadline")}};
    if (p.contains("task") && !p.at("task").is_null()) state["task"] = {{"name", p.at("task")}, {"status", "running"}};
  } else if (kind == "actionExecuted") {
    clear_pending();
    state["executed"].push_back({{"action", p.at("action")}, {"object", p.at("object")}});
  } else if (kind == "actionRefused") {
    if (p.value("announced", false)) clear_pending();
    if (p.contains("task") && !p.at("task").is_null()) state["task"] = {{"name", p.at("task")}, {"status", "running"}};
  } else if (kind == "ruleLearned") {
    state["rules"] = p.at("rules");
  } else if (kind == "ownershipUpdated") {
    state["ownership"] = p.at("ownership");
    state["permissions"] = p.at("permissions");
    state["conflictFraction"] = p.at("conflictFraction");
  } else if (kind == "mistakeCorrected") {
    if (p.value("cancelled", false)) clear_pending();
  } else if (kind == "taskDone") {
    state["task"] = {{"name", p.at("task")}, {"status", "done"}};
  } else {
    throw ProtocolError("unknownEvent", "unknown event kind: " + kind);
  }
}

class Session {
 public:
  Session(std::string id, SessionConfig config) : id_(std::move(id)), config_(std::move(config)), system_(build(config_)) {
    emit("stateSnapshot", state_locked());
  }

  const std::string& id() const { return id_; }

  json query_state() const {
    std::lock_guard lock(mu_);
    return state_locked();
  }

  // Events with seq > `after`, waiting up to `timeout` for at least one.
  std::vector<SessionEvent> events_since(std::uint64_t after,
                                         std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) const {
    std::unique_lock lock(mu_);
    if (timeout.count() > 0)
      cv_.wait_for(lock, timeout, [&] { return !events_.empty() && events_.back().seq > after; });
    std::vector<SessionEvent> out;
    for (const auto& e : events_)
      if (e.seq > after) out.push_back(e);
    return out;
  }

  std::uint64_t last_seq() const {
    std::lock_guard lock(mu_);
    return events_.empty() ? 0 : events_.back().seq;
  }

  double time() const {
    std::lock_guard lock(mu_);
    return time_;
  }

  // Applies one command; returns the acknowledgment. Rejections are
  // reported as {"ok": false, "error": {...}} and leave the session unchanged.
  json submit(const json& command) {
    std::lock_guard lock(mu_);
    const auto first = events_.empty() ? 0 : events_.back().seq + 1;
    try {
      dispatch(command);
    } catch (const ProtocolError& e) {
      return reject(e.code(), e.what());
    } catch (const ParseError& e) {
      return reject("invalidRule", e.what());
    } catch (const json::exception& e) {
      return reject("malformed", e.what());
    } catch (const std::invalid_argument& e) {
      return reject("invalidArgument", e.what());
    } catch (const std::out_of_range& e) {
      return reject("invalidArgument", e.what());
    }
    json seqs = json::array();
    for (const auto& e : events_)
      if (e.seq >= first) seqs.push_back(e.seq);
    return {{"version", kProtocolVersion}, {"ok", true}, {"events", std::move(seqs)}};
  }

  // Advances simulated time, executing any action whose window has closed.
  void advance(double seconds) {
    std::lock_guard lock(mu_);
    advance_locked(seconds);
  }

  double posterior(const std::string& object, const std::string& agent) const {
    std::lock_guard lock(mu_);
    return system_.posterior(object, agent);
  }

 private:
  struct Pending {
    std::string action;
    std::string object;
    double deadline = 0.0;
    bool from_task = false;
  };

  struct ActiveTask {
    Task task = Task::trashAll;
    std::deque<std::string> queue;
    std::vector<std::string> executed;
    std::vector<std::string> refused;
  };

  static OwnershipSystem build(const SessionConfig& c) {
    if (c.objects.empty()) {
      auto rng = trial_rng(c.seed, 0);
      auto sim = generate_world(c.sim, rng, c.world);
      return finish(OwnershipSystem(std::move(sim.world), c.system), c);
    }
    World world(Vocabulary::builtin(), ActionRegistry::builtin(), c.world);
    try {
      for (const auto& a : c.agents) world.add_agent(a);
      world.set_clock(c.clock.value_or(0.0));
      for (const auto& o : c.objects) world.add_object(o);
    } catch (const std::invalid_argument& e) {
      throw ProtocolError("invalidConfig", e.what());
    }
    return finish(OwnershipSystem(std::move(world), c.system), c);
  }

  static OwnershipSystem finish(OwnershipSystem system, const SessionConfig& c) {
    try {
      for (const auto& cl : c.claims) system.world().record_claim(cl);
      RuleSet given;
      for (const auto& text : c.rules)
        given.merge(parse_rule(text, system.world().vocabulary(), system.world().actions()), system.world().vocabulary());
      if (!given.empty()) system.give_rules(given);
    } catch (const ParseError& e) {
      throw ProtocolError("invalidConfig", e.what());
    } catch (const std::invalid_argument& e) {
      throw ProtocolError("invalidConfig", e.what());
    }
    return system;
  }

  json state_locked() const {
    json s = world_snapshot(system_);
    s["sessionId"] = id_;
    s["time"] = time_;
    s["announceWindow"] = config_.announce_window;
    s["obedienceThreshold"] = config_.obedience_threshold;
    json executed = json::array();
    for (const auto& [a, o] : executed_) executed.push_back({{"action", a}, {"object", o}});
    s["executed"] = std::move(executed);
    s["pending"] = pending_ ? json{{"action", pending_->action}, {"object", pending_->object}, {"deadline", pending_->deadline}}
                            : json(nullptr);
    if (task_name_) s["task"] = {{"name", *task_name_}, {"status", task_ ? "running" : "done"}};
    else s["task"] = nullptr;
    return s;
  }

  json reject(const std::string& code, const std::string& message) const {
    return {{"version", kProtocolVersion}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
  }

  void emit(std::string kind, json payload) {
    std::uint64_t seq = events_.empty() ? 1 : events_.back().seq + 1;
    events_.push_back({seq, std::move(kind), time_, std::move(payload)});
    cv_.notify_all();
  }

  void dispatch(const json& command) {
    if (!command.is_object()) throw ProtocolError("malformed", "command must be an object");
    if (command.value("version", kProtocolVersion) != kProtocolVersion)
      throw ProtocolError("unsupportedVersion", "unsupported protocol version");
    if (!command.contains("type") || !command.at("type").is_string())
      throw ProtocolError("malformed", "command needs a string \"type\"");
    const auto type = command.at("type").get<std::string>();
    if (type == "startTask") start_task(parse_task(command.at("task").get<std::string>()));
    else if (type == "requestAction")
      request_action(command.at("action").get<std::string>(), command.at("object").get<std::string>(),
                     command.value("source", std::string{}));
    else if (type == "instruct") instruct(command.at("instruction"), false);
    else if (type == "interrupt") instruct(command.at("instruction"), true);
    else if (type == "advance") {
      double s = command.at("seconds").get<double>();
      if (!(s >= 0.0)) throw ProtocolError("invalidArgument", "seconds must be >= 0");
      advance_locked(s);
    } else
      throw ProtocolError("unknownCommand", "unknown command type: " + type);
  }

  void require_object(const std::string& object) const {
    if (!system_.world().has_object(object)) throw ProtocolError("unknownObject", "unknown object: " + object);
  }

  bool is_gone(const std::string& object) const {
    for (const auto& [a, o] : executed_)
      if (o == object && a == "trash") return true;
    return false;
  }

  void start_task(Task task) {
    if (task_) throw ProtocolError("busy", "a task is already running");
    if (pending_) throw ProtocolError("busy", "an action is pending");
    ActiveTask t;
    t.task = task;
    for (const auto& o : system_.world().objects())
      if (!is_gone(o.id)) t.queue.push_back(o.id);
    task_ = std::move(t);
    task_name_ = to_string(task);
    step_task();
  }

  void request_action(const std::string& action, const std::string& object, const std::string& source) {
    if (!system_.world().actions().contains(action)) throw ProtocolError("unknownAction", "unknown action: " + action);
    require_object(object);
    if (pending_) throw ProtocolError("busy", "an action is pending");
    if (is_gone(object)) throw ProtocolError("invalidArgument", "object already trashed: " + object);
    auto d = decide_action(system_, action, object, config_.obedience_threshold);
    if (d.decision == Decision::refuse) {
      json payload = refusal(action, object, d, false);
      payload["requestedBy"] = source;
      emit("actionRefused", std::move(payload));
      return;
    }
    announce(action, object, d, false);
  }

  json refusal(const std::string& action, const std::string& object, const DecisionDetail& d, bool announced) const {
    json f = json::object();
    for (const auto& [a, p] : d.forbiddenness) f[a] = p;
    json violated = json::array();
    const auto g = system_.posterior_grounding(object);
    for (const auto& [a, p] : d.forbiddenness)
      for (const auto& r : system_.rules().for_action(a))
        if (eval_rule(r, g) >= system_.config().learner.tau) violated.push_back(format_rule(r));
    json stored = json::array();
    for (const auto& [a, p] : d.forbiddenness)
      if (auto perm = system_.world().permission(a, object); perm && perm->polarity() == Polarity::forbid)
        stored.push_back(permission_to_json(*perm));
    return {{"action", action},
            {"object", object},
            {"forbiddenness", std::move(f)},
            {"violatedRules", std::move(violated)},
            {"forbiddingPermissions", std::move(stored)},
            {"announced", announced},
            {"task", task_ ? json(to_string(task_->task)) : json(nullptr)},
            {"message", "Sorry, I cannot " + action + " " + object + "."}};
  }

  void announce(const std::string& action, const std::string& object, const DecisionDetail& d, bool from_task) {
    pending_ = Pending{action, object, time_ + config_.announce_window, from_task};
    json f = json::object();
    for (const auto& [a, p] : d.forbiddenness) f[a] = p;
    emit("actionAnnounced", {{"action", action},
                             {"object", object},
                             {"deadline", pending_->deadline},
                             {"window", config_.announce_window},
                             {"forbiddenness", std::move(f)},
                             {"task", from_task && task_ ? json(to_string(task_->task)) : json(nullptr)}});
    if (config_.announce_window <= 0.0) close_window();
  }

  // Window closed: re-check the decision against what was learned meanwhile.
  void close_window() {
    auto p = *pending_;
    auto d = decide_action(system_, p.action, p.object, config_.obedience_threshold);
    if (d.decision == Decision::refuse) {
      auto payload = refusal(p.action, p.object, d, true);
      pending_.reset();
      if (p.from_task && task_) task_->refused.push_back(p.object);
      emit("actionRefused", std::move(payload));
    } else {
      pending_.reset();
      executed_.emplace_back(p.action, p.object);
      if (p.from_task && task_) task_->executed.push_back(p.object);
      emit("actionExecuted", {{"action", p.action}, {"object", p.object}, {"task", p.from_task && task_ ? json(to_string(task_->task)) : json(nullptr)}});
    }
    if (p.from_task) step_task();
  }

  // Walks the task queue until an action is announced or the task ends.
  void step_task() {
    while (task_ && !pending_) {
      if (task_->queue.empty()) {
        json payload{{"task", to_string(task_->task)}, {"executed", task_->executed}, {"refused", task_->refused}};
        task_.reset();
        emit("taskDone", std::move(payload));
        return;
      }
      auto object = task_->queue.front();
      task_->queue.pop_front();
      if (is_gone(object)) continue;
      const auto action = task_action(task_->task);
      auto d = decide_action(system_, action, object, config_.obedience_threshold);
      if (d.decision == Decision::refuse) {
        task_->refused.push_back(object);
        emit("actionRefused", refusal(action, object, d, false));
        continue;
      }
      announce(action, object, d, true);
    }
  }

  void advance_locked(double seconds) {
    time_ += seconds;
    while (pending_ && pending_->deadline <= time_) close_window();
  }

  void instruct(const json& body, bool interrupt) {
    if (interrupt && !pending_) throw ProtocolError("noOpenWindow", "interrupt is only valid during an announce window");
    auto instr = instruction_from_json(body, system_.world());
    for (const auto& c : instr.claims) require_object(c.object);
    if (instr.permission) require_object(instr.permission->object);

    std::optional<Pending> cancelled;
    if (interrupt) {
      cancelled = pending_;
      pending_.reset();
      if (cancelled->from_task && task_) task_->refused.push_back(cancelled->object);
    }
    const auto rules_before = system_.rules();
    auto report = system_.handle_instruction(instr);
    if (!(system_.rules() == rules_before)) {
      json added = json::array(), removed = json::array();
      for (const auto& r : system_.rules())
        if (!rules_before.contains(r)) added.push_back(format_rule(r));
      for (const auto& r : rules_before)
        if (!system_.rules().contains(r)) removed.push_back(format_rule(r));
      emit("ruleLearned", {{"rules", rules_to_json(system_.rules())},
                           {"added", std::move(added)},
                           {"removed", std::move(removed)},
                           {"reinduced", report.reinduced}});
    }
    emit("ownershipUpdated", {{"ownership", ownership_to_json(system_)},
                              {"permissions", permissions_to_json(system_.world())},
                              {"conflictFraction", system_.conflict_fraction()},
                              {"conflictBefore", report.conflict_before},
                              {"inconsistentObservation", report.inconsistent_observation}});
    if (cancelled) {
      emit("mistakeCorrected", {{"action", cancelled->action},
                                {"object", cancelled->object},
                                {"cancelled", true},
                                {"instruction", instruction_to_json(instr)}});
      if (cancelled->from_task) step_task();
    } else if (instr.permission && instr.permission->polarity() == Polarity::forbid) {
      // A forbid on something already done is a correction after the fact.
      for (const auto& [a, o] : executed_)
        if (o == instr.permission->object && a == instr.permission->action) {
          emit("mistakeCorrected", {{"action", a},
                                    {"object", o},
                                    {"cancelled", false},
                                    {"instruction", instruction_to_json(instr)}});
          break;
        }
    }
  }

  std::string id_;
  SessionConfig config_;
  OwnershipSystem system_;
  double time_ = 0.0;
  std::optional<Pending> pending_;
  std::optional<ActiveTask> task_;
  std::optional<std::string> task_name_;
  std::vector<std::pair<std::string, std::string>> executed_;
  std::vector<SessionEvent> events_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
};

class SessionManager {
 public:
  // Returns {sessionId, snapshot}.
  json create(const json& config) {
    auto c = session_config_from_json(config);
    std::lock_guard lock(mu_);
    auto id = "s" + std::to_string(++counter_);
    auto session = std::make_shared<Session>(id, std::move(c));
    auto snapshot = session->query_state();
    sessions_.emplace(id, std::move(session));
    return {{"version", kProtocolVersion}, {"sessionId", id}, {"snapshot", std::move(snapshot)}};
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ProtocolError("unknownSession", "unknown session: " + id);
    return it->second;
  }

  json submit(const std::string& id, const json& command) { return get(id)->submit(command); }
  json query_state(const std::string& id) const { return get(id)->query_state(); }

  std::vector<std::shared_ptr<Session>> all() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [id, s] : sessions_) out.push_back(s);
    return out;
  }

  void advance_all(double seconds) {
    for (auto& s : all()) s->advance(seconds);
  }

 private:
  mutable std::mutex mu_;
  std::uint64_t counter_ = 0;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace ownnorm
