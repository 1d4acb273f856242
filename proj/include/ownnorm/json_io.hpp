#pragma once

// JSON shapes shared by the CLI and the session protocol. Rules always travel
// as rule text.

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ownership_infer.hpp"
#include "task_agent.hpp"

namespace ownnorm {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

inline json rules_to_json(const RuleSet& rules) {
  json out = json::array();
  for (const auto& r : rules) out.push_back(format_rule(r));
  return out;
}

inline json permission_to_json(const Permission& p) {
  return {{"action", p.action},
          {"object", p.object},
          {"polarity", std::string(to_string(p.polarity()))},
          {"certainty", p.certainty},
          {"source", p.source}};
}

inline json object_to_json(const ObjectState& o) {
  json j{{"id", o.id}, {"position", o.position}, {"color", o.color}, {"lastInteraction", o.last_interaction}};
  j["area"] = o.area ? json(*o.area) : json(nullptr);
  return j;
}

inline ObjectState object_from_json(const json& j) {
  ObjectState o;
  o.id = j.at("id").get<std::string>();
  o.position = j.at("position").get<std::array<double, 3>>();
  o.color = j.at("color").get<std::string>();
  if (j.contains("lastInteraction")) o.last_interaction = j.at("lastInteraction").get<std::map<std::string, double>>();
  if (j.contains("area") && !j.at("area").is_null()) o.area = j.at("area").get<std::string>();
  return o;
}

// {object: {agent: {prior, posterior, claimed}}}
inline json ownership_to_json(const OwnershipSystem& system) {
  json out = json::object();
  for (const auto& o : system.world().objects()) {
    const auto post = system.posterior_grounding(o.id);
    json row = json::object();
    for (const auto& [agent, p] : post.ownership) {
      auto c = system.world().claimed(o.id, agent);
      row[agent] = {{"prior", system.prior(o.id, agent)}, {"posterior", p}, {"claimed", c ? json(*c) : json(nullptr)}};
    }
    out[o.id] = std::move(row);
  }
  return out;
}

inline json permissions_to_json(const World& world) {
  json out = json::array();
  for (const auto& p : world.permissions()) out.push_back(permission_to_json(p));
  return out;
}

inline json world_snapshot(const OwnershipSystem& system) {
  const auto& w = system.world();
  json objects = json::array();
  for (const auto& o : w.objects()) objects.push_back(object_to_json(o));
  return {{"version", kProtocolVersion},
          {"clock", w.clock()},
          {"agents", w.agents()},
          {"objects", std::move(objects)},
          {"ownership", ownership_to_json(system)},
          {"permissions", permissions_to_json(w)},
          {"rules", rules_to_json(system.rules())},
          {"conflictFraction", system.conflict_fraction()}};
}

// Accepted shape:
//   {"claims": [{"object", "agent", "probability"?, "exclusive"?}],
//    "permission": {"action", "object", "polarity": "forbid"|"allow", "certainty"?},
//    "rule": "<rule text>", "source": "<agent>"}
// Throws ParseError for bad rule text, std::invalid_argument otherwise.
inline Instruction instruction_from_json(const json& j, const World& world) {
  if (!j.is_object()) throw std::invalid_argument("instruction must be an object");
  Instruction instr;
  instr.source = j.value("source", std::string{});
  instr.timestamp = j.value("timestamp", world.clock());
  if (j.contains("claims")) {
    for (const auto& c : j.at("claims")) {
      Claim claim{c.at("object").get<std::string>(), c.at("agent").get<std::string>(), c.value("probability", 1.0),
                  c.value("exclusive", false)};
      instr.claims.push_back(std::move(claim));
    }
  }
  if (j.contains("permission") && !j.at("permission").is_null()) {
    const auto& p = j.at("permission");
    auto polarity = p.value("polarity", std::string("forbid"));
    if (polarity != "forbid" && polarity != "allow") throw std::invalid_argument("polarity must be forbid or allow");
    double certainty = p.value("certainty", polarity == "forbid" ? 1.0 : 0.0);
    instr.permission = Permission{p.at("action").get<std::string>(), p.at("object").get<std::string>(), certainty,
                                  instr.source};
  }
  if (j.contains("rule") && !j.at("rule").is_null())
    instr.rule = parse_rule(j.at("rule").get<std::string>(), world.vocabulary(), world.actions());
  if (instr.empty()) throw std::invalid_argument("instruction carries no claim, permission or rule");
  return instr;
}

inline json instruction_to_json(const Instruction& instr) {
  json j{{"source", instr.source}, {"timestamp", instr.timestamp}};
  json claims = json::array();
  for (const auto& c : instr.claims)
    claims.push_back({{"object", c.object}, {"agent", c.agent}, {"probability", c.probability}, {"exclusive", c.exclusive}});
  j["claims"] = std::move(claims);
  if (instr.permission)
    j["permission"] = {{"action", instr.permission->action},
                       {"object", instr.permission->object},
                       {"polarity", std::string(to_string(instr.permission->polarity()))},
                       {"certainty", instr.permission->certainty}};
  if (instr.rule) j["rule"] = format_rule(*instr.rule);
  return j;
}

inline json task_run_to_json(const TaskRun& run) {
  json log = json::array();
  for (const auto& r : run.log) {
    json f = json::object();
    for (const auto& [a, p] : r.forbiddenness) f[a] = p;
    log.push_back({{"object", r.object},
                   {"forbiddenness", std::move(f)},
                   {"decision", r.decision == Decision::act ? "act" : "refuse"},
                   {"trulyForbidden", r.truly_forbidden},
                   {"mistake", r.mistake}});
  }
  return {{"task", to_string(run.task)},
          {"obedienceThreshold", run.obedience_threshold},
          {"visitOrder", run.visit_order},
          {"mistakes", run.mistakes},
          {"log", std::move(log)}};
}

}  // namespace ownnorm
