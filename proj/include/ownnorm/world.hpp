#pragma once

// Tracked objects and agents, the probabilistic ownership graph (claims shadow
// percept predictions, which shadow the default prior), and the
// object-specific permission database.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "object_state.hpp"
#include "percept.hpp"
#include "permission.hpp"
#include "prob_eval.hpp"

namespace ownnorm {

struct WorldConfig {
  double default_prior = kDefaultOwnershipPrior;
  KlrConfig klr;
  bool percept_prediction = true;
};

class World {
 public:
  explicit World(Vocabulary vocab = Vocabulary::builtin(), ActionRegistry actions = ActionRegistry::builtin(),
                 WorldConfig config = {})
      : vocab_(std::move(vocab)), actions_(std::move(actions)), config_(std::move(config)) {}

  const Vocabulary& vocabulary() const { return vocab_; }
  const ActionRegistry& actions() const { return actions_; }
  ActionRegistry& actions() { return actions_; }
  const WorldConfig& config() const { return config_; }

  double clock() const { return clock_; }
  void set_clock(double t) {
    if (t < 0) throw std::invalid_argument("negative clock");
    clock_ = t;
  }

  void add_agent(const std::string& name) {
    if (has_agent(name)) throw std::invalid_argument("duplicate agent: " + name);
    for (Sort s : {Sort::color, Sort::area})
      if (vocab_.is_constant(s, name)) throw std::invalid_argument("agent name clashes with a constant: " + name);
    vocab_.add_constant(Sort::agent, name);
    agents_.push_back(name);
  }

  void add_object(ObjectState obj) {
    if (obj.id.empty() || has_object(obj.id)) throw std::invalid_argument("duplicate or empty object id: " + obj.id);
    if (!vocab_.is_constant(Sort::color, obj.color)) throw std::invalid_argument("color outside palette: " + obj.color);
    for (const auto& [agent, t] : obj.last_interaction)
      if (t < 0) throw std::invalid_argument("negative interaction timestamp");
    if (obj.area) vocab_.add_constant(Sort::area, *obj.area);
    objects_.push_back(std::move(obj));
    refresh_predictions();
  }

  const std::vector<std::string>& agents() const { return agents_; }
  const std::vector<ObjectState>& objects() const { return objects_; }

  bool has_agent(const std::string& a) const { return std::find(agents_.begin(), agents_.end(), a) != agents_.end(); }
  bool has_object(const std::string& o) const { return find_object(o) != nullptr; }

  const ObjectState& object(const std::string& id) const {
    const auto* o = find_object(id);
    if (!o) throw std::invalid_argument("unknown object: " + id);
    return *o;
  }

  // Explicit claim; retrains the agent's percept model. An exclusive claim
  // zeroes every other agent's claim on the object and drops permissions on
  // it that those agents issued.
  void record_claim(const Claim& claim) {
    require_object(claim.object);
    require_agent(claim.agent);
    if (!(claim.probability >= 0.0 && claim.probability <= 1.0)) throw std::invalid_argument("claim probability outside [0,1]");
    claims_[{claim.object, claim.agent}] = claim.probability;
    std::vector<std::string> touched{claim.agent};
    if (claim.exclusive) {
      for (const auto& other : agents_) {
        if (other == claim.agent) continue;
        claims_[{claim.object, other}] = 0.0;
        touched.push_back(other);
        std::erase_if(permissions_, [&](const Permission& p) { return p.object == claim.object && p.source == other; });
      }
    }
    for (const auto& a : touched) retrain(a);
  }

  // Upsert keyed by (action, object); the entry moves to the end of the
  // instruction order.
  void record_permission(const Permission& perm) {
    require_object(perm.object);
    if (!actions_.contains(perm.action)) throw std::invalid_argument("unknown action: " + perm.action);
    if (!(perm.certainty >= 0.0 && perm.certainty <= 1.0)) throw std::invalid_argument("certainty outside [0,1]");
    std::erase_if(permissions_, [&](const Permission& p) { return p.action == perm.action && p.object == perm.object; });
    permissions_.push_back(perm);
  }

  const std::vector<Permission>& permissions() const { return permissions_; }

  std::optional<Permission> permission(const std::string& action, const std::string& object) const {
    for (const auto& p : permissions_)
      if (p.action == action && p.object == object) return p;
    return std::nullopt;
  }

  std::optional<double> claimed(const std::string& object, const std::string& agent) const {
    auto it = claims_.find({object, agent});
    if (it == claims_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::pair<std::string, std::string>, double>& claims() const { return claims_; }

  std::optional<double> percept_prediction(const std::string& object, const std::string& agent) const {
    auto it = predictions_.find({object, agent});
    if (it == predictions_.end()) return std::nullopt;
    return it->second;
  }

  const KlrModel* model(const std::string& agent) const {
    auto it = models_.find(agent);
    return it == models_.end() ? nullptr : &it->second;
  }

  double ownership_prior(const std::string& object, const std::string& agent) const {
    require_object(object);
    require_agent(agent);
    if (auto c = claimed(object, agent)) return *c;
    if (auto p = percept_prediction(object, agent)) return *p;
    return config_.default_prior;
  }

  Grounding grounding(const std::string& object) const {
    const auto& o = this->object(object);
    Grounding g{o.color, o.area, {}};
    for (const auto& a : agents_) g.ownership.emplace_back(a, ownership_prior(object, a));
    return g;
  }

  Example example(const Permission& p) const { return {p, grounding(p.object)}; }

  std::vector<Example> examples() const {
    std::vector<Example> out;
    out.reserve(permissions_.size());
    for (const auto& p : permissions_) out.push_back(example(p));
    return out;
  }

  std::vector<std::string> palette() const {
    const auto& c = vocab_.constants(Sort::color);
    return {c.begin(), c.end()};
  }

 private:
  const ObjectState* find_object(const std::string& id) const {
    for (const auto& o : objects_)
      if (o.id == id) return &o;
    return nullptr;
  }
  void require_object(const std::string& o) const {
    if (!has_object(o)) throw std::invalid_argument("unknown object: " + o);
  }
  void require_agent(const std::string& a) const {
    if (!has_agent(a)) throw std::invalid_argument("unknown agent: " + a);
  }

  void retrain(const std::string& agent) {
    if (!config_.percept_prediction) return;
    std::vector<TrainingPoint> data;
    for (const auto& [key, p] : claims_)
      if (key.second == agent) data.push_back({object(key.first), p, Provenance::claim});
    if (data.empty()) return;
    models_[agent] = KlrModel::train(agent, data, clock_, palette(), config_.klr);
    refresh_predictions(agent);
  }

  void refresh_predictions() {
    for (const auto& [agent, m] : models_) refresh_predictions(agent);
  }

  void refresh_predictions(const std::string& agent) {
    const auto& m = models_.at(agent);
    for (const auto& o : objects_) predictions_[{o.id, agent}] = m.predict(o);
  }

  Vocabulary vocab_;
  ActionRegistry actions_;
  WorldConfig config_;
  double clock_ = 0.0;
  std::vector<std::string> agents_;
  std::vector<ObjectState> objects_;
  std::map<std::pair<std::string, std::string>, double> claims_;
  std::map<std::pair<std::string, std::string>, double> predictions_;
  std::map<std::string, KlrModel> models_;
  std::vector<Permission> permissions_;
};

}  // namespace ownnorm
