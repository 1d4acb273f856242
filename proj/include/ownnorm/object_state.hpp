#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

namespace ownnorm {

struct ObjectState {
  std::string id;
  std::array<double, 3> position{};  // meters
  std::string color;
  // Simulation-clock seconds of each agent's latest interaction; absent = never.
  std::map<std::string, double> last_interaction;
  std::optional<std::string> area;
};

}  // namespace ownnorm
