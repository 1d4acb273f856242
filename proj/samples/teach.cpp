// Teach a robot that Xuan's blocks must not be trashed, then ask about a block
// it has never been told about.

#include <ownnorm/task_agent.hpp>

#include <iostream>

using namespace ownnorm;

int main() {
  World world(Vocabulary::builtin(), ActionRegistry::builtin());
  world.add_agent("xuan");
  world.add_agent("jake");
  world.set_clock(100);
  world.add_object({"o1", {0.6, 0.0, 0.0}, "red", {{"xuan", 99}}, {}});
  world.add_object({"o2", {0.62, 0.05, 0.0}, "red", {{"xuan", 97}}, {}});
  world.add_object({"o3", {-0.6, 0.0, 0.0}, "blue", {{"jake", 98}}, {}});

  OwnershipSystem robot(std::move(world));

  Instruction halt;
  halt.source = "xuan";
  halt.claims = {{"o1", "xuan", 1.0, false}, {"o3", "xuan", 0.0, false}};
  halt.permission = Permission::forbid("trash", "o1");
  halt.rule = parse_rule("forbid trash if ownedBy xuan", robot.world().vocabulary(), robot.world().actions());
  robot.handle_instruction(halt);

  for (const auto& r : robot.rules()) std::cout << format_rule(r) << "\n";
  for (const auto* id : {"o2", "o3"}) {
    auto d = decide_action(robot, "trash", id, 0.5);
    std::cout << id << ": P(xuan owns) = " << robot.posterior(id, "xuan") << ", "
              << (d.decision == Decision::refuse ? "refuse" : "trash") << "\n";
  }
}
