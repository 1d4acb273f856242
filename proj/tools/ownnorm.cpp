// ownnorm: experiments, an interactive teaching loop, and the session server.

#include <CLI11.hpp>
#include <ownnorm/http_service.hpp>
#include <ownnorm/sim.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace ownnorm;

namespace {

constexpr const char* kCsvSchema = "# ownnorm-results v1";

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Table {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out, const std::string& format) const {
    if (format == "csv") {
      out << kCsvSchema << " experiment=" << experiment << "\n";
      for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
      out << "\n";
      for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << "\n";
      }
      return;
    }
    json rows_json = json::array();
    for (const auto& r : rows) {
      json row = json::object();
      for (std::size_t i = 0; i < columns.size(); ++i) row[columns[i]] = r[i];
      rows_json.push_back(std::move(row));
    }
    out << json{{"schema", "ownnorm-results"}, {"version", 1}, {"experiment", experiment}, {"columns", columns},
                {"rows", std::move(rows_json)}}
               .dump(2)
        << "\n";
  }
};

struct ExperimentArgs {
  std::size_t trials = 100;
  std::uint64_t seed = 7;
  std::size_t threads = 0;
  std::string fraction = "all";
  std::string noise = "both";
  std::string condition = "all";
  std::string task = "all";
  std::string learning = "both";
  std::string out = "csv";
  std::string config;
};

std::vector<std::string> split_choices(const std::string& value, const std::string& all_token,
                                       const std::vector<std::string>& all) {
  if (value == all_token) return all;
  return {value};
}

Table norm_table(const SimConfig& base, const ExperimentArgs& args) {
  Table t{"norm", {"trial", "fraction", "noise", "accuracy", "f1"}, {}};
  std::vector<double> fractions;
  if (args.fraction == "all") fractions = {1.0, 0.5, 0.25};
  else fractions = {std::stod(args.fraction)};
  for (const auto& noise : split_choices(args.noise, "both", {"off", "on"})) {
    if (noise != "on" && noise != "off") throw std::invalid_argument("--noise must be on, off or both");
    for (double f : fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("--fraction must be in (0,1]");
      auto rows = run_norm_learning(base, f, noise == "on");
      for (const auto& r : rows)
        t.rows.push_back({std::to_string(r.trial), fixed(f), noise, fixed(r.accuracy), fixed(r.f1)});
      t.rows.push_back({"mean", fixed(f), noise, fixed(mean_of(rows, [](const NormRow& r) { return r.accuracy; })),
                        fixed(mean_of(rows, [](const NormRow& r) { return r.f1; }))});
      t.rows.push_back({"baseline", fixed(f), noise,
                        fixed(mean_of(rows, [](const NormRow& r) { return r.baseline_accuracy; })),
                        fixed(mean_of(rows, [](const NormRow& r) { return r.baseline_f1; }))});
    }
  }
  return t;
}

Table predict_table(const SimConfig& base, const ExperimentArgs& args) {
  Table t{"predict", {"trial", "condition", "accuracy", "f1"}, {}};
  for (const auto& c : split_choices(args.condition, "all", {"noneOff", "learnOn", "givenOn"})) {
    auto condition = parse_condition(c);
    auto rows = run_prediction_inference(base, condition);
    for (const auto& r : rows) t.rows.push_back({std::to_string(r.trial), c, fixed(r.accuracy), fixed(r.f1)});
    t.rows.push_back({"mean", c, fixed(mean_of(rows, [](const PredictionRow& r) { return r.accuracy; })),
                      fixed(mean_of(rows, [](const PredictionRow& r) { return r.f1; }))});
  }
  return t;
}

Table task_table(const SimConfig& base, const ExperimentArgs& args) {
  Table t{"task",
          {"trial", "task", "learning", "accuracy", "f1", "mistakes", "ownership_accuracy", "ownership_f1"},
          {}};
  for (const auto& name : split_choices(args.task, "all", {"collectAll", "trashAll"})) {
    auto task = parse_task(name);
    for (const auto& l : split_choices(args.learning, "both", {"on", "off"})) {
      if (l != "on" && l != "off") throw std::invalid_argument("--learning must be on, off or both");
      auto rows = run_task_experiment(base, task, l == "on");
      auto emit = [&](const std::string& trial, double acc, double f1, double mistakes, double oacc, double of1) {
        t.rows.push_back({trial, name, l, fixed(acc), fixed(f1), fixed(mistakes), fixed(oacc), fixed(of1)});
      };
      for (const auto& r : rows)
        emit(std::to_string(r.trial), r.rule_accuracy, r.rule_f1, r.mistakes, r.ownership_accuracy, r.ownership_f1);
      emit("mean", mean_of(rows, [](const TaskRow& r) { return r.rule_accuracy; }),
           mean_of(rows, [](const TaskRow& r) { return r.rule_f1; }),
           mean_of(rows, [](const TaskRow& r) { return r.mistakes; }),
           mean_of(rows, [](const TaskRow& r) { return r.ownership_accuracy; }),
           mean_of(rows, [](const TaskRow& r) { return r.ownership_f1; }));
    }
  }
  return t;
}

// key=value lines, '#' comments. Keys are long flag names without dashes.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// repl

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

constexpr const char* kReplHelp =
    "commands:\n"
    "  forbid|allow <action> [if ...]     teach a rule\n"
    "  forbid|allow <action> <object>     teach a permission\n"
    "  claim <object> <agent> [p] [exclusive]\n"
    "  query own <object> <agent>         prior and posterior ownership\n"
    "  rules                              learned rules\n"
    "  objects                            objects with color and position\n"
    "  state                              JSON snapshot\n"
    "  run collectAll|trashAll            run a task with oracle corrections\n"
    "  help, quit\n";

int run_repl(std::uint64_t seed, std::istream& in, std::ostream& out) {
  auto rng = trial_rng(seed, 0);
  auto sim = generate_world(SimConfig{}, rng);
  OwnershipSystem system(std::move(sim.world));
  const auto& truth = sim.truth;
  out << "world: " << system.world().objects().size() << " objects, agents";
  for (const auto& a : system.world().agents()) out << " " << a;
  out << "\n";
  std::string line;
  while (std::getline(in, line)) {
    auto t = tokens(line);
    if (t.empty() || t[0][0] == '#') continue;
    try {
      const auto& w = system.world();
      if (t[0] == "quit" || t[0] == "exit") break;
      if (t[0] == "help") {
        out << kReplHelp;
      } else if (t[0] == "rules") {
        if (system.rules().empty()) out << "(no rules)\n";
        for (const auto& r : system.rules()) out << format_rule(r) << "\n";
      } else if (t[0] == "objects") {
        for (const auto& o : w.objects())
          out << o.id << " " << o.color << " (" << fixed(o.position[0]) << ", " << fixed(o.position[1]) << ")\n";
      } else if (t[0] == "state") {
        out << world_snapshot(system).dump(2) << "\n";
      } else if (t[0] == "claim") {
        if (t.size() < 3) throw std::invalid_argument("usage: claim <object> <agent> [p] [exclusive]");
        Claim c{t[1], t[2], t.size() > 3 && t[3] != "exclusive" ? std::stod(t[3]) : 1.0,
                t.back() == "exclusive"};
        Instruction instr;
        instr.claims.push_back(c);
        system.handle_instruction(instr);
        out << "ok\n";
      } else if (t[0] == "query") {
        if (t.size() != 4 || t[1] != "own") throw std::invalid_argument("usage: query own <object> <agent>");
        out << "prior " << fixed(system.prior(t[2], t[3])) << " posterior " << fixed(system.posterior(t[2], t[3]))
            << "\n";
      } else if (t[0] == "run") {
        if (t.size() != 2) throw std::invalid_argument("usage: run collectAll|trashAll");
        auto run = run_task_with_feedback(system, parse_task(t[1]), truth, rng);
        out << "mistakes " << run.mistakes << "\n";
        for (const auto& r : system.rules()) out << format_rule(r) << "\n";
      } else if ((t[0] == "forbid" || t[0] == "allow") && t.size() == 3 && w.has_object(t[2])) {
        Instruction instr;
        instr.permission = Permission{t[1], t[2], t[0] == "forbid" ? 1.0 : 0.0, "user"};
        auto report = system.handle_instruction(instr);
        out << (report.reinduced ? "ok (re-induced)\n" : "ok\n");
      } else if (t[0] == "forbid" || t[0] == "allow") {
        Instruction instr;
        instr.rule = parse_rule(line, w.vocabulary(), w.actions());
        auto report = system.handle_instruction(instr);
        if (report.rule_step && !report.rule_step->changed) out << "no change (score " << fixed(report.rule_step->score) << ")\n";
        for (const auto& r : system.rules()) out << format_rule(r) << "\n";
      } else {
        out << "unknown command: " << t[0] << " (try help)\n";
      }
    } catch (const std::exception& e) {
      out << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ownnorm: learn ownership norms from instruction"};
  app.require_subcommand(1);

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "run a simulated experiment and print per-trial and summary rows");
  experiment->require_subcommand(1);
  std::map<std::string, CLI::Option*> flags;
  auto add_common = [&](CLI::App* sub) {
    flags["trials"] = sub->add_option("--trials", ex.trials, "number of trials")->check(CLI::PositiveNumber);
    flags["seed"] = sub->add_option("--seed", ex.seed, "base seed");
    flags["threads"] = sub->add_option("--threads", ex.threads, "worker threads (0 = all cores)");
    flags["out"] = sub->add_option("--out", ex.out, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--config", ex.config, "key=value file; flags override it");
  };
  auto* norm = experiment->add_subcommand("norm", "norm learning from permissions");
  add_common(norm);
  norm->add_option("--fraction", ex.fraction, "fraction of objects with permissions, or all");
  norm->add_option("--noise", ex.noise, "ownership noise: on, off, both")->check(CLI::IsMember({"on", "off", "both"}));
  auto* predict = experiment->add_subcommand("predict", "ownership prediction with and without rule inference");
  add_common(predict);
  predict->add_option("--condition", ex.condition, "noneOff, learnOn, givenOn or all")
      ->check(CLI::IsMember({"noneOff", "learnOn", "givenOn", "all"}));
  auto* task = experiment->add_subcommand("task", "task execution with corrective feedback");
  add_common(task);
  task->add_option("--task", ex.task, "collectAll, trashAll or all")
      ->check(CLI::IsMember({"collectAll", "trashAll", "all"}));
  task->add_option("--learning", ex.learning, "on, off or both")->check(CLI::IsMember({"on", "off", "both"}));

  std::uint64_t repl_seed = 7;
  auto* repl = app.add_subcommand("repl", "line-oriented teaching loop over a simulated world (type help)");
  repl->add_option("--seed", repl_seed, "world seed");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "start the session service (HTTP + server-sent events)");
  serve->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 2;
  }

  if (*repl) return run_repl(repl_seed, std::cin, std::cout);

  if (*serve) {
    try {
      HttpService service;
      std::cerr << "serving on http://" << host << ":" << port << "\n";
      service.listen(host, port);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App* sub = *norm ? norm : *predict ? predict : task;
  try {
    if (!ex.config.empty()) {
      std::map<std::string, std::function<void(const std::string&)>> setters{
          {"trials", [&](const std::string& v) { ex.trials = std::stoul(v); }},
          {"seed", [&](const std::string& v) { ex.seed = std::stoull(v); }},
          {"threads", [&](const std::string& v) { ex.threads = std::stoul(v); }},
          {"out", [&](const std::string& v) { ex.out = v; }},
          {"fraction", [&](const std::string& v) { ex.fraction = v; }},
          {"noise", [&](const std::string& v) { ex.noise = v; }},
          {"condition", [&](const std::string& v) { ex.condition = v; }},
          {"task", [&](const std::string& v) { ex.task = v; }},
          {"learning", [&](const std::string& v) { ex.learning = v; }},
      };
      for (const auto& [key, value] : read_config_file(ex.config)) {
        auto it = setters.find(key);
        if (it == setters.end()) {
          std::cerr << "unknown config key: " << key << "\n";
          return 2;
        }
        auto* opt = sub->get_option_no_throw("--" + key);
        if (opt && opt->count() > 0) continue;
        it->second(value);
      }
      if (ex.out != "csv" && ex.out != "json") {
        std::cerr << "out must be csv or json\n";
        return 2;
      }
    }
    SimConfig base;
    base.trials = ex.trials;
    base.seed = ex.seed;
    base.threads = ex.threads;
    Table table = *norm ? norm_table(base, ex) : *predict ? predict_table(base, ex) : task_table(base, ex);
    table.write(std::cout, ex.out);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
