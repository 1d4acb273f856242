// Acceptance suite: one PASS/FAIL line per criterion over the full 100-trial
// experiments with the default seed. With --strict the exit status is 1 when
// any criterion fails; otherwise it is 0 once every criterion has a verdict.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include "support.hpp"

using namespace ownnorm;
using namespace testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol + 1e-12; }

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

SimConfig default_config() {
  SimConfig c;
  c.trials = 100;
  return c;
}

double mean_acc(const auto& rows) { return mean_of(rows, [](const auto& r) { return r.accuracy; }); }
double mean_f1(const auto& rows) { return mean_of(rows, [](const auto& r) { return r.f1; }); }

// ---------------------------------------------------------------------------

void norm_learning() {
  struct Row {
    const char* label;
    double fraction;
    bool noisy;
    double acc, f1, tol;  // tol < 0: lower bounds
  };
  const std::vector<Row> rows{{"noiseless/1.00", 1.0, false, 0.97, 0.97, -1},
                              {"noiseless/0.50", 0.5, false, 0.945, 0.875, 0.06},
                              {"noiseless/0.25", 0.25, false, 0.787, 0.523, 0.08},
                              {"noisy/1.00", 1.0, true, 0.889, 0.840, 0.08},
                              {"noisy/0.50", 0.5, true, 0.842, 0.724, 0.08},
                              {"noisy/0.25", 0.25, true, 0.761, 0.519, 0.08}};
  const auto start = std::chrono::steady_clock::now();
  std::vector<NormRow> full;
  for (const auto& r : rows) {
    auto result = run_norm_learning(default_config(), r.fraction, r.noisy);
    if (r.fraction == 1.0 && !r.noisy) full = result;
    const double a = mean_acc(result), f = mean_f1(result);
    Outcome o;
    if (r.tol < 0) {
      o.pass = a >= r.acc && f >= r.f1;
      o.detail = fmt("accuracy %.3f (>= %.2f), F1 %.3f (>= %.2f)", a, r.acc, f, r.f1);
    } else {
      o.pass = within(a, r.acc, r.tol) && within(f, r.f1, r.tol);
      o.detail = fmt("accuracy %.3f (target %.3f +/- %.2f), F1 %.3f (target %.3f +/- %.2f)", a, r.acc, r.tol, f, r.f1, r.tol);
    }
    report(std::string("norm-learning ") + r.label, o);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report("norm-learning runtime", {seconds <= 300.0, fmt("%.1f s for all rows (<= 300 s)", seconds)});

  const double ba = mean_of(full, [](const NormRow& r) { return r.baseline_accuracy; });
  const double bf = mean_of(full, [](const NormRow& r) { return r.baseline_f1; });
  const bool all_zero = std::all_of(full.begin(), full.end(), [](const NormRow& r) { return r.baseline_f1 == 0.0; });
  report("norm-learning baseline", {within(ba, 0.583, 0.02) && all_zero && bf == 0.0,
                                    fmt("accuracy %.3f (target 0.583 +/- 0.02), F1 %.3f (exactly 0)", ba, bf)});
}

void prediction_inference() {
  std::vector<double> accs;
  bool pass = true;
  std::string detail;
  for (auto c : {InferenceCondition::noneOff, InferenceCondition::learnOn, InferenceCondition::givenOn}) {
    auto rows = run_prediction_inference(default_config(), c);
    const double a = mean_acc(rows), f = mean_f1(rows);
    accs.push_back(a);
    pass = pass && a >= 0.85 && f >= 0.68;
    detail += fmt("%s %.3f/%.3f; ", to_string(c).c_str(), a, f);
  }
  const double gap = *std::max_element(accs.begin(), accs.end()) - *std::min_element(accs.begin(), accs.end());
  detail += fmt("max accuracy gap %.3f (<= 0.03); bounds accuracy >= 0.85, F1 >= 0.68", gap);
  report("ownership prediction and inference", {pass && gap <= 0.03, detail});
}

void task_evaluation() {
  struct Expect {
    Task task;
    double baseline;
  };
  for (auto [task, baseline] : {Expect{Task::collectAll, 8.75}, Expect{Task::trashAll, 15.0}}) {
    auto on = run_task_experiment(default_config(), task, true);
    auto off = run_task_experiment(default_config(), task, false);
    const double m_on = mean_of(on, [](const TaskRow& r) { return r.mistakes; });
    const double m_off = mean_of(off, [](const TaskRow& r) { return r.mistakes; });
    const auto name = to_string(task);
    report("task " + name + " mistakes", {m_on <= 7.8 && m_on < baseline && m_on < m_off,
                                          fmt("%.2f (<= 7.8 and below baseline %.2f)", m_on, baseline)});
    report("task " + name + " no-learning baseline",
           {within(m_off, baseline, 0.5), fmt("%.2f (target %.2f +/- 0.5)", m_off, baseline)});
    if (task == Task::trashAll) {
      const double ra = mean_of(on, [](const TaskRow& r) { return r.rule_accuracy; });
      report("task trashAll final rule accuracy", {ra >= 0.82, fmt("%.3f (>= 0.82)", ra)});
    }
  }
}

// ---------------------------------------------------------------------------

void noisy_or_oracle() {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  int n = 0;
  for (int t = 0; t < 3000; ++t, ++n) {
    auto d = disjoint_draw(rng);
    for (bool neg : {false, true}) {
      Rule any{Polarity::forbid, "trash", {{"ownedBy", "any", neg}}};
      worst = std::max(worst, std::abs(eval_atom(any.conditions[0], as_grounding(d)) - enumerate({any}, d.color, d.p)));
    }
    for (const auto& r : d.rules)
      worst = std::max(worst, std::abs(eval_rule(r, as_grounding(d)) - enumerate({r}, d.color, d.p)));
    RuleSet set;
    for (const auto& r : d.rules) set.merge(r);
    worst = std::max(worst, std::abs(eval_rule_set(set, "trash", as_grounding(d)) - enumerate(d.rules, d.color, d.p)));
  }
  report("oracle noisy-or vs enumeration", {worst <= 1e-12, fmt("%d draws, max error %.2e (<= 1e-12)", n, worst)});
}

void rule_logic_oracle() {
  const auto objects = all_crisp_objects(3, true);
  const auto vocab = vocab_with(kAgents, true);
  std::mt19937_64 rng(2024);
  int diff_bad = 0, diff_n = 0;
  while (diff_n < 1000) {
    Rule minuend = random_rule(rng, 3, true, 2), subtrahend = minuend;
    for (int k = 0; k < 1 + diff_n % 3; ++k) subtrahend.conditions.push_back(random_atom(rng, 3, true));
    try {
      subtrahend = canonicalize(subtrahend);
    } catch (const std::invalid_argument&) {
      continue;
    }
    ++diff_n;
    auto pieces = rule_diff(minuend, subtrahend, vocab);
    auto m = extension({minuend}, objects), s = extension({subtrahend}, objects);
    std::vector<int> hits(objects.size(), 0);
    for (const auto& p : pieces) {
      auto e = extension({p}, objects);
      for (std::size_t i = 0; i < objects.size(); ++i) hits[i] += e[i];
    }
    for (std::size_t i = 0; i < objects.size(); ++i)
      if ((hits[i] > 0) != (m[i] && !s[i]) || hits[i] > 1) {
        ++diff_bad;
        break;
      }
  }
  report("oracle ruleDiff grounded semantics", {diff_bad == 0, fmt("%d instances, %d mismatches", diff_n, diff_bad)});

  int merge_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Rule> pushed;
    RuleSet set;
    for (int k = 0; k < 1 + trial % 5; ++k) {
      pushed.push_back(random_rule(rng, 3, true, 3));
      set.merge(pushed.back(), vocab);
    }
    if (extension(set.rules(), objects) != extension(pushed, objects)) ++merge_bad;
  }
  report("oracle mergeRule grounded semantics", {merge_bad == 0, fmt("1000 instances, %d mismatches", merge_bad)});
}

void bayes_oracle() {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  int checked = 0;
  for (int t = 0; t < 4000; ++t) {
    auto d = disjoint_draw(rng);
    RuleSet rules;
    for (const auto& r : d.rules) rules.merge(r);
    for (bool obs : {true, false})
      for (std::size_t a = 0; a < d.p.size(); ++a) {
        auto r = bayes_update(rules, "trash", as_grounding(d), kAgents[a], obs);
        if (r.inconsistent) continue;
        worst = std::max(worst, std::abs(r.posterior - joint_posterior(d.rules, d.color, d.p, a, obs)));
        ++checked;
      }
  }
  report("oracle bayesUpdate vs joint enumeration", {worst <= 1e-12, fmt("%d updates, max error %.2e (<= 1e-12)", checked, worst)});

  int changed = 0, n = 0;
  std::uniform_real_distribution<double> prob(0, 1);
  for (int t = 0; t < 1000; ++t) {
    RuleSet rules;
    for (int k = 0; k < 3; ++k) {
      Rule r{Polarity::forbid, "trash", {}};
      if (rng() % 3) r.conditions.push_back({"isColored", kColors[rng() % 4], rng() % 2 == 0});
      rules.merge(r);
    }
    Grounding g{kColors[rng() % 4], std::nullopt, {}};
    for (const auto& a : kAgents) g.ownership.emplace_back(a, prob(rng));
    for (const auto& a : kAgents)
      for (bool obs : {true, false}) {
        ++n;
        if (bayes_update(rules, "trash", g, a, obs).posterior != g.owned_by(a)) ++changed;
      }
  }
  report("oracle updates without ownership rules are identities", {changed == 0, fmt("%d updates, %d changed", n, changed)});
}

void klr_checks() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int config = 0; config < 100; ++config) {
    KlrConfig kc;
    kc.max_iterations = 0;
    kc.gamma = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
    kc.lambda = std::uniform_real_distribution<double>(0.001, 0.1)(rng);
    auto m = train(random_klr_data(rng), 1e4, kc);
    std::vector<double> w(m.training_points().size());
    for (auto& x : w) x = normal(rng);
    worst = std::max(worst, gradient_relative_error(m, w));
  }
  report("KLR gradient vs central differences", {worst <= 1e-5, fmt("100 configurations, max relative error %.2e (<= 1e-5)", worst)});

  int increases = 0;
  std::mt19937_64 rng2(202);
  for (int config = 0; config < 100; ++config) {
    auto m = train(random_klr_data(rng2), 1e4);
    const auto& h = m.loss_history();
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] > h[i - 1]) ++increases;
  }
  report("KLR training loss monotone", {increases == 0, fmt("100 configurations, %d increasing steps", increases)});
}

void determinism() {
  auto serialize = [](const SimConfig& c) {
    std::ostringstream out;
    out.precision(17);
    for (double f : {1.0, 0.25})
      for (bool noisy : {false, true})
        for (const auto& r : run_norm_learning(c, f, noisy))
          out << r.trial << ',' << r.accuracy << ',' << r.f1 << ',' << r.baseline_accuracy << ',' << r.rules << '\n';
    for (auto cond : {InferenceCondition::noneOff, InferenceCondition::learnOn, InferenceCondition::givenOn})
      for (const auto& r : run_prediction_inference(c, cond)) out << r.trial << ',' << r.accuracy << ',' << r.f1 << '\n';
    for (auto task : {Task::collectAll, Task::trashAll})
      for (bool learning : {true, false})
        for (const auto& r : run_task_experiment(c, task, learning))
          out << r.trial << ',' << r.mistakes << ',' << r.rule_accuracy << ',' << r.ownership_f1 << '\n';
    return out.str();
  };
  SimConfig a = default_config();
  a.trials = 12;
  a.threads = 1;
  SimConfig b = a;
  b.threads = 4;
  const auto first = serialize(a), second = serialize(a), threaded = serialize(b);
  report("determinism", {first == second && first == threaded,
                         fmt("%zu bytes; repeat %s, thread-count %s", first.size(), first == second ? "identical" : "differs",
                             first == threaded ? "identical" : "differs")});
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::function<void()>> suites{norm_learning,   prediction_inference, task_evaluation, noisy_or_oracle,
                                                  rule_logic_oracle, bayes_oracle,        klr_checks,      determinism};
  for (const auto& s : suites) s();
  std::printf("acceptance complete: %d criteria failed\n", failures);
  return strict && failures > 0 ? 1 : 0;
}
