// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The credit-assignment criteria are checked against brute-force
// re-implementations kept independent of the library code paths.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "stepcredit/credit.hpp"
#include "stepcredit/fixtures.hpp"
#include "stepcredit/harness.hpp"
#include "stepcredit/jsonl.hpp"
#include "stepcredit/objective.hpp"
#include "stepcredit/rewards.hpp"
#include "stepcredit/service.hpp"
#include "test_support.hpp"

using namespace stepcredit;
using test_support::TempDir;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

// ---------------------------------------------------------------------------
// Brute-force oracle: discounting, smoothing, pooled standardization, mixing,
// written from the formulas with none of the library plumbing.

std::vector<double> oracle_discount(double reward, int horizon, double gamma) {
  std::vector<double> v;
  for (int t = 0; t <= horizon; ++t) v.push_back(std::pow(gamma, horizon - t) * reward);
  return v;
}

double oracle_smooth_at(const std::vector<double>& rewards, std::size_t t, double beta) {
  if (t + 1 == rewards.size()) return rewards[t];
  return (1.0 - beta) * rewards[t] + beta * oracle_smooth_at(rewards, t + 1, beta);
}

double oracle_mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double oracle_std(const std::vector<double>& values) {
  const double mean = oracle_mean(values);
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

struct OracleAdvantages {
  std::vector<std::vector<double>> mixed;      // per trajectory, length T+1
  std::vector<std::vector<double>> out_norm;   // per trajectory, length T+1
  std::vector<std::vector<double>> proc_norm;  // per trajectory, length T
};

OracleAdvantages oracle_step_advantages(const std::vector<RewardLedger>& group,
                                        const CreditConfig& cfg) {
  OracleAdvantages result;
  std::vector<std::vector<double>> all_v_out;
  std::vector<std::vector<double>> all_v_proc;
  std::vector<double> out_pool;
  std::vector<double> proc_pool;
  for (const auto& ledger : group) {
    const int horizon = static_cast<int>(ledger.steps.size());
    std::vector<double> procs;
    for (const auto& s : ledger.steps) procs.push_back(s.proc);
    std::vector<double> v_out = oracle_discount(ledger.outcome.total, horizon, cfg.gamma);
    std::vector<double> v_proc;
    for (std::size_t t = 0; t < procs.size(); ++t) {
      v_proc.push_back(oracle_smooth_at(procs, t, cfg.beta));
    }
    for (double v : v_out) out_pool.push_back(v);
    for (double v : v_proc) proc_pool.push_back(v);
    all_v_out.push_back(std::move(v_out));
    all_v_proc.push_back(std::move(v_proc));
  }
  const double out_mean = oracle_mean(out_pool);
  const double out_std = oracle_std(out_pool);
  const double proc_mean = proc_pool.empty() ? 0.0 : oracle_mean(proc_pool);
  const double proc_std = proc_pool.empty() ? 0.0 : oracle_std(proc_pool);

  for (std::size_t i = 0; i < group.size(); ++i) {
    std::vector<double> out_norm;
    std::vector<double> proc_norm;
    std::vector<double> mixed;
    for (double v : all_v_out[i]) out_norm.push_back((v - out_mean) / (out_std + cfg.eps));
    for (double v : all_v_proc[i]) proc_norm.push_back((v - proc_mean) / (proc_std + cfg.eps));
    const std::size_t horizon = all_v_proc[i].size();
    for (std::size_t t = 0; t < horizon; ++t) {
      mixed.push_back(cfg.lambda * out_norm[t] + (1.0 - cfg.lambda) * proc_norm[t]);
    }
    mixed.push_back(out_norm[horizon]);
    result.out_norm.push_back(std::move(out_norm));
    result.proc_norm.push_back(std::move(proc_norm));
    result.mixed.push_back(std::move(mixed));
  }
  return result;
}

std::vector<RewardLedger> random_group(std::mt19937& rng) {
  std::uniform_int_distribution<int> size_pick(0, 2);
  std::uniform_int_distribution<int> steps_pick(0, 6);
  std::uniform_int_distribution<int> fmt_pick(0, 1);
  std::uniform_int_distribution<int> exec_pick(0, 1);
  std::uniform_int_distribution<int> hard_pick(0, 1);
  std::uniform_real_distribution<double> soft_pick(0.0, 1.0);
  const int sizes[] = {2, 4, 8};
  std::vector<RewardLedger> group;
  const int g = sizes[size_pick(rng)];
  for (int i = 0; i < g; ++i) {
    RewardLedger ledger;
    ledger.outcome.r_fmt = fmt_pick(rng);
    ledger.outcome.r_exec = 2.0 * exec_pick(rng);
    ledger.outcome.total = ledger.outcome.r_fmt + ledger.outcome.r_exec;
    const int steps = steps_pick(rng);
    for (int t = 0; t < steps; ++t) {
      StepReward step;
      step.hard = hard_pick(rng);
      step.soft = step.hard > 0.0 ? soft_pick(rng) : 0.0;
      step.proc = step.hard * (1.0 + step.soft);
      ledger.steps.push_back(step);
    }
    group.push_back(std::move(ledger));
  }
  return group;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------------------

void criterion_1_formula_oracles() {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> gamma_pick(0.5, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto started = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (int round = 0; round < 1000 && ok; ++round) {
    auto group = random_group(rng);
    CreditConfig cfg;
    cfg.gamma = gamma_pick(rng);
    cfg.beta = unit(rng);
    cfg.lambda = unit(rng);
    auto expected = oracle_step_advantages(group, cfg);
    auto actual = step_advantages(group, cfg);
    for (std::size_t i = 0; i < group.size() && ok; ++i) {
      for (std::size_t t = 0; t < expected.mixed[i].size() && ok; ++t) {
        ok = close(actual[i].a_mixed[t], expected.mixed[i][t], 1e-9) &&
             close(actual[i].a_out_norm[t], expected.out_norm[i][t], 1e-9);
      }
      for (std::size_t t = 0; t < expected.proc_norm[i].size() && ok; ++t) {
        ok = close(actual[i].a_proc_norm[t], expected.proc_norm[i][t], 1e-9);
      }
      if (!ok) detail = "mismatch in round " + std::to_string(round);
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (elapsed >= 10.0) {
    ok = false;
    detail = "runtime budget exceeded";
  }
  std::ostringstream summary;
  summary << "1000 groups vs brute force, 1e-9/element, " << elapsed << " s";
  report(1, "formula oracles", ok, detail.empty() ? summary.str() : detail);
}

void criterion_2_grpo_reduction() {
  std::mt19937 rng(103);
  std::uniform_int_distribution<int> steps_pick(0, 6);
  std::uniform_int_distribution<int> reward_pick(0, 3);
  CreditConfig cfg;
  cfg.gamma = 1.0;
  cfg.lambda = 1.0;
  bool ok = true;
  for (int round = 0; round < 200 && ok; ++round) {
    const int g = 2 + (round % 7);
    const int steps = steps_pick(rng);
    std::vector<RewardLedger> group;
    std::vector<double> rewards;
    for (int i = 0; i < g; ++i) {
      RewardLedger ledger;
      ledger.outcome.total = reward_pick(rng);
      for (int t = 0; t < steps; ++t) {
        StepReward step;
        step.hard = 1.0;
        step.soft = 0.25;
        step.proc = 1.25;
        ledger.steps.push_back(step);
      }
      rewards.push_back(ledger.outcome.total);
      group.push_back(std::move(ledger));
    }
    auto per_traj = grpo_advantages(rewards, cfg.eps);
    auto advantages = step_advantages(group, cfg);
    for (int i = 0; i < g && ok; ++i) {
      for (double a : advantages[static_cast<std::size_t>(i)].a_mixed) {
        ok = ok && close(a, per_traj[static_cast<std::size_t>(i)], 1e-9);
      }
    }
  }
  report(2, "GRPO reduction at gamma=1, lambda=1", ok, "200 equal-length groups, 1e-9");
}

void criterion_3_suppression() {
  // successful trajectory with one hard-invalid middle step vs a clean failure
  RewardLedger winner;
  winner.outcome = {1.0, 2.0, 3.0};
  for (double proc : {2.0, 0.0, 2.0}) {
    StepReward step;
    step.hard = proc > 0.0 ? 1.0 : 0.0;
    step.soft = proc > 0.0 ? proc - 1.0 : 0.0;
    step.proc = proc;
    winner.steps.push_back(step);
  }
  RewardLedger rival;
  rival.outcome = {1.0, 0.0, 1.0};
  for (int t = 0; t < 3; ++t) {
    StepReward step;
    step.hard = 1.0;
    step.soft = 1.0;
    step.proc = 2.0;
    rival.steps.push_back(step);
  }
  std::vector<RewardLedger> group = {winner, rival};
  auto advantages = step_advantages(group, CreditConfig{});  // defaults 0.98/0.5/0.5

  const auto& mixed = advantages[0].a_mixed;
  bool ok = mixed.size() == 4 && mixed[1] < 0.0 && mixed[0] > 0.0 && mixed[2] > 0.0 &&
            mixed[3] > 0.0;

  auto grpo = grpo_advantages(std::vector<double>{3.0, 1.0}, 1e-8);
  // trajectory-level GRPO broadcasts one value per trajectory: the invalid
  // step inherits exactly the same positive credit as its siblings
  std::vector<double> grpo_broadcast(4, grpo[0]);
  for (double a : grpo_broadcast) ok = ok && a == grpo[0] && a > 0.0;

  std::ostringstream detail;
  detail << "mixed[invalid]=" << mixed[1] << ", grpo broadcast=" << grpo[0];
  report(3, "invalid step suppressed inside a winning trajectory", ok, detail.str());
}

void criterion_4_gate_law() {
  TempDir dir{"acc_gate"};
  SqlExecutor exec(test_support::fixture_registry(dir));
  ExecOutcome gold_outcome =
      exec.execute("SELECT name, age FROM people", "people", uncapped_limits());
  const auto& gold = std::get<ExecutionResult>(gold_outcome);

  std::mt19937 rng(107);
  std::uniform_int_distribution<int> category(0, 6);
  std::uniform_int_distribution<int> id(0, 5);
  std::vector<Step> history;
  {
    Step first;
    first.index = 0;
    first.parsed_sql = "SELECT name FROM people";
    history.push_back(first);
  }
  bool ok = true;
  for (int round = 0; round < 10000 && ok; ++round) {
    Step step;
    step.index = 1;
    switch (category(rng)) {
      case 0: break;
      case 1: step.parsed_sql = "select  NAME from people"; break;  // duplicate mod spacing
      case 2: step.parsed_sql = "SELEC " + std::to_string(id(rng)); break;
      case 3: step.parsed_sql = "DELETE FROM people"; break;
      case 4: step.parsed_sql = "SELECT name FROM people WHERE id = " + std::to_string(id(rng)); break;
      case 5: step.parsed_sql = "SELECT age FROM people WHERE id <= " + std::to_string(id(rng)); break;
      default: step.parsed_sql = "SELECT count(*) FROM people WHERE age > " + std::to_string(10 * id(rng)); break;
    }
    StepReward reward = process_reward(step, history, exec, "people", gold);
    ok = reward.proc >= 0.0 && reward.proc <= 2.0 && !(reward.hard == 0.0 && reward.proc != 0.0) &&
         !(reward.hard == 0.0 && reward.proc > 0.0);
  }
  report(4, "reward gate law under fuzzing", ok, "10000 cases, proc in [0,2], hard gate");
}

// independent recall oracle: semantic cell equality on a collision-free universe
struct OracleCell {
  int kind;  // 0 null, 1 int, 2 real, 3 text
  long long i = 0;
  double d = 0.0;
  std::string s;
  bool operator==(const OracleCell& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
      case 1: return i == other.i;
      case 2: return d == other.d;
      case 3: return s == other.s;
      default: return true;
    }
  }
};

void criterion_5_recall_oracle() {
  std::mt19937 rng(109);
  std::uniform_int_distribution<int> cells_pick(0, 20);
  std::uniform_int_distribution<int> kind_pick(0, 3);
  std::uniform_int_distribution<int> int_pick(0, 5);
  std::uniform_int_distribution<int> real_pick(0, 2);
  std::uniform_int_distribution<int> text_pick(0, 2);
  const double reals[] = {0.5, 2.5, 7.25};
  const char* texts[] = {"a", "b", "cc"};
  const double eps = 1e-6;

  auto make_pair = [&](std::vector<Cell>& cells, std::vector<OracleCell>& oracle_cells) {
    const int n = cells_pick(rng);
    for (int i = 0; i < n; ++i) {
      switch (kind_pick(rng)) {
        case 0:
          cells.push_back(Cell::null());
          oracle_cells.push_back({0});
          break;
        case 1: {
          int v = int_pick(rng);
          cells.push_back(Cell::integer(v));
          oracle_cells.push_back({1, v});
          break;
        }
        case 2: {
          double v = reals[real_pick(rng)];
          cells.push_back(Cell::real(v));
          oracle_cells.push_back({2, 0, v});
          break;
        }
        default: {
          std::string v = texts[text_pick(rng)];
          cells.push_back(Cell::text(v));
          oracle_cells.push_back({3, 0, 0.0, v});
          break;
        }
      }
    }
  };
  auto dedup = [](const std::vector<OracleCell>& cells) {
    std::vector<OracleCell> unique;
    for (const auto& cell : cells) {
      bool seen = false;
      for (const auto& u : unique) seen = seen || (u == cell);
      if (!seen) unique.push_back(cell);
    }
    return unique;
  };
  auto single_column = [](const std::vector<Cell>& cells) {
    ExecutionResult res;
    res.columns = {"c"};
    for (const auto& cell : cells) res.rows.push_back({cell});
    return res;
  };

  bool ok = true;
  for (int round = 0; round < 500 && ok; ++round) {
    std::vector<Cell> step_cells, gold_cells;
    std::vector<OracleCell> step_oracle, gold_oracle;
    make_pair(step_cells, step_oracle);
    make_pair(gold_cells, gold_oracle);

    const auto gold_unique = dedup(gold_oracle);
    const auto step_unique = dedup(step_oracle);
    std::size_t hits = 0;
    for (const auto& g : gold_unique) {
      for (const auto& s : step_unique) {
        if (g == s) {
          ++hits;
          break;
        }
      }
    }
    const double expected =
        static_cast<double>(hits) / (static_cast<double>(gold_unique.size()) + eps);
    const double actual = soft_recall(single_column(step_cells), single_column(gold_cells), eps);
    ok = (actual == expected);
  }
  report(5, "recall matches hand set-intersection arithmetic", ok, "500 pairs, exact equality");
}

void criterion_6_case_replay() {
  TempDir dir{"acc_replay"};
  SqlExecutor exec(test_support::fixture_registry(dir));
  Scenario scenario =
      parse_scenario(fixtures::school_open_date_scenario(), "school_open_date");
  Group group = run_group(scenario.policies, scenario.fixture, exec);

  bool ok = group.trajectories.size() == 2;
  std::ostringstream detail;
  if (ok) {
    RewardLedger success =
        score_trajectory(group.trajectories[0], group.gold_sql, group.database_id, exec);
    RewardLedger failure =
        score_trajectory(group.trajectories[1], group.gold_sql, group.database_id, exec);

    double s_hard = 0.0, s_soft = 0.0;
    for (const auto& step : success.steps) {
      s_hard += step.hard;
      s_soft += step.soft;
    }
    s_hard /= static_cast<double>(success.steps.size());
    s_soft /= static_cast<double>(success.steps.size());

    double f_hard = 0.0, f_soft = 0.0;
    for (const auto& step : failure.steps) {
      f_hard += step.hard;
      f_soft += step.soft;
    }
    f_hard /= static_cast<double>(failure.steps.size());
    f_soft /= static_cast<double>(failure.steps.size());

    const bool success_ok = s_hard == 1.0 && close(s_soft, 1.0, 0.01) &&
                            success.outcome.r_exec == 2.0 && success.outcome.total == 3.0;
    const bool failure_ok = close(f_hard, 1.0 / 3.0, 0.01) && f_soft == 0.0 &&
                            failure.outcome.r_exec == 0.0;
    ok = success_ok && failure_ok;
    detail << "case1 hard=" << s_hard << " soft=" << s_soft << " out=" << success.outcome.total
           << "; case2 hard=" << f_hard << " soft=" << f_soft
           << " r_exec=" << failure.outcome.r_exec;
  }
  report(6, "case replay reproduces the annotated ledgers", ok, detail.str());
}

void criterion_7_mask_invariance() {
  std::mt19937 rng(113);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  std::uniform_real_distribution<double> logp(-3.0, 0.0);
  std::uniform_real_distribution<double> noise(-7.0, 7.0);
  std::uniform_int_distribution<int> mask(0, 1);
  std::uniform_int_distribution<int> len(1, 64);
  bool ok = true;
  for (int round = 0; round < 100 && ok; ++round) {
    const int n = len(rng);
    TokenTensor t;
    for (int i = 0; i < n; ++i) {
      t.advantage.push_back(adv(rng));
      t.loss_mask.push_back(mask(rng));
      t.logp_new.push_back(logp(rng));
      t.logp_old.push_back(logp(rng));
      t.logp_ref.push_back(logp(rng));
    }
    t.loss_mask[0] = 1;
    ObjectiveValue base = surrogate_objective(t, ObjectiveConfig{});
    TokenTensor perturbed = t;
    for (int i = 0; i < n; ++i) {
      if (t.loss_mask[static_cast<std::size_t>(i)] == 0) {
        perturbed.logp_new[static_cast<std::size_t>(i)] += noise(rng);
        perturbed.logp_old[static_cast<std::size_t>(i)] += noise(rng);
        perturbed.logp_ref[static_cast<std::size_t>(i)] += noise(rng);
      }
    }
    ObjectiveValue after = surrogate_objective(perturbed, ObjectiveConfig{});
    ok = std::memcmp(&base.value, &after.value, sizeof(double)) == 0;
  }
  report(7, "masked log-prob perturbations leave the objective bit-identical", ok, "100 tensors");
}

void criterion_8_finite_difference() {
  std::mt19937 rng(127);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  std::uniform_real_distribution<double> logp(-3.0, 0.0);
  std::uniform_real_distribution<double> direction(-1.0, 1.0);
  std::uniform_int_distribution<int> mask(0, 1);
  std::uniform_int_distribution<int> len(1, 32);
  ObjectiveConfig cfg;
  cfg.kl_coef = 0.0;
  bool ok = true;
  double worst = 0.0;
  for (int round = 0; round < 100 && ok; ++round) {
    const int n = len(rng);
    TokenTensor t;
    std::vector<double> d;
    for (int i = 0; i < n; ++i) {
      t.advantage.push_back(adv(rng));
      t.loss_mask.push_back(mask(rng));
      const double lp = logp(rng);
      t.logp_new.push_back(lp);
      t.logp_old.push_back(lp);
      t.logp_ref.push_back(logp(rng));
      d.push_back(direction(rng));
    }
    t.loss_mask[0] = 1;

    auto value_at = [&](double theta) {
      TokenTensor shifted = t;
      for (int i = 0; i < n; ++i) {
        shifted.logp_new[static_cast<std::size_t>(i)] =
            t.logp_old[static_cast<std::size_t>(i)] + theta * d[static_cast<std::size_t>(i)];
      }
      return surrogate_objective(shifted, cfg).value;
    };
    double analytic = 0.0;
    int unmasked = 0;
    for (int i = 0; i < n; ++i) {
      if (t.loss_mask[static_cast<std::size_t>(i)] == 1) {
        analytic += t.advantage[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
        ++unmasked;
      }
    }
    analytic /= unmasked;
    const double h = 1e-5;
    const double numeric = (value_at(h) - value_at(-h)) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - analytic));
    ok = std::abs(numeric - analytic) <= 1e-6;
  }
  std::ostringstream detail;
  detail << "100 instances, worst |diff| = " << worst;
  report(8, "finite differences match the unclipped derivative", ok, detail.str());
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_9_end_to_end_determinism() {
#ifndef STEPCREDIT_CLI_PATH
  report(9, "end-to-end determinism", false, "CLI path not configured");
#else
  TempDir dir{"acc_cli"};
  const std::string cli = STEPCREDIT_CLI_PATH;
  const std::string fx = (dir.path() / "fx").string();
  bool ok = std::system((cli + " init-fixtures --dir '" + fx + "' 2>/dev/null").c_str()) == 0;

  auto run_pipeline = [&](const std::string& tag) {
    const std::string out_dir = (dir.path() / tag).string();
    std::filesystem::create_directories(out_dir);
    std::string simulate = cli + " simulate --scenario '" + fx +
                           "/scenarios/school_open_date.json' --scenario '" + fx +
                           "/scenarios/oldest_person.json' --registry '" + fx + "/db' --out '" +
                           out_dir + "/traj.jsonl' 2>/dev/null";
    std::string score = cli + " score --in '" + out_dir + "/traj.jsonl' --registry '" + fx +
                        "/db' --out '" + out_dir + "/ledgers.jsonl' --advantages '" + out_dir +
                        "/advantages.jsonl' 2>/dev/null";
    return std::system(simulate.c_str()) == 0 && std::system(score.c_str()) == 0;
  };
  ok = ok && run_pipeline("run1") && run_pipeline("run2");
  std::string detail = "simulate+score twice over the fixture suite";
  if (ok) {
    for (const char* file : {"traj.jsonl", "ledgers.jsonl", "advantages.jsonl"}) {
      const std::string a = slurp(dir.path() / "run1" / file);
      const std::string b = slurp(dir.path() / "run2" / file);
      if (a.empty() || a != b) {
        ok = false;
        detail = std::string(file) + " differs between runs";
      }
    }
  } else {
    detail = "pipeline invocation failed";
  }
  report(9, "end-to-end determinism", ok, detail);
#endif
}

void criterion_10_service_contract() {
  TempDir dir{"acc_service"};
  stepcredit::fixtures::write_registry(dir.path());
  ServiceConfig config;
  config.port = 0;
  config.registry_path = dir.path();
  config.feedback_cap = 256;
  ToolService service(config);
  bool ok = service.start();
  std::string detail;

  auto body = [](const std::string& sql, const std::string& db) {
    nlohmann::json j = {{"name", "sql_executor"}, {"arguments", {{"sql", sql}}}, {"database_id", db}};
    return j.dump();
  };

  if (ok) {
    httplib::Client client("127.0.0.1", service.port());
    auto select = client.Post("/execute", body("SELECT name FROM people ORDER BY id", "people"),
                              "application/json");
    ok = select && select->status == 200;
    if (ok) {
      auto parsed = nlohmann::json::parse(select->body);
      ok = parsed.at("ok") == true &&
           parsed.at("feedback").get<std::string>().size() <= config.feedback_cap &&
           parsed.at("feedback").get<std::string>().find("Alice") != std::string::npos;
      if (!ok) detail = "valid SELECT round trip failed";
    }
    if (ok) {
      auto write = client.Post("/execute", body("DROP TABLE people", "people"), "application/json");
      ok = write && write->status == 200;
      if (ok) {
        auto parsed = nlohmann::json::parse(write->body);
        ok = parsed.at("ok") == false &&
             parsed.at("feedback").get<std::string>().size() <= config.feedback_cap &&
             parsed.at("feedback").get<std::string>().rfind("Error:", 0) == 0;
      }
      if (!ok) detail = "write rejection round trip failed";
    }
    if (ok) {
      auto missing = client.Post("/execute", body("SELECT 1", "absent"), "application/json");
      ok = missing && missing->status == 404;
      if (!ok) detail = "unknown database round trip failed";
    }
    if (ok) {
      const std::string request = body("SELECT name, age FROM people ORDER BY id", "people");
      std::string expected;
      {
        auto res = client.Post("/execute", request, "application/json");
        expected = nlohmann::json::parse(res->body).at("feedback").get<std::string>();
      }
      constexpr int kRequests = 50;
      std::vector<std::string> feedbacks(kRequests);
      std::vector<std::thread> threads;
      for (int i = 0; i < kRequests; ++i) {
        threads.emplace_back([&, i] {
          httplib::Client worker("127.0.0.1", service.port());
          auto res = worker.Post("/execute", request, "application/json");
          if (res && res->status == 200) {
            feedbacks[static_cast<std::size_t>(i)] =
                nlohmann::json::parse(res->body).at("feedback").get<std::string>();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& feedback : feedbacks) {
        if (feedback != expected) {
          ok = false;
          detail = "concurrent responses interleaved or dropped";
        }
      }
    }
  } else {
    detail = "service failed to start";
  }
  service.stop();
  report(10, "service contract", ok, detail.empty() ? "3 round trips + 50 concurrent" : detail);
}

}  // namespace

int main() {
  criterion_1_formula_oracles();
  criterion_2_grpo_reduction();
  criterion_3_suppression();
  criterion_4_gate_law();
  criterion_5_recall_oracle();
  criterion_6_case_replay();
  criterion_7_mask_invariance();
  criterion_8_finite_difference();
  criterion_9_end_to_end_determinism();
  criterion_10_service_contract();

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
