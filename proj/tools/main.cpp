#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "stepcredit/credit.hpp"
#include "stepcredit/fixtures.hpp"
#include "stepcredit/harness.hpp"
#include "stepcredit/jsonl.hpp"
#include "stepcredit/objective.hpp"
#include "stepcredit/rewards.hpp"
#include "stepcredit/service.hpp"

namespace {

using namespace stepcredit;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_simulate(const std::vector<std::string>& scenario_paths, const std::string& registry_path,
                 const std::string& out_path, int max_turns) {
  SqlExecutor exec(Registry::from_manifest(registry_path));
  HarnessConfig config;
  config.max_turns = max_turns;

  std::vector<TrajectoryRecord> records;
  for (const auto& path : scenario_paths) {
    Scenario scenario = load_scenario(path);
    Group group = run_group(scenario.policies, scenario.fixture, exec, config);
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
      records.push_back(TrajectoryRecord{group.prompt_id, group.database_id, group.gold_sql,
                                         group.trajectories[i].source, static_cast<int>(i)});
    }
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  write_trajectory_jsonl(out, records);
  std::cerr << "wrote " << records.size() << " trajectories to " << out_path << "\n";
  return 0;
}

int run_score(const std::string& in_path, const std::string& registry_path,
              const std::string& out_path, const std::string& advantages_path, int max_turns,
              const CreditConfig& credit) {
  SqlExecutor exec(Registry::from_manifest(registry_path));
  ParseOptions options;
  options.max_turns = max_turns;

  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  auto records = read_trajectory_records(in);
  auto groups = groups_from_records(records, options);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  std::ofstream adv_out;
  if (!advantages_path.empty()) {
    adv_out.open(advantages_path);
    if (!adv_out) throw std::runtime_error("cannot open " + advantages_path);
  }

  for (const auto& group : groups) {
    std::vector<RewardLedger> ledgers;
    ledgers.reserve(group.trajectories.size());
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
      RewardLedger ledger = score_trajectory(group.trajectories[i], group.gold_sql,
                                             group.database_id, exec, {}, options);
      nlohmann::json line = nlohmann::json::parse(ledger_json(ledger));
      line["prompt_id"] = group.prompt_id;
      line["group_index"] = static_cast<int>(i);
      out << line.dump() << "\n";
      ledgers.push_back(std::move(ledger));
    }
    if (adv_out.is_open()) {
      adv_out << advantages_json(group.prompt_id, step_advantages(ledgers, credit)) << "\n";
    }
  }
  std::cerr << "scored " << groups.size() << " groups\n";
  return 0;
}

int run_report(const std::string& in_path, const std::string& registry_path, int k,
               const std::string& format, int max_turns) {
  SqlExecutor exec(Registry::from_manifest(registry_path));
  ParseOptions options;
  options.max_turns = max_turns;

  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  auto groups = groups_from_records(read_trajectory_records(in), options);
  EvalMetrics metrics = evaluate(groups, k, exec);

  if (format == "csv") {
    std::cout << "ex,ves,voting_ex,pass_at_k,mean_tool_calls,mean_response_chars\n"
              << metrics.ex << "," << metrics.ves << "," << metrics.voting_ex << ","
              << metrics.pass_at_k << "," << metrics.mean_tool_calls << ","
              << metrics.mean_response_chars << "\n";
  } else {
    std::printf("%-20s %10.4f\n", "ex", metrics.ex);
    std::printf("%-20s %10.4f\n", "ves", metrics.ves);
    std::printf("%-20s %10.4f\n", "voting_ex", metrics.voting_ex);
    std::printf("%-20s %10.4f\n", "pass_at_k", metrics.pass_at_k);
    std::printf("%-20s %10.4f\n", "mean_tool_calls", metrics.mean_tool_calls);
    std::printf("%-20s %10.4f\n", "mean_response_chars", metrics.mean_response_chars);
  }
  return 0;
}

int run_objective(const std::string& in_path) {
  nlohmann::json doc = nlohmann::json::parse(read_input(in_path));
  TokenTensor tensor;
  tensor.advantage = doc.at("advantage").get<std::vector<double>>();
  tensor.loss_mask = doc.at("loss_mask").get<std::vector<int>>();
  tensor.logp_new = doc.at("logp_new").get<std::vector<double>>();
  tensor.logp_old = doc.at("logp_old").get<std::vector<double>>();
  tensor.logp_ref = doc.at("logp_ref").get<std::vector<double>>();

  ObjectiveConfig config;
  if (doc.contains("config")) {
    const auto& c = doc.at("config");
    config.clip_eps = c.value("clip_eps", config.clip_eps);
    config.kl_coef = c.value("kl_coef", config.kl_coef);
  }
  ObjectiveValue value = surrogate_objective(tensor, config);
  nlohmann::json out = {{"value", value.value},
                        {"clipped_fraction", value.clipped_fraction},
                        {"kl", value.kl}};
  std::cout << out.dump() << "\n";
  return 0;
}

int run_serve(const ServiceConfig& config) {
  ToolService service(config);
  if (!service.start()) {
    std::cerr << "failed to bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  std::cerr << "serving on " << config.host << ":" << service.port() << " ("
            << "timeout " << config.limits.timeout.count() << " ms, max rows "
            << config.limits.max_rows << ", feedback cap " << config.feedback_cap << ")\n";
  // foreground loop; the process exits on SIGINT/SIGTERM
  while (service.running()) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"step-level credit assignment engine for tool-integrated SQL rollouts"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "play scripted policies into trajectory JSONL");
  std::vector<std::string> scenario_paths;
  std::string registry_path;
  std::string out_path = "trajectories.jsonl";
  int max_turns = 10;
  simulate->add_option("--scenario", scenario_paths, "scenario JSON file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--registry", registry_path, "database registry directory or manifest")
      ->required();
  simulate->add_option("--out", out_path, "output JSONL path");
  simulate->add_option("--max-turns", max_turns, "assistant turn limit");

  // score
  auto* score = app.add_subcommand("score", "reward ledgers (and advantages) for trajectory JSONL");
  std::string score_in;
  std::string score_out = "ledgers.jsonl";
  std::string advantages_path;
  CreditConfig credit;
  score->add_option("--in", score_in, "trajectory JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--registry", registry_path, "database registry directory or manifest")
      ->required();
  score->add_option("--out", score_out, "ledger JSONL path");
  score->add_option("--advantages", advantages_path, "also write per-group advantage JSONL here");
  score->add_option("--max-turns", max_turns, "assistant turn limit");
  score->add_option("--gamma", credit.gamma, "outcome discount factor");
  score->add_option("--beta", credit.beta, "process smoothing coefficient");
  score->add_option("--lambda", credit.lambda, "outcome weight in the advantage mix");

  // report
  auto* report = app.add_subcommand("report", "evaluation metrics over trajectory JSONL");
  std::string report_in;
  int k = 8;
  std::string format = "table";
  report->add_option("--in", report_in, "trajectory JSONL")->required()->check(CLI::ExistingFile);
  report->add_option("--registry", registry_path, "database registry directory or manifest")
      ->required();
  report->add_option("--k", k, "samples per question");
  report->add_option("--format", format, "csv or table")
      ->check(CLI::IsMember({"csv", "table"}));
  report->add_option("--max-turns", max_turns, "assistant turn limit");

  // objective
  auto* objective = app.add_subcommand("objective", "surrogate objective over a token tensor JSON");
  std::string objective_in = "-";
  objective->add_option("--in", objective_in, "token tensor JSON ('-' for stdin)");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP tool endpoint over the executor");
  ServiceConfig service_config;
  long long timeout_ms = 5000;
  serve->add_option("--registry", service_config.registry_path, "registry directory or manifest")
      ->required()
      ->envname("STEPCREDIT_REGISTRY");
  serve->add_option("--port", service_config.port, "listen port")->envname("STEPCREDIT_PORT");
  serve->add_option("--host", service_config.host, "bind address")->envname("STEPCREDIT_HOST");
  serve->add_option("--timeout-ms", timeout_ms, "statement timeout")
      ->envname("STEPCREDIT_TIMEOUT_MS");
  serve->add_option("--max-rows", service_config.limits.max_rows, "feedback row cap")
      ->envname("STEPCREDIT_MAX_ROWS");
  serve->add_option("--feedback-cap", service_config.feedback_cap, "feedback char cap")
      ->envname("STEPCREDIT_FEEDBACK_CAP");

  // init-fixtures
  auto* init = app.add_subcommand("init-fixtures", "write the fixture databases and scenarios");
  std::string fixtures_dir = "fixtures";
  init->add_option("--dir", fixtures_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return run_simulate(scenario_paths, registry_path, out_path, max_turns);
    }
    if (score->parsed()) {
      return run_score(score_in, registry_path, score_out, advantages_path, max_turns, credit);
    }
    if (report->parsed()) {
      return run_report(report_in, registry_path, k, format, max_turns);
    }
    if (objective->parsed()) {
      return run_objective(objective_in);
    }
    if (serve->parsed()) {
      service_config.limits.timeout = std::chrono::milliseconds(timeout_ms);
      return run_serve(service_config);
    }
    if (init->parsed()) {
      stepcredit::fixtures::write_registry(std::filesystem::path(fixtures_dir) / "db");
      stepcredit::fixtures::write_scenarios(std::filesystem::path(fixtures_dir) / "scenarios");
      std::cerr << "fixtures written under " << fixtures_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
