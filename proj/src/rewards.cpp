#include "stepcredit/rewards.hpp"

#include <cctype>

namespace stepcredit {

std::string normalize_sql(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  char quote = '\0';
  bool pending_space = false;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    char c = sql[i];
    if (quote != '\0') {
      out.push_back(c);
      if (c == quote) {
        // doubled quote is an escape, stay inside the literal
        if (i + 1 < sql.size() && sql[i + 1] == quote) {
          out.push_back(sql[++i]);
        } else {
          quote = '\0';
        }
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      quote = c;
      out.push_back(c);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && (out.back() == ';' || out.back() == ' ')) out.pop_back();
  return out;
}

double format_reward(const Trajectory& traj, const ParseOptions& options) {
  return check_format(traj, options).ok ? 1.0 : 0.0;
}

namespace {

ExecutionResult execute_gold(const std::string& gold_sql, const std::string& database_id,
                             const SqlExecutor& exec) {
  ExecOutcome outcome = exec.execute(gold_sql, database_id, uncapped_limits());
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    if (err->kind == ExecError::Kind::MissingDatabase) {
      throw MissingDatabaseError(err->message);
    }
    throw std::invalid_argument("gold SQL failed to execute: " + err->message);
  }
  return std::get<ExecutionResult>(std::move(outcome));
}

double execution_reward_against(const std::optional<std::string>& answer_sql,
                                const ExecutionResult& gold_result,
                                const std::string& database_id, const SqlExecutor& exec) {
  if (!answer_sql) return 0.0;
  ExecOutcome outcome = exec.execute(*answer_sql, database_id, uncapped_limits());
  const auto* res = std::get_if<ExecutionResult>(&outcome);
  if (!res) return 0.0;
  return exact_match(*res, gold_result) ? 2.0 : 0.0;
}

bool duplicates_history(const Step& step, std::span<const Step> history) {
  const std::string needle = normalize_sql(*step.parsed_sql);
  for (const auto& prior : history) {
    if (prior.index >= step.index) continue;
    if (prior.parsed_sql && normalize_sql(*prior.parsed_sql) == needle) return true;
  }
  return false;
}

bool hard_invalid_error(const ExecError& err) {
  return err.kind == ExecError::Kind::Syntax || err.kind == ExecError::Kind::ReadOnlyViolation ||
         err.kind == ExecError::Kind::Timeout;
}

}  // namespace

double execution_reward(const std::optional<std::string>& answer_sql,
                        const std::string& gold_sql, const std::string& database_id,
                        const SqlExecutor& exec) {
  ExecutionResult gold = execute_gold(gold_sql, database_id, exec);
  return execution_reward_against(answer_sql, gold, database_id, exec);
}

double hard_constraint(const Step& step, std::span<const Step> history, const SqlExecutor& exec,
                       const std::string& database_id, const ExecLimits& limits) {
  if (!step.parsed_sql) return 0.0;
  if (duplicates_history(step, history)) return 0.0;
  ExecOutcome outcome = exec.execute(*step.parsed_sql, database_id, limits);
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    if (hard_invalid_error(*err)) return 0.0;
  }
  return 1.0;
}

double soft_recall(const ExecutionResult& step_result, const ExecutionResult& gold_result,
                   double eps) {
  if (eps <= 0.0) throw std::invalid_argument("soft_recall requires eps > 0");
  const CellSet step_cells = flatten_cells(step_result);
  const CellSet gold_cells = flatten_cells(gold_result);
  std::size_t hits = 0;
  for (const auto& cell : gold_cells.elements) {
    hits += step_cells.elements.count(cell);
  }
  return static_cast<double>(hits) / (static_cast<double>(gold_cells.elements.size()) + eps);
}

StepReward process_reward(const Step& step, std::span<const Step> history,
                          const SqlExecutor& exec, const std::string& database_id,
                          const ExecutionResult& gold_result, const RewardConfig& config) {
  StepReward reward;
  if (!step.parsed_sql || duplicates_history(step, history)) {
    return reward;
  }
  ExecOutcome outcome = exec.execute(*step.parsed_sql, database_id, config.step_limits);
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    if (hard_invalid_error(*err)) return reward;
    reward.hard = 1.0;  // non-fatal engine error: valid action, no information
  } else {
    reward.hard = 1.0;
    reward.soft = soft_recall(std::get<ExecutionResult>(outcome), gold_result, config.recall_eps);
  }
  reward.proc = reward.hard * (1.0 + reward.soft);
  return reward;
}

RewardLedger score_trajectory(const Trajectory& traj, const std::string& gold_sql,
                              const std::string& database_id, const SqlExecutor& exec,
                              const RewardConfig& config, const ParseOptions& options) {
  RewardLedger ledger;
  const ExecutionResult gold = execute_gold(gold_sql, database_id, exec);

  ledger.outcome.r_fmt = format_reward(traj, options);
  std::optional<std::string> answer_sql;
  if (traj.answer) answer_sql = traj.answer->text;
  ledger.outcome.r_exec = execution_reward_against(answer_sql, gold, database_id, exec);
  ledger.outcome.total = ledger.outcome.r_fmt + ledger.outcome.r_exec;

  ledger.steps.reserve(traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    std::span<const Step> history(traj.steps.data(), i);
    ledger.steps.push_back(
        process_reward(traj.steps[i], history, exec, database_id, gold, config));
  }
  return ledger;
}

}  // namespace stepcredit
