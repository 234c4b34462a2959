#pragma once

#include <optional>
#include <span>
#include <string>

#include "stepcredit/sql_exec.hpp"
#include "stepcredit/transcript.hpp"

namespace stepcredit {

/// Trajectory-level reward: format conformance plus final execution accuracy.
struct OutcomeReward {
  double r_fmt = 0.0;   // {0, 1}
  double r_exec = 0.0;  // {0, 2}
  double total = 0.0;   // r_fmt + r_exec
};

/// Per-step reward: validity gate times (1 + cell recall).
struct StepReward {
  double hard = 0.0;  // {0, 1}
  double soft = 0.0;  // [0, 1]
  double proc = 0.0;  // hard * (1 + soft), in [0, 2]
};

struct RewardLedger {
  OutcomeReward outcome;
  std::vector<StepReward> steps;  // one per interaction step
};

struct RewardConfig {
  double recall_eps = 1e-6;
  ExecLimits step_limits = uncapped_limits();
};

/// 1 iff check_format(traj).ok.
double format_reward(const Trajectory& traj, const ParseOptions& options = {});

/// 2 iff answer_sql is present, executes, and exactly matches the gold
/// result; 0 otherwise (executor errors map to 0). Gold must execute.
double execution_reward(const std::optional<std::string>& answer_sql,
                        const std::string& gold_sql, const std::string& database_id,
                        const SqlExecutor& exec);

/// Validity gate: 0 for undecodable payloads, Syntax/ReadOnlyViolation/
/// Timeout executions, and actions whose normalized SQL duplicates any
/// earlier step of the same trajectory; 1 otherwise.
double hard_constraint(const Step& step, std::span<const Step> history,
                       const SqlExecutor& exec, const std::string& database_id,
                       const ExecLimits& limits = uncapped_limits());

/// Cell-level recall |E(step) ∩ E(gold)| / (|E(gold)| + eps).
double soft_recall(const ExecutionResult& step_result, const ExecutionResult& gold_result,
                   double eps);

StepReward process_reward(const Step& step, std::span<const Step> history,
                          const SqlExecutor& exec, const std::string& database_id,
                          const ExecutionResult& gold_result,
                          const RewardConfig& config = {});

/// Score one trajectory against its gold SQL: outcome reward plus one
/// StepReward per interaction step. Gold is executed once and reused for
/// every recall computation. Throws MissingDatabaseError if database_id is
/// unknown.
RewardLedger score_trajectory(const Trajectory& traj, const std::string& gold_sql,
                              const std::string& database_id, const SqlExecutor& exec,
                              const RewardConfig& config = {},
                              const ParseOptions& options = {});

/// Normal form used for duplicate detection: lowercases outside string
/// literals, collapses whitespace runs, strips trailing semicolons.
std::string normalize_sql(std::string_view sql);

}  // namespace stepcredit
