#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stepcredit/rewards.hpp"
#include "stepcredit/sql_exec.hpp"
#include "stepcredit/transcript.hpp"

namespace stepcredit {

/// Deterministic stand-in for a sampled policy: an ordered list of emissions
/// played verbatim through the interaction loop.
struct PolicyAction {
  enum class Kind { Sql, Answer, Garbage };
  Kind kind = Kind::Sql;
  std::string payload;
};

struct PolicyEmission {
  std::string reasoning_text;
  PolicyAction action;
};

struct ScriptedPolicy {
  std::string name;
  std::vector<PolicyEmission> script;  // at most one Answer, last if present
};

struct QuestionFixture {
  std::string prompt_id;
  std::string question;
  std::string hint;
  std::string database_id;
  std::string gold_sql;
};

struct Scenario {
  QuestionFixture fixture;
  std::vector<ScriptedPolicy> policies;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text, const std::string& default_name);

struct HarnessConfig {
  int max_turns = 10;
  ExecLimits feedback_limits{};        // timeout 5 s, 50 rows for tool feedback
  std::size_t feedback_cap = 1024;     // serialized feedback char cap
  std::string reasoning_tag = "reasoning";
};

/// Play every policy through the loop — emit reasoning + tool call, execute,
/// wrap the serialized feedback in result tags, repeat — and parse the
/// synthesized transcripts into a Group. Garbage actions land in the
/// tool-call payload verbatim.
Group run_group(std::span<const ScriptedPolicy> policies, const QuestionFixture& fixture,
                const SqlExecutor& exec, const HarnessConfig& config = {});

struct AnswerCandidate {
  std::string sql;
  ExecOutcome outcome;
};

/// Self-consistency vote: group candidates by exact-match equivalence of
/// successful results (errors are singletons) and return the lowest index in
/// the largest class; ties go to the lowest participating index.
int select_self_consistent(std::span<const AnswerCandidate> candidates);

struct EvalMetrics {
  double ex = 0.0;                   // execution accuracy of the voted answers
  double ves = 0.0;                  // valid efficiency score over voted answers
  double mean_tool_calls = 0.0;
  double mean_response_chars = 0.0;
  double voting_ex = 0.0;
  double pass_at_k = 0.0;
};

struct EvalConfig {
  int ves_repeats = 5;
  ExecLimits answer_limits = uncapped_limits();
};

/// Evaluate k samples per question: vote, score EX/VES on the voted answer,
/// pass@k over all k. Rejects empty input and groups smaller than k.
EvalMetrics evaluate(std::span<const Group> groups, int k, const SqlExecutor& exec,
                     const EvalConfig& config = {});

}  // namespace stepcredit
