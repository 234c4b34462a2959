#include "stepcredit/harness.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace stepcredit {

namespace {

const char* kTagTokens[] = {"<reasoning>", "</reasoning>", "<think>",  "</think>",
                            "<tool_call>", "</tool_call>", "<result>", "</result>",
                            "<answer>",    "</answer>"};

void reject_tag_tokens(const std::string& text, const std::string& where) {
  for (const char* token : kTagTokens) {
    if (text.find(token) != std::string::npos) {
      throw std::invalid_argument("scripted " + where + " must not contain tag token " + token);
    }
  }
}

void validate_policy(const ScriptedPolicy& policy) {
  for (std::size_t i = 0; i < policy.script.size(); ++i) {
    const auto& emission = policy.script[i];
    reject_tag_tokens(emission.reasoning_text, "reasoning text");
    reject_tag_tokens(emission.action.payload, "action payload");
    if (emission.action.kind == PolicyAction::Kind::Answer && i + 1 != policy.script.size()) {
      throw std::invalid_argument("policy '" + policy.name + "': Answer must be the last emission");
    }
  }
}

std::string tool_envelope(const std::string& sql) {
  nlohmann::json envelope = {{"name", "sql_executor"}, {"arguments", {{"sql", sql}}}};
  return envelope.dump();
}

PolicyAction parse_action(const nlohmann::json& j) {
  PolicyAction action;
  const std::string type = j.at("type").get<std::string>();
  if (type == "sql") {
    action.kind = PolicyAction::Kind::Sql;
  } else if (type == "answer") {
    action.kind = PolicyAction::Kind::Answer;
  } else if (type == "garbage") {
    action.kind = PolicyAction::Kind::Garbage;
  } else {
    throw std::invalid_argument("unknown action type: " + type);
  }
  action.payload = j.at("text").get<std::string>();
  return action;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& default_name) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  Scenario scenario;
  scenario.fixture.prompt_id = doc.value("name", default_name);
  scenario.fixture.question = doc.value("question", std::string{});
  scenario.fixture.hint = doc.value("hint", std::string{});
  scenario.fixture.database_id = doc.at("database_id").get<std::string>();
  scenario.fixture.gold_sql = doc.at("gold_sql").get<std::string>();
  for (const auto& pj : doc.at("policies")) {
    ScriptedPolicy policy;
    policy.name = pj.value("name", std::string{});
    for (const auto& ej : pj.at("script")) {
      PolicyEmission emission;
      emission.reasoning_text = ej.at("reasoning").get<std::string>();
      emission.action = parse_action(ej.at("action"));
      policy.script.push_back(std::move(emission));
    }
    validate_policy(policy);
    scenario.policies.push_back(std::move(policy));
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(text, path.stem().string());
}

Group run_group(std::span<const ScriptedPolicy> policies, const QuestionFixture& fixture,
                const SqlExecutor& exec, const HarnessConfig& config) {
  if (policies.size() < 2) {
    throw std::invalid_argument("a group needs at least 2 policies");
  }
  if (fixture.database_id.empty() || fixture.gold_sql.empty()) {
    throw std::invalid_argument("fixture needs database_id and gold_sql");
  }
  if (!exec.registry()->lookup(fixture.database_id)) {
    throw MissingDatabaseError("unknown database_id: " + fixture.database_id);
  }

  const std::string open_r = "<" + config.reasoning_tag + ">";
  const std::string close_r = "</" + config.reasoning_tag + ">";

  Group group;
  group.prompt_id = fixture.prompt_id;
  group.gold_sql = fixture.gold_sql;
  group.database_id = fixture.database_id;

  for (const auto& policy : policies) {
    validate_policy(policy);
    std::string transcript;
    int turns = 0;
    for (const auto& emission : policy.script) {
      if (emission.action.kind == PolicyAction::Kind::Answer) {
        transcript += open_r + emission.reasoning_text + close_r + "\n";
        transcript += "<answer>" + emission.action.payload + "</answer>";
        break;
      }
      if (turns == config.max_turns) break;  // out of turns, no answer emitted
      transcript += open_r + emission.reasoning_text + close_r + "\n";
      std::string feedback;
      if (emission.action.kind == PolicyAction::Kind::Sql) {
        transcript += "<tool_call>" + tool_envelope(emission.action.payload) + "</tool_call>\n";
        feedback = serialize_feedback(
            exec.execute(emission.action.payload, fixture.database_id, config.feedback_limits),
            config.feedback_cap);
      } else {
        transcript += "<tool_call>" + emission.action.payload + "</tool_call>\n";
        feedback = serialize_feedback(
            ExecError{ExecError::Kind::EngineError, "malformed tool call payload"},
            config.feedback_cap);
      }
      transcript += "<result>" + feedback + "</result>\n";
      ++turns;
    }
    ParseOptions options;
    options.reasoning_tag = config.reasoning_tag;
    options.max_turns = config.max_turns;
    group.trajectories.push_back(parse_transcript(transcript, options));
  }
  return group;
}

int select_self_consistent(std::span<const AnswerCandidate> candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_self_consistent requires candidates");
  }
  // classes[i] holds ascending candidate indices agreeing on one result
  std::vector<std::vector<int>> classes;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto* res = std::get_if<ExecutionResult>(&candidates[i].outcome);
    bool placed = false;
    if (res) {
      for (auto& cls : classes) {
        const auto* rep =
            std::get_if<ExecutionResult>(&candidates[static_cast<std::size_t>(cls.front())].outcome);
        if (rep && exact_match(*res, *rep)) {
          cls.push_back(static_cast<int>(i));
          placed = true;
          break;
        }
      }
    }
    if (!placed) classes.push_back({static_cast<int>(i)});
  }
  const std::vector<int>* best = &classes.front();
  for (const auto& cls : classes) {
    if (cls.size() > best->size()) best = &cls;
    // ties keep the earlier class, whose front index is lower
  }
  return best->front();
}

EvalMetrics evaluate(std::span<const Group> groups, int k, const SqlExecutor& exec,
                     const EvalConfig& config) {
  if (groups.empty()) throw std::invalid_argument("evaluate requires at least one group");
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  EvalMetrics metrics;
  double voted_correct_sum = 0.0;
  double any_correct_sum = 0.0;
  double ves_sum = 0.0;
  double tool_calls = 0.0;
  double response_chars = 0.0;
  std::size_t trajectory_count = 0;

  for (const auto& group : groups) {
    if (group.trajectories.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("group '" + group.prompt_id + "' has fewer than k trajectories");
    }
    ExecOutcome gold_outcome = exec.execute(group.gold_sql, group.database_id, config.answer_limits);
    const auto* gold = std::get_if<ExecutionResult>(&gold_outcome);
    if (!gold) {
      throw std::invalid_argument("gold SQL failed for group '" + group.prompt_id + "'");
    }

    std::vector<AnswerCandidate> candidates;
    candidates.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      const Trajectory& traj = group.trajectories[static_cast<std::size_t>(i)];
      AnswerCandidate candidate;
      if (traj.answer) {
        candidate.sql = traj.answer->text;
        candidate.outcome = exec.execute(candidate.sql, group.database_id, config.answer_limits);
      } else {
        candidate.outcome = ExecError{ExecError::Kind::EngineError, "no answer emitted"};
      }
      candidates.push_back(std::move(candidate));
    }

    auto is_correct = [&](const AnswerCandidate& c) {
      const auto* res = std::get_if<ExecutionResult>(&c.outcome);
      return res && exact_match(*res, *gold);
    };

    const int voted = select_self_consistent(candidates);
    const bool voted_correct = is_correct(candidates[static_cast<std::size_t>(voted)]);
    voted_correct_sum += voted_correct ? 1.0 : 0.0;
    bool any_correct = false;
    for (const auto& c : candidates) any_correct = any_correct || is_correct(c);
    any_correct_sum += any_correct ? 1.0 : 0.0;

    if (voted_correct) {
      auto gold_time = exec.timed_execute(group.gold_sql, group.database_id, config.ves_repeats);
      auto pred_time = exec.timed_execute(candidates[static_cast<std::size_t>(voted)].sql,
                                          group.database_id, config.ves_repeats);
      const double t_gold = std::holds_alternative<double>(gold_time)
                                ? std::get<double>(gold_time)
                                : 0.0;
      const double t_pred = std::holds_alternative<double>(pred_time)
                                ? std::get<double>(pred_time)
                                : 0.0;
      ves_sum += std::sqrt(std::max(t_gold, 1e-9) / std::max(t_pred, 1e-9));
    }

    for (int i = 0; i < k; ++i) {
      const Trajectory& traj = group.trajectories[static_cast<std::size_t>(i)];
      tool_calls += static_cast<double>(traj.steps.size());
      response_chars += static_cast<double>(traj.source.size());
      ++trajectory_count;
    }
  }

  const double question_count = static_cast<double>(groups.size());
  metrics.voting_ex = voted_correct_sum / question_count;
  metrics.ex = metrics.voting_ex;
  metrics.pass_at_k = any_correct_sum / question_count;
  metrics.ves = ves_sum / question_count;
  metrics.mean_tool_calls = tool_calls / static_cast<double>(trajectory_count);
  metrics.mean_response_chars = response_chars / static_cast<double>(trajectory_count);
  return metrics;
}

}  // namespace stepcredit
