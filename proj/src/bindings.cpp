#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stepcredit/credit.hpp"
#include "stepcredit/fixtures.hpp"
#include "stepcredit/harness.hpp"
#include "stepcredit/jsonl.hpp"
#include "stepcredit/objective.hpp"
#include "stepcredit/rewards.hpp"
#include "stepcredit/transcript.hpp"

namespace py = pybind11;
using namespace stepcredit;

PYBIND11_MODULE(_core, m) {
  m.doc() = "step-level credit assignment engine for tool-integrated SQL rollouts";

  py::register_exception<MalformedTranscript>(m, "MalformedTranscript");
  py::register_exception<MissingDatabaseError>(m, "MissingDatabaseError");
  py::register_exception<AlignmentGap>(m, "AlignmentGap");
  py::register_exception<EmptyMask>(m, "EmptyMask");

  // transcript
  py::enum_<SegmentKind>(m, "SegmentKind")
      .value("Reasoning", SegmentKind::Reasoning)
      .value("ToolCall", SegmentKind::ToolCall)
      .value("Feedback", SegmentKind::Feedback)
      .value("Answer", SegmentKind::Answer);

  py::class_<Span>(m, "Span")
      .def(py::init<>())
      .def_readwrite("begin", &Span::begin)
      .def_readwrite("end", &Span::end);

  py::class_<Segment>(m, "Segment")
      .def(py::init<>())
      .def_readwrite("kind", &Segment::kind)
      .def_readwrite("text", &Segment::text)
      .def_readwrite("span", &Segment::span);

  py::class_<Step>(m, "Step")
      .def(py::init<>())
      .def_readwrite("index", &Step::index)
      .def_readwrite("reasoning", &Step::reasoning)
      .def_readwrite("action", &Step::action)
      .def_readwrite("feedback", &Step::feedback)
      .def_readwrite("parsed_sql", &Step::parsed_sql);

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("steps", &Trajectory::steps)
      .def_readwrite("final_reasoning", &Trajectory::final_reasoning)
      .def_readwrite("answer", &Trajectory::answer)
      .def_readwrite("source", &Trajectory::source)
      .def_readwrite("truncated", &Trajectory::truncated)
      .def_readwrite("parse_diagnostics", &Trajectory::parse_diagnostics);

  py::class_<Group>(m, "Group")
      .def(py::init<>())
      .def_readwrite("prompt_id", &Group::prompt_id)
      .def_readwrite("trajectories", &Group::trajectories)
      .def_readwrite("gold_sql", &Group::gold_sql)
      .def_readwrite("database_id", &Group::database_id);

  py::class_<ParseOptions>(m, "ParseOptions")
      .def(py::init<>())
      .def_readwrite("reasoning_tag", &ParseOptions::reasoning_tag)
      .def_readwrite("max_turns", &ParseOptions::max_turns);

  py::class_<FormatReport>(m, "FormatReport")
      .def_readonly("ok", &FormatReport::ok)
      .def_readonly("violations", &FormatReport::violations);

  m.def(
      "parse_transcript",
      [](const std::string& text, const ParseOptions& options) {
        return parse_transcript(text, options);
      },
      py::arg("text"), py::arg("options") = ParseOptions{});
  m.def(
      "parse_transcript_lenient",
      [](const std::string& text, const ParseOptions& options) {
        return parse_transcript_lenient(text, options);
      },
      py::arg("text"), py::arg("options") = ParseOptions{});
  m.def("segment_roles", &segment_roles, py::arg("trajectory"));
  m.def("check_format", &check_format, py::arg("trajectory"), py::arg("options") = ParseOptions{});

  // executor
  py::class_<Cell>(m, "Cell")
      .def_static("null", &Cell::null)
      .def_static("integer", &Cell::integer)
      .def_static("real", &Cell::real)
      .def_static("text", &Cell::text)
      .def("is_null", &Cell::is_null)
      .def("canonical", [](const Cell& c) { return canonical_cell(c); });

  py::class_<ExecutionResult>(m, "ExecutionResult")
      .def(py::init<>())
      .def_readwrite("columns", &ExecutionResult::columns)
      .def_readwrite("rows", &ExecutionResult::rows)
      .def_readwrite("elapsed_seconds", &ExecutionResult::elapsed_seconds)
      .def_readwrite("truncated_rows", &ExecutionResult::truncated_rows);

  py::enum_<ExecError::Kind>(m, "ExecErrorKind")
      .value("Syntax", ExecError::Kind::Syntax)
      .value("Timeout", ExecError::Kind::Timeout)
      .value("ReadOnlyViolation", ExecError::Kind::ReadOnlyViolation)
      .value("MissingDatabase", ExecError::Kind::MissingDatabase)
      .value("EngineError", ExecError::Kind::EngineError);

  py::class_<ExecError>(m, "ExecError")
      .def_readonly("kind", &ExecError::kind)
      .def_readonly("message", &ExecError::message);

  py::class_<Registry>(m, "Registry")
      .def(py::init<>())
      .def("add", &Registry::add, py::arg("database_id"), py::arg("path"))
      .def_static("from_manifest", &Registry::from_manifest, py::arg("manifest_or_dir"))
      .def("database_ids", &Registry::database_ids);

  py::class_<ExecLimits>(m, "ExecLimits")
      .def(py::init([](long long timeout_ms, int max_rows) {
             return ExecLimits{std::chrono::milliseconds(timeout_ms), max_rows};
           }),
           py::arg("timeout_ms") = 5000, py::arg("max_rows") = 50)
      .def_property(
          "timeout_ms",
          [](const ExecLimits& l) { return static_cast<long long>(l.timeout.count()); },
          [](ExecLimits& l, long long ms) { l.timeout = std::chrono::milliseconds(ms); })
      .def_readwrite("max_rows", &ExecLimits::max_rows);

  py::class_<SqlExecutor>(m, "SqlExecutor")
      .def(py::init<Registry, int>(), py::arg("registry"), py::arg("max_concurrent") = 8)
      .def(
          "execute",
          [](const SqlExecutor& exec, const std::string& sql, const std::string& database_id,
             const ExecLimits& limits) -> py::object {
            ExecOutcome outcome = exec.execute(sql, database_id, limits);
            if (auto* err = std::get_if<ExecError>(&outcome)) return py::cast(*err);
            return py::cast(std::get<ExecutionResult>(outcome));
          },
          py::arg("sql"), py::arg("database_id"), py::arg("limits") = ExecLimits{})
      .def(
          "timed_execute",
          [](const SqlExecutor& exec, const std::string& sql, const std::string& database_id,
             int repeats) -> py::object {
            auto outcome = exec.timed_execute(sql, database_id, repeats);
            if (auto* err = std::get_if<ExecError>(&outcome)) return py::cast(*err);
            return py::cast(std::get<double>(outcome));
          },
          py::arg("sql"), py::arg("database_id"), py::arg("repeats") = 5);

  m.def("exact_match", &exact_match, py::arg("pred"), py::arg("gold"));
  m.def(
      "flatten_cells",
      [](const ExecutionResult& res) { return flatten_cells(res).elements; },
      py::arg("result"));
  m.def("serialize_feedback", &serialize_feedback, py::arg("outcome"), py::arg("max_chars"));
  m.attr("NULL_SENTINEL") = py::bytes(kNullSentinel);

  // rewards
  py::class_<OutcomeReward>(m, "OutcomeReward")
      .def_readonly("r_fmt", &OutcomeReward::r_fmt)
      .def_readonly("r_exec", &OutcomeReward::r_exec)
      .def_readonly("total", &OutcomeReward::total);

  py::class_<StepReward>(m, "StepReward")
      .def_readonly("hard", &StepReward::hard)
      .def_readonly("soft", &StepReward::soft)
      .def_readonly("proc", &StepReward::proc);

  py::class_<RewardLedger>(m, "RewardLedger")
      .def_readonly("outcome", &RewardLedger::outcome)
      .def_readonly("steps", &RewardLedger::steps);

  m.def("normalize_sql", &normalize_sql, py::arg("sql"));
  m.def("format_reward", &format_reward, py::arg("trajectory"),
        py::arg("options") = ParseOptions{});
  m.def("soft_recall", &soft_recall, py::arg("step_result"), py::arg("gold_result"),
        py::arg("eps") = 1e-6);
  m.def(
      "score_trajectory",
      [](const Trajectory& traj, const std::string& gold_sql, const std::string& database_id,
         const SqlExecutor& exec) { return score_trajectory(traj, gold_sql, database_id, exec); },
      py::arg("trajectory"), py::arg("gold_sql"), py::arg("database_id"), py::arg("executor"));
  m.def(
      "ledger_json", [](const RewardLedger& ledger) { return ledger_json(ledger); },
      py::arg("ledger"));

  // credit assignment
  py::class_<CreditConfig>(m, "CreditConfig")
      .def(py::init<>())
      .def_readwrite("gamma", &CreditConfig::gamma)
      .def_readwrite("beta", &CreditConfig::beta)
      .def_readwrite("lambda_", &CreditConfig::lambda)
      .def_readwrite("eps", &CreditConfig::eps);

  py::class_<StepAdvantages>(m, "StepAdvantages")
      .def_readonly("a_mixed", &StepAdvantages::a_mixed)
      .def_readonly("a_out_norm", &StepAdvantages::a_out_norm)
      .def_readonly("a_proc_norm", &StepAdvantages::a_proc_norm);

  m.def("discount_outcome", &discount_outcome, py::arg("r_out"), py::arg("num_steps"),
        py::arg("gamma"));
  m.def(
      "smooth_process",
      [](const std::vector<double>& r, double beta) { return smooth_process(r, beta); },
      py::arg("r_proc"), py::arg("beta"));
  m.def(
      "step_advantages",
      [](const std::vector<RewardLedger>& ledgers, const CreditConfig& config) {
        return step_advantages(ledgers, config);
      },
      py::arg("group_ledgers"), py::arg("config") = CreditConfig{});
  m.def(
      "grpo_advantages",
      [](const std::vector<double>& rewards, double eps) { return grpo_advantages(rewards, eps); },
      py::arg("group_rewards"), py::arg("eps") = 1e-8);

  // objective
  py::class_<TokenAlignment::TokenSpan>(m, "TokenSpan")
      .def(py::init<>())
      .def_readwrite("token_index", &TokenAlignment::TokenSpan::token_index)
      .def_readwrite("char_begin", &TokenAlignment::TokenSpan::char_begin)
      .def_readwrite("char_end", &TokenAlignment::TokenSpan::char_end);

  py::class_<TokenAlignment>(m, "TokenAlignment")
      .def(py::init<>())
      .def_readwrite("token_spans", &TokenAlignment::token_spans)
      .def_readwrite("length", &TokenAlignment::length);

  m.def("whitespace_alignment",
        [](const std::string& source) { return whitespace_alignment(source); },
        py::arg("source"));

  py::class_<TokenTensor>(m, "TokenTensor")
      .def(py::init<>())
      .def_readwrite("advantage", &TokenTensor::advantage)
      .def_readwrite("loss_mask", &TokenTensor::loss_mask)
      .def_readwrite("logp_new", &TokenTensor::logp_new)
      .def_readwrite("logp_old", &TokenTensor::logp_old)
      .def_readwrite("logp_ref", &TokenTensor::logp_ref);

  py::class_<ObjectiveConfig>(m, "ObjectiveConfig")
      .def(py::init<>())
      .def_readwrite("clip_eps", &ObjectiveConfig::clip_eps)
      .def_readwrite("kl_coef", &ObjectiveConfig::kl_coef);

  py::class_<BroadcastResult>(m, "BroadcastResult")
      .def_readonly("advantage", &BroadcastResult::advantage)
      .def_readonly("loss_mask", &BroadcastResult::loss_mask);

  py::class_<ObjectiveValue>(m, "ObjectiveValue")
      .def_readonly("value", &ObjectiveValue::value)
      .def_readonly("clipped_fraction", &ObjectiveValue::clipped_fraction)
      .def_readonly("kl", &ObjectiveValue::kl);

  m.def("broadcast_advantages", &broadcast_advantages, py::arg("trajectory"),
        py::arg("advantages"), py::arg("alignment"));
  m.def("surrogate_objective", &surrogate_objective, py::arg("tensor"),
        py::arg("config") = ObjectiveConfig{});

  // harness
  py::class_<QuestionFixture>(m, "QuestionFixture")
      .def(py::init<>())
      .def_readwrite("prompt_id", &QuestionFixture::prompt_id)
      .def_readwrite("question", &QuestionFixture::question)
      .def_readwrite("hint", &QuestionFixture::hint)
      .def_readwrite("database_id", &QuestionFixture::database_id)
      .def_readwrite("gold_sql", &QuestionFixture::gold_sql);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("fixture", &Scenario::fixture)
      .def_property_readonly("policy_count",
                             [](const Scenario& s) { return s.policies.size(); });

  py::class_<EvalMetrics>(m, "EvalMetrics")
      .def_readonly("ex", &EvalMetrics::ex)
      .def_readonly("ves", &EvalMetrics::ves)
      .def_readonly("mean_tool_calls", &EvalMetrics::mean_tool_calls)
      .def_readonly("mean_response_chars", &EvalMetrics::mean_response_chars)
      .def_readonly("voting_ex", &EvalMetrics::voting_ex)
      .def_readonly("pass_at_k", &EvalMetrics::pass_at_k);

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "run_scenario",
      [](const Scenario& scenario, const SqlExecutor& exec) {
        return run_group(scenario.policies, scenario.fixture, exec);
      },
      py::arg("scenario"), py::arg("executor"));
  m.def(
      "evaluate",
      [](const std::vector<Group>& groups, int k, const SqlExecutor& exec) {
        return evaluate(groups, k, exec);
      },
      py::arg("groups"), py::arg("k"), py::arg("executor"));

  // fixtures
  auto fixtures = m.def_submodule("fixtures", "shipped fixture databases and scenarios");
  fixtures.def("write_registry", &stepcredit::fixtures::write_registry, py::arg("dir"));
  fixtures.def("write_scenarios", &stepcredit::fixtures::write_scenarios, py::arg("dir"));
  fixtures.def("school_open_date_scenario", &stepcredit::fixtures::school_open_date_scenario);
  fixtures.def("oldest_person_scenario", &stepcredit::fixtures::oldest_person_scenario);
}
