#include "stepcredit/transcript.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "json.hpp"

namespace stepcredit {

namespace {

struct TagVocabulary {
  struct Entry {
    SegmentKind kind;
    std::string open;
    std::string close;
  };
  std::array<Entry, 4> entries;

  explicit TagVocabulary(const std::string& reasoning_tag)
      : entries{{{SegmentKind::Reasoning, "<" + reasoning_tag + ">", "</" + reasoning_tag + ">"},
                 {SegmentKind::ToolCall, "<tool_call>", "</tool_call>"},
                 {SegmentKind::Feedback, "<result>", "</result>"},
                 {SegmentKind::Answer, "<answer>", "</answer>"}}} {}

  const Entry& entry(SegmentKind kind) const {
    for (const auto& e : entries) {
      if (e.kind == kind) return e;
    }
    return entries[0];
  }
};

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

// Earliest occurrence of any open or close tag at or after `from`.
struct TagHit {
  std::size_t pos = std::string_view::npos;
  const TagVocabulary::Entry* entry = nullptr;
  bool closing = false;
};

TagHit find_next_tag(std::string_view source, std::size_t from, const TagVocabulary& vocab) {
  TagHit best;
  for (const auto& e : vocab.entries) {
    for (bool closing : {false, true}) {
      const std::string& token = closing ? e.close : e.open;
      auto pos = source.find(token, from);
      if (pos != std::string_view::npos && pos < best.pos) {
        best = {pos, &e, closing};
      }
    }
  }
  return best;
}

// Figure-2 tool envelope: {"name": "sql_executor", "arguments": {"sql": ...}}.
std::optional<std::string> decode_tool_payload(const std::string& payload) {
  auto parsed = nlohmann::json::parse(payload, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  if (parsed.value("name", std::string{}) != "sql_executor") return std::nullopt;
  auto args = parsed.find("arguments");
  if (args == parsed.end() || !args->is_object()) return std::nullopt;
  auto sql = args->find("sql");
  if (sql == args->end() || !sql->is_string()) return std::nullopt;
  return sql->get<std::string>();
}

std::vector<Segment> scan_segments(std::string_view source, const TagVocabulary& vocab,
                                   std::vector<std::string>& diagnostics) {
  std::vector<Segment> segments;
  std::size_t pos = 0;
  while (true) {
    TagHit hit = find_next_tag(source, pos, vocab);
    if (hit.pos == std::string_view::npos) {
      if (!is_blank(source.substr(pos))) {
        diagnostics.push_back("loose text after the last segment");
      }
      break;
    }
    if (!is_blank(source.substr(pos, hit.pos - pos))) {
      diagnostics.push_back("loose text before offset " + std::to_string(hit.pos));
    }
    if (hit.closing) {
      throw MalformedTranscript("unmatched closing tag " + hit.entry->close + " at offset " +
                                std::to_string(hit.pos));
    }
    std::size_t text_begin = hit.pos + hit.entry->open.size();
    std::size_t close_pos = source.find(hit.entry->close, text_begin);
    if (close_pos == std::string_view::npos) {
      throw MalformedTranscript("unclosed " + hit.entry->open);
    }
    segments.push_back(Segment{hit.entry->kind,
                               std::string(source.substr(text_begin, close_pos - text_begin)),
                               Span{text_begin, close_pos}});
    pos = close_pos + hit.entry->close.size();
  }
  return segments;
}

// Fold the flat segment list into interaction steps plus the trailing
// reasoning/answer pair. Segments that do not fit the cycle structure are
// dropped with a diagnostic so invalid transcripts stay scoreable.
void assemble(Trajectory& traj, std::vector<Segment> segments,
              std::vector<std::string>& diagnostics) {
  std::optional<Segment> pending_reasoning;
  std::optional<Segment> pending_action;
  bool after_answer = false;

  for (auto& seg : segments) {
    if (traj.answer) {
      if (!after_answer) {
        diagnostics.push_back("content after the answer segment");
        after_answer = true;
      }
      continue;
    }
    switch (seg.kind) {
      case SegmentKind::Reasoning:
        if (pending_action) {
          diagnostics.push_back("tool call without feedback");
          pending_action.reset();
          pending_reasoning = std::move(seg);
        } else if (pending_reasoning) {
          diagnostics.push_back("consecutive reasoning segments");
          pending_reasoning = std::move(seg);
        } else {
          pending_reasoning = std::move(seg);
        }
        break;
      case SegmentKind::ToolCall:
        if (!pending_reasoning) {
          diagnostics.push_back("tool call without preceding reasoning");
        } else if (pending_action) {
          diagnostics.push_back("tool call without feedback");
          pending_action = std::move(seg);
        } else {
          pending_action = std::move(seg);
        }
        break;
      case SegmentKind::Feedback:
        if (pending_reasoning && pending_action) {
          Step step;
          step.index = static_cast<int>(traj.steps.size());
          step.reasoning = std::move(*pending_reasoning);
          step.action = std::move(*pending_action);
          step.feedback = std::move(seg);
          step.parsed_sql = decode_tool_payload(step.action.text);
          traj.steps.push_back(std::move(step));
          pending_reasoning.reset();
          pending_action.reset();
        } else {
          diagnostics.push_back("feedback without a preceding tool call");
        }
        break;
      case SegmentKind::Answer:
        if (pending_action) {
          diagnostics.push_back("tool call without feedback");
          pending_action.reset();
          pending_reasoning.reset();
        } else if (pending_reasoning) {
          traj.final_reasoning = std::move(pending_reasoning);
          pending_reasoning.reset();
        } else {
          diagnostics.push_back("answer without preceding reasoning");
        }
        traj.answer = std::move(seg);
        break;
    }
  }
  if (pending_action) {
    diagnostics.push_back("tool call without feedback");
  } else if (pending_reasoning && !traj.answer) {
    traj.final_reasoning = std::move(pending_reasoning);
  }
}

}  // namespace

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Reasoning: return "reasoning";
    case SegmentKind::ToolCall: return "tool_call";
    case SegmentKind::Feedback: return "result";
    case SegmentKind::Answer: return "answer";
  }
  return "unknown";
}

Trajectory parse_transcript(std::string_view text, const ParseOptions& options) {
  if (options.max_turns < 1) {
    throw std::invalid_argument("max_turns must be >= 1");
  }
  TagVocabulary vocab(options.reasoning_tag);
  Trajectory traj;
  traj.source = std::string(text);

  std::vector<std::string> diagnostics;
  auto segments = scan_segments(traj.source, vocab, diagnostics);
  assemble(traj, std::move(segments), diagnostics);

  if (traj.steps.size() > static_cast<std::size_t>(options.max_turns)) {
    traj.steps.resize(static_cast<std::size_t>(options.max_turns));
    traj.truncated = true;
    traj.answer.reset();
    traj.final_reasoning.reset();
    diagnostics.push_back("truncated at max_turns=" + std::to_string(options.max_turns));
  }
  traj.parse_diagnostics = std::move(diagnostics);
  return traj;
}

Trajectory parse_transcript(std::string_view text, int max_turns) {
  ParseOptions options;
  options.max_turns = max_turns;
  return parse_transcript(text, options);
}

Trajectory parse_transcript_lenient(std::string_view text, const ParseOptions& options) {
  try {
    return parse_transcript(text, options);
  } catch (const MalformedTranscript& e) {
    Trajectory traj;
    traj.source = std::string(text);
    traj.parse_diagnostics.push_back(std::string("malformed transcript: ") + e.what());
    return traj;
  }
}

std::vector<std::pair<Span, SegmentKind>> segment_roles(const Trajectory& traj) {
  std::vector<std::pair<Span, SegmentKind>> roles;
  for (const auto& step : traj.steps) {
    roles.emplace_back(step.reasoning.span, step.reasoning.kind);
    roles.emplace_back(step.action.span, step.action.kind);
    roles.emplace_back(step.feedback.span, step.feedback.kind);
  }
  if (traj.final_reasoning) roles.emplace_back(traj.final_reasoning->span, traj.final_reasoning->kind);
  if (traj.answer) roles.emplace_back(traj.answer->span, traj.answer->kind);
  return roles;
}

FormatReport check_format(const Trajectory& traj, const ParseOptions& options) {
  FormatReport report;
  report.violations = traj.parse_diagnostics;

  if (traj.truncated) report.violations.push_back("truncated at max turns");
  if (!traj.answer) report.violations.push_back("missing answer");
  if (traj.answer && !traj.final_reasoning) {
    report.violations.push_back("missing reasoning before answer");
  }

  TagVocabulary vocab(options.reasoning_tag);
  auto scan_text = [&](const Segment& seg) {
    for (const auto& e : vocab.entries) {
      for (const std::string* token : {&e.open, &e.close}) {
        if (seg.text.find(*token) != std::string::npos) {
          report.violations.push_back("stray tag " + *token + " inside " +
                                      std::string(to_string(seg.kind)) + " segment");
        }
      }
    }
  };
  for (const auto& step : traj.steps) {
    scan_text(step.reasoning);
    scan_text(step.action);
    scan_text(step.feedback);
  }
  if (traj.final_reasoning) scan_text(*traj.final_reasoning);
  if (traj.answer) scan_text(*traj.answer);

  report.ok = report.violations.empty();
  return report;
}

}  // namespace stepcredit
