#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stepcredit {

enum class SegmentKind { Reasoning, ToolCall, Feedback, Answer };

std::string_view to_string(SegmentKind kind);

/// Half-open byte interval [begin, end) into the source transcript.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct Segment {
  SegmentKind kind = SegmentKind::Reasoning;
  std::string text;  // inner text, tags excluded; round-trips with span
  Span span;
};

/// One interaction cycle: reasoning, tool action, executor feedback.
struct Step {
  int index = 0;
  Segment reasoning;
  Segment action;
  Segment feedback;
  std::optional<std::string> parsed_sql;  // present iff the tool-call payload decoded
};

struct Trajectory {
  std::vector<Step> steps;
  std::optional<Segment> final_reasoning;
  std::optional<Segment> answer;
  std::string source;
  bool truncated = false;
  // Structural issues found while parsing (loose text, out-of-order
  // segments, truncation). check_format folds these into its report.
  std::vector<std::string> parse_diagnostics;
};

/// G trajectories sampled for one prompt; the normalization universe.
struct Group {
  std::string prompt_id;
  std::vector<Trajectory> trajectories;
  std::string gold_sql;
  std::string database_id;
};

struct ParseOptions {
  std::string reasoning_tag = "reasoning";  // "think" is the accepted alternative
  int max_turns = 10;
};

class MalformedTranscript : public std::runtime_error {
 public:
  explicit MalformedTranscript(const std::string& what) : std::runtime_error(what) {}
};

/// Parse a model transcript into segments and interaction steps.
///
/// The parser is deliberately lenient: out-of-order or dangling segments are
/// dropped with a diagnostic so that format-invalid transcripts still come
/// back as scoreable trajectories. It throws MalformedTranscript only when
/// the tag structure itself is broken (unclosed tag, unmatched closing tag).
Trajectory parse_transcript(std::string_view text, const ParseOptions& options = {});
Trajectory parse_transcript(std::string_view text, int max_turns);

/// Like parse_transcript but never throws; a malformed transcript yields an
/// empty trajectory carrying the error as a diagnostic.
Trajectory parse_transcript_lenient(std::string_view text, const ParseOptions& options = {});

/// One (span, kind) entry per segment of the trajectory, in source order.
std::vector<std::pair<Span, SegmentKind>> segment_roles(const Trajectory& traj);

struct FormatReport {
  bool ok = false;
  std::vector<std::string> violations;
};

/// Strict grammar check: a conformant transcript is a sequence of
/// reasoning/tool_call/result cycles, a final reasoning, and an answer,
/// with nothing in between and no tag tokens inside segment texts.
FormatReport check_format(const Trajectory& traj, const ParseOptions& options = {});

}  // namespace stepcredit
