#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stepcredit/credit.hpp"
#include "stepcredit/rewards.hpp"
#include "stepcredit/transcript.hpp"

namespace stepcredit {

/// One sampled trajectory on the wire. Groups are reconstructed from
/// consecutive lines sharing prompt_id, with group_index running 0..G-1.
struct TrajectoryRecord {
  std::string prompt_id;
  std::string database_id;
  std::string gold_sql;
  std::string transcript;
  int group_index = 0;
};

std::string to_jsonl_line(const TrajectoryRecord& record);
TrajectoryRecord parse_trajectory_record(const std::string& line);

void write_trajectory_jsonl(std::ostream& out, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectory_records(std::istream& in);

/// Reconstruct groups from records; transcripts are parsed leniently so a
/// malformed line becomes a format-invalid trajectory, never a crash.
std::vector<Group> groups_from_records(const std::vector<TrajectoryRecord>& records,
                                       const ParseOptions& options = {});

std::string ledger_json(const RewardLedger& ledger);
std::string advantages_json(const std::string& prompt_id,
                            const std::vector<StepAdvantages>& advantages);

}  // namespace stepcredit
