#include "stepcredit/jsonl.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace stepcredit {

std::string to_jsonl_line(const TrajectoryRecord& record) {
  nlohmann::json j = {{"prompt_id", record.prompt_id},
                      {"database_id", record.database_id},
                      {"gold_sql", record.gold_sql},
                      {"transcript", record.transcript},
                      {"group_index", record.group_index}};
  return j.dump();
}

TrajectoryRecord parse_trajectory_record(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  TrajectoryRecord record;
  record.prompt_id = j.at("prompt_id").get<std::string>();
  record.database_id = j.at("database_id").get<std::string>();
  record.gold_sql = j.at("gold_sql").get<std::string>();
  record.transcript = j.at("transcript").get<std::string>();
  record.group_index = j.at("group_index").get<int>();
  return record;
}

void write_trajectory_jsonl(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  for (const auto& record : records) out << to_jsonl_line(record) << "\n";
}

std::vector<TrajectoryRecord> read_trajectory_records(std::istream& in) {
  std::vector<TrajectoryRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(parse_trajectory_record(line));
  }
  return records;
}

std::vector<Group> groups_from_records(const std::vector<TrajectoryRecord>& records,
                                       const ParseOptions& options) {
  std::vector<Group> groups;
  for (const auto& record : records) {
    const bool new_group =
        groups.empty() || groups.back().prompt_id != record.prompt_id || record.group_index == 0;
    if (new_group) {
      if (record.group_index != 0) {
        throw std::invalid_argument("group '" + record.prompt_id +
                                    "' does not start at group_index 0");
      }
      Group group;
      group.prompt_id = record.prompt_id;
      group.database_id = record.database_id;
      group.gold_sql = record.gold_sql;
      groups.push_back(std::move(group));
    }
    Group& group = groups.back();
    if (record.group_index != static_cast<int>(group.trajectories.size())) {
      throw std::invalid_argument("non-contiguous group_index in group '" + record.prompt_id + "'");
    }
    if (record.database_id != group.database_id || record.gold_sql != group.gold_sql) {
      throw std::invalid_argument("inconsistent database_id/gold_sql in group '" +
                                  record.prompt_id + "'");
    }
    group.trajectories.push_back(parse_transcript_lenient(record.transcript, options));
  }
  for (const auto& group : groups) {
    if (group.trajectories.size() < 2) {
      throw std::invalid_argument("group '" + group.prompt_id + "' has fewer than 2 trajectories");
    }
  }
  return groups;
}

std::string ledger_json(const RewardLedger& ledger) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : ledger.steps) {
    steps.push_back({{"hard", step.hard}, {"soft", step.soft}, {"proc", step.proc}});
  }
  nlohmann::json j = {{"outcome",
                       {{"r_fmt", ledger.outcome.r_fmt},
                        {"r_exec", ledger.outcome.r_exec},
                        {"total", ledger.outcome.total}}},
                      {"steps", steps}};
  return j.dump();
}

std::string advantages_json(const std::string& prompt_id,
                            const std::vector<StepAdvantages>& advantages) {
  nlohmann::json trajectories = nlohmann::json::array();
  for (const auto& adv : advantages) {
    trajectories.push_back({{"a_mixed", adv.a_mixed},
                            {"a_out_norm", adv.a_out_norm},
                            {"a_proc_norm", adv.a_proc_norm}});
  }
  nlohmann::json j = {{"prompt_id", prompt_id}, {"trajectories", trajectories}};
  return j.dump();
}

}  // namespace stepcredit
