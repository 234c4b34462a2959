#include "stepcredit/credit.hpp"

#include <cmath>
#include <stdexcept>

namespace stepcredit {

std::vector<double> discount_outcome(double r_out, int num_steps, double gamma) {
  if (num_steps < 0) throw std::invalid_argument("num_steps must be >= 0");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");
  std::vector<double> values(static_cast<std::size_t>(num_steps) + 1);
  for (int t = 0; t <= num_steps; ++t) {
    values[static_cast<std::size_t>(t)] = std::pow(gamma, num_steps - t) * r_out;
  }
  return values;
}

std::vector<double> smooth_process(std::span<const double> r_proc, double beta) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must be in [0, 1]");
  std::vector<double> values(r_proc.begin(), r_proc.end());
  if (values.empty()) return values;
  for (std::size_t t = values.size() - 1; t-- > 0;) {
    values[t] = (1.0 - beta) * r_proc[t] + beta * values[t + 1];
  }
  return values;
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Moments moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return m;
}

}  // namespace

std::vector<double> standardize(std::span<const double> values, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  const Moments m = moments(values);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - m.mean) / (m.stddev + eps));
  return out;
}

std::vector<PooledValue> normalize_over_group(std::vector<PooledValue> values, double eps) {
  if (values.empty()) throw std::invalid_argument("normalize_over_group requires values");
  std::vector<double> raw;
  raw.reserve(values.size());
  for (const auto& v : values) raw.push_back(v.value);
  const std::vector<double> scaled = standardize(raw, eps);
  for (std::size_t i = 0; i < values.size(); ++i) values[i].value = scaled[i];
  return values;
}

ValueSeries value_series(const RewardLedger& ledger, const CreditConfig& config) {
  ValueSeries series;
  std::vector<double> proc;
  proc.reserve(ledger.steps.size());
  for (const auto& step : ledger.steps) proc.push_back(step.proc);
  series.v_out =
      discount_outcome(ledger.outcome.total, static_cast<int>(ledger.steps.size()), config.gamma);
  series.v_proc = smooth_process(proc, config.beta);
  return series;
}

std::vector<StepAdvantages> step_advantages(std::span<const RewardLedger> group_ledgers,
                                            const CreditConfig& config) {
  if (group_ledgers.empty()) {
    throw std::invalid_argument("step_advantages requires at least one trajectory");
  }
  if (config.lambda < 0.0 || config.lambda > 1.0) {
    throw std::invalid_argument("lambda must be in [0, 1]");
  }

  std::vector<ValueSeries> series;
  series.reserve(group_ledgers.size());
  std::vector<double> out_pool;
  std::vector<double> proc_pool;
  for (const auto& ledger : group_ledgers) {
    series.push_back(value_series(ledger, config));
    const auto& s = series.back();
    out_pool.insert(out_pool.end(), s.v_out.begin(), s.v_out.end());
    proc_pool.insert(proc_pool.end(), s.v_proc.begin(), s.v_proc.end());
  }

  const std::vector<double> out_norm = standardize(out_pool, config.eps);
  const std::vector<double> proc_norm =
      proc_pool.empty() ? std::vector<double>{} : standardize(proc_pool, config.eps);

  std::vector<StepAdvantages> result(series.size());
  std::size_t out_cursor = 0;
  std::size_t proc_cursor = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t num_steps = series[i].v_proc.size();
    auto& adv = result[i];
    adv.a_out_norm.assign(out_norm.begin() + static_cast<std::ptrdiff_t>(out_cursor),
                          out_norm.begin() + static_cast<std::ptrdiff_t>(out_cursor + num_steps + 1));
    out_cursor += num_steps + 1;
    adv.a_proc_norm.assign(proc_norm.begin() + static_cast<std::ptrdiff_t>(proc_cursor),
                           proc_norm.begin() + static_cast<std::ptrdiff_t>(proc_cursor + num_steps));
    proc_cursor += num_steps;

    adv.a_mixed.resize(num_steps + 1);
    for (std::size_t t = 0; t < num_steps; ++t) {
      adv.a_mixed[t] =
          config.lambda * adv.a_out_norm[t] + (1.0 - config.lambda) * adv.a_proc_norm[t];
    }
    adv.a_mixed[num_steps] = adv.a_out_norm[num_steps];  // answer step: outcome only
  }
  return result;
}

std::vector<double> grpo_advantages(std::span<const double> group_rewards, double eps) {
  if (group_rewards.size() < 2) {
    throw std::invalid_argument("grpo_advantages requires a group of size >= 2");
  }
  return standardize(group_rewards, eps);
}

}  // namespace stepcredit
