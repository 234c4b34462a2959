#pragma once

#include <span>
#include <vector>

#include "stepcredit/rewards.hpp"

namespace stepcredit {

struct CreditConfig {
  double gamma = 0.98;   // outcome discount, (0, 1]
  double beta = 0.5;     // process smoothing, [0, 1]
  double lambda = 0.5;   // outcome weight in the mix, [0, 1]
  double eps = 1e-8;     // normalization guard
};

/// Discounted outcome values (length T+1) and smoothed process values
/// (length T) for one trajectory.
struct ValueSeries {
  std::vector<double> v_out;
  std::vector<double> v_proc;
};

struct StepAdvantages {
  std::vector<double> a_mixed;      // length T+1; final entry is outcome-only
  std::vector<double> a_out_norm;   // length T+1
  std::vector<double> a_proc_norm;  // length T
};

/// v[t] = gamma^(T-t) * r_out for t = 0..T.
std::vector<double> discount_outcome(double r_out, int num_steps, double gamma);

/// Backward recursion: v[T-1] = r[T-1]; v[t] = (1-beta)*r[t] + beta*v[t+1].
std::vector<double> smooth_process(std::span<const double> r_proc, double beta);

struct PooledValue {
  int traj_index = 0;
  int step_index = 0;
  double value = 0.0;
};

/// Standardize values over the whole pool: (v - mean) / (std + eps),
/// population standard deviation. Constant pools come back as zeros.
std::vector<PooledValue> normalize_over_group(std::vector<PooledValue> values, double eps);

/// In-place pooled standardization helper used by the keyed variant.
std::vector<double> standardize(std::span<const double> values, double eps);

ValueSeries value_series(const RewardLedger& ledger, const CreditConfig& config);

/// Group-level step advantages: discount outcome rewards, smooth process
/// rewards, pool both value sets across all trajectories of the group,
/// standardize each pool, then mix per step. Final answer steps take the
/// outcome signal only and contribute nothing to the process pool.
std::vector<StepAdvantages> step_advantages(std::span<const RewardLedger> group_ledgers,
                                            const CreditConfig& config = {});

/// Trajectory-level baseline: (r_i - mean) / (std + eps) over the group,
/// shared by every token of trajectory i. Requires G >= 2.
std::vector<double> grpo_advantages(std::span<const double> group_rewards, double eps = 1e-8);

}  // namespace stepcredit
