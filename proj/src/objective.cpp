#include "stepcredit/objective.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace stepcredit {

TokenAlignment whitespace_alignment(std::string_view source) {
  TokenAlignment align;
  std::size_t pos = 0;
  while (pos < source.size()) {
    while (pos < source.size() && std::isspace(static_cast<unsigned char>(source[pos]))) ++pos;
    if (pos >= source.size()) break;
    std::size_t begin = pos;
    while (pos < source.size() && !std::isspace(static_cast<unsigned char>(source[pos]))) ++pos;
    align.token_spans.push_back({align.length, begin, pos});
    ++align.length;
  }
  return align;
}

namespace {

struct SegmentTarget {
  Span span;
  double advantage = 0.0;
  int mask = 0;
  bool has_token = false;
};

bool intersects(const Span& span, std::size_t begin, std::size_t end) {
  return begin < span.end && span.begin < end;
}

}  // namespace

BroadcastResult broadcast_advantages(const Trajectory& traj, const StepAdvantages& adv,
                                     const TokenAlignment& align) {
  const std::size_t num_steps = traj.steps.size();
  if (adv.a_mixed.size() != num_steps + 1) {
    throw std::invalid_argument("a_mixed length must be steps + 1");
  }

  std::vector<SegmentTarget> targets;
  targets.reserve(num_steps * 3 + 2);
  for (std::size_t t = 0; t < num_steps; ++t) {
    const Step& step = traj.steps[t];
    const double a = adv.a_mixed[t];
    targets.push_back({step.reasoning.span, a, 1, false});
    targets.push_back({step.action.span, a, 1, false});
    targets.push_back({step.feedback.span, a, 0, false});
  }
  const double final_a = adv.a_mixed[num_steps];
  if (traj.final_reasoning) targets.push_back({traj.final_reasoning->span, final_a, 1, false});
  if (traj.answer) targets.push_back({traj.answer->span, final_a, 1, false});

  BroadcastResult result;
  result.advantage.assign(static_cast<std::size_t>(align.length), 0.0);
  result.loss_mask.assign(static_cast<std::size_t>(align.length), 0);

  for (const auto& token : align.token_spans) {
    if (token.token_index < 0 || token.token_index >= align.length) {
      throw std::invalid_argument("token index out of range");
    }
    for (auto& target : targets) {
      if (intersects(target.span, token.char_begin, token.char_end)) {
        result.advantage[static_cast<std::size_t>(token.token_index)] = target.advantage;
        result.loss_mask[static_cast<std::size_t>(token.token_index)] = target.mask;
        target.has_token = true;
        break;
      }
    }
  }

  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!targets[i].has_token && targets[i].span.size() > 0) {
      throw AlignmentGap("segment [" + std::to_string(targets[i].span.begin) + ", " +
                         std::to_string(targets[i].span.end) + ") has no tokens");
    }
  }
  return result;
}

ObjectiveValue surrogate_objective(const TokenTensor& tensor, const ObjectiveConfig& config) {
  const std::size_t n = tensor.advantage.size();
  if (tensor.loss_mask.size() != n || tensor.logp_new.size() != n ||
      tensor.logp_old.size() != n || tensor.logp_ref.size() != n) {
    throw std::invalid_argument("token tensor arrays must share one length");
  }
  if (config.clip_eps <= 0.0) throw std::invalid_argument("clip_eps must be positive");
  if (config.kl_coef < 0.0) throw std::invalid_argument("kl_coef must be >= 0");

  double sum = 0.0;
  double kl_sum = 0.0;
  std::size_t unmasked = 0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tensor.loss_mask[i] == 0) continue;  // masked tokens are never read
    ++unmasked;
    const double a = tensor.advantage[i];
    const double ratio = std::exp(tensor.logp_new[i] - tensor.logp_old[i]);
    const double unclipped = ratio * a;
    const double clipped_term =
        std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * a;
    const double term = std::min(unclipped, clipped_term);
    if (clipped_term < unclipped) ++clipped;

    const double delta = tensor.logp_ref[i] - tensor.logp_new[i];
    const double kl_term = std::exp(delta) - delta - 1.0;
    kl_sum += kl_term;
    sum += term - config.kl_coef * kl_term;
  }
  if (unmasked == 0) throw EmptyMask("no token carries loss_mask = 1");

  ObjectiveValue value;
  value.value = sum / static_cast<double>(unmasked);
  value.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(unmasked);
  value.kl = kl_sum / static_cast<double>(unmasked);
  return value;
}

}  // namespace stepcredit
