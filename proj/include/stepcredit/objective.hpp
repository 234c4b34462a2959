#pragma once

#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "stepcredit/credit.hpp"
#include "stepcredit/transcript.hpp"

namespace stepcredit {

/// Bridge from transcript byte spans to token positions. Tokenization is an
/// input; test fixtures use whitespace tokenization.
struct TokenAlignment {
  struct TokenSpan {
    int token_index = 0;
    std::size_t char_begin = 0;
    std::size_t char_end = 0;
  };
  std::vector<TokenSpan> token_spans;
  int length = 0;  // total token count
};

/// Whitespace tokenizer over the source string; one token per maximal run
/// of non-whitespace bytes.
TokenAlignment whitespace_alignment(std::string_view source);

struct TokenTensor {
  std::vector<double> advantage;
  std::vector<int> loss_mask;  // 0 on feedback tokens and outside segments
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
};

enum class Aggregation { TokenMean };

struct ObjectiveConfig {
  double clip_eps = 0.2;
  double kl_coef = 1e-3;
  Aggregation aggregation = Aggregation::TokenMean;
};

class AlignmentGap : public std::runtime_error {
 public:
  explicit AlignmentGap(const std::string& what) : std::runtime_error(what) {}
};

class EmptyMask : public std::runtime_error {
 public:
  explicit EmptyMask(const std::string& what) : std::runtime_error(what) {}
};

struct BroadcastResult {
  std::vector<double> advantage;
  std::vector<int> loss_mask;
};

/// Broadcast each step's mixed advantage to every token of its reasoning,
/// tool-call and feedback spans (answer-step tokens get the final entry).
/// Feedback tokens and tokens outside any segment are masked out. Throws
/// AlignmentGap when a segment has no tokens.
BroadcastResult broadcast_advantages(const Trajectory& traj, const StepAdvantages& adv,
                                     const TokenAlignment& align);

struct ObjectiveValue {
  double value = 0.0;
  double clipped_fraction = 0.0;
  double kl = 0.0;
};

/// Clipped surrogate objective with KL regularization, token-mean aggregated
/// over unmasked tokens only. Masked tokens are never read, so the value is
/// bit-for-bit invariant under changes to their log-probs.
ObjectiveValue surrogate_objective(const TokenTensor& tensor, const ObjectiveConfig& config = {});

}  // namespace stepcredit
