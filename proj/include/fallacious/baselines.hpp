/*
 * Copyright 2026 The Fallacious Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Overlap baselines (ROUGE-1, ROUGE-L, BLEU), Pearson correlation, and the
// hook for embedding baselines served by an external scoring backend.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fallacious/backend.hpp"

namespace fallacious::baselines {

/// Lowercased word tokens; never contains empty strings.
using TokenSequence = std::vector<std::string>;

/// Lowercases (ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic), splits on
/// Unicode whitespace, strips leading and trailing punctuation from each
/// token and drops tokens that end up empty. "u.s. , albanian" gives
/// [u.s, albanian].
TokenSequence tokenize(std::string_view text);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Clipped n-gram overlap. Empty inputs score 0; n < 1 is kInvalidCount.
PrecisionRecall rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// P = LCS/|candidate|, R = LCS/|reference|.
PrecisionRecall rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n with brevity penalty. Orders n >= 2 use add-one smoothing,
/// (matches + 1) / (candidate n-grams + 1); the unigram precision is
/// unsmoothed, so a candidate with no unigram match scores 0.
double bleu(const TokenSequence& candidate, const TokenSequence& reference, int max_n = 4);

/// Sample Pearson r, clamped to [-1, 1]. kLengthMismatch, kInsufficientOverlap
/// (fewer than two points) and kDegenerateVariance (a constant input).
double pearson(std::span<const double> xs, std::span<const double> ys);

struct ClipBertWeights {
  double bert = 0.5;
  double clip = 0.5;
};

/// Convex combination of a BERTScore and a CLIPScore operand. Weights must
/// be non-negative and sum to 1.
double clip_bert_score(double bert_score, double clip_score, const ClipBertWeights& weights = {});

/// Scalar from the external scoring backend. A kBertScore request needs a
/// reference text, a kClipScore request needs image bytes.
double external_score(ScoringClient& client, const ScoringRequest& request);

}  // namespace fallacious::baselines
