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

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fallacious/core.hpp"

namespace fallacious {

struct ScoringOptions {
  /// Drop questions where both reference and generated answers are
  /// NotProvided from numerator and denominator. Off by default, in which
  /// case a NotProvided/NotProvided pair counts as a match.
  bool exclude_not_provided_pairs = false;
};

/// Fraction of questions whose reference-summary and generated-summary
/// answers agree. Sources must be ReferenceSummary and GeneratedSummary.
FactualityScore score_reference_based(const AnswerSet& reference, const AnswerSet& generated,
                                      const ScoringOptions& options = {});

/// Fraction of questions answered Yes by the document or by the image.
/// Sources must be Document and Image.
FactualityScore score_reference_free(const AnswerSet& document, const AnswerSet& image);

/// Single-modality reductions of score_reference_free: only the document
/// operand, or only the image operand, is consulted.
FactualityScore score_document_only(const AnswerSet& document);
FactualityScore score_image_only(const AnswerSet& image);

using AnswerPair = std::pair<AnswerSet, AnswerSet>;

struct BatchScores {
  std::vector<FactualityScore> scores;
  double mean = 0.0;
};

/// Scores each pair with the framework's scorer, in input order. The first
/// failing pair aborts the batch; its error carries the pair index.
BatchScores score_batch(std::span<const AnswerPair> pairs, Framework framework,
                        const ScoringOptions& options = {});

/// Unweighted mean of the per-sample values. kEmptyCorpus when empty.
double corpus_mean(std::span<const FactualityScore> scores);

}  // namespace fallacious
