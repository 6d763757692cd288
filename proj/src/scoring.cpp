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

#include "fallacious/scoring.hpp"

#include <string>

namespace fallacious {
namespace {

void require_source(const AnswerSet& set, AnswerSource expected) {
  if (set.source() != expected) {
    throw Error(ErrorCode::kSourceMismatch,
                "expected " + std::string(to_string(expected)) + " answers, got " +
                    std::string(to_string(set.source())),
                set.sample_id());
  }
}

void require_pair(const AnswerSet& a, const AnswerSet& b) {
  if (a.sample_id() != b.sample_id()) {
    throw Error(ErrorCode::kSampleMismatch,
                "answers for '" + a.sample_id() + "' paired with '" + b.sample_id() + "'",
                b.sample_id());
  }
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " answers",
                a.sample_id());
  }
  if (a.size() == 0) {
    throw Error(ErrorCode::kEmptyAnswerSets, "no answers to score", a.sample_id());
  }
}

}  // namespace

FactualityScore score_reference_based(const AnswerSet& reference, const AnswerSet& generated,
                                      const ScoringOptions& options) {
  require_source(reference, AnswerSource::kReferenceSummary);
  require_source(generated, AnswerSource::kGeneratedSummary);
  require_pair(reference, generated);
  std::vector<bool> matches(reference.size());
  std::vector<bool> counted;
  if (options.exclude_not_provided_pairs) counted.resize(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    matches[i] = reference[i] == generated[i];
    if (options.exclude_not_provided_pairs) {
      counted[i] = !(reference[i] == AnswerLabel::kNotProvided &&
                     generated[i] == AnswerLabel::kNotProvided);
    }
  }
  return FactualityScore(reference.sample_id(), Framework::kReferenceBased, std::move(matches),
                         std::move(counted));
}

FactualityScore score_reference_free(const AnswerSet& document, const AnswerSet& image) {
  require_source(document, AnswerSource::kDocument);
  require_source(image, AnswerSource::kImage);
  require_pair(document, image);
  std::vector<bool> entailed(document.size());
  for (std::size_t i = 0; i < document.size(); ++i) {
    entailed[i] = document[i] == AnswerLabel::kYes || image[i] == AnswerLabel::kYes;
  }
  return FactualityScore(document.sample_id(), Framework::kReferenceFree, std::move(entailed));
}

FactualityScore score_document_only(const AnswerSet& document) {
  require_source(document, AnswerSource::kDocument);
  require_pair(document, document);
  std::vector<bool> entailed(document.size());
  for (std::size_t i = 0; i < document.size(); ++i) entailed[i] = document[i] == AnswerLabel::kYes;
  return FactualityScore(document.sample_id(), Framework::kReferenceFree, std::move(entailed));
}

FactualityScore score_image_only(const AnswerSet& image) {
  require_source(image, AnswerSource::kImage);
  require_pair(image, image);
  std::vector<bool> entailed(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) entailed[i] = image[i] == AnswerLabel::kYes;
  return FactualityScore(image.sample_id(), Framework::kReferenceFree, std::move(entailed));
}

BatchScores score_batch(std::span<const AnswerPair> pairs, Framework framework,
                        const ScoringOptions& options) {
  BatchScores out;
  out.scores.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      const auto& [a, b] = pairs[i];
      out.scores.push_back(framework == Framework::kReferenceBased
                               ? score_reference_based(a, b, options)
                               : score_reference_free(a, b));
    } catch (const Error& e) {
      throw Error(e.code(), "pair " + std::to_string(i) + ": " + e.what(), e.subject(), i);
    }
  }
  out.mean = corpus_mean(out.scores);
  return out;
}

double corpus_mean(std::span<const FactualityScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyCorpus, "mean of an empty corpus is undefined");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.value();
  return sum / static_cast<double>(scores.size());
}

}  // namespace fallacious
