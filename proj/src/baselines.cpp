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

#include "fallacious/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>

namespace fallacious::baselines {
namespace {

struct CodePoint {
  std::uint32_t value;
  std::size_t begin;  // byte offsets into the source
  std::size_t end;
};

// Malformed bytes decode as U+FFFD one byte at a time.
std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    std::uint32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) len = 4, cp = c & 0x07;
    else if (c >= 0xE0) len = 3, cp = c & 0x0F;
    else if (c >= 0xC0) len = 2, cp = c & 0x1F;
    else if (c >= 0x80) len = 0;
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok || c >= 0xF8) {
      out.push_back({0xFFFD, i, i + 1});
      ++i;
      continue;
    }
    out.push_back({cp, i, i + len});
    i += len;
  }
  return out;
}

void encode(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(std::uint32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

bool is_punct(std::uint32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  return cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB6 || cp == 0xB7 || cp == 0xBB ||
         cp == 0xBF || (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || cp == 0xFF1A || cp == 0xFF1B || cp == 0xFF1F;
}

std::uint32_t to_lower(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0x80) return cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0 && cp != 0x130) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && cp % 2 == 1) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E && cp % 2 == 1) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSequence& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t clipped_matches(const NgramCounts& candidate, const NgramCounts& reference) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : candidate) {
    auto it = reference.find(gram);
    if (it != reference.end()) matches += std::min(count, it->second);
  }
  return matches;
}

PrecisionRecall from_counts(std::size_t overlap, std::size_t candidate_total,
                            std::size_t reference_total) {
  PrecisionRecall out;
  if (candidate_total > 0) {
    out.precision = static_cast<double>(overlap) / static_cast<double>(candidate_total);
  }
  if (reference_total > 0) {
    out.recall = static_cast<double>(overlap) / static_cast<double>(reference_total);
  }
  if (out.precision + out.recall > 0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  const auto cps = decode(text);
  TokenSequence tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !is_space(cps[j].value)) ++j;
    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && is_punct(cps[lo].value)) ++lo;
    while (hi > lo && is_punct(cps[hi - 1].value)) --hi;
    if (lo < hi) {
      std::string token;
      for (std::size_t k = lo; k < hi; ++k) {
        if (cps[k].value == 0xFFFD && cps[k].end - cps[k].begin == 1) {
          token.append(text.substr(cps[k].begin, 1));
        } else {
          encode(to_lower(cps[k].value), token);
        }
      }
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

PrecisionRecall rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidCount, "n-gram order must be >= 1");
  const auto order = static_cast<std::size_t>(n);
  const auto cand = ngrams(candidate, order);
  const auto ref = ngrams(reference, order);
  const std::size_t cand_total = candidate.size() >= order ? candidate.size() - order + 1 : 0;
  const std::size_t ref_total = reference.size() >= order ? reference.size() - order + 1 : 0;
  return from_counts(clipped_matches(cand, ref), cand_total, ref_total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrecisionRecall rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  return from_counts(lcs_length(candidate, reference), candidate.size(), reference.size());
}

double bleu(const TokenSequence& candidate, const TokenSequence& reference, int max_n) {
  if (max_n < 1) throw Error(ErrorCode::kInvalidCount, "BLEU order must be >= 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const std::size_t total = candidate.size() >= order ? candidate.size() - order + 1 : 0;
    const std::size_t matches = clipped_matches(ngrams(candidate, order), ngrams(reference, order));
    double precision = 0.0;
    if (n == 1) {
      if (matches == 0) return 0.0;
      precision = static_cast<double>(matches) / static_cast<double>(total);
    } else {
      precision = static_cast<double>(matches + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(precision);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_sum / max_n);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) + " values");
  }
  if (xs.size() < 2) {
    throw Error(ErrorCode::kInsufficientOverlap, "Pearson r needs at least two points");
  }
  const auto n = static_cast<long double>(xs.size());
  long double mx = 0;
  long double my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error(ErrorCode::kInvariantViolation, "non-finite value in Pearson input", "", i);
    }
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0;
  long double syy = 0;
  long double sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double dx = xs[i] - mx;
    const long double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw Error(ErrorCode::kDegenerateVariance, "Pearson r is undefined for a constant input");
  }
  const long double r = sxy / std::sqrt(sxx * syy);
  return static_cast<double>(std::clamp(r, -1.0L, 1.0L));
}

double clip_bert_score(double bert_score, double clip_score, const ClipBertWeights& weights) {
  if (weights.bert < 0 || weights.clip < 0 || std::abs(weights.bert + weights.clip - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "CLIPBERTScore weights must be >= 0 and sum to 1",
                "clipbert_weights");
  }
  return weights.bert * bert_score + weights.clip * clip_score;
}

double external_score(ScoringClient& client, const ScoringRequest& request) {
  if (request.kind == ScoreKind::kBertScore && request.reference.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "BERTScore request needs a reference text", "reference");
  }
  if (request.kind == ScoreKind::kClipScore && request.image.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "CLIPScore request needs image bytes", "image");
  }
  return client.score(request);
}

}  // namespace fallacious::baselines
