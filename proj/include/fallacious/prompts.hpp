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

// Versioned prompt templates. Bodies are compiled in from assets/prompts/
// at build time; each carries a content hash that is recorded in every
// backend transcript so cached replies are invalidated when a template
// changes.

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fallacious {

enum class TemplateId {
  kRefBasedQGen,
  kRefFreeQGen,
  kQaBinary,
  kQaTernary,
  kRefBasedReferenceBlock,
};

struct PromptTemplate {
  TemplateId id;
  /// Asset name including version, e.g. "refbased_qgen.v1".
  std::string_view name;
  std::string_view body;
  /// sha256 of body.
  std::string hash;
};

const PromptTemplate& prompt_template(TemplateId id);
const std::vector<TemplateId>& all_template_ids();

using Bindings = std::vector<std::pair<std::string_view, std::string_view>>;

/// Substitutes `{name}` placeholders in one pass. Bound values are inserted
/// verbatim and never rescanned. A placeholder-shaped token (`{` lowercase
/// letters/underscores `}`) without a binding is kInvalidConfig, so a
/// rendered prompt never carries residual markers.
std::string render(std::string_view body, const Bindings& bindings);

/// "one" .. "twenty", decimal digits beyond.
std::string count_word(int n);

}  // namespace fallacious
