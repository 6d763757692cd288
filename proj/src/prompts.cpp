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

#include "fallacious/prompts.hpp"

#include <array>

#include "fallacious/digest.hpp"
#include "fallacious/error.hpp"
#include "prompt_assets.hpp"

namespace fallacious {
namespace {

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

struct Registry {
  std::array<PromptTemplate, 5> templates;
  std::vector<TemplateId> ids;

  Registry()
      : templates{{
            {TemplateId::kRefBasedQGen, "refbased_qgen.v1", assets::kRefBasedQGen, {}},
            {TemplateId::kRefFreeQGen, "reffree_qgen.v1", assets::kRefFreeQGen, {}},
            {TemplateId::kQaBinary, "qa_binary.v1", assets::kQaBinary, {}},
            {TemplateId::kQaTernary, "qa_ternary.v1", assets::kQaTernary, {}},
            {TemplateId::kRefBasedReferenceBlock, "refbased_reference_block.v1",
             assets::kRefBasedReferenceBlock, {}},
        }} {
    for (auto& t : templates) {
      t.hash = sha256_hex(t.body);
      ids.push_back(t.id);
    }
  }
};

const Registry& registry() {
  static const Registry r;
  return r;
}

}  // namespace

const PromptTemplate& prompt_template(TemplateId id) {
  return registry().templates.at(static_cast<std::size_t>(id));
}

const std::vector<TemplateId>& all_template_ids() { return registry().ids; }

std::string render(std::string_view body, const Bindings& bindings) {
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && placeholder_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        const std::string_view name = body.substr(i + 1, j - i - 1);
        bool bound = false;
        for (const auto& [key, value] : bindings) {
          if (key == name) {
            out.append(value);
            bound = true;
            break;
          }
        }
        if (!bound) {
          throw Error(ErrorCode::kInvalidConfig,
                      "template placeholder {" + std::string(name) + "} left unbound",
                      std::string(name));
        }
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i]);
    ++i;
  }
  return out;
}

std::string count_word(int n) {
  static constexpr std::array<std::string_view, 21> kWords = {
      "zero",    "one",     "two",       "three",    "four",     "five",    "six",
      "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};
  if (n >= 0 && n < static_cast<int>(kWords.size())) return std::string(kWords[n]);
  return std::to_string(n);
}

}  // namespace fallacious
