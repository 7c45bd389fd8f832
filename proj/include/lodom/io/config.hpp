/*
 * Copyright 2026 The Lodom Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>

#include "lodom/eval.hpp"
#include "lodom/io/formats.hpp"
#include "lodom/pipeline.hpp"

namespace lodom::io {

struct EvalSettings {
  double assoc_tol = 0.05;
  ApeAlignment alignment = ApeAlignment::kSe3;
};

/// The whole tunable surface, loaded from one JSON file with sections
/// preprocess, fusion, registration, mapping, pipeline and eval. Unknown keys
/// and invalid values are rejected at load time.
struct PipelineSettings {
  PipelineOptions pipeline;  // preprocess/registration/mapping/pipeline knobs
  FusionConfig fusion;
  EvalSettings eval;

  static PipelineSettings load(const std::string& path);
  static PipelineSettings parse(const std::string& json_text,
                                const std::string& origin);

  /// One `section.key = value` line per effective setting.
  std::string echo() const;
};

}  // namespace lodom::io
