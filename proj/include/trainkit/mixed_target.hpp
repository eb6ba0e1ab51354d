// Copyright 2026 The trainkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

namespace trainkit {

/// Per-sample label distribution after mixing: one or two (class, weight)
/// entries with strictly positive weights summing to 1.
struct MixedTarget {
  struct Entry {
    int cls = 0;
    double weight = 1.0;
  };
  std::vector<Entry> entries;

  static MixedTarget single(int cls) { return MixedTarget{{Entry{cls, 1.0}}}; }

  /// Highest-weight class; the first entry wins ties (the base image).
  int dominant_class() const;
  void validate(int num_classes) const;
};

}  // namespace trainkit
