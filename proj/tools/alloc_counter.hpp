// Copyright 2026 The TGB Authors. All Rights Reserved.
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

// Process-wide allocation accounting for the bench command. Replacing the
// global operator new makes every heap allocation in the linking binary pass
// through here.
#ifndef TGB_TOOLS_ALLOC_COUNTER_HPP_
#define TGB_TOOLS_ALLOC_COUNTER_HPP_

#include <cstddef>

namespace tgb::alloc {

// Restarts peak tracking from the current live byte count.
void reset_peak();
// Peak live bytes since the last reset_peak(), minus the live bytes at reset.
std::size_t peak_bytes_since_reset();
std::size_t live_bytes();

}  // namespace tgb::alloc

#endif  // TGB_TOOLS_ALLOC_COUNTER_HPP_
