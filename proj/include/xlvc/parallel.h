// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XLVC_PARALLEL_H_
#define XLVC_PARALLEL_H_

#include <functional>

namespace xlvc {

// Runs fn(i) for every i in [0, n) on up to `threads` workers with a static
// interleaved partition. The first exception by index is rethrown.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

// XLVC_THREADS if set and positive, otherwise the hardware concurrency.
int DefaultThreadCount();

}  // namespace xlvc

#endif  // XLVC_PARALLEL_H_
