/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TVMERGE_PARALLEL_HPP_
#define TVMERGE_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace tvmerge {

// Worker cap: TVM_THREADS when set to a positive integer, otherwise the
// hardware concurrency. Never less than 1.
std::size_t WorkerCount();

// Splits [0, n) into contiguous chunks and runs fn(chunk, begin, end) for
// each, possibly on several threads. Chunk boundaries depend only on n and
// `min_chunk`, never on the worker count, so callers that combine per-chunk
// results in chunk order get identical output for any TVM_THREADS.
// Exceptions thrown by fn are rethrown on the calling thread.
void ParallelChunks(std::size_t n, std::size_t min_chunk,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Number of chunks ParallelChunks uses for the same arguments.
std::size_t ChunkCount(std::size_t n, std::size_t min_chunk);

}  // namespace tvmerge

#endif  // TVMERGE_PARALLEL_HPP_
