#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace topoloc {

// All hot kernels in this codebase come in two flavors: an OpenMP-parallel
// one behind the public API and a serial reference in topoloc::serial used
// by the equivalence tests and the benchmark tool. The helpers here keep
// the parallel flavor bit-exact with the serial one: work is split into
// fixed-size chunks whose partial results are combined in chunk order, so
// floating-point sums do not depend on the thread count.

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) fn(i);
#else
  for (int64_t i = 0; i < n; ++i) fn(i);
#endif
}

// Deterministic reduction: `partial(chunk_begin, chunk_end, acc)` fills a
// zero-initialized accumulator for one chunk; `join(total, acc)` folds the
// chunk results in chunk-index order.
template <typename Acc, typename Partial, typename Join>
Acc chunked_reduce(int64_t n, int64_t chunk, Partial&& partial, Join&& join) {
  if (chunk <= 0) chunk = 1;
  const int64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Acc> parts(static_cast<size_t>(n_chunks));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < n_chunks; ++c)
    partial(c * chunk, std::min(n, (c + 1) * chunk), parts[c]);
#else
  for (int64_t c = 0; c < n_chunks; ++c)
    partial(c * chunk, std::min(n, (c + 1) * chunk), parts[c]);
#endif
  Acc total{};
  for (int64_t c = 0; c < n_chunks; ++c) join(total, parts[c]);
  return total;
}

}  // namespace topoloc
