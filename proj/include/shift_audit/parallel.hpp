#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace shift_audit {

// Thread cap: SHIFT_AUDIT_THREADS if set, else hardware concurrency.
inline std::size_t configured_threads() {
  if (const char* env = std::getenv("SHIFT_AUDIT_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Sum of term(i) for i in [0, n). Work is split into fixed-size blocks whose
// partial sums are accumulated in block order, so the result is bit-identical
// for any thread count.
template <typename Term>
double blocked_sum(std::size_t n, Term&& term) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::size_t n_threads = configured_threads();
  if (n_threads > n_blocks) n_threads = n_blocks == 0 ? 1 : n_blocks;

  std::vector<double> partials(n_blocks, 0.0);
  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = begin + kBlock < n ? begin + kBlock : n;
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    partials[b] = acc;
  };

  if (n_threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t b = t; b < n_blocks; b += n_threads) run_block(b);
      });
    }
    for (auto& w : workers) w.join();
  }

  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

}  // namespace shift_audit
