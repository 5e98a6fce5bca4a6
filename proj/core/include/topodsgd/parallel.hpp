#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace topodsgd {

// Worker threads used by Monte-Carlo routines. 0 restores the default
// (hardware concurrency). Results never depend on this value.
void set_thread_count(unsigned threads);
unsigned thread_count();

// Runs body(i) for i in [0, count) on up to thread_count() threads. Each
// index must write only to its own output slot. The first exception thrown
// by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Pairwise (cascade) summation in index order; deterministic for a fixed input.
double pairwise_sum(std::span<const double> values);

// Independent 64-bit seed for stream `index` of a run seeded with `seed`
// (splitmix64 finalizer over both inputs).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace topodsgd
