#pragma once

#include <cstdint>
#include <functional>

namespace phasectl {

// Worker count from an explicit request: > 0 is taken as is, otherwise hardware concurrency.
int resolve_threads(int requested);

// Runs fn(0..count-1) on up to `threads` workers. Each index must write only its own slot.
// If any calls throw, the exception from the lowest index is rethrown, so failures are
// reported identically for every worker count.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// SplitMix64 finalizer; used to derive independent, order-free seed streams.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace phasectl
