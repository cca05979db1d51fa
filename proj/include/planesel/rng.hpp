#pragma once

// Counter-based random streams. Every Monte-Carlo sample owns a stream keyed
// by (master seed, stream index), so results do not depend on how samples
// are scheduled across worker threads.

#include <cstdint>
#include <functional>

namespace planesel {

/// splitmix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal via Box-Muller; portable across standard libraries.
    double normal();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into slot i and reduce in
/// index order afterwards.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

/// threads <= 0 maps to the hardware concurrency.
int resolve_threads(int threads);

}  // namespace planesel
