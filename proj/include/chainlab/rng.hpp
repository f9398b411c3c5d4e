#pragma once

#include <cstdint>

namespace chainlab {

// Counter-based stream generator. A (seed, stream, replica) triple is mixed
// into a base state; draw i returns finalize(base + i*gamma), so any stream
// can be reproduced in isolation and streams never share draw sequences.
// The finalizer is the splitmix64 mix, which is solid for < 2^64 draws.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t replica = 0);

  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  double uniform(double a, double b);  // [a, b)
  double normal();                     // standard Gaussian, Box-Muller
  double beta22();                     // Beta(2,2) on [0,1], median of three uniforms

 private:
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace chainlab
