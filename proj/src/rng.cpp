#include "chainlab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace chainlab {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
  // Fold the triple so that distinct triples start at well-separated counters.
  std::uint64_t s = mix64(seed + kGamma);
  s = mix64(s ^ mix64(stream + 0x6a09e667f3bcc909ull));
  s = mix64(s ^ mix64(replica + 0xbb67ae8584caa73bull));
  counter_ = s;
}

std::uint64_t StreamRng::next_u64() {
  counter_ += kGamma;
  return mix64(counter_);
}

double StreamRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double StreamRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 6.28318530717958647692 * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

double StreamRng::beta22() {
  // The median of three i.i.d. uniforms is Beta(2,2)-distributed.
  double a = uniform(), b = uniform(), c = uniform();
  const double lo = std::min(a, std::min(b, c));
  const double hi = std::max(a, std::max(b, c));
  return a + b + c - lo - hi;
}

}  // namespace chainlab
