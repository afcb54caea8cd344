#pragma once

#include <cstdint>
#include <random>

namespace urates {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream key for replication `rep` at sample size `n`:
// splitmix64(splitmix64(splitmix64(seed) ^ n) ^ rep)
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t n, std::uint64_t rep) {
  return splitmix64(splitmix64(splitmix64(seed) ^ n) ^ rep);
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) : eng_(key) {}
  Rng(std::uint64_t seed, std::uint64_t n, std::uint64_t rep) : eng_(stream_key(seed, n, rep)) {}

  std::uint64_t next() { return eng_(); }

  // uniform on [0,1) from the top 53 bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do r = eng_();
    while (r >= limit);
    return r % n;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace urates
