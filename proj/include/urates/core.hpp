#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace urates {

using Code = std::uint64_t;
using Label = std::uint8_t;
using HypId = std::uint64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

struct Example {
  Code x = 0;
  Label y = 0;
  bool operator==(const Example&) const = default;
};

using LabeledSample = std::vector<Example>;

inline std::vector<Code> points_of(const LabeledSample& s) {
  std::vector<Code> xs;
  xs.reserve(s.size());
  for (const auto& e : s) xs.push_back(e.x);
  return xs;
}

inline std::vector<Code> sorted_unique(std::vector<Code> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Binary labels aligned to an ordered point tuple. Ordering is lexicographic.
struct Pattern {
  std::vector<Label> bits;

  Pattern() = default;
  explicit Pattern(std::size_t n, Label fill = 0) : bits(n, fill) {}
  Pattern(std::initializer_list<int> init) {
    for (int b : init) bits.push_back(static_cast<Label>(b != 0));
  }

  std::size_t size() const { return bits.size(); }
  Label& operator[](std::size_t i) { return bits[i]; }
  Label operator[](std::size_t i) const { return bits[i]; }

  auto operator<=>(const Pattern&) const = default;
  bool operator==(const Pattern&) const = default;

  std::string str() const {
    std::string s;
    for (Label b : bits) s.push_back(b ? '1' : '0');
    return s;
  }
};

// Dynamic bitset over hypothesis rows.
class HypSet {
 public:
  HypSet() = default;
  explicit HypSet(std::size_t n, bool full = false) : n_(n), words_((n + 63) / 64, 0) {
    if (full) {
      for (auto& w : words_) w = ~std::uint64_t{0};
      trim();
    }
  }

  std::size_t size() const { return n_; }

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool none() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  bool any() const { return !none(); }

  // index of lowest set bit, or size() when empty
  std::size_t first() const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k]) return k * 64 + static_cast<std::size_t>(std::countr_zero(words_[k]));
    return n_;
  }

  std::size_t next(std::size_t i) const {
    ++i;
    if (i >= n_) return n_;
    std::size_t k = i >> 6;
    std::uint64_t w = words_[k] & (~std::uint64_t{0} << (i & 63));
    while (true) {
      if (w) return k * 64 + static_cast<std::size_t>(std::countr_zero(w));
      if (++k >= words_.size()) return n_;
      w = words_[k];
    }
  }

  HypSet& operator&=(const HypSet& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
    return *this;
  }
  HypSet& and_not(const HypSet& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= ~o.words_[k];
    return *this;
  }
  friend HypSet operator&(HypSet a, const HypSet& b) { return a &= b; }

  bool operator==(const HypSet& o) const { return n_ == o.n_ && words_ == o.words_; }

  std::size_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ n_;
    for (auto w : words_) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }

 private:
  void trim() {
    if (n_ % 64 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct HypSetHash {
  std::size_t operator()(const HypSet& s) const { return s.hash(); }
};

inline int floor_log2(std::uint64_t v) { return v == 0 ? -1 : 63 - std::countl_zero(v); }

}  // namespace urates
