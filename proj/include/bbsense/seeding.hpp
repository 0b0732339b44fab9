#pragma once

#include "bbsense/types.hpp"

#include <bit>
#include <initializer_list>

namespace bbsense {

// SplitMix64 finalizer.
constexpr Seed mix_seed(Seed x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child seed from a root and a path of integer keys.
constexpr Seed derive_seed(Seed root, std::initializer_list<Seed> path) {
  Seed s = mix_seed(root);
  for (Seed key : path) s = mix_seed(s ^ mix_seed(key + 0x632be59bd9b4e019ULL));
  return s;
}

inline Seed bits_of(Real value) { return std::bit_cast<Seed>(value); }

}  // namespace bbsense
