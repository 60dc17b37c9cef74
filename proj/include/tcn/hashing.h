// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCN_HASHING_H_
#define TCN_HASHING_H_

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace tcn {

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
inline uint64_t Fingerprint(std::string_view data,
                            uint64_t seed = 0xcbf29ce484222325ULL) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 finalizer.
inline uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a root seed and a sequence of coordinates, e.g.
// (epoch, table, row, column, kind).
inline uint64_t DeriveSeed(uint64_t root, std::initializer_list<uint64_t> parts) {
  uint64_t h = Mix64(root);
  for (uint64_t p : parts) h = Mix64(h ^ Mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace tcn

#endif  // TCN_HASHING_H_
