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

#ifndef TCN_BINARY_IO_H_
#define TCN_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "tcn/errors.h"

// Little-endian primitives shared by the snapshot and checkpoint formats.
namespace tcn::binary {

inline void WriteU64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void WriteU32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void WriteI32(std::ostream& out, int32_t v) {
  WriteU32(out, static_cast<uint32_t>(v));
}

inline void WriteF64(std::ostream& out, double v) {
  WriteU64(out, std::bit_cast<uint64_t>(v));
}

inline void WriteString(std::ostream& out, const std::string& s) {
  WriteU64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void ReadExact(std::istream& in, char* dst, size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw DataError("unexpected end of binary file");
  }
}

inline uint64_t ReadU64(std::istream& in) {
  unsigned char b[8];
  ReadExact(in, reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline uint32_t ReadU32(std::istream& in) {
  unsigned char b[4];
  ReadExact(in, reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline int32_t ReadI32(std::istream& in) {
  return static_cast<int32_t>(ReadU32(in));
}

inline double ReadF64(std::istream& in) {
  return std::bit_cast<double>(ReadU64(in));
}

inline std::string ReadString(std::istream& in, uint64_t max_len = 1ULL << 32) {
  uint64_t n = ReadU64(in);
  if (n > max_len) throw DataError("string length out of range in binary file");
  std::string s(n, '\0');
  ReadExact(in, s.data(), n);
  return s;
}

}  // namespace tcn::binary

#endif  // TCN_BINARY_IO_H_
