// Copyright 2026 The mcprec Authors
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

#pragma once

// Little-endian host assumed; the artifacts are not meant to travel across
// architectures.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "mcprec/error.hpp"

namespace mcprec::io {

template <class T>
void write_pod(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("unexpected end of binary artifact");
  return value;
}

inline void write_string(std::ostream& out, const std::string& value) {
  write_pod<std::uint64_t>(out, value.size());
  out.write(value.data(), static_cast<std::streamsize>(value.size()));
}

inline std::string read_string(std::istream& in, std::uint64_t max_size = 1u << 20) {
  const auto size = read_pod<std::uint64_t>(in);
  if (size > max_size) throw DataError("binary artifact: string too long");
  std::string value(size, '\0');
  in.read(value.data(), static_cast<std::streamsize>(size));
  if (!in) throw DataError("unexpected end of binary artifact");
  return value;
}

template <class Derived>
void write_matrix(std::ostream& out, const Eigen::PlainObjectBase<Derived>& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

template <class Matrix>
Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  constexpr std::uint64_t kMaxElements = 1ull << 34;
  if (rows != 0 && cols > kMaxElements / rows) throw DataError("binary artifact: matrix too large");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("unexpected end of binary artifact");
  return m;
}

inline void expect_magic(std::istream& in, const char (&magic)[9], const std::string& what) {
  char buffer[8] = {};
  in.read(buffer, 8);
  if (!in || std::string(buffer, 8) != std::string(magic, 8)) {
    throw DataError(what + ": not a recognized file (bad magic)");
  }
}

}  // namespace mcprec::io
