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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mcprec {

std::string trim(std::string_view text);
std::string ascii_lower(std::string_view text);

// Unicode canonical composition (NFC). Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view text);

// trim + NFC for free-text fields.
std::string normalize_text(std::string_view text);
// trim + NFC + case-fold for categorical fields.
std::string fold_categorical(std::string_view text);

// Joins non-empty parts with a single space.
std::string join_nonempty(std::span<const std::string> parts);

// 64-bit FNV-1a, used for artifact fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace mcprec
