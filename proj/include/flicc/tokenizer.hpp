// Copyright 2026 The flicc-workbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flicc {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Lowercased word pieces: runs of ASCII alphanumerics (bytes >= 0x80 count as
// word characters so UTF-8 words stay whole) and single punctuation marks.
std::vector<std::string> word_pieces(std::string_view text);

// Maps word pieces into a fixed vocabulary by hashing, so every checkpoint of a
// given vocabulary size shares the same token ids without a learned vocab.
// Id 0 is padding, id 1 the leading classification token.
class HashTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;

  HashTokenizer(std::size_t vocab_size, std::size_t max_length);

  // [CLS] followed by at most max_length - 1 pieces; the tail is dropped.
  std::vector<int> encode(std::string_view text) const;

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t max_length() const { return max_length_; }

 private:
  std::size_t vocab_size_;
  std::size_t max_length_;
};

}  // namespace flicc
