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

#include "flicc/tokenizer.hpp"

#include <cctype>

#include "flicc/error.hpp"

namespace flicc {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> word_pieces(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      if (!std::isspace(c) && std::isprint(c)) out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

HashTokenizer::HashTokenizer(std::size_t vocab_size, std::size_t max_length)
    : vocab_size_(vocab_size), max_length_(max_length) {
  if (vocab_size < 3 || max_length < 2) {
    throw Error(ErrorCode::kInvalidArgument, "tokenizer needs vocab >= 3 and max_length >= 2");
  }
}

std::vector<int> HashTokenizer::encode(std::string_view text) const {
  std::vector<int> ids{kCls};
  for (const auto& piece : word_pieces(text)) {
    if (ids.size() >= max_length_) break;
    ids.push_back(2 + static_cast<int>(fnv1a64(piece) % (vocab_size_ - 2)));
  }
  return ids;
}

}  // namespace flicc
