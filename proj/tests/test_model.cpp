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

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "flicc/error.hpp"
#include "flicc/loss.hpp"
#include "flicc/model.hpp"
#include "flicc/random.hpp"
#include "support.hpp"

using namespace flicc;

namespace {

Architecture tiny(Pooling pooling = Pooling::kMean) {
  return {"test-tiny", 50, 8, 8, 2, 2, 16, pooling};
}

std::vector<int> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<int> ids{HashTokenizer::kCls};
  while (ids.size() < n) ids.push_back(2 + static_cast<int>(rng.below(vocab - 2)));
  return ids;
}

double loss_of(const SequenceClassifier& m, const std::vector<int>& ids, std::size_t target,
               double gamma) {
  return focal_loss_from_logits(m.logits(ids), target, gamma).loss;
}

// Central differences on a sample of entries of every trainable parameter.
void check_gradients(SequenceClassifier& m, const std::vector<int>& ids, std::size_t target,
                     double gamma, Rng& rng) {
  m.zero_grad();
  const auto cache = m.forward(ids);
  const auto lg = focal_loss_from_logits(cache.logits, target, gamma);
  m.backward(cache, lg.grad);
  const double h = 1e-5;
  for (auto& p : m.parameters()) {
    if (!p.trainable) continue;
    for (int s = 0; s < 6; ++s) {
      const long i = static_cast<long>(rng.below(static_cast<std::uint64_t>(p.value.rows())));
      const long j = static_cast<long>(rng.below(static_cast<std::uint64_t>(p.value.cols())));
      const double saved = p.value(i, j);
      p.value(i, j) = saved + h;
      const double up = loss_of(m, ids, target, gamma);
      p.value(i, j) = saved - h;
      const double down = loss_of(m, ids, target, gamma);
      p.value(i, j) = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad(i, j);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      INFO(p.name << "(" << i << "," << j << ") analytic " << analytic << " numeric " << numeric);
      CHECK(std::abs(numeric - analytic) / scale < 1e-4);
    }
  }
}

void randomize(SequenceClassifier& m, Rng& rng, double stddev) {
  for (auto& p : m.parameters()) {
    for (long k = 0; k < p.value.size(); ++k) p.value.data()[k] += rng.normal(0, stddev);
  }
}

}  // namespace

TEST_CASE("tokenizer") {
  HashTokenizer tok(100, 5);
  const auto ids = tok.encode("Global warming is a hoax!");
  CHECK(ids.size() == 5);
  CHECK(ids[0] == HashTokenizer::kCls);
  CHECK(tok.encode("GLOBAL warming") == std::vector<int>(ids.begin(), ids.begin() + 3));
  CHECK(word_pieces("CO2's 0.038%") ==
        std::vector<std::string>{"co2", "'", "s", "0", ".", "038", "%"});
  for (int id : tok.encode("a b c d e f g")) CHECK((id >= 1 && id < 100));
}

TEST_CASE("backprop matches finite differences") {
  Rng rng(17);
  for (auto pooling : {Pooling::kMean, Pooling::kFirst}) {
    SequenceClassifier m(tiny(pooling), 12, 3);
    randomize(m, rng, 0.3);
    for (double gamma : {0.0, 2.0}) {
      check_gradients(m, random_ids(rng, 6, 50), rng.below(12), gamma, rng);
    }
  }
}

TEST_CASE("bag-of-embeddings backprop and LoRA refusal") {
  Rng rng(4);
  SequenceClassifier m({"bow", 40, 8, 6, 0, 1, 0, Pooling::kMean}, 12, 1);
  randomize(m, rng, 0.3);
  check_gradients(m, random_ids(rng, 5, 40), 3, 0.0, rng);
  CHECK_FALSE(m.supports_lora());
  try {
    m.attach_lora({8, 8}, 1);
    FAIL("expected UnsupportedCheckpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupportedCheckpoint);
  }
}

TEST_CASE("LoRA adapters") {
  Rng rng(9);
  SequenceClassifier m(tiny(), 12, 5);
  randomize(m, rng, 0.2);
  const auto ids = random_ids(rng, 7, 50);
  const auto before = m.logits(ids);
  m.attach_lora({4, 8}, 11);
  CHECK((m.logits(ids) - before).cwiseAbs().maxCoeff() < 1e-12);

  for (const auto& p : m.parameters()) {
    const bool adapter = p.name.find(".lora.") != std::string::npos;
    const bool head = p.name.rfind("classifier.", 0) == 0;
    CHECK(p.trainable == (adapter || head));
  }
  // Move B away from zero so the adapters matter, then check their gradients.
  for (auto& p : m.parameters()) {
    if (p.name.find(".lora.") != std::string::npos) {
      for (long k = 0; k < p.value.size(); ++k) p.value.data()[k] += rng.normal(0, 0.3);
    }
  }
  check_gradients(m, ids, 2, 4.0, rng);

  const auto adapted = m.logits(ids);
  m.merge_lora();
  CHECK_FALSE(m.lora().has_value());
  CHECK((m.logits(ids) - adapted).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("LoRA parameter census on the base checkpoint") {
  const auto base = find_architecture("flicc-encoder-base").value();
  SequenceClassifier r8(base, 12, 1), r16(base, 12, 1);
  r8.attach_lora({8, 16}, 1);
  r16.attach_lora({16, 16}, 1);
  CHECK(r16.trainable_parameter_count() > r8.trainable_parameter_count());
  const double ratio = double(r16.trainable_parameter_count()) / double(r16.parameter_count());
  CHECK(ratio < 0.05);
}

TEST_CASE("save and load") {
  const auto dir = flicc::testing::scratch_dir("model_io");
  Rng rng(2);
  SequenceClassifier m(tiny(), 12, 8);
  randomize(m, rng, 0.1);
  m.save(dir / "a", {{"model_version", "x"}});
  nlohmann::json meta;
  const auto back = SequenceClassifier::load(dir / "a", &meta);
  CHECK(meta.at("model_version") == "x");
  const auto ids = random_ids(rng, 8, 50);
  CHECK(back.logits(ids) == m.logits(ids));

  SequenceClassifier lm(tiny(), 12, 8);
  lm.attach_lora({2, 4}, 3);
  lm.save(dir / "lora");
  CHECK(SequenceClassifier::load(dir / "lora").lora().has_value());

  auto code_of = [](const std::filesystem::path& p) {
    try {
      SequenceClassifier::load(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  std::filesystem::create_directories(dir / "empty");
  CHECK(code_of(dir / "empty") == ErrorCode::kArtifactCorrupt);

  // Flip one byte in the weights.
  std::filesystem::copy(dir / "a", dir / "flipped");
  {
    std::fstream f(dir / "flipped" / "weights.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(64);
    f.put('\x7f');
  }
  CHECK(code_of(dir / "flipped") == ErrorCode::kArtifactCorrupt);

  std::filesystem::copy(dir / "a", dir / "future");
  {
    nlohmann::json j;
    std::ifstream(dir / "future" / "model.json") >> j;
    j["format_version"] = 99;
    std::ofstream(dir / "future" / "model.json") << j.dump();
  }
  CHECK(code_of(dir / "future") == ErrorCode::kVersionMismatch);
}
