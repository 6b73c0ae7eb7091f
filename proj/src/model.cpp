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

#include "flicc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flicc/error.hpp"
#include "flicc/random.hpp"

namespace flicc {
namespace {

using nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr char kWeightsMagic[8] = {'F', 'L', 'I', 'C', 'C', 'W', '0', '1'};

const std::vector<Architecture>& registry() {
  static const std::vector<Architecture> r = {
      {"flicc-bow-small", 16384, 128, 64, 0, 1, 0, Pooling::kMean},
      {"flicc-encoder-tiny", 4096, 64, 32, 1, 2, 64, Pooling::kMean},
      {"flicc-encoder-base", 16384, 128, 64, 2, 4, 256, Pooling::kMean},
      {"flicc-encoder-large", 16384, 128, 128, 4, 4, 512, Pooling::kMean},
  };
  return r;
}

MatrixXd gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  MatrixXd m(static_cast<long>(rows), static_cast<long>(cols));
  for (long j = 0; j < m.cols(); ++j) {
    for (long i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(0.0, stddev);
  }
  return m;
}

MatrixXd layer_norm(const MatrixXd& x, const MatrixXd& gamma, const MatrixXd& beta, MatrixXd& hat,
                    VectorXd& rstd) {
  const long t = x.rows();
  const double d = static_cast<double>(x.cols());
  hat.resize(x.rows(), x.cols());
  rstd.resize(t);
  for (long r = 0; r < t; ++r) {
    const double mean = x.row(r).sum() / d;
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / d;
    rstd[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    hat.row(r) = centered * rstd[r];
  }
  MatrixXd y = hat.array().rowwise() * gamma.row(0).array();
  return y.rowwise() + beta.row(0);
}

// Returns dX; accumulates into dgamma/dbeta.
MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& hat, const VectorXd& rstd,
                             const MatrixXd& gamma, MatrixXd* dgamma, MatrixXd* dbeta) {
  if (dgamma) *dgamma += (dy.array() * hat.array()).colwise().sum().matrix();
  if (dbeta) *dbeta += dy.colwise().sum();
  const MatrixXd dhat = dy.array().rowwise() * gamma.row(0).array();
  const double d = static_cast<double>(dy.cols());
  MatrixXd dx(dy.rows(), dy.cols());
  for (long r = 0; r < dy.rows(); ++r) {
    const double mean_dhat = dhat.row(r).sum() / d;
    const double mean_dhat_hat = dhat.row(r).dot(hat.row(r)) / d;
    dx.row(r) = rstd[r] * (dhat.row(r).array() - mean_dhat - hat.row(r).array() * mean_dhat_hat);
  }
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  const double inner = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(inner);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

MatrixXd softmax_rows(const MatrixXd& s) {
  MatrixXd p(s.rows(), s.cols());
  for (long r = 0; r < s.rows(); ++r) {
    const auto e = (s.row(r).array() - s.row(r).maxCoeff()).exp();
    p.row(r) = e / e.sum();
  }
  return p;
}

std::uint64_t checksum(const std::vector<Parameter>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p.value.data()),
                                 static_cast<std::size_t>(p.value.size()) * sizeof(double)),
                h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::string_view pooling_name(Pooling pooling) {
  return pooling == Pooling::kMean ? "mean" : "first";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::kMean;
  if (name == "first" || name == "cls") return Pooling::kFirst;
  throw Error(ErrorCode::kInvalidArgument, "unknown pooling '" + std::string(name) + "'");
}

json Architecture::to_json() const {
  return {{"id", id},         {"vocab_size", vocab_size}, {"max_length", max_length},
          {"hidden", hidden}, {"layers", layers},         {"heads", heads},
          {"ffn", ffn},       {"pooling", pooling_name(pooling)}};
}

Architecture Architecture::from_json(const json& j) {
  Architecture a;
  a.id = j.at("id").get<std::string>();
  a.vocab_size = j.at("vocab_size").get<std::size_t>();
  a.max_length = j.at("max_length").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::size_t>();
  a.layers = j.at("layers").get<std::size_t>();
  a.heads = j.at("heads").get<std::size_t>();
  a.ffn = j.at("ffn").get<std::size_t>();
  a.pooling = parse_pooling(j.at("pooling").get<std::string>());
  return a;
}

std::span<const Architecture> checkpoint_registry() { return registry(); }

std::optional<Architecture> find_architecture(std::string_view id) {
  for (const auto& a : registry()) {
    if (a.id == id) return a;
  }
  return std::nullopt;
}

SequenceClassifier::SequenceClassifier(Architecture arch, std::size_t num_classes,
                                       std::uint64_t seed)
    : arch_(std::move(arch)), num_classes_(num_classes) {
  if (arch_.hidden == 0 || arch_.vocab_size < 3 || arch_.max_length < 2 || num_classes_ < 2 ||
      (arch_.layers > 0 && (arch_.heads == 0 || arch_.hidden % arch_.heads != 0 || arch_.ffn == 0))) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent architecture '" + arch_.id + "'");
  }
  Rng rng(seed);
  const std::size_t d = arch_.hidden;
  auto ones = [](std::size_t n) { return MatrixXd::Ones(1, static_cast<long>(n)); };
  auto zeros = [](std::size_t n) { return MatrixXd::Zero(1, static_cast<long>(n)); };

  tok_emb_ = add("embeddings.token", gaussian(rng, arch_.vocab_size, d, kInitStd), true);
  pos_emb_ = add("embeddings.position", gaussian(rng, arch_.max_length, d, kInitStd), true);
  for (std::size_t l = 0; l < arch_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.ln1_g = add(p + "ln1.gamma", ones(d), false);
    li.ln1_b = add(p + "ln1.beta", zeros(d), false);
    li.wq = add(p + "attn.query.weight", gaussian(rng, d, d, kInitStd), true);
    li.bq = add(p + "attn.query.bias", zeros(d), false);
    li.wk = add(p + "attn.key.weight", gaussian(rng, d, d, kInitStd), true);
    li.bk = add(p + "attn.key.bias", zeros(d), false);
    li.wv = add(p + "attn.value.weight", gaussian(rng, d, d, kInitStd), true);
    li.bv = add(p + "attn.value.bias", zeros(d), false);
    li.wo = add(p + "attn.output.weight", gaussian(rng, d, d, kInitStd), true);
    li.bo = add(p + "attn.output.bias", zeros(d), false);
    li.ln2_g = add(p + "ln2.gamma", ones(d), false);
    li.ln2_b = add(p + "ln2.beta", zeros(d), false);
    li.w1 = add(p + "ffn.in.weight", gaussian(rng, d, arch_.ffn, kInitStd), true);
    li.b1 = add(p + "ffn.in.bias", zeros(arch_.ffn), false);
    li.w2 = add(p + "ffn.out.weight", gaussian(rng, arch_.ffn, d, kInitStd), true);
    li.b2 = add(p + "ffn.out.bias", zeros(d), false);
    layers_.push_back(li);
  }
  lnf_g_ = add("final_ln.gamma", ones(d), false);
  lnf_b_ = add("final_ln.beta", zeros(d), false);
  head_w_ = add("classifier.weight", gaussian(rng, d, num_classes_, kInitStd), true);
  head_b_ = add("classifier.bias", zeros(num_classes_), false);
}

std::size_t SequenceClassifier::add(std::string name, MatrixXd value, bool decay) {
  Parameter p;
  p.name = std::move(name);
  p.grad = MatrixXd::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  p.decay = decay;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

void SequenceClassifier::add_grad(std::size_t i, const MatrixXd& g) {
  if (params_[i].trainable) params_[i].grad += g;
}

MatrixXd SequenceClassifier::effective_query(const LayerIndex& li) const {
  if (!li.aq) return w(li.wq);
  return w(li.wq) + lora_->scale() * w(*li.aq) * w(*li.bq_lora);
}

MatrixXd SequenceClassifier::effective_value(const LayerIndex& li) const {
  if (!li.av) return w(li.wv);
  return w(li.wv) + lora_->scale() * w(*li.av) * w(*li.bv_lora);
}

SequenceClassifier::ForwardCache SequenceClassifier::forward(std::span<const int> ids) const {
  if (ids.empty()) throw Error(ErrorCode::kEmptyInput, "empty token sequence");
  if (ids.size() > arch_.max_length) {
    throw Error(ErrorCode::kInvalidArgument, "sequence longer than the position table");
  }
  ForwardCache c;
  c.ids.assign(ids.begin(), ids.end());
  const long t = static_cast<long>(ids.size());
  const long d = static_cast<long>(arch_.hidden);

  MatrixXd h(t, d);
  for (long r = 0; r < t; ++r) {
    const int id = ids[static_cast<std::size_t>(r)];
    if (id < 0 || static_cast<std::size_t>(id) >= arch_.vocab_size) {
      throw Error(ErrorCode::kInvalidArgument, "token id outside the vocabulary");
    }
    h.row(r) = w(tok_emb_).row(id) + w(pos_emb_).row(r);
  }

  const long heads = static_cast<long>(arch_.heads);
  const long dh = arch_.layers > 0 ? d / heads : 0;
  const double inv_sqrt = arch_.layers > 0 ? 1.0 / std::sqrt(static_cast<double>(dh)) : 0.0;
  c.layers.resize(arch_.layers);
  for (std::size_t l = 0; l < arch_.layers; ++l) {
    const LayerIndex& li = layers_[l];
    LayerCache& lc = c.layers[l];
    lc.input = h;
    lc.a = layer_norm(h, w(li.ln1_g), w(li.ln1_b), lc.ln1_hat, lc.ln1_rstd);
    lc.q = (lc.a * w(li.wq)).rowwise() + w(li.bq).row(0);
    lc.k = (lc.a * w(li.wk)).rowwise() + w(li.bk).row(0);
    lc.v = (lc.a * w(li.wv)).rowwise() + w(li.bv).row(0);
    if (li.aq) {
      lc.aq = lc.a * w(*li.aq);
      lc.av = lc.a * w(*li.av);
      lc.q += lora_->scale() * lc.aq * w(*li.bq_lora);
      lc.v += lora_->scale() * lc.av * w(*li.bv_lora);
    }
    lc.o.resize(t, d);
    lc.attention.resize(static_cast<std::size_t>(heads));
    for (long hd = 0; hd < heads; ++hd) {
      const auto qh = lc.q.middleCols(hd * dh, dh);
      const auto kh = lc.k.middleCols(hd * dh, dh);
      const auto vh = lc.v.middleCols(hd * dh, dh);
      MatrixXd& p = lc.attention[static_cast<std::size_t>(hd)];
      p = softmax_rows((qh * kh.transpose()) * inv_sqrt);
      lc.o.middleCols(hd * dh, dh) = p * vh;
    }
    lc.h1 = h + ((lc.o * w(li.wo)).rowwise() + w(li.bo).row(0));
    lc.b = layer_norm(lc.h1, w(li.ln2_g), w(li.ln2_b), lc.ln2_hat, lc.ln2_rstd);
    lc.u = (lc.b * w(li.w1)).rowwise() + w(li.b1).row(0);
    lc.g = lc.u.unaryExpr([](double x) { return gelu(x); });
    h = lc.h1 + ((lc.g * w(li.w2)).rowwise() + w(li.b2).row(0));
  }
  c.last = h;
  c.states = layer_norm(h, w(lnf_g_), w(lnf_b_), c.lnf_hat, c.lnf_rstd);
  if (arch_.pooling == Pooling::kMean) {
    c.pooled = c.states.colwise().mean().transpose();
  } else {
    c.pooled = c.states.row(0).transpose();
  }
  c.logits = (c.pooled.transpose() * w(head_w_) + w(head_b_)).transpose();
  return c;
}

void SequenceClassifier::backward(const ForwardCache& c, const Eigen::Ref<const VectorXd>& dlogits) {
  const long t = static_cast<long>(c.ids.size());
  const long d = static_cast<long>(arch_.hidden);

  add_grad(head_w_, c.pooled * dlogits.transpose());
  add_grad(head_b_, dlogits.transpose());
  const VectorXd dpooled = w(head_w_) * dlogits;

  MatrixXd dstates = MatrixXd::Zero(t, d);
  if (arch_.pooling == Pooling::kMean) {
    dstates.rowwise() = dpooled.transpose() / static_cast<double>(t);
  } else {
    dstates.row(0) = dpooled.transpose();
  }
  MatrixXd dg_f = MatrixXd::Zero(1, d), db_f = MatrixXd::Zero(1, d);
  MatrixXd dh = layer_norm_backward(dstates, c.lnf_hat, c.lnf_rstd, w(lnf_g_), &dg_f, &db_f);
  add_grad(lnf_g_, dg_f);
  add_grad(lnf_b_, db_f);

  const long heads = static_cast<long>(arch_.heads);
  const long dh_size = arch_.layers > 0 ? d / heads : 0;
  const double inv_sqrt = arch_.layers > 0 ? 1.0 / std::sqrt(static_cast<double>(dh_size)) : 0.0;
  for (std::size_t l = arch_.layers; l-- > 0;) {
    const LayerIndex& li = layers_[l];
    const LayerCache& lc = c.layers[l];

    // Feed-forward block: h = h1 + gelu(b W1 + b1) W2 + b2.
    const MatrixXd& df = dh;
    add_grad(li.w2, lc.g.transpose() * df);
    add_grad(li.b2, df.colwise().sum());
    MatrixXd du = (df * w(li.w2).transpose()).array() *
                  lc.u.unaryExpr([](double x) { return gelu_grad(x); }).array();
    add_grad(li.w1, lc.b.transpose() * du);
    add_grad(li.b1, du.colwise().sum());
    const MatrixXd dbn = du * w(li.w1).transpose();
    MatrixXd dg2 = MatrixXd::Zero(1, d), db2 = MatrixXd::Zero(1, d);
    MatrixXd dh1 = dh + layer_norm_backward(dbn, lc.ln2_hat, lc.ln2_rstd, w(li.ln2_g), &dg2, &db2);
    add_grad(li.ln2_g, dg2);
    add_grad(li.ln2_b, db2);

    // Attention block: h1 = input + O Wo + bo.
    add_grad(li.wo, lc.o.transpose() * dh1);
    add_grad(li.bo, dh1.colwise().sum());
    const MatrixXd dout = dh1 * w(li.wo).transpose();
    MatrixXd dq(t, d), dk(t, d), dv(t, d);
    for (long hd = 0; hd < heads; ++hd) {
      const MatrixXd& p = lc.attention[static_cast<std::size_t>(hd)];
      const auto qh = lc.q.middleCols(hd * dh_size, dh_size);
      const auto kh = lc.k.middleCols(hd * dh_size, dh_size);
      const auto vh = lc.v.middleCols(hd * dh_size, dh_size);
      const auto doh = dout.middleCols(hd * dh_size, dh_size);
      const MatrixXd dp = doh * vh.transpose();
      dv.middleCols(hd * dh_size, dh_size) = p.transpose() * doh;
      const VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      const MatrixXd ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * inv_sqrt;
      dq.middleCols(hd * dh_size, dh_size) = ds * kh;
      dk.middleCols(hd * dh_size, dh_size) = ds.transpose() * qh;
    }
    add_grad(li.wq, lc.a.transpose() * dq);
    add_grad(li.bq, dq.colwise().sum());
    add_grad(li.wk, lc.a.transpose() * dk);
    add_grad(li.bk, dk.colwise().sum());
    add_grad(li.wv, lc.a.transpose() * dv);
    add_grad(li.bv, dv.colwise().sum());
    MatrixXd da = dq * effective_query(li).transpose() + dk * w(li.wk).transpose() +
                  dv * effective_value(li).transpose();
    if (li.aq) {
      const double s = lora_->scale();
      add_grad(*li.bq_lora, s * lc.aq.transpose() * dq);
      add_grad(*li.aq, s * lc.a.transpose() * (dq * w(*li.bq_lora).transpose()));
      add_grad(*li.bv_lora, s * lc.av.transpose() * dv);
      add_grad(*li.av, s * lc.a.transpose() * (dv * w(*li.bv_lora).transpose()));
    }
    MatrixXd dg1 = MatrixXd::Zero(1, d), db1 = MatrixXd::Zero(1, d);
    dh = dh1 + layer_norm_backward(da, lc.ln1_hat, lc.ln1_rstd, w(li.ln1_g), &dg1, &db1);
    add_grad(li.ln1_g, dg1);
    add_grad(li.ln1_b, db1);
  }

  if (params_[tok_emb_].trainable) {
    for (long r = 0; r < t; ++r) params_[tok_emb_].grad.row(c.ids[static_cast<std::size_t>(r)]) += dh.row(r);
  }
  if (params_[pos_emb_].trainable) params_[pos_emb_].grad.topRows(t) += dh;
}

VectorXd SequenceClassifier::pooled(std::span<const int> ids, Pooling pooling) const {
  const MatrixXd states = hidden_states(ids);
  if (pooling == Pooling::kMean) return states.colwise().mean().transpose();
  return states.row(0).transpose();
}

void SequenceClassifier::attach_lora(const LoraConfig& lora, std::uint64_t seed) {
  if (!supports_lora()) {
    throw Error(ErrorCode::kUnsupportedCheckpoint,
                "'" + arch_.id + "' has no attention projections to adapt");
  }
  if (lora.rank == 0 || lora.rank > arch_.hidden || !(lora.alpha > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "LoRA rank must be in [1, hidden] and alpha > 0");
  }
  if (lora_) throw Error(ErrorCode::kInvalidArgument, "adapters already attached");
  Rng rng(seed);
  for (auto& p : params_) p.trainable = false;
  params_[head_w_].trainable = true;
  params_[head_b_].trainable = true;
  const std::size_t d = arch_.hidden;
  // Kaiming-uniform-like scale for A, zeros for B.
  const double a_std = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".lora.";
    auto& li = layers_[l];
    li.aq = add(p + "query.a", gaussian(rng, d, lora.rank, a_std), false);
    li.bq_lora = add(p + "query.b", MatrixXd::Zero(static_cast<long>(lora.rank), static_cast<long>(d)), false);
    li.av = add(p + "value.a", gaussian(rng, d, lora.rank, a_std), false);
    li.bv_lora = add(p + "value.b", MatrixXd::Zero(static_cast<long>(lora.rank), static_cast<long>(d)), false);
  }
  lora_ = lora;
}

void SequenceClassifier::merge_lora() {
  if (!lora_) return;
  std::vector<std::size_t> drop;
  for (auto& li : layers_) {
    params_[li.wq].value = effective_query(li);
    params_[li.wv].value = effective_value(li);
    drop.insert(drop.end(), {*li.aq, *li.bq_lora, *li.av, *li.bv_lora});
    li.aq.reset();
    li.bq_lora.reset();
    li.av.reset();
    li.bv_lora.reset();
  }
  // Adapters are always appended after the base parameters.
  const std::size_t first = *std::min_element(drop.begin(), drop.end());
  params_.erase(params_.begin() + static_cast<long>(first), params_.end());
  for (auto& p : params_) p.trainable = true;
  lora_.reset();
}

void SequenceClassifier::reset_head(std::uint64_t seed) {
  Rng rng(seed);
  params_[head_w_].value = gaussian(rng, arch_.hidden, num_classes_, kInitStd);
  params_[head_b_].value.setZero();
}

std::size_t SequenceClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::size_t SequenceClassifier::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

void SequenceClassifier::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void SequenceClassifier::save(const std::filesystem::path& dir, const json& metadata) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());

  json manifest = json::array();
  for (const auto& p : params_) {
    manifest.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  json j = metadata.is_object() ? metadata : json::object();
  j["format"] = "flicc.model";
  j["format_version"] = kModelFormatVersion;
  j["architecture"] = arch_.to_json();
  j["num_classes"] = num_classes_;
  j["lora"] = lora_ ? json{{"rank", lora_->rank}, {"alpha", lora_->alpha}} : json(nullptr);
  j["tokenizer"] = {{"kind", "hash-word"},
                    {"vocab_size", arch_.vocab_size},
                    {"max_length", arch_.max_length}};
  j["parameters"] = manifest;
  j["checksum"] = hex64(checksum(params_));

  std::ofstream meta(dir / "model.json");
  meta << j.dump(2) << '\n';
  std::ofstream bin(dir / "weights.bin", std::ios::binary);
  bin.write(kWeightsMagic, sizeof(kWeightsMagic));
  for (const auto& p : params_) {
    bin.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * static_cast<long>(sizeof(double))));
  }
  if (!meta || !bin) throw Error(ErrorCode::kIoError, "failed writing model to " + dir.string());
}

SequenceClassifier SequenceClassifier::load(const std::filesystem::path& dir, json* metadata) {
  const auto meta_path = dir / "model.json";
  const auto bin_path = dir / "weights.bin";
  std::ifstream meta(meta_path);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!meta || !bin) {
    throw Error(ErrorCode::kArtifactCorrupt, dir.string() + " lacks model.json or weights.bin");
  }
  json j;
  try {
    meta >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kArtifactCorrupt, "model.json: " + std::string(e.what()));
  }
  if (j.value("format", "") != "flicc.model") {
    throw Error(ErrorCode::kArtifactCorrupt, "model.json is not a flicc model");
  }
  if (j.value("format_version", -1) != kModelFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "model format " + j.value("format_version", json(-1)).dump() + ", expected " +
                    std::to_string(kModelFormatVersion));
  }
  try {
    SequenceClassifier model(Architecture::from_json(j.at("architecture")),
                             j.at("num_classes").get<std::size_t>(), 0);
    if (!j.at("lora").is_null()) {
      model.attach_lora({j["lora"].at("rank").get<std::size_t>(), j["lora"].at("alpha").get<double>()},
                        0);
    }
    const auto& manifest = j.at("parameters");
    if (manifest.size() != model.params_.size()) {
      throw Error(ErrorCode::kArtifactCorrupt, "parameter manifest does not match architecture");
    }
    char magic[sizeof(kWeightsMagic)];
    bin.read(magic, sizeof(magic));
    if (!bin || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
      throw Error(ErrorCode::kArtifactCorrupt, "weights.bin has a bad header");
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      auto& p = model.params_[i];
      if (manifest[i].at("name") != p.name || manifest[i].at("rows") != p.value.rows() ||
          manifest[i].at("cols") != p.value.cols()) {
        throw Error(ErrorCode::kArtifactCorrupt, "parameter " + p.name + " does not match");
      }
      bin.read(reinterpret_cast<char*>(p.value.data()),
               static_cast<std::streamsize>(p.value.size() * static_cast<long>(sizeof(double))));
      if (!bin) throw Error(ErrorCode::kArtifactCorrupt, "weights.bin is truncated");
    }
    if (bin.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorCode::kArtifactCorrupt, "weights.bin has trailing bytes");
    }
    if (j.at("checksum").get<std::string>() != hex64(checksum(model.params_))) {
      throw Error(ErrorCode::kArtifactCorrupt, "weights checksum mismatch");
    }
    if (metadata) *metadata = j;
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kArtifactCorrupt, "model.json: " + std::string(e.what()));
  }
}

}  // namespace flicc
