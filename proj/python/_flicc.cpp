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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "flicc/corpus.hpp"
#include "flicc/curation.hpp"
#include "flicc/error.hpp"
#include "flicc/inference.hpp"
#include "flicc/llm_baseline.hpp"
#include "flicc/loss.hpp"
#include "flicc/metrics.hpp"
#include "flicc/taxonomy.hpp"
#include "flicc/training.hpp"

namespace py = pybind11;
using flicc::Label;

namespace {

// Structured results cross the boundary as JSON and come back as dicts.
py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Label> parse_labels(const std::vector<std::string>& names) {
  std::vector<Label> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(flicc::parse_label(n));
  return out;
}

py::object evaluate(const std::vector<std::string>& truth,
                    const std::vector<std::optional<std::string>>& pred) {
  if (truth.size() != pred.size()) {
    throw flicc::Error(flicc::ErrorCode::kLengthMismatch, "truth and pred differ in length");
  }
  std::vector<flicc::metrics::MaybeLabel> p;
  for (const auto& v : pred) p.push_back(v ? flicc::metrics::MaybeLabel(flicc::parse_label(*v)) : std::nullopt);
  const auto t = parse_labels(truth);
  auto j = flicc::metrics::report(t, p).to_json();
  j["confusion"] = flicc::metrics::confusion(t, p).to_json();
  return to_python(j);
}

py::object split_file(const std::filesystem::path& in, const std::filesystem::path& out,
                      std::tuple<double, double, double> fractions, std::uint64_t seed) {
  const auto [train, val, test] = fractions;
  const auto data = flicc::stratified_split(flicc::load_dataset(in), {train, val, test}, seed);
  flicc::save_dataset(data, out);
  return to_python(flicc::split_summary(data).to_json());
}

std::size_t curate_file(const std::filesystem::path& dataset, const std::filesystem::path& out,
                        const std::string& encoder, std::size_t top_k, double contamination,
                        std::uint64_t seed) {
  const auto data = flicc::load_dataset(dataset);
  flicc::curation::CurateOptions opt;
  opt.encoder.id = encoder;
  opt.top_k = top_k;
  opt.contamination = contamination;
  opt.seed = seed;
  return flicc::curation::review_report(flicc::curation::curate(data, opt), out, &data).size();
}

py::object train_job(const std::filesystem::path& config_path) {
  const auto job = flicc::training::load_train_job(config_path);
  const auto data = flicc::load_dataset(job.dataset);
  flicc::Dataset train, val, test;
  train.samples = data.in_split(flicc::Split::kTrain);
  val.samples = data.in_split(flicc::Split::kVal);
  test.samples = data.in_split(flicc::Split::kTest);
  flicc::training::RunResult result;
  {
    py::gil_scoped_release release;
    flicc::SequenceClassifier model(*flicc::find_architecture("flicc-encoder-tiny"), flicc::kNumLabels, 0);
    result = job.config.lora
                 ? flicc::training::fine_tune_lora(job.config, train, val, {job.output_dir}, &model)
                 : flicc::training::fine_tune(job.config, train, val, {job.output_dir}, &model);
    if (!test.samples.empty()) result.test_report = flicc::training::evaluate(model, test);
    flicc::training::write_run_files(job.output_dir, result);
  }
  return to_python(result.to_json());
}

py::object normalize(const std::string& raw) {
  const auto v = flicc::llm::normalize_response(raw);
  return py::make_tuple(v.normalized(), std::string(flicc::llm::rule_name(v.rule)));
}

}  // namespace

PYBIND11_MODULE(_flicc, m) {
  m.doc() = "Fallacy classification workbench core";

  py::exception<flicc::Error>(m, "FliccError", PyExc_RuntimeError);
  // Raised errors carry the error code name in a `code` attribute.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const flicc::Error& e) {
      py::object type = py::module_::import("flicc._flicc").attr("FliccError");
      py::object inst = type(e.what());
      inst.attr("code") = std::string(flicc::error_code_name(e.code()));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  m.def("labels", [] { return to_python(flicc::inference::labels_json()); },
        "Taxonomy rows in canonical order.");
  m.def("parse_label", [](const std::string& s) { return std::string(flicc::parse_label(s).name()); },
        py::arg("text"));

  m.def("split_file", &split_file, py::arg("dataset"), py::arg("out"), py::arg("fractions"),
        py::arg("seed") = 0);
  m.def("summary", [](const std::filesystem::path& p) {
    return to_python(flicc::split_summary(flicc::load_dataset(p)).to_json());
  }, py::arg("dataset"));

  m.def("evaluate", &evaluate, py::arg("truth"), py::arg("pred"),
        "Classification report and confusion matrix; None in pred is an abstention.");
  m.def("zero_r", [](const std::vector<std::string>& train, std::size_t n) {
    const auto pred = flicc::metrics::zero_r(parse_labels(train)).predict(n);
    std::vector<std::string> out;
    for (const auto& l : pred) out.emplace_back(l.name());
    return out;
  }, py::arg("train"), py::arg("n"));
  m.def("render_normalized_row", [](const std::vector<std::size_t>& counts) {
    return flicc::metrics::render_normalized_row(counts);
  }, py::arg("counts"));

  m.def("focal_loss", [](const std::vector<double>& p, std::size_t t, double gamma) {
    return flicc::focal_loss(p, t, gamma);
  }, py::arg("probabilities"), py::arg("true_class"), py::arg("gamma"));

  m.def("cosine_similarity", [](const std::vector<double>& a, const std::vector<double>& b) {
    return flicc::curation::cosine_similarity(a, b);
  }, py::arg("a"), py::arg("b"));
  m.def("euclidean_distance", [](const std::vector<double>& p, const std::vector<double>& q) {
    return flicc::curation::expanded_euclidean_distance(p, q);
  }, py::arg("p"), py::arg("q"));
  m.def("embed", [](const std::vector<std::string>& texts, const std::string& encoder) {
    flicc::curation::EncoderConfig cfg;
    cfg.id = encoder;
    std::vector<std::vector<double>> out;
    for (auto& e : flicc::curation::embed(texts, cfg)) out.push_back(std::move(e.vector));
    return out;
  }, py::arg("texts"), py::arg("encoder") = "lexical-hash");
  m.def("curate", &curate_file, py::arg("dataset"), py::arg("out"),
        py::arg("encoder") = "lexical-hash", py::arg("top_k") = 100,
        py::arg("contamination") = 0.02, py::arg("seed") = 0,
        "Writes a review report; returns the number of entries.");

  m.def("train", &train_job, py::arg("config"), "Runs a YAML training job; returns the run summary.");

  m.def("build_prompt", [](const std::string& text) { return flicc::llm::build_prompt(text); },
        py::arg("text"));
  m.def("normalize_response", &normalize, py::arg("raw"),
        "Returns (normalized, rule) for a raw model answer.");

  py::class_<flicc::inference::Predictor>(m, "Predictor")
      .def_static("load", &flicc::inference::load_predictor, py::arg("artifact"))
      .def_property_readonly("model_version", &flicc::inference::Predictor::model_version)
      .def("predict", [](const flicc::inference::Predictor& p, const std::string& text) {
        return to_python(p.predict(text).to_json());
      }, py::arg("text"))
      .def("predict_batch", [](const flicc::inference::Predictor& p, const std::vector<std::string>& texts) {
        py::list out;
        for (const auto& r : p.predict_batch(texts)) out.append(to_python(r.to_json()));
        return out;
      }, py::arg("texts"));
}
