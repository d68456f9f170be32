// Python bindings for the speechstyle core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ssc/audio.hpp"
#include "ssc/corpus.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/error.hpp"
#include "ssc/eval.hpp"
#include "ssc/handcrafted.hpp"
#include "ssc/model.hpp"
#include "ssc/pipeline.hpp"
#include "ssc/synth.hpp"
#include "ssc/version.hpp"

namespace py = pybind11;
using namespace ssc;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I32 = py::array_t<int, py::array::c_style | py::array::forcecast>;

template <typename T>
std::span<const T> view(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

py::array_t<float> to_numpy(const std::vector<float>& v) { return py::array_t<float>(v.size(), v.data()); }

py::array_t<float> to_numpy(const FeatureMatrix& m) {
  py::array_t<float> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

FeatureMatrix from_numpy(const F32& a, std::string schema = {}) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array (frames x dims)");
  FeatureMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), std::move(schema));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

std::vector<EpisodeRecord> records_from(const py::list& items) {
  std::vector<EpisodeRecord> out;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    EpisodeRecord r;
    r.episode_id = d["episode_id"].cast<std::string>();
    r.label = parse_label(d.contains("label") ? d["label"].cast<std::string>() : "spontaneous");
    r.language = normalize_language(d.contains("language") ? d["language"].cast<std::string>() : "");
    r.category = d.contains("category") ? d["category"].cast<std::string>() : "";
    r.format = d.contains("format") ? d["format"].cast<std::string>() : "";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_ssc, m) {
  m.doc() = "Scripted vs spontaneous speech classification core";
  m.attr("__version__") = kToolVersion;
  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("HANDCRAFTED_DIMS") = kHandcraftedDims;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // Audio
  m.def(
      "load_audio",
      [](const std::filesystem::path& path) {
        const auto a = decode_resample(path);
        return to_numpy(a.samples);
      },
      py::arg("path"), "Decode a WAV file to mono 16 kHz float32.");
  m.def(
      "resample", [](const F32& x, int in_rate, int out_rate) { return to_numpy(resample(view(x), in_rate, out_rate)); },
      py::arg("samples"), py::arg("in_rate"), py::arg("out_rate"));
  m.def(
      "chunk",
      [](const F32& x) {
        AudioBuffer b;
        b.samples.assign(x.data(), x.data() + x.size());
        py::list out;
        for (const auto& s : chunk_episode(b)) out.append(to_numpy(s.samples));
        return out;
      },
      py::arg("samples"), "Split 16 kHz audio into zero-padded 30 s snippets.");
  m.def(
      "write_wav", [](const std::filesystem::path& p, const F32& x, int rate) { write_wav(p, view(x), rate); },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = kSampleRate);

  // Handcrafted features
  m.def(
      "estimate_f0",
      [](const F32& frame, int rate) {
        const auto p = estimate_f0(view(frame), rate);
        return py::make_tuple(p.f0, p.voicing);
      },
      py::arg("frame"), py::arg("sample_rate") = kSampleRate, "YIN estimate: (f0 Hz or 0, voicing).");
  m.def(
      "extract_handcrafted", [](const F32& x) { return to_numpy(extract_handcrafted(view(x)).values); },
      py::arg("snippet"), "115 handcrafted features for one 30 s snippet.");
  m.def("handcrafted_feature_names", &handcrafted_feature_names);
  m.def(
      "speech_segments",
      [](const F32& x) {
        std::vector<float> s(x.data(), x.data() + x.size());
        s.resize(kSnippetSamples, 0.0f);
        py::list out;
        for (const auto& seg : detect_speech_segments(Snippet{"", 0, std::move(s), 0}).segments) {
          const char* kind = seg.kind == SegmentKind::kSpeech ? "speech"
                             : seg.kind == SegmentKind::kNonspeech ? "nonspeech"
                                                                    : "overlap";
          out.append(py::make_tuple(seg.start, seg.end, kind));
        }
        return out;
      },
      py::arg("snippet"), "(start, end, kind) segments of a snippet.");

  // Feature files and class-score summaries
  m.def(
      "read_feature_file",
      [](const std::filesystem::path& p) -> py::tuple {
        const auto d = read_feature_file(p);
        if (const auto* v = std::get_if<FeatureVector>(&d)) return py::make_tuple(to_numpy(v->values), v->schema_id);
        const auto& mat = std::get<FeatureMatrix>(d);
        return py::make_tuple(to_numpy(mat), mat.schema_id);
      },
      py::arg("path"), "Returns (array, schema_id).");
  m.def(
      "write_feature_file",
      [](const std::filesystem::path& p, const F32& a, const std::string& schema) {
        if (a.ndim() == 1) {
          write_feature_file(p, FeatureVector{{a.data(), a.data() + a.size()}, schema});
        } else {
          write_feature_file(p, from_numpy(a, schema));
        }
      },
      py::arg("path"), py::arg("data"), py::arg("schema_id"));
  m.def(
      "class_score_summary", [](const F32& a) { return to_numpy(class_score_summary(from_numpy(a)).values); },
      py::arg("scores"));
  m.def(
      "class_score_top_k_counts",
      [](const F32& a, std::size_t k) { return to_numpy(class_score_top_k_counts(from_numpy(a), k).values); },
      py::arg("scores"), py::arg("k") = 4);

  // Metrics
  m.def(
      "aggregate",
      [](const F64& s, const std::string& mode) { return aggregate(view(s), parse_aggregation(mode)); },
      py::arg("scores"), py::arg("mode") = "median");
  m.def(
      "roc_auc", [](const I32& y, const F64& s) { return roc_auc(view(y), view(s)); }, py::arg("labels"),
      py::arg("scores"), "Rank AUC; label 1 (scripted) is positive.");
  m.def(
      "f1_per_class",
      [](const I32& y, const F64& s, double threshold) {
        const auto f = f1_per_class(view(y), view(s), threshold);
        return py::make_tuple(f.scripted, f.spontaneous);
      },
      py::arg("labels"), py::arg("scores"), py::arg("threshold") = 0.5);

  // Corpus
  m.def(
      "group_language",
      [](const std::string& lang) { return LanguageGroup::builtin_default().group_language(lang); },
      py::arg("language"), "Language group under the default rules, or None when excluded.");
  m.def(
      "stratified_kfold",
      [](const py::list& records, int k, std::uint64_t seed) {
        return stratified_kfold(records_from(records), k, seed).assignment;
      },
      py::arg("records"), py::arg("k") = 5, py::arg("seed") = 0,
      "Records are dicts with episode_id and optional label/category/format/language.");

  // Model
  m.def(
      "prior_bias", [](std::size_t s, std::size_t p) { return prior_bias({s, p}); }, py::arg("n_scripted"),
      py::arg("n_spontaneous"));

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def_property_readonly("schema_id", [](const Checkpoint& c) { return c.schema_id; })
      .def_property_readonly("epoch", [](const Checkpoint& c) { return c.epoch; })
      .def_property_readonly("val_loss", [](const Checkpoint& c) { return c.val_loss; })
      .def_property_readonly("input_dim", [](const Checkpoint& c) { return c.params.arch.input_dim; })
      .def_property_readonly("variant", [](const Checkpoint& c) { return std::string(variant_name(c.params.arch.variant)); })
      .def(
          "score",
          [](const Checkpoint& c, const F32& x, const std::string& schema) {
            const auto rows = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(0)) : 1;
            const auto cols = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(1)) : static_cast<std::size_t>(x.size());
            return score_input(c, schema.empty() ? c.schema_id : schema, InputView{view(x), rows, cols});
          },
          py::arg("features"), py::arg("schema_id") = "", "Score one snippet input.");

  // Synthetic speech
  m.def(
      "synth_episode",
      [](const std::string& style, std::uint64_t seed, double duration) {
        const auto p = style == "scripted" ? StyleProfile::scripted()
                       : style == "spontaneous" ? StyleProfile::spontaneous()
                                                : throw InvalidArgument("style must be scripted or spontaneous");
        const auto e = gen_episode(p, seed, duration);
        return py::make_tuple(to_numpy(e.audio.samples), e.truth.silence_fraction());
      },
      py::arg("style"), py::arg("seed") = 1, py::arg("duration") = 60.0,
      "Returns (16 kHz samples, true silence fraction).");
  m.def(
      "synth_corpus",
      [](const std::filesystem::path& out, const std::string& config_text) {
        const auto c = config_text.empty() ? SynthConfig{} : SynthConfig::parse(config_text);
        c.validate();
        return gen_corpus(c, out).manifest_path;
      },
      py::arg("out_dir"), py::arg("config") = "", "Writes a corpus; returns the manifest path.");

  // Pipeline commands
  m.def(
      "predict",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& input, const std::string& aggregation) {
        RunConfig c;
        c.checkpoint = checkpoint;
        c.input = input;
        c.aggregation = parse_aggregation(aggregation);
        std::ostringstream log;
        const auto r = cmd_predict(c, log);
        return py::make_tuple(r.snippet_scores, r.episode_score);
      },
      py::arg("checkpoint"), py::arg("input"), py::arg("aggregation") = "median",
      "Scores a WAV file or feature file(s): (snippet scores, episode score).");
}
