#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "msbin/bandopt.hpp"
#include "msbin/cli.hpp"
#include "msbin/cvs.hpp"
#include "msbin/ensemble.hpp"
#include "msbin/errors.hpp"
#include "msbin/io.hpp"
#include "msbin/metrics.hpp"
#include "msbin/parallel.hpp"
#include "msbin/serialize.hpp"
#include "msbin/synth.hpp"

namespace py = pybind11;
using namespace msbin;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

IntensityPlane plane_from(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("band arrays must be 2-D");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<float> v(a.data(), a.data() + a.size());
  for (auto& x : v) x = IntensityPlane::snap(std::clamp(x, 0.0f, 1.0f));
  return IntensityPlane(w, h, std::move(v));
}

FloatArray to_array(const IntensityPlane& p) {
  FloatArray a({p.height(), p.width()});
  std::copy(p.values().begin(), p.values().end(), a.mutable_data());
  return a;
}

BinaryImage mask_from(const MaskArray& a) {
  if (a.ndim() != 2) throw py::value_error("masks must be 2-D");
  std::vector<std::uint8_t> v(a.data(), a.data() + a.size());
  for (auto& x : v) x = x ? 1 : 0;
  return BinaryImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(v));
}

py::array_t<bool> to_array(const BinaryImage& m) {
  py::array_t<bool> a({m.height(), m.width()});
  auto* d = a.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) d[i] = m[i];
  return a;
}

BandTriple triple_from(const std::array<int, 3>& t) { return {t[0], t[1], t[2]}; }
std::array<int, 3> triple_to(const BandTriple& t) { return t.bands(); }

// {"preprocess":{..},"kernel":{..},"wrapper":{..}}, every key optional
Pipeline pipeline_from(const std::string& text) {
  Pipeline p;
  if (text.empty()) return p;
  const Json j = Json::parse(text);
  if (!j.is_object()) throw ConfigError("pipeline: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "preprocess") {
      merge_json(it.value(), p.preprocess);
    } else if (it.key() == "kernel") {
      merge_json(it.value(), p.kernel);
    } else if (it.key() == "wrapper") {
      merge_json(it.value(), p.wrapper);
    } else {
      throw ConfigError("pipeline: unknown key '" + it.key() + "'");
    }
  }
  p.validate();
  return p;
}

py::dict scores_dict(const ImageScores& s) {
  py::dict d;
  d["fm"] = s.fm ? py::cast(*s.fm) : py::none();
  d["nrm"] = s.nrm ? py::cast(*s.nrm) : py::none();
  d["drd"] = s.drd ? py::cast(*s.drd) : py::none();
  d["kappa"] = s.kappa ? py::cast(*s.kappa) : py::none();
  d["notes"] = s.notes;
  return d;
}

std::vector<std::pair<std::array<int, 3>, double>> entries_of(const RankedTriples& r) {
  std::vector<std::pair<std::array<int, 3>, double>> out;
  for (const auto& e : r.entries) out.emplace_back(triple_to(e.triple), e.fm);
  return out;
}

}  // namespace

PYBIND11_MODULE(_msbin, m) {
  m.doc() = "Multispectral document binarization core";

  // translators run newest first, so the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_OSError);
  py::register_exception<MetricUndefined>(m, "MetricUndefined", PyExc_ArithmeticError);

  py::class_<MsImage>(m, "MsImage")
      .def(py::init([](std::string name, const std::vector<FloatArray>& bands) {
             std::vector<IntensityPlane> planes;
             for (const auto& b : bands) planes.push_back(plane_from(b));
             return MsImage(std::move(name), std::move(planes));
           }),
           py::arg("name"), py::arg("bands"))
      .def_property_readonly("name", &MsImage::name)
      .def_property_readonly("width", &MsImage::width)
      .def_property_readonly("height", &MsImage::height)
      .def_property_readonly("band_count", &MsImage::band_count)
      .def("band", [](const MsImage& im, int k) { return to_array(im.band(k)); }, py::arg("index"),
           "Copy of band `index` (1-based) in BW01 convention.");

  m.def("load_ms", [](const std::filesystem::path& p) { return load_ms(p); }, py::arg("path"));
  m.def("load_binary", [](const std::filesystem::path& p) { return to_array(load_binary(p)); }, py::arg("path"));
  m.def("save_binary", [](const MaskArray& a, const std::filesystem::path& p) { save_binary(mask_from(a), p); },
        py::arg("mask"), py::arg("path"));

  m.def(
      "generate",
      [](const std::string& config, const std::string& name) {
        SynthConfig cfg;
        if (!config.empty()) merge_json(Json::parse(config), cfg);
        SynthImage s = generate(cfg, name);
        return py::make_tuple(std::move(s.image), to_array(s.gt));
      },
      py::arg("config") = "", py::arg("name") = "synth");
  m.def(
      "generate_dataset",
      [](std::size_t n, std::uint64_t seed, const std::string& config, const std::filesystem::path& out) {
        SynthConfig cfg;
        if (!config.empty()) merge_json(Json::parse(config), cfg);
        generate_dataset(n, seed, cfg, out);
        return dataset_manifest_path(out);
      },
      py::arg("n"), py::arg("seed"), py::arg("config"), py::arg("out_dir"));

  m.def(
      "binarize",
      [](const MsImage& im, const std::array<int, 3>& t, const std::string& pipeline) {
        const Pipeline p = pipeline_from(pipeline);
        BinaryImage mask;
        {
          py::gil_scoped_release release;
          const PreparedImage prep(im, &p.preprocess, p.wrapper);
          mask = wrap_binarize_detailed(prep, triple_from(t), p.kernel, p.wrapper).mask;
        }
        return to_array(mask);
      },
      py::arg("image"), py::arg("triple"), py::arg("pipeline") = "");

  m.def(
      "evaluate",
      [](const MaskArray& pred, const MaskArray& gt) { return scores_dict(evaluate(mask_from(pred), mask_from(gt), "")); },
      py::arg("pred"), py::arg("gt"), "FM, NRM, DRD and kappa; undefined metrics are None.");

  m.def(
      "rank_bands",
      [](const MsImage& im, const MaskArray& gt, const std::string& pipeline, const std::string& optimizer) {
        const Pipeline p = pipeline_from(pipeline);
        OptimizerConfig cfg;
        if (!optimizer.empty()) merge_json(Json::parse(optimizer), cfg);
        cfg.validate();
        const BinaryImage g = mask_from(gt);
        py::gil_scoped_release release;
        const FitnessEvaluator f(im, g, p);
        const RankedTriples r = cfg.mode == OptimizerMode::Exhaustive
                                    ? exhaustive_best(f, static_cast<std::size_t>(cfg.tail_count))
                                    : evolve_best(f, cfg).ranked;
        return entries_of(r);
      },
      py::arg("image"), py::arg("gt"), py::arg("pipeline") = "", py::arg("optimizer") = "",
      "Best triple followed by the tailing triples, as (triple, fm) pairs.");

  m.def(
      "select_experts",
      [](const std::vector<std::vector<std::array<int, 3>>>& lists, std::size_t max_frequent) {
        std::vector<RankedTriples> ranked;
        for (const auto& l : lists) {
          RankedTriples r;
          double fm = static_cast<double>(l.size());
          for (const auto& t : l) r.entries.push_back({triple_from(t), fm--});
          ranked.push_back(std::move(r));
        }
        std::vector<std::array<int, 3>> out;
        for (const auto& t : select_experts(ranked, max_frequent)) out.push_back(triple_to(t));
        return out;
      },
      py::arg("rankings"), py::arg("max_frequent") = 5,
      "Per-image ranked triple lists (best first) to the odd-sized expert set.");

  m.def(
      "combine",
      [](const MsImage& im, const std::string& model) {
        const ExpertEnsemble e = ensemble_from_json(Json::parse(model));
        BinaryImage mask;
        {
          py::gil_scoped_release release;
          mask = combine(im, e);
        }
        return to_array(mask);
      },
      py::arg("image"), py::arg("model"), "Majority vote of an ensemble model given as JSON text.");

  m.def("cvs_measure", &cvs_measure, py::arg("fm_typ"), py::arg("fm_bes"), py::arg("fm_mul"));
  m.def("holdout_sizes", &holdout_sizes, py::arg("n"), py::arg("p"));
  m.def(
      "ranking_scores",
      [](const std::vector<std::vector<std::vector<double>>>& values) {
        return ranking_scores(values, standard_directions()).scores;
      },
      py::arg("values"), "values[method][image] = [fm, nrm, drd, kappa].");

  m.def("set_threads", &set_thread_count, py::arg("n"));
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the msbin tool in-process; returns (exit_code, stdout, stderr).");
}
