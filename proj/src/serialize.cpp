#include "msbin/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "msbin/errors.hpp"

namespace msbin {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw LoadError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

namespace {

// Strict field reader: every key must be consumed exactly once by get().
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    read(*it, out, where_ + "." + key);
  }

  const Json* raw(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  static void read(const Json& v, double& out, const std::string& w) {
    if (!v.is_number()) throw ConfigError(w + ": expected a number");
    out = v.get<double>();
  }
  static void read(const Json& v, int& out, const std::string& w) {
    if (!v.is_number_integer()) throw ConfigError(w + ": expected an integer");
    out = v.get<int>();
  }
  static void read(const Json& v, std::uint64_t& out, const std::string& w) {
    if (!v.is_number_unsigned()) throw ConfigError(w + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const Json& v, bool& out, const std::string& w) {
    if (!v.is_boolean()) throw ConfigError(w + ": expected true or false");
    out = v.get<bool>();
  }
  static void read(const Json& v, std::string& out, const std::string& w) {
    if (!v.is_string()) throw ConfigError(w + ": expected a string");
    out = v.get<std::string>();
  }
  static void read(const Json& v, std::vector<double>& out, const std::string& w) {
    if (!v.is_array()) throw ConfigError(w + ": expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(w + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class Fn>
auto wrap_parse(Fn&& fn, const std::string& where) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

Json to_json(const PreprocessConfig& c) {
  return {{"p_low", c.p_low}, {"p_high", c.p_high}, {"gamma", c.gamma}, {"enabled", c.enabled}};
}

void merge_json(const Json& j, PreprocessConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("p_low", c.p_low);
  f.get("p_high", c.p_high);
  f.get("gamma", c.gamma);
  f.get("enabled", c.enabled);
  f.finish();
}

Json to_json(const KernelSpec& s) {
  Json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case KernelKind::Otsu:
      break;
    case KernelKind::Niblack:
      j["window_radius"] = s.window_radius;
      j["k"] = s.k;
      break;
    case KernelKind::Sauvola:
      j["window_radius"] = s.window_radius;
      j["k"] = s.k;
      j["R"] = s.sauvola_r;
      break;
    case KernelKind::BgSuppressed:
      j["bg_weight"] = s.bg_weight;
      j["inner"] = s.inner ? to_json(*s.inner) : Json(nullptr);
      break;
  }
  return j;
}

void merge_json(const Json& j, KernelSpec& s, const std::string& where) {
  Fields f(j, where);
  if (f.has("kind")) {
    std::string kind;
    f.get("kind", kind);
    KernelKind k;
    try {
      k = parse_kernel_kind(kind);
    } catch (const Error& e) {
      throw ConfigError(where + ".kind: " + e.what());
    }
    if (k != s.kind) {
      switch (k) {
        case KernelKind::Otsu: s = KernelSpec::otsu(); break;
        case KernelKind::Niblack: s = KernelSpec::niblack(); break;
        case KernelKind::Sauvola: s = KernelSpec::sauvola(); break;
        case KernelKind::BgSuppressed: s = KernelSpec::bg_suppressed(KernelSpec::sauvola()); break;
      }
    }
  }
  f.get("window_radius", s.window_radius);
  f.get("k", s.k);
  f.get("R", s.sauvola_r);
  f.get("bg_weight", s.bg_weight);
  if (const Json* inner = f.raw("inner")) {
    KernelSpec in = s.inner ? *s.inner : KernelSpec::sauvola();
    merge_json(*inner, in, where + ".inner");
    s.inner = std::make_shared<const KernelSpec>(std::move(in));
  }
  f.finish();
}

Json to_json(const WrapperConfig& c) {
  return {{"blur", c.blur},
          {"blur_sigma", c.blur_sigma},
          {"blur_radius", c.blur_radius},
          {"deblur_sigma", c.deblur_sigma},
          {"deblur_radius", c.deblur_radius},
          {"deblur_amount", c.deblur_amount},
          {"togray", std::string(to_string(c.togray))},
          {"ratio_min", c.ratio_min},
          {"ratio_max", c.ratio_max},
          {"bbox_min_fraction", c.bbox_min_fraction},
          {"inpaint_percentile", c.inpaint_percentile},
          {"max_retries", c.max_retries}};
}

void merge_json(const Json& j, WrapperConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("blur", c.blur);
  f.get("blur_sigma", c.blur_sigma);
  f.get("blur_radius", c.blur_radius);
  f.get("deblur_sigma", c.deblur_sigma);
  f.get("deblur_radius", c.deblur_radius);
  f.get("deblur_amount", c.deblur_amount);
  if (f.has("togray")) {
    std::string name;
    f.get("togray", name);
    try {
      c.togray = parse_togray(name);
    } catch (const Error& e) {
      throw ConfigError(where + ".togray: " + e.what());
    }
  }
  f.get("ratio_min", c.ratio_min);
  f.get("ratio_max", c.ratio_max);
  f.get("bbox_min_fraction", c.bbox_min_fraction);
  f.get("inpaint_percentile", c.inpaint_percentile);
  f.get("max_retries", c.max_retries);
  f.finish();
}

Json to_json(const OptimizerConfig& c) {
  return {{"mode", c.mode == OptimizerMode::Exhaustive ? "exhaustive" : "evolutionary"},
          {"population", c.population},
          {"generations", c.generations},
          {"mutation_rate", c.mutation_rate},
          {"tail_count", c.tail_count},
          {"seed", c.seed}};
}

void merge_json(const Json& j, OptimizerConfig& c, const std::string& where) {
  Fields f(j, where);
  if (f.has("mode")) {
    std::string mode;
    f.get("mode", mode);
    if (mode == "exhaustive") {
      c.mode = OptimizerMode::Exhaustive;
    } else if (mode == "evolutionary") {
      c.mode = OptimizerMode::Evolutionary;
    } else {
      throw ConfigError(where + ".mode: expected 'exhaustive' or 'evolutionary', got '" + mode + "'");
    }
  }
  f.get("population", c.population);
  f.get("generations", c.generations);
  f.get("mutation_rate", c.mutation_rate);
  f.get("tail_count", c.tail_count);
  f.get("seed", c.seed);
  f.finish();
}

Json to_json(const SynthConfig& c) {
  return {{"seed", c.seed},
          {"width", c.width},
          {"height", c.height},
          {"n_band", c.n_band},
          {"text_density", c.text_density},
          {"text_contrast_profile", c.text_contrast_profile},
          {"bleedthrough_strength", c.bleedthrough_strength},
          {"noise_sigma_profile", c.noise_sigma_profile},
          {"misregistration_px", c.misregistration_px}};
}

void merge_json(const Json& j, SynthConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("seed", c.seed);
  f.get("width", c.width);
  f.get("height", c.height);
  f.get("n_band", c.n_band);
  f.get("text_density", c.text_density);
  f.get("text_contrast_profile", c.text_contrast_profile);
  f.get("bleedthrough_strength", c.bleedthrough_strength);
  f.get("noise_sigma_profile", c.noise_sigma_profile);
  f.get("misregistration_px", c.misregistration_px);
  f.finish();
}

Json to_json(const BandTriple& t) { return Json::array({t.r, t.g, t.b}); }

BandTriple triple_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": a band triple is an array of 3 band indices");
  for (const auto& v : j)
    if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError(where + ": band indices must be integers >= 1");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

namespace {

Json pipeline_json(const Pipeline& p) {
  return {{"preprocess", to_json(p.preprocess)}, {"kernel", to_json(p.kernel)}, {"wrapper", to_json(p.wrapper)}};
}

Pipeline pipeline_from(const Json& j, const std::string& where) {
  Pipeline p;
  Fields f(j, where);
  if (const Json* v = f.raw("preprocess")) merge_json(*v, p.preprocess, where + ".preprocess");
  if (const Json* v = f.raw("kernel")) merge_json(*v, p.kernel, where + ".kernel");
  if (const Json* v = f.raw("wrapper")) merge_json(*v, p.wrapper, where + ".wrapper");
  f.finish();
  p.validate();
  return p;
}

}  // namespace

Json to_json(const RankingsFile& r) {
  Json images = Json::array();
  for (const auto& im : r.images) {
    Json e{{"image", im.name}};
    if (!im.ranked) {
      e["error"] = im.error;
    } else {
      const auto& entries = im.ranked->entries;
      e["best"] = to_json(entries.front().triple);
      Json tail = Json::array(), tail_fm = Json::array();
      for (std::size_t i = 1; i < entries.size(); ++i) {
        tail.push_back(to_json(entries[i].triple));
        tail_fm.push_back(entries[i].fm);
      }
      e["tail"] = tail;
      e["fm"] = entries.front().fm;
      e["tail_fm"] = tail_fm;
    }
    images.push_back(e);
  }
  return {{"pipeline", pipeline_json(r.pipeline)}, {"optimizer", to_json(r.optimizer)}, {"images", images}};
}

RankingsFile rankings_from_json(const Json& j) {
  return wrap_parse(
      [&] {
        RankingsFile r;
        Fields f(j, "rankings");
        if (const Json* v = f.raw("pipeline")) r.pipeline = pipeline_from(*v, "rankings.pipeline");
        if (const Json* v = f.raw("optimizer")) merge_json(*v, r.optimizer, "rankings.optimizer");
        const Json* images = f.raw("images");
        f.finish();
        if (!images || !images->is_array()) throw ConfigError("rankings: missing 'images' array");
        for (const auto& e : *images) {
          ImageRanking im;
          Fields g(e, "rankings.images");
          g.get("image", im.name);
          const std::string where = "rankings.images[" + im.name + "]";
          if (g.has("error")) {
            g.get("error", im.error);
            g.finish();
            r.images.push_back(im);
            continue;
          }
          const Json* best = g.raw("best");
          const Json* tail = g.raw("tail");
          const Json* fm = g.raw("fm");
          const Json* tail_fm = g.raw("tail_fm");
          g.finish();
          if (!best || !fm || !fm->is_number()) throw ConfigError(where + ": needs 'best' and 'fm'");
          RankedTriples ranked;
          ranked.entries.push_back({triple_from_json(*best, where + ".best"), fm->get<double>()});
          if (tail) {
            if (!tail->is_array()) throw ConfigError(where + ".tail: expected an array");
            if (tail_fm && (!tail_fm->is_array() || tail_fm->size() != tail->size()))
              throw ConfigError(where + ".tail_fm: must match 'tail' in length");
            for (std::size_t i = 0; i < tail->size(); ++i) {
              double v = 0.0;
              if (tail_fm) {
                if (!(*tail_fm)[i].is_number()) throw ConfigError(where + ".tail_fm: expected numbers");
                v = (*tail_fm)[i].get<double>();
              }
              ranked.entries.push_back({triple_from_json((*tail)[i], where + ".tail"), v});
            }
          }
          im.ranked = std::move(ranked);
          r.images.push_back(std::move(im));
        }
        return r;
      },
      "rankings");
}

Json to_json(const ExpertEnsemble& e) {
  Json experts = Json::array();
  for (const auto& t : e.experts) experts.push_back(to_json(t));
  Json provenance{{"training_images", e.provenance.training_images},
                  {"cvs_value", e.provenance.cvs_value ? Json(*e.provenance.cvs_value) : Json(nullptr)}};
  return {{"experts", experts},
          {"kernel", to_json(e.pipeline.kernel)},
          {"wrapper", to_json(e.pipeline.wrapper)},
          {"preprocess", to_json(e.pipeline.preprocess)},
          {"provenance", provenance}};
}

ExpertEnsemble ensemble_from_json(const Json& j) {
  return wrap_parse(
      [&] {
        ExpertEnsemble e;
        Fields f(j, "model");
        const Json* experts = f.raw("experts");
        if (!experts || !experts->is_array()) throw ConfigError("model: missing 'experts' array");
        for (const auto& t : *experts) e.experts.push_back(triple_from_json(t, "model.experts"));
        if (const Json* v = f.raw("kernel")) merge_json(*v, e.pipeline.kernel, "model.kernel");
        if (const Json* v = f.raw("wrapper")) merge_json(*v, e.pipeline.wrapper, "model.wrapper");
        if (const Json* v = f.raw("preprocess")) merge_json(*v, e.pipeline.preprocess, "model.preprocess");
        if (const Json* v = f.raw("provenance")) {
          Fields p(*v, "model.provenance");
          if (const Json* ids = p.raw("training_images")) {
            if (!ids->is_array()) throw ConfigError("model.provenance.training_images: expected an array");
            for (const auto& id : *ids) {
              if (!id.is_string()) throw ConfigError("model.provenance.training_images: expected strings");
              e.provenance.training_images.push_back(id.get<std::string>());
            }
          }
          if (const Json* cvs = p.raw("cvs_value"); cvs && !cvs->is_null()) {
            if (!cvs->is_number()) throw ConfigError("model.provenance.cvs_value: expected a number or null");
            e.provenance.cvs_value = cvs->get<double>();
          }
          p.finish();
        }
        f.finish();
        e.validate();
        return e;
      },
      "model");
}

}  // namespace msbin
