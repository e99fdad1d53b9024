#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "msbin/bandopt.hpp"
#include "msbin/ensemble.hpp"
#include "msbin/synth.hpp"

namespace msbin {

using Json = nlohmann::ordered_json;

/// Parses a JSON file; LoadError names the file on failure.
Json read_json_file(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);

// to_json writes every field. merge_json overrides only the keys present and
// throws ConfigError on unknown keys or wrong types; `where` prefixes messages.
Json to_json(const PreprocessConfig& cfg);
Json to_json(const KernelSpec& spec);
Json to_json(const WrapperConfig& cfg);
Json to_json(const OptimizerConfig& cfg);
Json to_json(const SynthConfig& cfg);
Json to_json(const BandTriple& t);

void merge_json(const Json& j, PreprocessConfig& cfg, const std::string& where = "preprocess");
void merge_json(const Json& j, WrapperConfig& cfg, const std::string& where = "wrapper");
void merge_json(const Json& j, OptimizerConfig& cfg, const std::string& where = "optimizer");
void merge_json(const Json& j, SynthConfig& cfg, const std::string& where = "synth");
/// A new "kind" resets the parameters to that kind's defaults before the
/// remaining keys apply.
void merge_json(const Json& j, KernelSpec& spec, const std::string& where = "kernel");

BandTriple triple_from_json(const Json& j, const std::string& where);

/// Per-image optimizer output together with the pipeline that produced it.
struct RankingsFile {
  Pipeline pipeline;
  OptimizerConfig optimizer;
  std::vector<ImageRanking> images;
};

/// {"pipeline":{...},"optimizer":{...},"images":[{"image":"z30","best":[8,2,1],
///  "tail":[[6,2,6],...],"fm":..,"tail_fm":[..]}]}
Json to_json(const RankingsFile& r);
RankingsFile rankings_from_json(const Json& j);

/// {"experts":[[8,2,1],...],"kernel":{...},"wrapper":{...},"preprocess":{...},"provenance":{...}}
Json to_json(const ExpertEnsemble& e);
ExpertEnsemble ensemble_from_json(const Json& j);

}  // namespace msbin
