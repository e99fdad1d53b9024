#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "msbin/cli.hpp"
#include "msbin/metrics.hpp"
#include "msbin/parallel.hpp"
#include "msbin/serialize.hpp"

using namespace msbin;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  set_thread_count(1);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Lines up to the first blank one.
std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l) && !l.empty();) ++n;
  return n;
}

// synth -> optimize -> train -> run -> eval inside `dir`.
void pipeline(const fs::path& dir, const std::string& threads) {
  const std::string d = dir.string();
  REQUIRE(cli({"--seed", "5", "--threads", threads, "synth", "-n", "6", "-o", d + "/data", "--width", "48", "--height",
               "48"})
              .code == 0);
  REQUIRE(cli({"--threads", threads, "optimize", "-d", d + "/data", "-o", d + "/rank.json"}).code == 0);
  REQUIRE(cli({"--seed", "3", "--threads", threads, "train", "-d", d + "/data", "-r", d + "/rank.json", "-p", "0.5",
               "--n-cv", "4", "--budget", "6", "-o", d + "/model.json"})
              .code == 0);
  REQUIRE(cli({"--threads", threads, "run", "-m", d + "/model.json", "-i", d + "/data", "-o", d + "/pred"}).code == 0);
  REQUIRE(cli({"eval", "-p", d + "/pred", "-g", d + "/data", "-o", d + "/report.csv"}).code == 0);
}

struct Runs {
  testutil::TempDir a{"cliA"}, b{"cliB"};
  Runs() {
    pipeline(a.path(), "1");
    pipeline(b.path(), "4");
  }
};

const Runs& runs() {
  static const Runs r;
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("full pipeline, identical across thread counts") {
    const auto& a = runs().a;
    const auto& b = runs().b;

    CHECK(line_count(a / "report.csv") == 7);
    const ScoreReport rep = read_report_json(a / "report.json");
    CHECK(rep.per_image.size() == 6);
    CHECK(rep.method == "pred");
    for (const auto& s : rep.per_image) CHECK(s.fm.has_value());

    for (const char* f : {"rank.json", "model.json", "model_records.csv", "model_summary.json", "report.csv",
                          "report.json", "data/dataset.json"})
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    for (const auto& e : fs::directory_iterator(a / "pred"))
      CHECK(slurp(e.path()) == slurp(b / "pred" / e.path().filename()));

    const ExpertEnsemble m = ensemble_from_json(read_json_file(a / "model.json"));
    CHECK(m.experts.size() % 2 == 1);
    CHECK(m.provenance.training_images.size() == 3);
    CHECK(m.provenance.cvs_value.has_value());
    CHECK(line_count(a / "model_records.csv") == 5);
  }

  TEST_CASE("rank on a single report gives images x metrics") {
    const auto& a = runs().a;
    const Run r = cli({"rank", (a / "report.json").string()});
    CHECK(r.code == 0);
    CHECK(r.out == "method,S\npred,24.000000\n");
  }

  TEST_CASE("all3bs ignores p and needs no dataset") {
    const auto& a = runs().a;
    const Run r1 = cli({"train", "-r", (a / "rank.json").string(), "-s", "all3bs", "-p", "0.1", "-o",
                        (a / "m1.json").string()});
    const Run r2 = cli({"train", "-r", (a / "rank.json").string(), "-s", "all3bs", "-p", "0.9", "-o",
                        (a / "m2.json").string()});
    REQUIRE(r1.code == 0);
    REQUIRE(r2.code == 0);
    const ExpertEnsemble m1 = ensemble_from_json(read_json_file(a / "m1.json"));
    CHECK(m1 == ensemble_from_json(read_json_file(a / "m2.json")));
    CHECK(m1.provenance.training_images.size() == 6);
    CHECK_FALSE(m1.provenance.cvs_value.has_value());
  }

  TEST_CASE("minstd strategy") {
    const auto& a = runs().a;
    const Run r = cli({"train", "-d", (a / "data").string(), "-r", (a / "rank.json").string(), "-s", "minstd",
                       "--n-cv", "2", "--budget", "4", "-o", (a / "ms.json").string()});
    CHECK(r.code == 0);
    const Json summary = read_json_file(a / "ms_summary.json");
    CHECK(summary["strategy"] == "minstd");
    CHECK(summary["selected"]["objective"].get<double>() == -summary["selected"]["fm_mul_std"].get<double>());
  }

  TEST_CASE("failures exit nonzero and name the offending file") {
    testutil::TempDir tmp("clierr");
    const std::string missing = (tmp / "nowhere" / "dataset.json").string();
    Run r = cli({"optimize", "-d", missing, "-o", (tmp / "r.json").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("nowhere") != std::string::npos);

    {
      std::ofstream(tmp / "broken.json") << "{\"experts\": [[1,2";
    }
    r = cli({"run", "-m", (tmp / "broken.json").string(), "-i", tmp.path().string(), "-o", (tmp / "o").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("broken.json") != std::string::npos);

    r = cli({"frobnicate"});
    CHECK(r.code != 0);
  }

  TEST_CASE("unknown config keys are rejected") {
    testutil::TempDir tmp("clicfg");
    {
      std::ofstream(tmp / "cfg.json") << R"({"wrapper": {"blur_sigmaa": 1.0}})";
      std::ofstream(tmp / "top.json") << R"({"wrappers": {}})";
    }
    Run r = cli({"--config", (tmp / "cfg.json").string(), "synth", "-n", "1", "-o", (tmp / "d").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("blur_sigmaa") != std::string::npos);
    r = cli({"--config", (tmp / "top.json").string(), "synth", "-n", "1", "-o", (tmp / "d").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("wrappers") != std::string::npos);
  }

  TEST_CASE("config file overrides synth defaults") {
    testutil::TempDir tmp("clisyn");
    {
      std::ofstream(tmp / "cfg.json") << R"({"synth": {"width": 20, "height": 16, "n_band": 4}})";
    }
    const Run r = cli({"--config", (tmp / "cfg.json").string(), "synth", "-n", "2", "-o", (tmp / "d").string()});
    REQUIRE(r.code == 0);
    const auto data = load_dataset(tmp / "d" / "dataset.json");
    REQUIRE(data.size() == 2);
    CHECK(data[0].image.width() == 20);
    CHECK(data[0].image.height() == 16);
    CHECK(data[0].image.band_count() == 4);
  }
}
