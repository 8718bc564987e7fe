// Copyright 2026 The fuseflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fuseflow/cli.hpp"
#include "fuseflow/config.hpp"
#include "helpers.hpp"

using namespace fuseflow;
namespace fs = std::filesystem;

namespace
{
struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string> & args)
{
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

// A small, quick scene for end-to-end runs.
std::vector<std::string> small(std::vector<std::string> args)
{
  for (const char * kv : {"--scene.width", "48", "--scene.height", "40", "--scene.duration",
                          "0.2", "--scene.square_size", "10"}) {
    args.emplace_back(kv);
  }
  return args;
}

void write_text(const fs::path & p, const std::string & text)
{
  std::ofstream(p) << text;
}

std::string dir_digest(const fs::path & dir)
{
  std::vector<fs::path> files;
  for (const auto & e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      files.push_back(fs::relative(e.path(), dir));
    }
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto & f : files) {
    all += f.string() + '\n' + testing::slurp(dir / f);
  }
  return all;
}
}  // namespace

TEST_SUITE("cli")
{
  TEST_CASE("config defaults, overrides and validation")
  {
    Config c;
    CHECK(c.get("fusion.accumulation") == "two_level");
    CHECK(c.get_int("run.rate_multiplier") == 4);
    c.set("scene.vx", "123.5");
    CHECK(c.scene().velocity.x == 123.5);
    CHECK_THROWS_AS(c.set("scene.nope", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("scene.width", "wide"), ConfigError);
    CHECK_THROWS_AS(c.set("fusion.accumulation", "triple"), ConfigError);
    c.set("sweep.rates", "1, 3");
    CHECK(c.get_int_list("sweep.rates") == std::vector<int>{1, 3});
  }

  TEST_CASE("config files report file and line")
  {
    const auto dir = testing::scratch("cli_config");
    write_text(dir / "a.cfg", "# comment\nseed = 4\n\nfusion.rho = lots\n");
    Config c;
    try {
      c.load_file(dir / "a.cfg");
      FAIL("expected a ConfigError");
    } catch (const ConfigError & e) {
      CHECK(std::string(e.what()).find("a.cfg:4") != std::string::npos);
    }
    write_text(dir / "b.cfg", "seed 4\n");
    CHECK_THROWS_AS(c.load_file(dir / "b.cfg"), ConfigError);
    CHECK_THROWS_WITH(c.load_file(dir / "missing.cfg"), doctest::Contains("missing.cfg"));
  }

  TEST_CASE("relative paths in a config file resolve against its directory")
  {
    const auto dir = testing::scratch("cli_paths");
    fs::create_directories(dir / "sub");
    write_text(dir / "sub" / "run.cfg", "events = data/e.bin\nout = /abs/out\n");
    Config c;
    c.load_file(dir / "sub" / "run.cfg");
    CHECK(fs::path(c.get("events")) == dir / "sub" / "data/e.bin");
    CHECK(c.get("out") == "/abs/out");
  }

  TEST_CASE("a written manifest reloads to the same configuration")
  {
    const auto dir = testing::scratch("cli_manifest");
    Config c;
    c.set("scene.vx", "77");
    c.set("sweep.thresh_farneback", "0.25,3");
    c.write_manifest(dir / "m.txt");
    Config d;
    d.load_file(dir / "m.txt");
    std::ostringstream a, b;
    c.write_manifest(a);
    d.write_manifest(b);
    CHECK(a.str() == b.str());
  }

  TEST_CASE("usage errors exit 1")
  {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"teleport"}).code == cli::kExitUsage);
    const auto r = run({"fuse-run", "--set", "bogus.key=1", "--out", "/tmp/x"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("bogus.key") != std::string::npos);
    CHECK(run({"fuse-run", "--scene.width", "abc"}).code == cli::kExitUsage);
    CHECK(run({"synth"}).code == cli::kExitUsage);  // no --out
  }

  TEST_CASE("eval-aee of a field with itself prints zero")
  {
    const auto dir = testing::scratch("cli_eval");
    std::mt19937_64 rng(5);
    write_flo(dir / "f.flo", testing::random_flow({10, 8}, rng));
    write_flo(dir / "g.flo", uniform_flow({10, 8}, 3.0, 4.0));
    write_flo(dir / "z.flo", uniform_flow({10, 8}, 0.0, 0.0));
    auto r = run({"eval-aee", (dir / "f.flo").string(), (dir / "f.flo").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out == "0.000000\n");
    r = run({"eval-aee", (dir / "g.flo").string(), (dir / "z.flo").string()});
    CHECK(r.out == "5.000000\n");
    r = run({"eval-aee", (dir / "g.flo").string(), (dir / "nope.flo").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("nope.flo") != std::string::npos);
  }

  TEST_CASE("viz writes a colour image")
  {
    const auto dir = testing::scratch("cli_viz");
    write_flo(dir / "f.flo", uniform_flow({6, 4}, 1.0, 0.0));
    const auto r = run({"viz", (dir / "f.flo").string(), (dir / "f.ppm").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(testing::slurp(dir / "f.ppm").rfind("P6", 0) == 0);
  }

  TEST_CASE("synth output is byte-identical across runs and output directories")
  {
    const auto a = testing::scratch("cli_synth_a");
    const auto b = testing::scratch("cli_synth_b");
    REQUIRE(run(small({"synth", "--out", a.string()})).code == cli::kExitOk);
    REQUIRE(run(small({"synth", "--out", b.string()})).code == cli::kExitOk);
    CHECK(fs::exists(a / "events.bin"));
    CHECK(fs::exists(a / "frames" / "frames.txt"));
    CHECK(fs::exists(a / "gt" / "gt.txt"));
    CHECK(dir_digest(a) == dir_digest(b));
  }

  TEST_CASE("pipeline subcommands run on synthesized data")
  {
    const auto data = testing::scratch("cli_pipe_data");
    REQUIRE(run(small({"synth", "--out", data.string()})).code == cli::kExitOk);
    const auto manifest = (data / "manifest.txt").string();

    const auto fe = testing::scratch("cli_pipe_fe");
    auto r = run({"flow-events", "--config", manifest, "--out", fe.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(fs::exists(fe / "event_flow" / "event_flow.txt"));

    const auto ff = testing::scratch("cli_pipe_ff");
    r = run({"flow-frames", "--config", manifest, "--out", ff.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(fs::exists(ff / "frame_flow" / "frame_flow.txt"));

    const auto fr = testing::scratch("cli_pipe_fr");
    r = run({"fuse-run", "--config", manifest, "--out", fr.string(), "--render", "true"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("mean AEE fused") != std::string::npos);
    CHECK(fs::exists(fr / "metrics.csv"));
    CHECK(fs::exists(fr / "fused" / "fused.txt"));
    CHECK(fs::exists(fr / "render" / "fused_00000.ppm"));

    const auto st = testing::scratch("cli_pipe_st");
    r = run({"sweep-thresholds", "--config", manifest, "--out", st.string(), "--set",
             "sweep.thresh_farneback=1,4", "--set", "sweep.thresh_leakycnn=2"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("calibrated:") != std::string::npos);
    CHECK(fs::exists(st / "thresholds.csv"));

    const auto sr = testing::scratch("cli_pipe_sr");
    r = run({"sweep-rate", "--config", manifest, "--out", sr.string(), "--set", "sweep.rates=1,2"});
    CHECK(r.code == cli::kExitOk);
    CHECK(fs::exists(sr / "rates.csv"));
  }

  TEST_CASE("fuse-run replays from its own manifest")
  {
    const auto a = testing::scratch("cli_replay_a");
    const auto b = testing::scratch("cli_replay_b");
    REQUIRE(run(small({"fuse-run", "--out", a.string(), "--threads", "1"})).code == cli::kExitOk);
    REQUIRE(run({"fuse-run", "--config", (a / "manifest.txt").string(), "--out", b.string(),
                 "--threads", "4"})
              .code == cli::kExitOk);
    CHECK(testing::slurp(a / "metrics.csv") == testing::slurp(b / "metrics.csv"));
    CHECK(dir_digest(a / "fused") == dir_digest(b / "fused"));
  }

  TEST_CASE("missing inputs exit 2 and name the path")
  {
    const auto dir = testing::scratch("cli_missing");
    auto r = run(small({"fuse-run", "--out", dir.string(), "--gt", (dir / "no_gt.txt").string()}));
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("no_gt.txt") != std::string::npos);
    r = run({"fuse-run", "--out", dir.string(), "--events", (dir / "e.bin").string(), "--frames",
             (dir / "f.txt").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("f.txt") != std::string::npos);
  }
}
