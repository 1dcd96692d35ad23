// End-to-end checks of the command line front door. The binary path arrives
// via the PCCMH_CLI environment variable (set by the test harness); each case
// shells out with std::system and inspects exit codes, stdout/stderr, and the
// files left behind. Model files written by the CLI are reopened through the
// library to verify which configuration values actually took effect.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pccmh/trainer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("PCCMH_CLI");
  REQUIRE_MESSAGE(p != nullptr, "PCCMH_CLI must point at the pccmh binary");
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) {
    if (ch == '\n') ++n;
  }
  return n;
}

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs `<prefix> <binary> <args>` under the shell, capturing both streams.
CmdResult run_cli(const testsup::TempDir& tmp, const std::string& tag,
                  const std::string& args, const std::string& env_prefix = "") {
  std::string out_file = tmp.file(tag + ".out");
  std::string err_file = tmp.file(tag + ".err");
  std::string cmdline = env_prefix + cli_path() + " " + args + " >" +
                        out_file + " 2>" + err_file;
  int raw = std::system(cmdline.c_str());
  CmdResult r;
  if (WIFEXITED(raw)) r.exit_code = WEXITSTATUS(raw);
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// Small dataset directory most cases share: 3 clusters x 30 items, fully
// corresponded so train/sweep can subsample pairs freely.
std::string make_dataset(const testsup::TempDir& tmp, const std::string& name,
                         const std::string& extra = "--corr 1.0 --seed 4") {
  std::string dir = tmp.file(name);
  CmdResult r = run_cli(tmp, "gen_" + name,
                        "gen --clusters 3 --per 30 --dx 8 --dy 6 --noise 0.3 " +
                            extra + " --out " + dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  return dir;
}

}  // namespace

TEST_CASE("gen writes four files and reruns byte-identically") {
  testsup::TempDir tmp("cli_gen");
  std::string d1 = tmp.file("d1");
  CmdResult r = run_cli(
      tmp, "g1",
      "gen --clusters 3 --per 20 --dx 6 --dy 5 --corr 0.5 --seed 9 --out " +
          d1);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(has(r.out, "60 items"));
  CHECK(has(r.out, "30 corresponded"));
  for (const char* name : {"x.csv", "y.csv", "labels.txt", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(fs::path(d1) / name), name);
  }
  std::string manifest = slurp((fs::path(d1) / "manifest.json").string());
  CHECK(has(manifest, "\"n_corr\": 30"));
  CHECK(has(manifest, "\"format\": \"csv\""));

  std::string d2 = tmp.file("d2");
  run_cli(tmp, "g2",
          "gen --clusters 3 --per 20 --dx 6 --dy 5 --corr 0.5 --seed 9 --out " +
              d2);
  for (const char* name : {"x.csv", "y.csv", "labels.txt", "manifest.json"}) {
    CHECK(slurp((fs::path(d1) / name).string()) ==
          slurp((fs::path(d2) / name).string()));
  }

  std::string d3 = tmp.file("d3");
  run_cli(tmp, "g3",
          "gen --clusters 3 --per 20 --dx 6 --dy 5 --corr 0.5 --seed 10 --out " +
              d3);
  CHECK(slurp((fs::path(d1) / "x.csv").string()) !=
        slurp((fs::path(d3) / "x.csv").string()));
}

TEST_CASE("train, encode, query and eval chain together") {
  testsup::TempDir tmp("cli_chain");
  std::string dir = make_dataset(tmp, "data");
  std::string model = tmp.file("model.bin");

  CmdResult tr = run_cli(tmp, "train",
                         "train --data " + dir + " --out " + model +
                             " --m 20 --c 8 --seed 7");
  REQUIRE_MESSAGE(tr.exit_code == 0, tr.err);
  CHECK(has(tr.out, "saved model"));
  REQUIRE(fs::exists(model));

  std::string xc = tmp.file("x.codes");
  std::string yc = tmp.file("y.codes");
  CmdResult ex = run_cli(tmp, "encx",
                         "encode --model " + model + " --input " + dir +
                             "/x.csv --modality x --out " + xc);
  REQUIRE_MESSAGE(ex.exit_code == 0, ex.err);
  CHECK(has(ex.out, "encoded 90 items (8 bits)"));
  CmdResult ey = run_cli(tmp, "ency",
                         "encode --model " + model + " --input " + dir +
                             "/y.csv --modality y --out " + yc);
  REQUIRE_MESSAGE(ey.exit_code == 0, ey.err);

  CmdResult q = run_cli(tmp, "query",
                        "query --db " + yc + " --queries " + xc +
                            " --R 5 --query 0");
  REQUIRE_MESSAGE(q.exit_code == 0, q.err);
  CHECK(has(q.out, "query,rank,item,distance\n0,1,"));
  CHECK(count_lines(q.out) == 6);

  CmdResult ev = run_cli(tmp, "eval", "eval --model " + model + " --data " + dir);
  REQUIRE_MESSAGE(ev.exit_code == 0, ev.err);
  CHECK(has(ev.out, "ratio,direction,c,map_mean,map_std,seed"));
  CHECK(has(ev.out, ",x2y,8,"));
  CHECK(has(ev.out, ",y2x,8,"));

  CmdResult ev2 = run_cli(tmp, "eval2", "eval --model " + model + " --data " + dir);
  CHECK(ev.out == ev2.out);

  CmdResult evx = run_cli(tmp, "evalx",
                          "eval --model " + model + " --data " + dir +
                              " --direction x2y");
  REQUIRE(evx.exit_code == 0);
  CHECK(has(evx.out, ",x2y,8,"));
  CHECK(!has(evx.out, ",y2x,"));
}

TEST_CASE("config file fills defaults but explicit flags win") {
  testsup::TempDir tmp("cli_config");
  std::string dir = make_dataset(tmp, "data");
  std::string cfg = tmp.file("run.cfg");
  {
    std::ofstream f(cfg);
    f << "# training knobs\n"
      << "c=8\n"
      << "lambda=0.25\n"
      << "m=15\n"
      << "seed=7\n";
  }

  std::string m1 = tmp.file("m1.bin");
  CmdResult r1 = run_cli(tmp, "c1",
                         "train --data " + dir + " --out " + m1 +
                             " --config " + cfg);
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.err);
  pccmh::HashModel model1 = pccmh::load_model(m1);
  CHECK(model1.c == 8);
  CHECK(model1.meta.lambda == doctest::Approx(0.25));
  CHECK(model1.meta.m_x == 15);
  CHECK(model1.meta.seed == 7);

  std::string m2 = tmp.file("m2.bin");
  CmdResult r2 = run_cli(tmp, "c2",
                         "train --data " + dir + " --out " + m2 +
                             " --config " + cfg + " --lambda 0.9");
  REQUIRE_MESSAGE(r2.exit_code == 0, r2.err);
  pccmh::HashModel model2 = pccmh::load_model(m2);
  CHECK(model2.meta.lambda == doctest::Approx(0.9));
  CHECK(model2.c == 8);

  std::string m3 = tmp.file("m3.bin");
  CmdResult r3 = run_cli(tmp, "c3", "train --data " + dir + " --out " + m3);
  REQUIRE_MESSAGE(r3.exit_code == 0, r3.err);
  pccmh::HashModel model3 = pccmh::load_model(m3);
  CHECK(model3.c == 16);
  CHECK(model3.meta.lambda == doctest::Approx(0.6));
  CHECK(model3.meta.m_x == 90);
  CHECK(has(r3.err, "m_x reduced to 90"));

  CmdResult bad = run_cli(tmp, "c4",
                          "train --data " + dir + " --out " + tmp.file("m4") +
                              " --config " + tmp.file("missing.cfg"));
  CHECK(bad.exit_code == 2);
  CHECK(has(bad.err, "missing.cfg"));
}

TEST_CASE("lambda 0 trains a correspondence-only model") {
  testsup::TempDir tmp("cli_lambda0");
  std::string dir = make_dataset(tmp, "data");
  std::string model = tmp.file("m0.bin");
  CmdResult r = run_cli(tmp, "l0",
                        "train --data " + dir + " --out " + model +
                            " --m 20 --c 4 --lambda 0");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(pccmh::load_model(model).meta.lambda == 0.0);
}

TEST_CASE("exit codes separate usage, input and numerical failures") {
  testsup::TempDir tmp("cli_exit");
  std::string dir = make_dataset(tmp, "data");

  SUBCASE("unknown flag exits 64") {
    CmdResult r = run_cli(tmp, "e1", "train --bogus 3");
    CHECK(r.exit_code == 64);
  }
  SUBCASE("unknown subcommand exits 64") {
    CmdResult r = run_cli(tmp, "e2", "frobnicate");
    CHECK(r.exit_code == 64);
  }
  SUBCASE("missing labels file exits 2 and names the path") {
    fs::remove(fs::path(dir) / "labels.txt");
    CmdResult r = run_cli(tmp, "e3",
                          "train --data " + dir + " --out " + tmp.file("m"));
    CHECK(r.exit_code == 2);
    CHECK(has(r.err, "labels.txt"));
  }
  SUBCASE("missing model file exits 2 and names the path") {
    CmdResult r = run_cli(tmp, "e4",
                          "encode --model " + tmp.file("nope.bin") +
                              " --input " + dir + "/x.csv --modality x --out " +
                              tmp.file("c"));
    CHECK(r.exit_code == 2);
    CHECK(has(r.err, "nope.bin"));
  }
  SUBCASE("kernel underflow exits 3 with the stage named") {
    CmdResult r = run_cli(tmp, "e5",
                          "train --data " + dir + " --out " + tmp.file("m") +
                              " --m 20 --sigma-x 1e-12 --sigma-y 1e-12");
    CHECK(r.exit_code == 3);
    CHECK(has(r.err, "graph_x"));
  }
  SUBCASE("help exits 0 and lists subcommands and flags") {
    CmdResult r = run_cli(tmp, "e6", "--help");
    CHECK(r.exit_code == 0);
    CHECK(has(r.out, "gen"));
    CHECK(has(r.out, "sweep"));
    CmdResult rt = run_cli(tmp, "e7", "train --help");
    CHECK(rt.exit_code == 0);
    CHECK(has(rt.out, "--lambda"));
    CHECK(has(rt.out, "--eig-rule"));
  }
}

TEST_CASE("thread cap comes from the flag or the environment") {
  testsup::TempDir tmp("cli_threads");
  std::string dir = make_dataset(tmp, "data");
  std::string model = tmp.file("m.bin");
  REQUIRE(run_cli(tmp, "t0",
                  "train --data " + dir + " --out " + model + " --m 16 --c 8")
              .exit_code == 0);

  std::string c1 = tmp.file("c1.codes");
  std::string c2 = tmp.file("c2.codes");
  CmdResult r1 = run_cli(tmp, "t1",
                         "encode --model " + model + " --input " + dir +
                             "/x.csv --modality x --out " + c1 + " --threads 1");
  REQUIRE(r1.exit_code == 0);
  CmdResult r2 = run_cli(tmp, "t2",
                         "encode --model " + model + " --input " + dir +
                             "/x.csv --modality x --out " + c2,
                         "PCCMH_THREADS=3 ");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(c1) == slurp(c2));
}

TEST_CASE("sweep emits the shared CSV schema deterministically") {
  testsup::TempDir tmp("cli_sweep");
  std::string dir = make_dataset(tmp, "data");

  std::string s1 = tmp.file("s1.csv");
  CmdResult r1 = run_cli(tmp, "s1",
                         "sweep --data " + dir +
                             " --ratios 0.4,0.8 --repeats 2 --m 12 --c 8 "
                             "--seed 3 --out " + s1);
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.err);
  std::string csv = slurp(s1);
  CHECK(csv.rfind("ratio,direction,c,map_mean,map_std,seed\n", 0) == 0);
  CHECK(count_lines(csv) == 5);
  CHECK(has(csv, "0.4,x2y,8,"));
  CHECK(has(csv, "0.8,y2x,8,"));

  std::string s2 = tmp.file("s2.csv");
  run_cli(tmp, "s2",
          "sweep --data " + dir +
              " --ratios 0.4,0.8 --repeats 2 --m 12 --c 8 --seed 3 --out " +
              s2);
  CHECK(slurp(s2) == csv);

  SUBCASE("colon syntax expands to an inclusive grid") {
    CmdResult r = run_cli(tmp, "s3",
                          "sweep --data " + dir +
                              " --ratios 0.2:0.6:0.2 --repeats 1 --m 12 --c 8");
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(count_lines(r.out) == 7);
    CHECK(has(r.out, "0.2,x2y,8,"));
    CHECK(has(r.out, "0.6,y2x,8,"));
  }
  SUBCASE("failing cells become error rows without aborting") {
    CmdResult r = run_cli(tmp, "s4",
                          "sweep --data " + dir +
                              " --ratios 0.5 --repeats 1 --m 12 --c 8 "
                              "--sigma-x 1e-12 --sigma-y 1e-12");
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(has(r.out, "error,error"));
  }
}
