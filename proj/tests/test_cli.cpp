#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "dpmom/csvio.hpp"

namespace {

const std::string kCli = DPMOM_CLI_PATH;
const std::string kWork = "/tmp/dpmom_cli_tests";

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct WorkDir {
  WorkDir() {
    const int rc =
        std::system(("rm -rf " + kWork + " && mkdir -p " + kWork).c_str());
    (void)rc;
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen quadrant writes the documented row counts") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 30 --seed 1 --out " + kWork +
                  "/clean.csv") == 0);
  auto rows = dpmom::read_csv_rows(kWork + "/clean.csv");
  CHECK(rows.size() == 121);  // header + 120

  REQUIRE(run_cli("gen quadrant --per 30 --outliers 50 --seed 1 --out " +
                  kWork + "/dirty.csv") == 0);
  rows = dpmom::read_csv_rows(kWork + "/dirty.csv");
  CHECK(rows.size() == 171);  // header + 170
}

TEST_CASE("gen is byte-identical under a fixed seed") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 10 --outliers 5 --seed 9 --out " + kWork +
                  "/a.csv") == 0);
  REQUIRE(run_cli("gen quadrant --per 10 --outliers 5 --seed 9 --out " + kWork +
                  "/b.csv") == 0);
  CHECK(slurp(kWork + "/a.csv") == slurp(kWork + "/b.csv"));
}

TEST_CASE("cluster subcommand happy path and flag validation") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 20 --seed 3 --out " + kWork +
                  "/data.csv") == 0);

  SUBCASE("dpmom writes a result with both cluster counts") {
    REQUIRE(run_cli("cluster --algo dpmom --in " + kWork +
                    "/data.csv --labels-col 3 --lambda 0.9 --L 9 --seed 2 "
                    "--out " +
                    kWork + "/r.json") == 0);
    const auto body = slurp(kWork + "/r.json");
    CHECK(body.find("\"k\"") != std::string::npos);
    CHECK(body.find("\"k_premerge\"") != std::string::npos);
    CHECK(body.find("\"objective_trace\"") != std::string::npos);
    CHECK(body.find("\"ari_vs_labels\"") != std::string::npos);
    CHECK(body.find("runtime_ms") == std::string::npos);  // only with --timing
  }

  SUBCASE("re-run with the same seed is byte-identical") {
    REQUIRE(run_cli("cluster --algo dpmom --in " + kWork +
                    "/data.csv --labels-col 3 --lambda 0.9 --L 9 --seed 2 "
                    "--out " + kWork + "/r1.json") == 0);
    REQUIRE(run_cli("cluster --algo dpmom --in " + kWork +
                    "/data.csv --labels-col 3 --lambda 0.9 --L 9 --seed 2 "
                    "--out " + kWork + "/r2.json") == 0);
    CHECK(slurp(kWork + "/r1.json") == slurp(kWork + "/r2.json"));
  }

  SUBCASE("invalid flag combinations are usage errors") {
    CHECK(run_cli("cluster --algo dpmom --in " + kWork +
                  "/data.csv --lambda 1 --L 5 --k 4 --out " + kWork +
                  "/x.json") == 1);
    CHECK(run_cli("cluster --algo kmeans --in " + kWork +
                  "/data.csv --lambda 1 --k 4 --out " + kWork + "/x.json") == 1);
    CHECK(run_cli("cluster --algo dpmeans --in " + kWork + "/data.csv --out " +
                  kWork + "/x.json") == 1);
  }

  SUBCASE("missing input file names the path and exits 2") {
    CHECK(run_cli("cluster --algo dpmeans --in " + kWork +
                  "/nope.csv --lambda 1 --out " + kWork + "/x.json") == 2);
  }
}

TEST_CASE("tune without labels points at the proxy mode") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 20 --seed 3 --out " + kWork +
                  "/data.csv") == 0);
  CHECK(run_cli("tune --in " + kWork + "/data.csv --repeats 1 --seed 1 "
                "--out-dir " + kWork) == 1);

  REQUIRE(run_cli("tune --in " + kWork +
                  "/data.csv --labels-col 3 --repeats 1 --seed 1 --out-dir " +
                  kWork + "/t1") == 0);
  const auto trace = dpmom::read_csv_rows(kWork + "/t1/tuning_trace.csv");
  CHECK(trace.front().cells ==
        dpmom::split_csv_line("stage,repeat,lambda,L,eta,ari,k,runtime_ms"));

  // deterministic summary under the same seed
  REQUIRE(run_cli("tune --in " + kWork +
                  "/data.csv --labels-col 3 --repeats 1 --seed 1 --out-dir " +
                  kWork + "/t2") == 0);
  CHECK(slurp(kWork + "/t1/tuning_summary.json") ==
        slurp(kWork + "/t2/tuning_summary.json"));
}

TEST_CASE("stats reproduces the published p-values from the fixture") {
  WorkDir wd;
  const std::string fixture =
      std::string(DPMOM_SOURCE_DIR) + "/data/fixtures/published_ari.csv";
  REQUIRE(run_cli("stats --table " + fixture + " --out " + kWork +
                  "/report.json") == 0);
  const auto body = slurp(kWork + "/report.json");
  CHECK(body.find("friedman") != std::string::npos);
  CHECK(body.find("0.0002593994140625") != std::string::npos);  // sign p
}

TEST_CASE("plot subcommands") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 15 --outliers 5 --seed 4 --out " + kWork +
                  "/d.csv") == 0);
  REQUIRE(run_cli("cluster --algo dpmom --in " + kWork +
                  "/d.csv --labels-col 3 --lambda 0.9 --L 7 --seed 1 --out " +
                  kWork + "/r.json") == 0);

  SUBCASE("scatter colors clusters and crosses outliers") {
    REQUIRE(run_cli("plot scatter --in " + kWork + "/r.json --data " + kWork +
                    "/d.csv --labels-col 3 --out " + kWork + "/fig.svg") == 0);
    const auto svg = slurp(kWork + "/fig.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    std::size_t circles = 0, crosses = 0;
    for (std::size_t at = svg.find("<circle"); at != std::string::npos;
         at = svg.find("<circle", at + 1)) {
      ++circles;
    }
    for (std::size_t at = svg.find("<path"); at != std::string::npos;
         at = svg.find("<path", at + 1)) {
      ++crosses;
    }
    CHECK(circles == 60);
    CHECK(crosses == 5);
  }

  SUBCASE("lines draws one polyline per series") {
    std::ofstream trace(kWork + "/trace.csv");
    trace << "series,x,y\nalpha,0,0.5\nalpha,10,0.6\nalpha,20,0.55\n";
    trace.close();
    REQUIRE(run_cli("plot lines --in " + kWork + "/trace.csv --out " + kWork +
                    "/lines.svg") == 0);
    const auto svg = slurp(kWork + "/lines.svg");
    std::size_t polylines = 0;
    for (std::size_t at = svg.find("<polyline"); at != std::string::npos;
         at = svg.find("<polyline", at + 1)) {
      ++polylines;
    }
    CHECK(polylines == 1);
  }

  SUBCASE("empty trace exits with a data error and writes nothing") {
    std::ofstream trace(kWork + "/empty.csv");
    trace << "series,x,y\n";
    trace.close();
    CHECK(run_cli("plot lines --in " + kWork + "/empty.csv --out " + kWork +
                  "/none.svg") == 2);
    CHECK(slurp(kWork + "/none.svg").empty());
  }

  SUBCASE("high-dimensional scatter needs --dims") {
    std::ofstream wide(kWork + "/wide.csv");
    wide << "a,b,c\n1,2,3\n4,5,6\n7,8,9\n";
    wide.close();
    std::ofstream res(kWork + "/wide.json");
    res << "{\"labels\": [1, 1, 2]}";
    res.close();
    CHECK(run_cli("plot scatter --in " + kWork + "/wide.json --data " + kWork +
                  "/wide.csv --out " + kWork + "/w.svg") == 1);
    CHECK(run_cli("plot scatter --in " + kWork + "/wide.json --data " + kWork +
                  "/wide.csv --dims 1,3 --out " + kWork + "/w.svg") == 0);
  }
}

TEST_CASE("data verify reports the vendored dataset as healthy") {
  const std::string manifest =
      std::string(DPMOM_SOURCE_DIR) + "/data/manifest.json";
  CHECK(run_cli("data verify --manifest " + manifest + " --name iris") == 0);
}

TEST_CASE("bench quadrant smoke mode") {
  WorkDir wd;
  REQUIRE(run_cli("bench --suite quadrant --runs 3 --tune-repeats 1 --seed 4 "
                  "--out-dir " + kWork + "/b1") == 0);
  const auto table = dpmom::read_csv_rows(kWork + "/b1/ari_table.csv");
  REQUIRE(table.size() == 4);  // header + three algorithms
  CHECK(table[1].cells.front() == "dpmom");

  // byte-identical on re-run
  REQUIRE(run_cli("bench --suite quadrant --runs 3 --tune-repeats 1 --seed 4 "
                  "--out-dir " + kWork + "/b2") == 0);
  CHECK(slurp(kWork + "/b1/ari_table.csv") == slurp(kWork + "/b2/ari_table.csv"));
  CHECK(slurp(kWork + "/b1/stats_report.json") ==
        slurp(kWork + "/b2/stats_report.json"));
}

TEST_CASE("tune --proxy runs without labels and marks the summary") {
  WorkDir wd;
  REQUIRE(run_cli("gen quadrant --per 15 --seed 6 --out " + kWork +
                  "/p.csv") == 0);
  // strip the label column so the input is genuinely unlabeled
  auto rows = dpmom::read_csv_rows(kWork + "/p.csv");
  std::ofstream out(kWork + "/unlabeled.csv");
  for (const auto& row : rows) {
    out << row.cells[0] << ',' << row.cells[1] << '\n';
  }
  out.close();
  REQUIRE(run_cli("tune --in " + kWork +
                  "/unlabeled.csv --proxy --repeats 1 --seed 2 --out-dir " +
                  kWork + "/proxy") == 0);
  const auto body = slurp(kWork + "/proxy/tuning_summary.json");
  CHECK(body.find("\"mode\": \"proxy\"") != std::string::npos);
  CHECK(body.find("\"median_ari\": null") != std::string::npos);
}

TEST_CASE("bench uci merges fixture and recomputed statistics") {
  WorkDir wd;
  const std::string src = DPMOM_SOURCE_DIR;
  REQUIRE(run_cli("bench --suite uci --runs 2 --tune-repeats 1 --seed 5 "
                  "--manifest " + src + "/data/manifest.json --fixture " +
                  src + "/data/fixtures/published_ari.csv --out-dir " + kWork +
                  "/uci") == 0);
  const auto table = dpmom::read_csv_rows(kWork + "/uci/ari_table.csv");
  CHECK(table.size() == 11);  // header + 10 algorithms
  const auto report = slurp(kWork + "/uci/stats_report.json");
  CHECK(report.find("\"published\"") != std::string::npos);
  CHECK(report.find("published values, not recomputed") != std::string::npos);
  CHECK(report.find("\"dataset\": \"iris\"") != std::string::npos);
  CHECK(report.find("\"merged\"") != std::string::npos);
}

TEST_CASE("bench jain-outliers skips cleanly when the dataset is absent") {
  WorkDir wd;
  const std::string manifest =
      std::string(DPMOM_SOURCE_DIR) + "/data/manifest.json";
  REQUIRE(run_cli("bench --suite jain-outliers --manifest " + manifest +
                  " --out-dir " + kWork + "/j") == 0);
  const auto body = slurp(kWork + "/j/stats_report.json");
  CHECK(body.find("\"skipped\": true") != std::string::npos);
}

}  // TEST_SUITE
