#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mltm/io.hpp"

// End-to-end checks of the command-line surface. The binary path comes from
// the MLTM_CLI environment variable (set by ctest); without it these cases
// report themselves as skipped.

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return std::getenv("MLTM_CLI"); }

int run(const std::string& args) {
  const std::string command = std::string(cli_path()) + " " + args + " 2>/dev/null";
  const int rc = std::system(command.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "mltm_cli_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

#define NEED_CLI()                                          \
  if (!cli_path()) {                                        \
    MESSAGE("MLTM_CLI not set; skipping CLI integration"); \
    return;                                                 \
  }

}  // namespace

TEST_CASE("flat models omit the topic sections entirely") {
  NEED_CLI();
  TempDir dir;
  std::ofstream(dir.file("c.tsv")) << "d1\ta,b\tx:2 y:1\nd2\tb\ty:3\n";
  REQUIRE(run("train --corpus " + dir.file("c.tsv") + " --out " + dir.file("flat") +
              " --variant flat --set chains=1 --set burn_in=3 --set min_count=1") == 0);
  const std::string text = slurp(dir.file("flat"));
  CHECK(text.find("phi_prime") == std::string::npos);
  CHECK(text.find("K 0") != std::string::npos);
  CHECK(text.rfind("MLTM 1\n", 0) == 0);
}

TEST_CASE("dependency with one topic equals the prior variant's topic set") {
  NEED_CLI();
  TempDir dir;
  std::ofstream(dir.file("c.tsv"))
      << "d1\ta,b\tx:2 y:1\nd2\tb,c\ty:3 z:1\nd3\ta\tx:1 z:2\n";
  const std::string common = " --corpus " + dir.file("c.tsv") +
                             " --seed 5 --set chains=1 --set burn_in=3"
                             " --set topic_burn_in=5 --set topic_chains=3";
  REQUIRE(run("train" + common + " --out " + dir.file("dep") +
              " --variant dependency --topics 1") == 0);
  REQUIRE(run("train" + common + " --out " + dir.file("prior") + " --variant prior") == 0);

  mltm::TrainedModel dep = mltm::load_model_file(dir.file("dep"));
  mltm::TrainedModel prior = mltm::load_model_file(dir.file("prior"));
  REQUIRE(dep.K() == 3);
  REQUIRE(prior.K() == 1);
  for (const auto& set : dep.phi_prime_sets) {
    CHECK(set == prior.phi_prime_sets[0]);
  }
}

TEST_CASE("stats subcommand reports the worked example values") {
  NEED_CLI();
  TempDir dir;
  std::ofstream(dir.file("c.tsv"))
      << "d1\tc1,c2,c3\tw:1\nd2\tc1,c3,c4\tw:1\nd3\tc2,c5\tw:1\n";
  REQUIRE(run("stats --corpus " + dir.file("c.tsv") + " --out " + dir.file("stats")) == 0);
  const std::string text = slurp(dir.file("stats"));
  CHECK(text.find("cardinality\t2.66667") != std::string::npos);
  CHECK(text.find("density\t0.533333") != std::string::npos);
  CHECK(text.find("distinct_labelsets\t3") != std::string::npos);
  CHECK(text.find("unique_labelset_proportion\t1\n") != std::string::npos);
}

TEST_CASE("infer records the sampling mode in the header") {
  NEED_CLI();
  TempDir dir;
  std::ofstream(dir.file("c.tsv")) << "d1\ta,b\tx:2 y:1\nd2\tb\ty:3 x:1\n";
  REQUIRE(run("train --corpus " + dir.file("c.tsv") + " --out " + dir.file("m") +
              " --variant prior --set chains=1 --set burn_in=3 --set topic_burn_in=3") == 0);
  const std::string common = "infer --model " + dir.file("m") + " --test " + dir.file("c.tsv") +
                             " --set infer_chains=1 --set infer_burn_in=3"
                             " --set infer_samples=1 --set exact_m=4";
  REQUIRE(run(common + " --out " + dir.file("fast")) == 0);
  REQUIRE(run(common + " --out " + dir.file("exact") + " --mode exact") == 0);
  CHECK(slurp(dir.file("fast")).find("infer_mode=fast") != std::string::npos);
  CHECK(slurp(dir.file("exact")).find("infer_mode=exact") != std::string::npos);
  // top-k truncation preserves the leading order
  REQUIRE(run(common + " --out " + dir.file("topk") + " --top-k 1") == 0);
  std::istringstream full(slurp(dir.file("fast")));
  std::istringstream trimmed(slurp(dir.file("topk")));
  std::string full_line, trimmed_line;
  while (std::getline(full, full_line))
    if (!full_line.empty() && full_line[0] != '#') break;
  while (std::getline(trimmed, trimmed_line))
    if (!trimmed_line.empty() && trimmed_line[0] != '#') break;
  CHECK(full_line.rfind(trimmed_line, 0) == 0);  // prefix of the full line
}

TEST_CASE("exit codes distinguish config, data and numeric errors") {
  NEED_CLI();
  TempDir dir;
  CHECK(run("train --corpus nowhere.tsv --out " + dir.file("x") + " --set bogus_key=1") == 2);
  CHECK(run("train --corpus nowhere.tsv --out " + dir.file("x")) == 3);

  std::ofstream(dir.file("unlabeled.tsv")) << "d1\t\tx:1\n";
  CHECK(run("train --corpus " + dir.file("unlabeled.tsv") + " --out " + dir.file("x")) == 3);

  // a model whose first row no longer sums to one
  std::ofstream(dir.file("c.tsv")) << "d1\ta\tx:2 y:1\n";
  REQUIRE(run("train --corpus " + dir.file("c.tsv") + " --out " + dir.file("m") +
              " --variant flat --set chains=1 --set burn_in=2") == 0);
  std::string text = slurp(dir.file("m"));
  const auto pos = text.find("phi\n0\t0:0.");
  REQUIRE(pos != std::string::npos);
  text.replace(pos + 8, 1, "9");  // 0.x -> 9.x
  std::ofstream(dir.file("broken")) << text;
  CHECK(run("infer --model " + dir.file("broken") + " --test " + dir.file("c.tsv") +
            " --out " + dir.file("s")) == 4);
}
