#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(BVMLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bvmlab_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("converge prints a decreasing CSV table", "[cli]") {
  const auto r = run("converge --model binomial --freq 0.5 --prior uniform --n-grid 100,1000,10000 --metric tv --format csv");
  REQUIRE(r.status == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 4);
  REQUIRE(l[0] == "n,metric,distance,realized_freq,seed");
  double prev = 1.0;
  for (int i = 1; i <= 3; ++i) {
    const double d = std::stod(fields(l[static_cast<std::size_t>(i)])[2]);
    REQUIRE(d < prev);
    prev = d;
  }
}

TEST_CASE("neyman exact enumeration", "[cli]") {
  const auto r = run("neyman --k 2 --n 4 --p 0.5,0.5 --lambda0 0.1 --exact --format kv");
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("exact_P=0.125\n") != std::string::npos);
  const auto csv = run("neyman --k 2 --n 4 --p 0.5,0.5 --lambda0 0.1 --exact");
  REQUIRE(fields(lines(csv.out)[1])[3] == "0.125");
}

TEST_CASE("posterior interval under a flat prior", "[cli]") {
  const auto r = run("posterior --model binomial:n=0,s=0 --prior uniform --interval 0.2,0.7 --format json");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["interval"]["probability"].get<double>() == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exit codes", "[cli]") {
  REQUIRE(run("posterior --model binomial:n=10,s=3 --interval 0.7,0.2").status == 2);
  REQUIRE(run("posterior --model binomial:n=10,s=11").status == 2);
  REQUIRE(run("lecam --k-grid 50").status == 2);  // seed missing
  REQUIRE(run("multinomial --counts 10,20,30").status == 2);
  REQUIRE(run("frobnicate").status == 2);
  REQUIRE(run("neyman --k 4 --n 1000 --lambda0 0.1 --exact").status == 2);
  REQUIRE(run("--help").status == 0);
}

TEST_CASE("seeded reports are byte-identical and JSON re-parses", "[cli]") {
  const std::string args = "multinomial --counts 100,120,80 --seed 99 --samples 20000 --format json";
  const auto a = run(args);
  const auto b = run(args);
  REQUIRE(a.status == 0);
  REQUIRE(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  for (const char* key : {"counts", "prior", "H", "target_covariance", "tv", "tv_stderr", "seed", "batches", "convention"}) {
    REQUIRE(j.contains(key));
  }
  REQUIRE(j["seed"] == 99);

  for (const char* cmd : {"risk --k 10 --format json", "lecam --k-grid 50,500 --runs 20 --seed 1 --format json",
                          "converge --n-grid 100,1000 --format json",
                          "neyman --counts 30,40,30 --seed 2 --samples 10000 --format json"}) {
    const auto r = run(cmd);
    REQUIRE(r.status == 0);
    REQUIRE(nlohmann::json::parse(r.out).is_object());
  }
}

TEST_CASE("reports are written atomically", "[cli]") {
  const auto good = scratch("risk.csv");
  std::filesystem::remove(good);
  REQUIRE(run("risk --k 5 -o " + good.string()).status == 0);
  REQUIRE(std::filesystem::exists(good));

  const auto bad = scratch("bad.csv");
  std::filesystem::remove(bad);
  REQUIRE(run("posterior --model binomial:n=5,s=9 -o " + bad.string()).status == 2);
  REQUIRE_FALSE(std::filesystem::exists(bad));
  for (const auto& e : std::filesystem::directory_iterator(bad.parent_path())) {
    REQUIRE(e.path().filename().string().find(".tmp.") == std::string::npos);
  }
}

TEST_CASE("config file with flag override", "[cli]") {
  const auto cfg = scratch("neyman.cfg");
  {
    std::ofstream out(cfg);
    out << "# exact test\ncommand = neyman\nn = 4\np = 0.5,0.5\nlambda0 = 0.1\nexact = true\nformat = kv\n";
  }
  const auto r = run("--config " + cfg.string());
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("exact_P=0.125\n") != std::string::npos);
  const auto o = run("--config " + cfg.string() + " neyman --lambda0 1");
  REQUIRE(o.out.find("exact_P=1\n") != std::string::npos);
}
