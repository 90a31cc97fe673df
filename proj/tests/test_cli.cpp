#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/report.hpp"

using namespace jssp;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + JSSP_CLI + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scratch(const std::string& name) {
  std::filesystem::create_directories(JSSP_SCRATCH);
  return std::string(JSSP_SCRATCH) + "/" + name;
}

std::string tiny_file() {
  const std::string path = scratch("tiny.txt");
  write_text_file(path, "2 2\n0 3 1 2\n1 2 0 4\n");
  return path;
}

int count_lines_starting(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  int n = 0;
  for (std::string l; std::getline(in, l);) n += l.rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST_CASE("cli gen") {
  const std::string dir = scratch("gen0");
  std::filesystem::remove_all(dir);
  auto r = cli("gen --count 0 --out \"" + dir + "\"");
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir + "/manifest.txt"));
  CHECK(read_manifest(dir + "/manifest.txt").empty());

  const std::string dir3 = scratch("gen3");
  r = cli("gen --count 3 --jobs 3 --machines 2 --seed 5 --out \"" + dir3 + "\"");
  CHECK(r.code == 0);
  CHECK(read_manifest(dir3 + "/manifest.txt").size() == 3);
  CHECK(std::filesystem::exists(dir3 + "/inst_0002.txt"));
}

TEST_CASE("cli solve") {
  const std::string t = tiny_file();
  auto r = cli("solve \"" + t + "\" --rule spt");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"makespan\": 7") != std::string::npos);

  const std::string sched = scratch("tiny.schedule.json");
  r = cli("solve \"" + t + "\" --rule mwkr --ref 7 --schedule-out \"" + sched + "\"");
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(read_text_file(sched));
  CHECK(j["makespan"].get<int>() == 7);
  CHECK(r.out.find("tiny,mwkr,no-push,7,0.000000") != std::string::npos);

  CHECK(cli("solve \"" + t + "\" --checkpoint \"" + scratch("absent.ckpt.json") + "\"").code == 2);
  CHECK(cli("solve \"" + scratch("absent.txt") + "\" --rule spt").code == 2);
  CHECK(cli("solve \"" + t + "\" --rule lpt").code == 2);
  CHECK(cli("solve").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("cli oracle") {
  const std::string t = tiny_file();
  auto r = cli("oracle \"" + t + "\"");
  CHECK(r.code == 0);
  CHECK(r.out.find("tiny 7 Optimal") != std::string::npos);
  r = cli("oracle \"" + t + "\" --node-limit 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("LimitHit") != std::string::npos);
  r = cli("oracle \"" + fixtures::data("taillard/ta01.txt") + "\" --format taillard");
  CHECK(r.code == 2);
  CHECK(r.out.find("error") != std::string::npos);
}

TEST_CASE("cli train rejects unknown config keys") {
  const std::string cfg = scratch("bad.cfg");
  write_text_file(cfg, "iterations = 1\nlearning_rate = 0.1\n");
  auto r = cli("train --config \"" + cfg + "\" --quiet");
  CHECK(r.code == 2);
  CHECK(r.out.find("learning_rate") != std::string::npos);
}

TEST_CASE("cli gantt") {
  const std::string t = tiny_file();
  const std::string sched = scratch("gantt.schedule.json");
  REQUIRE(cli("solve \"" + t + "\" --rule spt --schedule-out \"" + sched + "\"").code == 0);
  const std::string svg = scratch("tiny.svg");
  CHECK(cli("gantt \"" + sched + "\" --out \"" + svg + "\"").code == 0);
  const std::string text = read_text_file(svg);
  CHECK(count_lines_starting(text, "<rect ") == 4);
  write_text_file(scratch("broken.json"), "{\"ops\": 1}");
  CHECK(cli("gantt \"" + scratch("broken.json") + "\" --out \"" + svg + "\"").code == 2);
}

TEST_CASE("cli eval") {
  const std::string out = scratch("eval.csv");
  auto r = cli("eval --manifest \"" + fixtures::data("taillard/manifest.txt") +
               "\" --format taillard --methods spt,mwkr,fdd-mwkr,mopnr --refs \"" +
               fixtures::data("taillard/refs.txt") + "\" --no-time --out \"" + out + "\"");
  CHECK(r.code == 0);
  const std::string csv = read_text_file(out);
  CHECK(count_lines_starting(csv, "AVERAGE,") == 4);
  CHECK(count_lines_starting(csv, "ta") == 40);

  const std::string empty = scratch("eval_empty/manifest.txt");
  std::filesystem::create_directories(scratch("eval_empty"));
  write_manifest(empty, {});
  r = cli("eval --manifest \"" + empty + "\" --methods spt");
  CHECK(r.code == 0);
  CHECK(r.out == "instance_id,method,semantics,makespan,gap,time_ms\n");

  CHECK(cli("eval --manifest \"" + empty + "\" --methods policy").code == 2);
}
