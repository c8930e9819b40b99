#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dice/report.hpp"

using namespace dice;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI binary; returns the exit status, or -1 when it is unavailable.
int run_cli(const std::string& args, const fs::path& stdout_file) {
  const char* bin = std::getenv("DICE_BIN");
  if (bin == nullptr) return -1;
  const std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" + stdout_file.string() + "\" 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dice_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("report JSON round-trips") {
  Report r;
  r.command = "unit";
  r.config = {{"seed", 3}, {"mode", "tabular"}};
  r.check("a", 0.25, "<=", 1.0);
  r.check("b", 5.0, ">", 6.0);
  r.tables["t"] = Table{{"x", "y"}, {{1.0, 0.1}, {2.0, 1e-300}}};
  CHECK_FALSE(r.passed);
  CHECK(r.thresholds[0].passed);
  const Report back = parse_report(serialize(r));
  CHECK(back == r);

  // Missing values survive as NaN.
  r.tables["t"].rows[0][1] = std::nan("");
  const Report nan_back = parse_report(serialize(r));
  CHECK(std::isnan(nan_back.tables.at("t").rows[0][1]));

  auto j = nlohmann::json::parse(serialize(r));
  j["schema_version"] = kReportSchema + 1;
  CHECK_THROWS(parse_report(j.dump()));
  CHECK_THROWS(r.check("c", 1.0, "==", 1.0));
}

TEST_CASE("csv output") {
  const Table t{{"epoch", "value"}, {{0.0, 0.1}, {1.0, -2.5}}};
  CHECK(to_csv(t) == "epoch,value\n0,0.10000000000000001\n1,-2.5\n");
}

TEST_CASE("settings: sections, dotted keys, unknown keys") {
  const Settings s = parse_settings("# comment\nhorizon = 40\nseed=9\n[lola]\nK = 2\nalpha_inner = 0.5\n"
                                    "[baseline]\nmode = none\n");
  CHECK(s.at("horizon") == "40");
  CHECK(s.at("lola.K") == "2");
  lola::LolaConfig cfg;
  apply_settings(s, cfg);
  CHECK(cfg.ipd.horizon == 40);
  CHECK(cfg.ipd.seed == 9);
  CHECK(cfg.lookahead == 2);
  CHECK(cfg.alpha_inner == 0.5);
  CHECK(cfg.ipd.baseline == ipd::BaselineMode::None);
  CHECK(config_json(cfg)["horizon"] == 40);

  lola::LolaConfig other;
  CHECK_THROWS(apply_settings(parse_settings("horizn = 3\n"), other));
  CHECK_THROWS(apply_settings(parse_settings("horizon = abc\n"), other));
}

TEST_CASE("write_report writes json and one csv per table") {
  const fs::path d = scratch_dir("write");
  Report r;
  r.command = "w";
  r.tables["curve"] = Table{{"a"}, {{1.0}}};
  write_report(r, d, "run");
  CHECK(parse_report(slurp(d / "run.json")) == r);
  CHECK(slurp(d / "run_curve.csv") == "a\n1\n");
  fs::remove_all(d);
}

TEST_CASE("cli: verify-toy, bad input, reproducible training reports") {
  if (std::getenv("DICE_BIN") == nullptr) {
    MESSAGE("DICE_BIN not set, skipping");
    return;
  }
  const fs::path d = scratch_dir("run");
  CHECK(run_cli("verify-toy --theta 0.3", d / "toy.out") == 0);
  const Report toy = parse_report(slurp(d / "toy.out"));
  CHECK(toy.passed);
  CHECK(toy.metrics.at("dice.err2") <= 1e-8);

  CHECK(run_cli("verify-toy --theta 1.5", d / "bad.out") != 0);
  CHECK(run_cli("train --method naive --horizon 0 --epochs 1 --seeds 1", d / "bad.out") == 2);
  CHECK(run_cli("no-such-command", d / "bad.out") != 0);

  const std::string train = "--seed 7 train --method lola-dice --seeds 2 --epochs 3 --batch 32 --horizon 10 --out-dir ";
  const int a = run_cli(train + "\"" + (d / "a").string() + "\"", d / "a.out");
  const int b = run_cli("--threads 2 " + train + "\"" + (d / "b").string() + "\"", d / "b.out");
  CHECK((a == 0 || a == 1));
  CHECK(a == b);
  CHECK(slurp(d / "a" / "train_lola-dice.json") == slurp(d / "b" / "train_lola-dice.json"));
  CHECK(slurp(d / "a" / "train_lola-dice_curves.csv") == slurp(d / "b" / "train_lola-dice_curves.csv"));
  const Report rep = parse_report(slurp(d / "a" / "train_lola-dice.json"));
  CHECK(rep.config["seed"] == 7);
  CHECK(rep.tables.at("curves").rows.size() == 3);

  // A config file sets the same run; the command line seed wins.
  std::ofstream(d / "cfg.ini") << "seed = 1\nhorizon = 10\nbatch = 32\n[lola]\nepochs = 3\n";
  const int c = run_cli("--seed 7 --config \"" + (d / "cfg.ini").string() + "\" train --method lola-dice --seeds 2 --out-dir \"" +
                            (d / "c").string() + "\"",
                        d / "c.out");
  CHECK(c == a);
  CHECK(parse_report(slurp(d / "c" / "train_lola-dice.json")).tables == rep.tables);
  fs::remove_all(d);
}
