#include "dice/report.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

namespace dice {

using nlohmann::json;

namespace {

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("config " + key + ": not a number: " + v);
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != static_cast<double>(static_cast<long long>(x)))
    throw std::invalid_argument("config " + key + ": not an integer: " + v);
  return static_cast<long long>(x);
}

}  // namespace

bool Report::check(const std::string& name, double value, const std::string& op, double bound) {
  bool ok = false;
  if (op == "<=") ok = value <= bound;
  else if (op == ">=") ok = value >= bound;
  else if (op == "<") ok = value < bound;
  else if (op == ">") ok = value > bound;
  else throw std::invalid_argument("unknown comparison " + op);
  metrics[name] = value;
  thresholds.push_back(Threshold{name, op, bound, ok});
  passed = passed && ok;
  return ok;
}

void to_json(json& j, const Threshold& t) {
  j = json{{"metric", t.metric}, {"op", t.op}, {"bound", t.bound}, {"passed", t.passed}};
}

void from_json(const json& j, Threshold& t) {
  j.at("metric").get_to(t.metric);
  j.at("op").get_to(t.op);
  t.bound = number_or_nan(j.at("bound"));
  j.at("passed").get_to(t.passed);
}

void to_json(json& j, const Table& t) { j = json{{"columns", t.columns}, {"rows", t.rows}}; }

void from_json(const json& j, Table& t) {
  j.at("columns").get_to(t.columns);
  t.rows.clear();
  for (const json& row : j.at("rows")) {
    std::vector<double> r;
    for (const json& x : row) r.push_back(number_or_nan(x));
    t.rows.push_back(std::move(r));
  }
}

void to_json(json& j, const Report& r) {
  j = json{{"schema_version", r.schema_version},
           {"command", r.command},
           {"config", r.config},
           {"metrics", r.metrics},
           {"thresholds", r.thresholds},
           {"tables", r.tables},
           {"passed", r.passed}};
}

void from_json(const json& j, Report& r) {
  j.at("schema_version").get_to(r.schema_version);
  if (r.schema_version != kReportSchema)
    throw std::runtime_error("unsupported report schema " + std::to_string(r.schema_version));
  j.at("command").get_to(r.command);
  r.config = j.at("config");
  r.metrics.clear();
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = number_or_nan(v);
  j.at("thresholds").get_to(r.thresholds);
  j.at("tables").get_to(r.tables);
  j.at("passed").get_to(r.passed);
}

std::string serialize(const Report& r) { return json(r).dump(2) + "\n"; }

Report parse_report(const std::string& text) { return json::parse(text).get<Report>(); }

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt(row[i]);
    out += '\n';
  }
  return out;
}

void write_report(const Report& r, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  auto put = [](const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
  };
  put(dir / (stem + ".json"), serialize(r));
  for (const auto& [name, table] : r.tables) put(dir / (stem + "_" + name + ".csv"), to_csv(table));
}

// ---- settings ---------------------------------------------------------

Settings parse_settings(const std::string& text) {
  std::istringstream in(text);
  Settings s;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key;
    for (const std::string& p : item.parents) key += p + ".";
    key += item.name;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    s[key] = value;
  }
  return s;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_settings(ss.str());
}

void apply_settings(const Settings& s, lola::LolaConfig& cfg) {
  for (const auto& [k, v] : s) {
    if (k == "horizon") cfg.ipd.horizon = static_cast<int>(to_int(k, v));
    else if (k == "gamma") cfg.ipd.gamma = to_double(k, v);
    else if (k == "batch") cfg.ipd.batch = static_cast<std::size_t>(to_int(k, v));
    else if (k == "seed") cfg.ipd.seed = static_cast<std::uint64_t>(to_int(k, v));
    else if (k == "baseline.mode") cfg.ipd.baseline = ipd::parse_baseline_mode(v);
    else if (k == "baseline.decay") cfg.ipd.baseline_decay = to_double(k, v);
    else if (k == "lola.K" || k == "lola.lookahead") cfg.lookahead = static_cast<int>(to_int(k, v));
    else if (k == "lola.alpha_inner") cfg.alpha_inner = to_double(k, v);
    else if (k == "lola.alpha_outer") cfg.alpha_outer = to_double(k, v);
    else if (k == "lola.epochs") cfg.epochs = static_cast<int>(to_int(k, v));
    else if (k == "lola.clip") cfg.clip = to_double(k, v);
    else if (k == "lola.init_std") cfg.init_std = to_double(k, v);
    else throw std::invalid_argument("unknown config key " + k);
  }
}

json config_json(const lola::LolaConfig& cfg) {
  return json{{"horizon", cfg.ipd.horizon},
              {"gamma", cfg.ipd.gamma},
              {"batch", cfg.ipd.batch},
              {"seed", cfg.ipd.seed},
              {"baseline.mode", ipd::baseline_mode_name(cfg.ipd.baseline)},
              {"baseline.decay", cfg.ipd.baseline_decay},
              {"lola.K", cfg.lookahead},
              {"lola.alpha_inner", cfg.alpha_inner},
              {"lola.alpha_outer", cfg.alpha_outer},
              {"lola.epochs", cfg.epochs},
              {"lola.clip", cfg.clip},
              {"lola.init_std", cfg.init_std}};
}

}  // namespace dice
