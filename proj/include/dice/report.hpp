#pragma once

// Machine-readable command reports (JSON, plus one CSV per table) and the
// key=value experiment config.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dice/lola.hpp"

namespace dice {

inline constexpr int kReportSchema = 1;

struct Threshold {
  std::string metric;
  std::string op;  // "<=", ">=", "<", ">"
  double bound = 0.0;
  bool passed = false;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  friend bool operator==(const Table&, const Table&) = default;
};

struct Report {
  int schema_version = kReportSchema;
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, double> metrics;
  std::vector<Threshold> thresholds;
  std::map<std::string, Table> tables;
  bool passed = true;

  // Records metric `name` and checks it; updates `passed`.
  bool check(const std::string& name, double value, const std::string& op, double bound);
  friend bool operator==(const Report&, const Report&) = default;
};

void to_json(nlohmann::json& j, const Threshold& t);
void from_json(const nlohmann::json& j, Threshold& t);
void to_json(nlohmann::json& j, const Table& t);
void from_json(const nlohmann::json& j, Table& t);
void to_json(nlohmann::json& j, const Report& r);
void from_json(const nlohmann::json& j, Report& r);

std::string serialize(const Report& r);
Report parse_report(const std::string& text);
std::string to_csv(const Table& t);
// Writes <dir>/<stem>.json and <dir>/<stem>_<table>.csv.
void write_report(const Report& r, const std::filesystem::path& dir, const std::string& stem);

// Flat key=value settings; "[lola]" style sections prefix their keys ("lola.K").
using Settings = std::map<std::string, std::string>;
Settings read_settings(const std::filesystem::path& path);
Settings parse_settings(const std::string& text);
// Applies recognised keys; unknown keys throw.
void apply_settings(const Settings& s, lola::LolaConfig& cfg);
nlohmann::json config_json(const lola::LolaConfig& cfg);

}  // namespace dice
