// Command-line front end. Talks to the library only through veriml.h.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "veriml/veriml.h"

namespace {

struct CliError {
  int code;
  std::string message;
};

void check(veriml_status s) {
  if (s == VERIML_OK) return;
  const int code = (s == VERIML_E_VALIDATION || s == VERIML_E_FIXTURE || s == VERIML_E_INVARIANT) ? s : 1;
  throw CliError{code, veriml_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  veriml_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{1, "cannot read " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw CliError{1, "cannot write " + path};
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

struct ConfigHandle {
  veriml_config* p = nullptr;
  ~ConfigHandle() { veriml_config_free(p); }
};
struct ReportHandle {
  veriml_report* p = nullptr;
  ~ReportHandle() { veriml_report_free(p); }
};

void load_config(ConfigHandle& h, const std::string& path) { check(veriml_config_parse(read_file(path).c_str(), &h.p)); }

veriml_run_options make_options(std::size_t jobs, const std::optional<std::uint64_t>& seed) {
  veriml_run_options o{};
  o.jobs = jobs;
  o.has_seed = seed.has_value();
  o.seed = seed.value_or(0);
  return o;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw CliError{2, "values: '" + item + "' is not a number"};
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veriml: verification of outsourced classification services"};
  app.set_version_flag("--version", std::string(veriml_version()));
  app.require_subcommand(1);

  std::string config_path, out_path, report_path, ledger_path, param, values_csv, scenario_name;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1, trial = 0;

  auto* run = app.add_subcommand("run", "run a scenario and write its report");
  run->add_option("--config", config_path, "scenario config (JSON)")->required();
  run->add_option("--seed", seed, "override master_seed");
  run->add_option("--jobs", jobs, "concurrent trials")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "report path (default: stdout)");

  auto* sw = app.add_subcommand("sweep", "run a scenario once per value of a numeric config field");
  sw->add_option("--config", config_path, "scenario config (JSON)")->required();
  sw->add_option("--param", param, "dotted field path, e.g. provider.cheat_rate")->required();
  sw->add_option("--values", values_csv, "comma-separated values")->required();
  sw->add_option("--seed", seed, "override master_seed");
  sw->add_option("--jobs", jobs, "concurrent trials")->check(CLI::PositiveNumber);
  sw->add_option("--out", out_path, "output path for the JSON array of reports (default: stdout)");

  auto* ex = app.add_subcommand("explain", "render one trial of a report as text");
  ex->add_option("--report", report_path, "report JSON")->required();
  ex->add_option("--trial", trial, "trial index");

  auto* demo = app.add_subcommand("auditor-demo", "run the auditor scenario and export the ledger");
  demo->add_option("--config", config_path, "auditor config (default: built-in)");
  demo->add_option("--seed", seed, "override master_seed");
  demo->add_option("--out", out_path, "report path");
  demo->add_option("--ledger", ledger_path, "ledger JSON-lines path (default: stdout)");

  auto* st = app.add_subcommand("selftest", "check the statistics code against brute-force oracles");

  auto* dc = app.add_subcommand("default-config", "print the default config of a scenario");
  dc->add_option("--scenario", scenario_name, "steg_probe, deterministic_bench, probabilistic_bench, "
                                              "metaresult, robustness or auditor")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      ConfigHandle cfg;
      load_config(cfg, config_path);
      ReportHandle rep;
      const auto opts = make_options(jobs, seed);
      check(veriml_run(cfg.p, &opts, &rep.p));
      char* json = nullptr;
      check(veriml_report_to_json(rep.p, &json));
      emit(out_path, take(json));
      if (!out_path.empty())
        std::cerr << veriml_report_trial_count(rep.p) << " trials, detection rate "
                  << veriml_report_detection_rate(rep.p) << ", report written to " << out_path << "\n";
    } else if (*sw) {
      ConfigHandle cfg;
      load_config(cfg, config_path);
      const auto values = parse_values(values_csv);
      std::vector<veriml_report*> reps(values.size(), nullptr);
      const auto opts = make_options(jobs, seed);
      const auto status = veriml_sweep(cfg.p, param.c_str(), values.data(), values.size(), &opts, reps.data());
      std::string text = "[";
      std::string error;
      if (status == VERIML_OK) {
        for (std::size_t i = 0; i < reps.size(); ++i) {
          char* json = nullptr;
          if (veriml_report_to_json(reps[i], &json) != VERIML_OK) error = veriml_last_error();
          text += (i ? ",\n" : "\n") + take(json);
        }
      }
      for (auto* r : reps) veriml_report_free(r);
      check(status);
      if (!error.empty()) throw CliError{1, error};
      text += "]\n";
      emit(out_path, text);
    } else if (*ex) {
      ReportHandle rep;
      check(veriml_report_from_json(read_file(report_path).c_str(), &rep.p));
      char* text = nullptr;
      check(veriml_report_explain(rep.p, trial, &text));
      std::cout << take(text);
    } else if (*demo) {
      ConfigHandle cfg;
      if (config_path.empty())
        check(veriml_config_default("auditor", &cfg.p));
      else
        load_config(cfg, config_path);
      ReportHandle rep;
      char* ledger = nullptr;
      const auto opts = make_options(1, seed);
      check(veriml_auditor_demo(cfg.p, &opts, &rep.p, &ledger));
      emit(ledger_path, take(ledger));
      if (!out_path.empty()) {
        char* json = nullptr;
        check(veriml_report_to_json(rep.p, &json));
        write_file(out_path, take(json));
      }
    } else if (*st) {
      char* text = nullptr;
      int failures = 0;
      check(veriml_selftest(&text, &failures));
      std::cout << take(text);
      return failures == 0 ? 0 : VERIML_E_INVARIANT;
    } else if (*dc) {
      ConfigHandle cfg;
      check(veriml_config_default(scenario_name.c_str(), &cfg.p));
      char* json = nullptr;
      check(veriml_config_to_json(cfg.p, &json));
      std::cout << take(json) << "\n";
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  }
  return 0;
}
