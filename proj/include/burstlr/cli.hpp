// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "burstlr/commands.hpp"
#include "burstlr/error.hpp"

namespace burstlr {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

namespace detail {

// Config files are either flat `key=value` lines or one JSON object whose
// keys are flag names. Arrays become comma-separated lists.
class FlexibleConfig : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::stringstream buffer;
    buffer << input.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigBase::from_config(again);
    }
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("config: invalid JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        std::string joined;
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i) joined += ",";
          joined += scalar_text(value[i]);
        }
        item.inputs = {joined};
      } else {
        item.inputs = {scalar_text(value)};
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return format_real(v.get<double>());
    throw ConfigError("config: unsupported value " + v.dump());
  }
};

}  // namespace detail

// Parses argv and runs the command. Errors go to `err`; returns the exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Sliding-window likelihood-ratio burst detection", "burstlr"};
  app.config_formatter(std::make_shared<detail::FlexibleConfig>());
  app.set_config("--config", "", "Config file: flat key=value lines or a JSON object");
  app.allow_config_extras(false);

  RunConfig cfg;
  std::string command;
  app.add_option("command", command, "detect | calibrate | simulate | validate | power")->required();
  app.add_option("--model", cfg.model, "poisson | gaussian-known-variance | gaussian | exponential");
  app.add_option("--sigma", cfg.sigma, "Known standard deviation (gaussian-known-variance)");
  app.add_option("--theta0", cfg.theta0, "True / null parameter, comma separated")->delimiter(',');
  app.add_option("--null", cfg.null, "Fixed coordinates, e.g. lambda=2 or mu=0");
  app.add_option("--P", cfg.P, "Number of unit-time bins");
  app.add_option("--G", cfg.G, "Window length in bins");
  app.add_option("--k", cfg.k, "Number of sub-threshold windows required to reject");
  app.add_option("--alpha", cfg.alpha, "Lambda threshold in (0, 1)");
  app.add_option("--level", cfg.level, "Target type-I error level in (0, 1)");
  app.add_option("--input", cfg.input, "Input events: CSV (t,x) or JSON lines");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--seed", cfg.seed, "Random seed (required by randomized commands)");
  app.add_option("--reps", cfg.reps, "Replications");
  app.add_option("--offsets", cfg.offsets, "Origin offsets in [0, 1), comma separated")->delimiter(',');
  app.add_option("--threads", cfg.threads, "Worker threads, 0 = auto");
  app.add_option("--profile", cfg.profile, "desk | deep");
  app.add_option("--procedure", cfg.procedure, "standard | sliding (calibrate)");
  app.add_option("--r", cfg.r, "Degrees of freedom (calibrate; default from --null)");
  app.add_option("--counts", cfg.counts, "Per-bin counts, comma separated")->delimiter(',');
  app.add_option("--np", cfg.per_bin, "Constant per-bin count");
  app.add_option("--burst", cfg.burst, "Burst interval start,end")->delimiter(',');
  app.add_option("--theta1", cfg.theta1, "Burst parameter, comma separated")->delimiter(',');
  app.add_option("--mc-count", cfg.mc_count, "Limit-law draws for Monte Carlo levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    cfg.command = parse_command(command);
    run_command(cfg);
  } catch (const ConfigError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SupportError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "burstlr: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace burstlr
