#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pdmpclt {

struct CliOverrides {
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

// All commands return 0 on success / all-pass and 1 when a statistical or
// hypothesis verdict fails. Configuration problems throw ConfigError (exit 2
// at the CLI layer); other failures throw std::runtime_error (exit 3).
int cmd_simulate(const std::string& config_path, const CliOverrides& cli);
int cmd_check(const std::string& config_path, const CliOverrides& cli);
int cmd_sigma2(const std::string& config_path, const CliOverrides& cli);
int cmd_clt(const std::string& config_path, const CliOverrides& cli);
int cmd_full_report(const std::string& config_path, const CliOverrides& cli);

struct FmCliOptions {
  std::string file_a;
  std::string file_b;
  double metric_c = 1.0;
  std::size_t support_cap = 2000;
  std::string dual_csv_path;  // empty = no certificate output
};

int cmd_fm(const FmCliOptions& options);

}  // namespace pdmpclt
