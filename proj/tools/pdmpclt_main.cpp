#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "pdmpclt/commands.hpp"
#include "pdmpclt/config.hpp"

namespace {

// Exit codes: 0 all-pass, 1 check failure, 2 config error, 3 runtime error.
int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const pdmpclt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched-semiflow jump process simulator and CLT verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  pdmpclt::CliOverrides overrides;
  int workers = 0;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--workers", workers, "worker threads (default: machine parallelism)");
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--seed", seed, "seed override");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "write trajectory CSV files");
  CLI::App* check = app.add_subcommand("check", "run the hypothesis checkers");
  CLI::App* sigma2 = app.add_subcommand("sigma2", "estimate the asymptotic variance");
  CLI::App* clt = app.add_subcommand("clt", "run the CLT acceptance harness");
  CLI::App* full = app.add_subcommand("full-report", "check, sigma2 and clt bundled");
  for (CLI::App* cmd : {simulate, check, sigma2, clt, full}) add_common(cmd);

  pdmpclt::FmCliOptions fm_options;
  CLI::App* fm = app.add_subcommand("fm", "Fortet-Mourier distance between point clouds");
  fm->add_option("file_a", fm_options.file_a, "first point cloud CSV")->required();
  fm->add_option("file_b", fm_options.file_b, "second point cloud CSV")->required();
  fm->add_option("--metric-c", fm_options.metric_c, "regime weight in the hybrid metric");
  fm->add_option("--cap", fm_options.support_cap, "union support size cap");
  fm->add_option("--dual", fm_options.dual_csv_path, "write the optimal test function CSV here");

  CLI11_PARSE(app, argc, argv);

  auto fill = [&](CLI::App* cmd) {
    if (cmd->count("--workers") > 0) overrides.workers = workers;
    if (cmd->count("--out") > 0) overrides.out_dir = out_dir;
    if (cmd->count("--seed") > 0) overrides.seed = seed;
  };

  if (simulate->parsed()) {
    fill(simulate);
    return dispatch([&] { return pdmpclt::cmd_simulate(config_path, overrides); });
  }
  if (check->parsed()) {
    fill(check);
    return dispatch([&] { return pdmpclt::cmd_check(config_path, overrides); });
  }
  if (sigma2->parsed()) {
    fill(sigma2);
    return dispatch([&] { return pdmpclt::cmd_sigma2(config_path, overrides); });
  }
  if (clt->parsed()) {
    fill(clt);
    return dispatch([&] { return pdmpclt::cmd_clt(config_path, overrides); });
  }
  if (full->parsed()) {
    fill(full);
    return dispatch([&] { return pdmpclt::cmd_full_report(config_path, overrides); });
  }
  if (fm->parsed()) return dispatch([&] { return pdmpclt::cmd_fm(fm_options); });
  return 2;
}
