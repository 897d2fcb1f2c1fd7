#include "pdmpclt/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include "pdmpclt/clt.hpp"
#include "pdmpclt/config.hpp"
#include "pdmpclt/corrector.hpp"
#include "pdmpclt/fm_distance.hpp"
#include "pdmpclt/hypotheses.hpp"
#include "pdmpclt/io.hpp"
#include "pdmpclt/martingale.hpp"
#include "pdmpclt/statistics.hpp"
#include "pdmpclt/trajectory.hpp"

namespace pdmpclt {

namespace {

nlohmann::json estimate_json(const MeanEstimate& e) {
  return {{"value", e.value}, {"stderr", e.std_err}};
}

std::string model_hash(const PdmpModel& model) {
  nlohmann::json j;
  j["name"] = model.name;
  j["dim"] = model.dim;
  j["regimes"] = model.num_regimes;
  j["lambda"] = model.lambda;
  j["routing"] = model.routing;
  j["params"] = model.params;
  j["metric_c"] = model.metric.c;
  return fnv1a_hex(j.dump());
}

int resolve_workers(const CliOverrides& cli, std::int64_t config_value) {
  if (cli.workers && *cli.workers > 0) return *cli.workers;
  if (config_value > 0) return static_cast<int>(config_value);
  if (const char* env = std::getenv("PDMPCLT_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 0;  // auto
}

// Resolved per-run context shared by every config-driven command.
struct RunContext {
  std::shared_ptr<ConfigNode> tree;
  std::shared_ptr<ConfigView> root;
  PdmpModel model;
  std::unique_ptr<Observable> observable;
  std::uint64_t seed = 0;
  WorkerPool pool{1};
  std::string out_dir;
  std::string config_hash;
  double burn_in = 0.0;
};

PdmpModel load_model(ConfigView& view) {
  auto& block = view.block("model");
  if (block.has("builtin")) {
    const std::string name = block.text("builtin");
    std::map<std::string, double> overrides;
    if (auto* ov = block.maybe_block("override")) overrides = ov->all_numbers();
    return builtin_model(name, overrides);
  }
  if (auto* custom = block.maybe_block("custom")) {
    AffineModelSpec spec;
    spec.alpha = custom->number_list("alpha");
    spec.c_flow = custom->number_list("c_flow");
    spec.routing = custom->matrix("routing");
    auto& jump = custom->block("jump");
    spec.jump_type = jump.text("type");
    spec.kappa = jump.number("kappa");
    if (spec.jump_type == "affine-uniform") spec.beta = jump.number("beta");
    spec.lambda = custom->number_or("lambda", 1.0);
    spec.metric_c = custom->number_or("metric_c", 1.0);
    spec.anchor = custom->number_or("anchor", 0.0);
    return make_affine_model(spec);
  }
  throw ConfigError("config: model block needs 'builtin' or a 'custom' block");
}

// Default clamp radius: 10x the empirical 99.9th percentile of V under
// burn-in (floored at 1 so degenerate models keep a usable observable).
double auto_clamp_radius(const PdmpModel& model, double burn_in, RngStream rng) {
  PathWalker walker(model, model.anchor_state(), rng);
  const double spacing = 1.0 / model.lambda;
  std::vector<double> vs(4000);
  for (std::size_t k = 0; k < vs.size(); ++k)
    vs[k] = model.lyapunov(walker.state_at(burn_in + spacing * static_cast<double>(k)));
  return std::max(1.0, 10.0 * quantile(vs, 0.999));
}

std::unique_ptr<Observable> load_observable(ConfigView& view, const PdmpModel& model,
                                            double burn_in, std::uint64_t seed) {
  auto* block = view.maybe_block("observable");
  if (!block) return std::make_unique<Observable>(make_clamp_linear(
      auto_clamp_radius(model, burn_in, RngStream(seed).split(0x726164ull))));
  const std::string kind = block->text_or("kind", "clamp-linear");
  if (kind == "clamp-linear") {
    const double radius =
        block->has("radius")
            ? block->number("radius")
            : auto_clamp_radius(model, burn_in, RngStream(seed).split(0x726164ull));
    return std::make_unique<Observable>(make_clamp_linear(radius));
  }
  if (kind == "cosine") return std::make_unique<Observable>(make_cosine(block->number("freq")));
  if (kind == "tabulated")
    return std::make_unique<Observable>(make_tabulated(block->pair_list("points")));
  throw ConfigError("config: unknown observable kind '" + kind + "'");
}

RunContext make_context(const std::string& config_path, const CliOverrides& cli,
                        bool with_observable) {
  RunContext ctx;
  const std::string text = read_text_file(config_path);
  ctx.config_hash = fnv1a_hex(text);
  ctx.tree = std::make_shared<ConfigNode>(parse_config_text(text));
  ctx.root = std::make_shared<ConfigView>(*ctx.tree);
  ctx.model = load_model(*ctx.root);

  auto& run = ctx.root->block("run");
  // Read the config seed even when the flag overrides it, so the key counts
  // as consumed.
  std::optional<std::uint64_t> config_seed;
  if (run.has("seed")) config_seed = static_cast<std::uint64_t>(run.integer("seed"));
  if (cli.seed)
    ctx.seed = *cli.seed;
  else if (config_seed)
    ctx.seed = *config_seed;
  else
    throw ConfigError("config: missing required key 'run.seed' (no wall-clock seeding)");
  ctx.pool = WorkerPool(resolve_workers(cli, run.integer_or("workers", 0)));
  ctx.burn_in = run.number_or("burn_in_time", 50.0 / ctx.model.lambda);

  std::string out_dir = "out";
  if (auto* output = ctx.root->maybe_block("output")) out_dir = output->text_or("directory", "out");
  if (cli.out_dir) out_dir = *cli.out_dir;
  ctx.out_dir = out_dir;
  ensure_directory(ctx.out_dir);

  if (with_observable)
    ctx.observable = load_observable(*ctx.root, ctx.model, ctx.burn_in, ctx.seed);
  return ctx;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_manifest(const RunContext& ctx, const std::string& command,
                    const std::vector<std::string>& outputs) {
  nlohmann::json manifest = manifest_json(command, ctx.config_hash, ctx.seed, outputs);
  manifest["model_hash"] = model_hash(ctx.model);
  write_text_file(join_path(ctx.out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

HybridState state_from_y(const PdmpModel& model, const std::vector<double>& y, int regime) {
  if (static_cast<int>(y.size()) != model.dim)
    throw ConfigError("config: state vector has wrong dimension");
  if (regime < 0 || regime >= model.num_regimes)
    throw ConfigError("config: regime index out of range");
  return HybridState{y, regime};
}

std::vector<HybridState> states_from_scalars(const PdmpModel& model,
                                             const std::vector<double>& ys, int regime = 0) {
  std::vector<HybridState> out;
  for (double y : ys) out.push_back(state_from_y(model, {y}, regime));
  return out;
}

// Dense early region for the decay fit, far tail forming the top quartile so
// the plateau estimate sees no residual transient.
std::vector<double> default_drift_grid() {
  std::vector<double> t_grid;
  for (int k = 0; k <= 15; ++k) t_grid.push_back(2.5 * k / 15.0);
  for (double t : {18.0, 20.0, 22.0, 24.0, 26.0, 28.0}) t_grid.push_back(t);
  return t_grid;
}

// ---------------------------------------------------------------- sigma2 ---

struct Sigma2Artifacts {
  Sigma2Report report;
  MeanEstimate g_mean;
  EmpiricalMeasure mu_star{{HybridState{{0.0}, 0}}, {1.0}};
  std::vector<MeanEstimate> chi_on_support;
  double clamp_radius_used = 0.0;
};

Sigma2Artifacts run_sigma2(RunContext& ctx, ConfigView& run) {
  Sigma2Artifacts art;
  PdmpModel& model = ctx.model;
  Observable& g = *ctx.observable;
  RngStream root(ctx.seed);

  const double mean_horizon = run.number_or("mean_horizon_time", 2e5 / model.lambda);
  const int batches = static_cast<int>(run.integer_or("mean_batches", 32));
  art.g_mean = estimate_mean_mu_star(model, g, ctx.burn_in, mean_horizon, root.split(1), batches);

  const auto mu_n = static_cast<std::size_t>(run.integer_or("mu_star_n", 256));
  const double spacing = run.number_or("mu_star_spacing_time", 5.0 / model.lambda);
  art.mu_star = sample_mu_star(model, mu_n, ctx.burn_in, spacing, root.split(2));

  CorrectorOptions copts;
  copts.trunc_T = run.number_or("trunc_T_time", 20.0 / model.lambda);
  copts.t_grid_step = run.number_or("chi_step_time", 0.25 / model.lambda);
  copts.n_rep = static_cast<std::size_t>(run.integer_or("chi_n_rep", 2000));
  copts.pool = &ctx.pool;

  // Grid-tabulated corrector for the ensemble work; range from the observed
  // support with headroom.
  double y_lo = 0.0, y_hi = 0.0;
  for (const auto& p : art.mu_star.points) {
    y_lo = std::min(y_lo, p.y[0]);
    y_hi = std::max(y_hi, p.y[0]);
  }
  const double pad = 0.5 * std::max(1.0, y_hi - y_lo);
  const auto knots = static_cast<std::size_t>(run.integer_or("chi_knots", 129));
  TabulatedCorrector chi(model, g, y_lo - pad, y_hi + pad, knots, copts, root.split(3));
  const ChiFn chi_fn = chi.as_fn();

  art.chi_on_support.reserve(art.mu_star.size());
  for (const auto& p : art.mu_star.points) art.chi_on_support.push_back(chi_fn(p));

  const auto sigma_n_rep = static_cast<std::size_t>(run.integer_or("sigma_n_rep", 4000));
  art.report.martingale =
      sigma2_martingale(model, g, chi_fn, art.mu_star, sigma_n_rep, root.split(4), &ctx.pool);
  art.report.green = sigma2_green(g, art.chi_on_support, art.mu_star);

  const auto qv_ensembles = static_cast<std::size_t>(run.integer_or("qv_ensembles", 200));
  const auto qv_n_max = static_cast<std::size_t>(run.integer_or("qv_n_max", 32));
  std::vector<MartingaleDecomposition> decomps(qv_ensembles);
  RngStream qv_rng = root.split(5);
  std::vector<double> cum(art.mu_star.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < art.mu_star.size(); ++k) {
    acc += art.mu_star.weights[k];
    cum[k] = acc;
  }
  ctx.pool.parallel_for(qv_ensembles, [&](std::size_t r) {
    RngStream stream = qv_rng.split(r);
    const double u = stream.uniform01() * acc;
    const auto idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin()),
        art.mu_star.size() - 1);
    const Trajectory traj = simulate(ctx.model, art.mu_star.points[idx],
                                     static_cast<double>(qv_n_max), stream.split(1));
    decomps[r] = decompose(traj, ctx.model, g, chi_fn, 1.0);
  });
  art.report.qv = qv_slope(decomps, qv_n_max);

  art.report.agreement_z =
      std::max({agreement_z(art.report.martingale, art.report.green),
                agreement_z(art.report.martingale, art.report.qv),
                agreement_z(art.report.green, art.report.qv)});
  art.report.trunc_T = copts.trunc_T;

  // Optional truncation-tail accounting: fit the ergodicity constants and
  // attach the mean tail bound over the mu* support.
  if (run.boolean_or("tail_probe", false)) {
    const ErgodicityEstimate erg = probe_ergodicity(
        model, state_from_y(model, {run.number_or("erg_init_a_y", 4.0)}, 0),
        state_from_y(model, {run.number_or("erg_init_b_y", 0.0)}, 0),
        run.number_list_or("erg_t_grid", {1.0, 1.5, 2.0, 2.5, 3.0, 4.0}),
        static_cast<std::size_t>(run.integer_or("erg_ensemble", 800)),
        static_cast<std::size_t>(run.integer_or("fm_subsample", 128)), root.split(6), &ctx.pool);
    if (!erg.no_signal && erg.gamma_hat > 0.0) {
      std::vector<double> tails(art.mu_star.size());
      for (std::size_t k = 0; k < art.mu_star.size(); ++k)
        tails[k] = g.bl_norm() * erg.kappa_hat *
                   std::sqrt(model.lyapunov(art.mu_star.points[k]) + 1.0) *
                   std::exp(-erg.gamma_hat * copts.trunc_T) / erg.gamma_hat;
      art.report.tail_bound = sample_mean(tails);
    }
  }
  return art;
}

nlohmann::json sigma2_json(const Sigma2Artifacts& art) {
  nlohmann::json j;
  j["sigma2_mart"] = estimate_json(art.report.martingale);
  j["sigma2_green"] = estimate_json(art.report.green);
  j["qv_slope"] = estimate_json(art.report.qv);
  j["agreement_z"] = art.report.agreement_z;
  j["trunc_T"] = art.report.trunc_T;
  if (art.report.tail_bound)
    j["tail_bound"] = *art.report.tail_bound;
  else
    j["tail_bound"] = nullptr;
  j["g_mean_under_mu_star"] = estimate_json(art.g_mean);
  j["defaults_note"] = "model parameters are implementer-chosen defaults";
  return j;
}

std::string chi_table_csv(const Sigma2Artifacts& art, int dim) {
  std::string out;
  for (int k = 0; k < dim; ++k) out += "y" + std::to_string(k) + ",";
  out += "regime,chi,stat_err\n";
  for (std::size_t i = 0; i < art.mu_star.size(); ++i) {
    for (double c : art.mu_star.points[i].y) {
      out += format_double(c);
      out += ',';
    }
    out += std::to_string(art.mu_star.points[i].regime);
    out += ',';
    out += format_double(art.chi_on_support[i].value);
    out += ',';
    out += format_double(art.chi_on_support[i].std_err);
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------------------- check ---

struct CheckArtifacts {
  nlohmann::json report;
  std::string genlap_csv;
  bool all_pass = false;
};

CheckArtifacts run_check(RunContext& ctx, ConfigView& run) {
  PdmpModel& model = ctx.model;
  RngStream root(ctx.seed);
  CheckArtifacts art;
  bool all = true;

  ClaimedBounds claimed;
  if (auto* block = run.maybe_block("claimed")) {
    claimed.M = block->number("M");
    claimed.zeta = block->number("zeta");
    claimed.L = block->number("L");
    claimed.a = block->number("a");
    claimed.b = block->number("b");
  } else if (model.claimed) {
    claimed = *model.claimed;
  } else {
    throw ConfigError("config: model has no certified constants; provide run.claimed{M,zeta,L,a,b}");
  }

  const std::vector<double> t_grid =
      run.number_list_or("t_grid", {0.25, 0.5, 1.0, 2.0, 4.0, 8.0});
  std::vector<double> s2_grid{0.0};
  s2_grid.insert(s2_grid.end(), t_grid.begin(), t_grid.end());

  const S1Result s1 = check_s1(model, t_grid, claimed.M, claimed.zeta);
  const S2Result s2 = check_s2(model, s2_grid,
                               static_cast<std::size_t>(run.integer_or("pair_samples", 512)),
                               root.split(10), claimed.L, run.number_or("sample_range", 5.0));
  const std::vector<double> j1_y_grid = run.number_list_or("j1_y_grid", {0.0, 0.5, 1.0, 2.0, 5.0});
  const J1Result j1 =
      check_j1(model, j1_y_grid, static_cast<std::size_t>(run.integer_or("j1_n_mc", 100000)),
               root.split(11), claimed.a, claimed.b);

  HypothesisConstants constants;
  bool balance_ok = false;
  try {
    constants = HypothesisConstants::from_primaries(claimed.M, claimed.zeta, claimed.L, claimed.a,
                                                    claimed.b, model.lambda);
    balance_ok = check_balance(constants);
  } catch (const std::invalid_argument&) {
    balance_ok = false;
  }

  const std::vector<HybridState> drift_x =
      states_from_scalars(model, run.number_list_or("drift_x_grid", {0.0, 0.5, 1.0, 2.0, 3.0}));
  const std::vector<double> drift_t =
      run.has("drift_t_grid") ? run.number_list("drift_t_grid") : default_drift_grid();
  const DriftFit drift = fit_drift(model, drift_x, drift_t,
                                   static_cast<std::size_t>(run.integer_or("drift_n_rep", 10000)),
                                   root.split(12), &ctx.pool);

  // Keys read unconditionally so a failed balance check does not turn the
  // genlap configuration into "unknown key" errors.
  const std::vector<HybridState> genlap_x =
      states_from_scalars(model, run.number_list_or("genlap_x_grid", {0.0, 1.0, 3.0}));
  const std::vector<double> genlap_t0 = run.number_list_or("genlap_t0_grid", {1.0, 5.0, 10.0});
  const auto genlap_n_rep = static_cast<std::size_t>(run.integer_or("genlap_n_rep", 10000));
  GenlapResult genlap;
  if (balance_ok)
    genlap = check_genlap(model, constants, genlap_x, genlap_t0, genlap_n_rep, root.split(13),
                          &ctx.pool);

  const HybridState erg_a = state_from_y(model, {run.number_or("erg_init_a_y", 4.0)}, 0);
  const HybridState erg_b = state_from_y(model, {run.number_or("erg_init_b_y", 0.0)}, 0);
  const ErgodicityEstimate erg = probe_ergodicity(
      model, erg_a, erg_b,
      run.number_list_or("erg_t_grid", {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}),
      static_cast<std::size_t>(run.integer_or("erg_ensemble", 1000)),
      static_cast<std::size_t>(run.integer_or("fm_subsample", 128)), root.split(14), &ctx.pool);

  nlohmann::json checks = nlohmann::json::array();
  auto add = [&](const std::string& name, bool pass, nlohmann::json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(detail);
    all = all && pass;
  };
  add("S1", s1.pass, {{"claimed_M", claimed.M}, {"claimed_zeta", claimed.zeta},
                      {"worst_ratio", s1.worst_ratio}, {"grid", t_grid}});
  add("S2", s2.pass, {{"claimed_L", claimed.L}, {"L_hat", s2.L_hat}, {"grid", s2_grid}});
  add("J1", j1.pass, {{"claimed_a", claimed.a}, {"claimed_b", claimed.b},
                      {"a_hat", j1.a_hat}, {"b_hat", j1.b_hat}, {"worst_margin", j1.worst_margin},
                      {"grid", j1_y_grid}});
  add("balance", balance_ok,
      balance_ok ? nlohmann::json{{"eta", constants.eta},
                                  {"Gamma_lemma", constants.Gamma_lemma},
                                  {"C_lemma", constants.C_lemma},
                                  {"A_prop", constants.A_prop},
                                  {"B_prop", constants.B_prop},
                                  {"m", constants.m},
                                  {"D", constants.D}}
                 : nlohmann::json{{"eta", 2.0 * claimed.a * claimed.L * claimed.L}});
  add("H2-drift", drift.pass,
      {{"A_hat", drift.A_hat},
       {"Gamma_hat", drift.Gamma_hat},
       {"B_hat", drift.B_hat},
       {"B_hat_stderr", drift.B_hat_stderr},
       {"surface_noise", drift.surface_noise},
       {"residual_max", drift.residual_max},
       {"degenerate", drift.degenerate},
       {"grid", drift_t}});
  if (balance_ok) {
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& row : genlap.rows) worst_margin = std::min(worst_margin, row.margin);
    add("genlap", genlap.pass, {{"worst_margin", worst_margin}, {"rows", genlap.rows.size()},
                                {"grid", genlap_t0}});
  } else {
    add("genlap", false, {{"skipped", "balance condition fails"}});
  }
  add("H1-ergodicity", !erg.no_signal,
      {{"gamma_hat", erg.gamma_hat},
       {"kappa_hat", erg.kappa_hat},
       {"fit_r2", erg.fit_r2},
       {"noise_floor", erg.noise_floor},
       {"grid", erg.probe_times},
       {"note", "fitted constants; (H1) is estimated, not proven"}});

  art.report = report_envelope({{"model", model.name},
                                {"model_warnings", model.warnings},
                                {"checks", checks},
                                {"all_pass", all}});

  std::string csv = "y0,t0,estimate,stderr,bound,margin,pass\n";
  for (const auto& row : genlap.rows) {
    csv += csv_join({format_double(row.x.y[0]), format_double(row.t0), format_double(row.estimate),
                     format_double(row.std_err), format_double(row.bound), format_double(row.margin),
                     row.pass ? "1" : "0"});
  }
  art.genlap_csv = csv;
  art.all_pass = all;
  return art;
}

// ------------------------------------------------------------------- clt ---

struct CltArtifacts {
  CltReport report;
  nlohmann::json json;
  std::string samples_csv;
  std::string cdf_csv;
};

CltArtifacts run_clt(RunContext& ctx, ConfigView& run, const Sigma2Artifacts* sigma2) {
  PdmpModel& model = ctx.model;
  Observable& g = *ctx.observable;
  RngStream root(ctx.seed);

  const double t = run.number_or("t_time", 200.0);
  const auto n_rep = static_cast<std::size_t>(run.integer_or("replicas", 2000));
  if (n_rep < 500)
    throw ConfigError("config: clt acceptance runs require replicas >= 500 (asymptotic KS law)");
  const double alpha = run.number_or("alpha", 0.01);
  const double eps_dirac = run.number_or("eps_dirac", 0.1);

  MeanEstimate sigma2_ref;
  if (run.has("sigma2_ref")) {
    sigma2_ref = {run.number("sigma2_ref"), run.number_or("sigma2_ref_stderr", 0.0)};
    if (!g.has_mean()) {
      const double mean_horizon = run.number_or("mean_horizon_time", 2e5 / model.lambda);
      estimate_mean_mu_star(model, g, ctx.burn_in, mean_horizon, root.split(1),
                            static_cast<int>(run.integer_or("mean_batches", 32)));
    }
  } else if (sigma2 != nullptr) {
    sigma2_ref = sigma2->report.martingale;
  } else {
    throw ConfigError("config: clt needs run.sigma2_ref or a preceding sigma2 stage");
  }

  InitialLaw init{model.anchor_state()};
  const std::string init_kind = run.text_or("init", "mu-star");
  if (init_kind == "mu-star") {
    if (sigma2 != nullptr) {
      init = sigma2->mu_star;
    } else {
      const auto mu_n = static_cast<std::size_t>(run.integer_or("mu_star_n", 256));
      const double spacing = run.number_or("mu_star_spacing_time", 5.0 / model.lambda);
      init = sample_mu_star(model, mu_n, ctx.burn_in, spacing, root.split(2));
    }
  } else if (init_kind == "point") {
    init = state_from_y(model, run.number_list_or("x0_y", model.anchor),
                        static_cast<int>(run.integer_or("x0_regime", 0)));
  } else {
    throw ConfigError("config: run.init must be \"mu-star\" or \"point\"");
  }

  CltArtifacts art;
  art.report =
      make_clt_report(model, g, init, t, n_rep, sigma2_ref, alpha, root.split(6), &ctx.pool, eps_dirac);

  nlohmann::json j;
  j["t"] = t;
  j["n_rep"] = n_rep;
  j["sample_mean"] = art.report.sample_mean;
  j["sample_var"] = art.report.sample_var;
  j["sigma2_ref"] = estimate_json(sigma2_ref);
  j["ks_stat"] = art.report.ks.ks_stat;
  j["ks_threshold"] = art.report.ks.threshold;
  j["alpha"] = alpha;
  j["degenerate"] = art.report.ks.degenerate;
  if (art.report.ks.degenerate) j["dirac_quantile_099"] = art.report.ks.dirac_quantile;
  j["mean_ok"] = art.report.mean_ok;
  j["pass"] = art.report.pass;
  art.json = report_envelope(j);

  std::string samples = "sample\n";
  for (double s : art.report.samples) samples += format_double(s) + "\n";
  art.samples_csv = samples;

  // (u, empirical CDF, Phi_sigma(u)) triples for external plotting.
  std::vector<double> sorted = art.report.samples;
  std::sort(sorted.begin(), sorted.end());
  const double sigma = std::sqrt(sigma2_ref.value);
  std::string cdf = "u,empirical_cdf,normal_cdf\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cdf += csv_join({format_double(sorted[i]),
                     format_double(static_cast<double>(i + 1) / static_cast<double>(sorted.size())),
                     format_double(normal_cdf(sorted[i], sigma))});
  }
  art.cdf_csv = cdf;
  return art;
}

}  // namespace

int cmd_simulate(const std::string& config_path, const CliOverrides& cli) {
  RunContext ctx = make_context(config_path, cli, /*with_observable=*/false);
  auto& run = ctx.root->block("run");
  const double horizon = run.number("horizon_time");
  const auto replicas = static_cast<std::size_t>(run.integer_or("replicas", 1));
  const HybridState x0 = state_from_y(ctx.model, run.number_list_or("x0_y", ctx.model.anchor),
                                      static_cast<int>(run.integer_or("x0_regime", 0)));
  bool per_replica = false;
  if (auto* output = ctx.root->maybe_block("output"))
    per_replica = output->boolean_or("per_replica", false);
  ctx.root->assert_consumed();

  RngStream root(ctx.seed);
  std::vector<Trajectory> trajs(replicas);
  ctx.pool.parallel_for(replicas,
                        [&](std::size_t r) { trajs[r] = simulate(ctx.model, x0, horizon, root.split(r)); });

  std::vector<std::string> outputs;
  if (per_replica) {
    for (std::size_t r = 0; r < replicas; ++r) {
      const std::string name = "trajectory_" + std::to_string(r) + ".csv";
      write_text_file(join_path(ctx.out_dir, name), trajectory_csv(trajs[r]));
      outputs.push_back(name);
    }
  } else {
    // Long format keyed by replica id.
    std::string out = "replica,n,tau";
    for (int k = 0; k < ctx.model.dim; ++k) out += ",y" + std::to_string(k);
    out += ",regime\n";
    for (std::size_t r = 0; r < replicas; ++r)
      for (std::size_t n = 0; n < trajs[r].jump_count(); ++n) {
        out += std::to_string(r) + ',' + std::to_string(n) + ',' + format_double(trajs[r].tau[n]);
        const StateView s = trajs[r].state_at_jump(n);
        for (double c : s.y) {
          out += ',';
          out += format_double(c);
        }
        out += ',' + std::to_string(s.regime) + '\n';
      }
    write_text_file(join_path(ctx.out_dir, "trajectories.csv"), out);
    outputs.push_back("trajectories.csv");
  }
  write_manifest(ctx, "simulate", outputs);
  return 0;
}

int cmd_check(const std::string& config_path, const CliOverrides& cli) {
  RunContext ctx = make_context(config_path, cli, /*with_observable=*/false);
  auto& run = ctx.root->block("run");
  CheckArtifacts art = run_check(ctx, run);
  ctx.root->assert_consumed();

  write_text_file(join_path(ctx.out_dir, "check_report.json"), art.report.dump(2) + "\n");
  write_text_file(join_path(ctx.out_dir, "genlap_margins.csv"), art.genlap_csv);
  write_manifest(ctx, "check", {"check_report.json", "genlap_margins.csv"});
  return art.all_pass ? 0 : 1;
}

int cmd_sigma2(const std::string& config_path, const CliOverrides& cli) {
  RunContext ctx = make_context(config_path, cli, /*with_observable=*/true);
  auto& run = ctx.root->block("run");
  Sigma2Artifacts art = run_sigma2(ctx, run);
  ctx.root->assert_consumed();

  write_text_file(join_path(ctx.out_dir, "sigma2_report.json"),
                  report_envelope(sigma2_json(art)).dump(2) + "\n");
  write_text_file(join_path(ctx.out_dir, "chi_table.csv"), chi_table_csv(art, ctx.model.dim));
  write_manifest(ctx, "sigma2", {"sigma2_report.json", "chi_table.csv"});
  return 0;
}

int cmd_clt(const std::string& config_path, const CliOverrides& cli) {
  RunContext ctx = make_context(config_path, cli, /*with_observable=*/true);
  auto& run = ctx.root->block("run");

  std::unique_ptr<Sigma2Artifacts> sigma2;
  if (!run.has("sigma2_ref")) sigma2 = std::make_unique<Sigma2Artifacts>(run_sigma2(ctx, run));
  CltArtifacts art = run_clt(ctx, run, sigma2.get());
  ctx.root->assert_consumed();

  write_text_file(join_path(ctx.out_dir, "clt_report.json"), art.json.dump(2) + "\n");
  write_text_file(join_path(ctx.out_dir, "clt_samples.csv"), art.samples_csv);
  write_text_file(join_path(ctx.out_dir, "clt_cdf.csv"), art.cdf_csv);
  write_manifest(ctx, "clt", {"clt_report.json", "clt_samples.csv", "clt_cdf.csv"});
  return art.report.pass ? 0 : 1;
}

int cmd_full_report(const std::string& config_path, const CliOverrides& cli) {
  RunContext ctx = make_context(config_path, cli, /*with_observable=*/true);
  auto& run = ctx.root->block("run");

  CheckArtifacts check = run_check(ctx, run);
  Sigma2Artifacts sigma2 = run_sigma2(ctx, run);
  CltArtifacts clt = run_clt(ctx, run, &sigma2);
  ctx.root->assert_consumed();

  const bool all = check.all_pass && clt.report.pass;
  nlohmann::json bundle = report_envelope({{"check", check.report},
                                           {"sigma2", report_envelope(sigma2_json(sigma2))},
                                           {"clt", clt.json},
                                           {"all_pass", all}});
  write_text_file(join_path(ctx.out_dir, "full_report.json"), bundle.dump(2) + "\n");
  write_text_file(join_path(ctx.out_dir, "genlap_margins.csv"), check.genlap_csv);
  write_text_file(join_path(ctx.out_dir, "chi_table.csv"), chi_table_csv(sigma2, ctx.model.dim));
  write_text_file(join_path(ctx.out_dir, "clt_samples.csv"), clt.samples_csv);
  write_text_file(join_path(ctx.out_dir, "clt_cdf.csv"), clt.cdf_csv);
  write_manifest(ctx, "full-report",
                 {"full_report.json", "genlap_margins.csv", "chi_table.csv", "clt_samples.csv",
                  "clt_cdf.csv"});
  return all ? 0 : 1;
}

int cmd_fm(const FmCliOptions& options) {
  const EmpiricalMeasure a = parse_point_cloud_csv(read_text_file(options.file_a));
  const EmpiricalMeasure b = parse_point_cloud_csv(read_text_file(options.file_b));
  if (a.points.front().y.size() != b.points.front().y.size())
    throw ConfigError("fm: point clouds have different dimensions");
  HybridMetric metric{euclidean, options.metric_c};
  FmOptions fm_opts;
  fm_opts.support_cap = options.support_cap;
  fm_opts.want_dual = !options.dual_csv_path.empty();
  const FmResult result = fm_distance_full(a, b, metric, fm_opts);
  std::printf("%s\n", format_double(result.distance).c_str());
  if (fm_opts.want_dual) {
    const std::size_t dim = result.support.front().y.size();
    std::string csv;
    for (std::size_t k = 0; k < dim; ++k) csv += "y" + std::to_string(k) + ",";
    csv += "regime,f\n";
    for (std::size_t i = 0; i < result.support.size(); ++i) {
      for (double c : result.support[i].y) {
        csv += format_double(c);
        csv += ',';
      }
      csv += std::to_string(result.support[i].regime) + ',' + format_double(result.dual[i]) + '\n';
    }
    write_text_file(options.dual_csv_path, csv);
  }
  return 0;
}

}  // namespace pdmpclt
