// Experiment harness: critical-mass sweeps, bound verification, privacy
// accounting queries, membership-inference runs, signal export and plotting,
// all driven by a plain-text config file (see README for the format).

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "aca/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  int workers = 0;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config, "experiment config file");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output directory (overrides run.out)");
  cmd->add_option("--workers", opts.workers, "worker threads (overrides run.workers)");
  cmd->add_option("--seed", opts.seed, "master seed (overrides run.seed)");
}

aca::ExperimentConfig load(const CLI::App* cmd, const CommonOpts& opts) {
  aca::ExperimentConfig cfg = aca::load_config(opts.config);
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  if (cmd->count("--workers") > 0) cfg.workers = opts.workers;
  if (cmd->count("--seed") > 0) cfg.master_seed = opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collective data strategies under differentially private SGD"};
  app.require_subcommand(1);

  CommonOpts sweep_opts, bound_opts, mia_opts, export_opts, plot_opts;

  CLI::App* sweep = app.add_subcommand("sweep", "train the (sigma, clip) x alpha grid and report critical mass");
  add_common(sweep, sweep_opts);

  CLI::App* bound = app.add_subcommand("bound", "evaluate the success lower bound and verify it in simulation");
  add_common(bound, bound_opts);

  CLI::App* mia = app.add_subcommand("mia", "run the likelihood-ratio membership attack over the grid");
  add_common(mia, mia_opts);

  CLI::App* exp_cmd = app.add_subcommand("export-signals", "write original/planted image pairs as PGM/PPM");
  std::size_t export_count = 8;
  add_common(exp_cmd, export_opts);
  exp_cmd->add_option("--count", export_count, "number of image pairs");

  CLI::App* plot = app.add_subcommand("plot", "render result CSVs in the output directory as SVG charts");
  add_common(plot, plot_opts, /*config_required=*/false);

  CLI::App* acct = app.add_subcommand("accountant", "privacy cost of (sigma, q, T, delta), or sigma for a target eps");
  double acct_sigma = 1.0, acct_q = 1.0, acct_delta = 1e-5, acct_target = 0.0;
  std::int64_t acct_steps = 1;
  std::string acct_curve;
  acct->add_option("--sigma", acct_sigma, "noise multiplier")->required();
  acct->add_option("--q", acct_q, "Poisson sampling rate (1 = full batch)");
  acct->add_option("--steps", acct_steps, "composed steps T");
  acct->add_option("--delta", acct_delta, "target delta");
  acct->add_option("--target-eps", acct_target, "invert: find sigma reaching this epsilon");
  acct->add_option("--curve", acct_curve, "write the composed RDP curve as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const aca::ExperimentConfig cfg = load(sweep, sweep_opts);
      const aca::SweepOutcome outcome = aca::run_sweep(cfg, cfg.out_dir, cfg.workers);
      std::printf("sweep: %zu cells -> %s/sweep.csv, critical_mass.csv\n", outcome.rows.size(),
                  cfg.out_dir.string().c_str());
      return outcome.all_ok ? 0 : 1;
    }
    if (*bound) {
      const aca::ExperimentConfig cfg = load(bound, bound_opts);
      const aca::BoundOutcome outcome = aca::run_bound(cfg, cfg.out_dir, cfg.workers);
      for (const aca::BoundRow& r : outcome.rows)
        std::printf("alpha=%-6g sigma=%-6g C=%-6g bound=%-12.5g q05=%-12.5g violations=%-8.4f %s\n", r.alpha, r.sigma,
                    r.clip, r.lower_bound, r.empirical_q05, r.violation_rate, r.status.c_str());
      std::printf("bound: %zu rows -> %s/bound.csv\n", outcome.rows.size(), cfg.out_dir.string().c_str());
      return outcome.all_ok ? 0 : 1;
    }
    if (*mia) {
      const aca::ExperimentConfig cfg = load(mia, mia_opts);
      const aca::MiaOutcome outcome = aca::run_mia(cfg, cfg.out_dir, cfg.workers);
      for (const aca::MiaRow& r : outcome.rows)
        std::printf("alpha=%-6g eps=%-10.4g C=%-6g auc=%.4f tpr@0.1%%=%.4f %s\n", r.alpha, r.epsilon, r.clip, r.auc,
                    r.tpr_at_low_fpr, r.status.c_str());
      std::printf("mia: %zu rows -> %s/mia_summary.csv\n", outcome.rows.size(), cfg.out_dir.string().c_str());
      return outcome.all_ok ? 0 : 1;
    }
    if (*exp_cmd) {
      const aca::ExperimentConfig cfg = load(exp_cmd, export_opts);
      aca::export_signals(cfg, export_count, cfg.out_dir);
      std::printf("export-signals: %zu pairs -> %s\n", export_count, cfg.out_dir.string().c_str());
      return 0;
    }
    if (*plot) {
      std::filesystem::path dir = plot_opts.out;
      if (dir.empty()) {
        if (plot_opts.config.empty()) throw std::invalid_argument("plot needs --out or --config");
        dir = aca::load_config(plot_opts.config).out_dir;
      }
      const int charts = aca::plot_results(dir);
      std::printf("plot: %d charts under %s\n", charts, dir.string().c_str());
      return charts > 0 ? 0 : 1;
    }
    if (*acct) {
      if (acct->count("--target-eps") > 0) {
        const double sigma = aca::sigma_for_epsilon(acct_target, acct_delta, acct_q, acct_steps);
        std::printf("sigma=%.6g for epsilon=%.6g (q=%g, T=%lld, delta=%g)\n", sigma, acct_target, acct_q,
                    static_cast<long long>(acct_steps), acct_delta);
        return 0;
      }
      const aca::EpsResult r = aca::epsilon_for(acct_sigma, acct_q, acct_steps, acct_delta);
      std::printf("epsilon=%.6g at order=%.6g (sigma=%g, q=%g, T=%lld, delta=%g)\n", r.epsilon, r.order, acct_sigma,
                  acct_q, static_cast<long long>(acct_steps), acct_delta);
      if (!acct_curve.empty()) {
        const aca::RdpCurve curve =
            aca::compose(acct_q >= 1.0 ? aca::gaussian_curve(acct_sigma)
                                       : aca::subsampled_gaussian_curve(acct_q, acct_sigma),
                         acct_steps);
        std::ofstream out(acct_curve);
        if (!out) throw aca::io_error("cannot write curve CSV: " + acct_curve);
        out << "order,rdp\n";
        for (std::size_t i = 0; i < curve.orders.size(); ++i)
          out << aca::detail::fmt17(curve.orders[i]) << ',' << aca::detail::fmt17(curve.values[i]) << '\n';
        std::printf("curve -> %s\n", acct_curve.c_str());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
