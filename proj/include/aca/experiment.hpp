#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "aca/accountant.hpp"
#include "aca/bounds.hpp"
#include "aca/config.hpp"
#include "aca/dp_optimizer.hpp"
#include "aca/image_io.hpp"
#include "aca/lira.hpp"
#include "aca/strategy.hpp"

namespace aca {

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Status strings land in CSV cells; keep them single-field.
inline std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Runs fn(0..n-1) on up to `workers` threads. Work items own their error
// handling; results go into pre-sized slots so output order is fixed.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, 64));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : threads) t.join();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // non-numeric cells become NaN

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw schema_error("CSV is missing column '" + name + "'");
  }
};

inline CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open CSV: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw schema_error("empty CSV: " + path.string());
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const std::string& cell : split_csv_line(line))
      row.push_back(parse_double(cell).value_or(std::numeric_limits<double>::quiet_NaN()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace detail

// --- sweep -------------------------------------------------------------------

struct SweepRow {
  double alpha = 0.0, sigma = 0.0, clip = 0.0;
  double epsilon = 0.0, success = 0.0, clean_accuracy = 0.0;
  std::uint64_t seed = 0;
  int replicate = 0;
  std::string status = "ok";
};

struct SweepContext {
  ExperimentConfig cfg;
  Dataset train_set, test_set;
  ModelSpec spec;
  SignalTransform transform;
};

inline SweepContext make_sweep_context(const ExperimentConfig& cfg) {
  SweepContext ctx;
  ctx.cfg = cfg;
  const Dataset ds = load_dataset(cfg);
  auto [train_set, test_set] =
      split(ds, 1.0 - cfg.test_fraction, derive_seed(cfg.master_seed, std::string_view("eval_split")));
  ctx.train_set = std::move(train_set);
  ctx.test_set = std::move(test_set);
  ctx.spec = model_spec_for(cfg, ds);
  ctx.transform = parse_transform(cfg.transform_text, cfg.geometry);
  return ctx;
}

// Cell seeds are a pure function of (master seed, cell coordinates) so any
// row can be reproduced in isolation.
inline std::uint64_t sweep_cell_seed(std::uint64_t master, double sigma, double clip, double alpha, int replicate) {
  return derive_seed(master, std::string_view("cell"), sigma, clip, alpha, replicate);
}

inline double sweep_epsilon(const ExperimentConfig& cfg, const PrivacyCell& cell, std::size_t train_size) {
  if (cell.sigma == 0.0) return std::numeric_limits<double>::infinity();
  const double q = cfg.train.scheme == BatchScheme::poisson
                       ? cfg.train.sampling_rate
                       : std::min(1.0, static_cast<double>(cfg.train.batch_size) / static_cast<double>(train_size));
  return epsilon_for(cell.sigma, q, cfg.train.steps, cfg.delta).epsilon;
}

// Trains one grid cell and measures it. Everything derives from `seed`, which
// is what the CSV records.
inline SweepRow run_sweep_cell(const SweepContext& ctx, const PrivacyCell& cell, double alpha, int replicate,
                               std::uint64_t seed) {
  SweepRow row;
  row.alpha = alpha;
  row.sigma = cell.sigma;
  row.clip = cell.clip;
  row.seed = seed;
  row.replicate = replicate;
  try {
    const Strategy strategy{ctx.transform, ctx.cfg.target_label, alpha};
    const Mixture mix = build_mixture(ctx.train_set, strategy, derive_seed(seed, std::string_view("mixture")));

    TrainConfig tc = ctx.cfg.train;
    tc.seed = derive_seed(seed, std::string_view("train"));
    const PrivacyParams privacy{cell.sigma, cell.clip, ctx.cfg.delta};
    const ParameterVector theta0 =
        init_model(ctx.spec, derive_seed(seed, std::string_view("init")), ctx.cfg.init_scale);

    const TrainTrace trace = train(mix.data, ctx.spec, tc, privacy, theta0);
    row.success = measure_success(trace.final_params, ctx.spec, ctx.test_set, strategy);
    row.clean_accuracy = accuracy(trace.final_params, ctx.spec, ctx.test_set);
    row.epsilon = sweep_epsilon(ctx.cfg, cell, ctx.train_set.size());
  } catch (const std::exception& e) {
    row.status = detail::csv_safe(e.what());
    row.epsilon = row.success = row.clean_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

struct SweepOutcome {
  std::vector<SweepRow> rows;
  bool all_ok = true;
};

// Full grid: privacy cells x alphas x replicates, then a per-cell critical
// mass report. Failed cells are recorded in the status column and the sweep
// continues.
inline SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int workers = 1) {
  const SweepContext ctx = make_sweep_context(cfg);
  std::filesystem::create_directories(out_dir);

  struct Cell {
    PrivacyCell privacy;
    double alpha;
    int replicate;
  };
  std::vector<Cell> cells;
  for (const PrivacyCell& p : cfg.privacy_grid)
    for (double alpha : cfg.alphas)
      for (int r = 0; r < cfg.replicates; ++r) cells.push_back({p, alpha, r});

  SweepOutcome outcome;
  outcome.rows.resize(cells.size());
  detail::parallel_for(cells.size(), workers, [&](std::size_t i) {
    const Cell& c = cells[i];
    const std::uint64_t seed = sweep_cell_seed(cfg.master_seed, c.privacy.sigma, c.privacy.clip, c.alpha, c.replicate);
    outcome.rows[i] = run_sweep_cell(ctx, c.privacy, c.alpha, c.replicate, seed);
  });
  for (const SweepRow& row : outcome.rows)
    if (row.status != "ok") outcome.all_ok = false;

  {
    std::ofstream out(out_dir / "sweep.csv");
    if (!out) throw io_error("cannot write sweep.csv under " + out_dir.string());
    out << "alpha,sigma,clip,epsilon,success,clean_accuracy,seed,status\n";
    for (const SweepRow& r : outcome.rows)
      out << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.sigma) << ',' << detail::fmt17(r.clip) << ','
          << detail::fmt17(r.epsilon) << ',' << detail::fmt17(r.success) << ',' << detail::fmt17(r.clean_accuracy)
          << ',' << r.seed << ',' << r.status << '\n';
  }

  {
    std::ofstream out(out_dir / "critical_mass.csv");
    if (!out) throw io_error("cannot write critical_mass.csv under " + out_dir.string());
    out << "sigma,clip,epsilon,target_success,critical_mass\n";
    for (const PrivacyCell& p : cfg.privacy_grid) {
      std::vector<double> alphas = cfg.alphas;
      std::sort(alphas.begin(), alphas.end());
      alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

      std::map<double, std::pair<double, int>> mean_success;
      for (const SweepRow& r : outcome.rows) {
        if (r.sigma != p.sigma || r.clip != p.clip || r.status != "ok") continue;
        auto& acc = mean_success[r.alpha];
        acc.first += r.success;
        acc.second += 1;
      }
      std::vector<double> usable;
      for (double a : alphas)
        if (mean_success.count(a)) usable.push_back(a);

      std::optional<double> critical;
      if (!usable.empty())
        critical = critical_mass_search(
            usable, [&](double a) { return mean_success[a].first / mean_success[a].second; }, cfg.target_success);

      out << detail::fmt17(p.sigma) << ',' << detail::fmt17(p.clip) << ','
          << detail::fmt17(sweep_epsilon(cfg, p, ctx.train_set.size())) << ',' << detail::fmt17(cfg.target_success)
          << ',';
      if (critical) out << detail::fmt17(*critical);
      out << '\n';
    }
  }
  return outcome;
}

// --- bound -------------------------------------------------------------------

struct BoundRow {
  double alpha = 0.0, sigma = 0.0, clip = 0.0;
  std::int64_t steps = 0;
  double eta = 0.0;
  std::size_t d = 0;
  double delta_conf = 0.0;
  double contraction_rate = 0.0, noise_horizon = 0.0, dimension_factor = 0.0, lower_bound = 0.0;
  double empirical_q05 = 0.0, violation_rate = 0.0, clip_saturated_frac = 0.0;
  std::string xi_mode = "realized";
  std::string status = "pass";
};

struct BoundOutcome {
  std::vector<BoundRow> rows;
  bool all_ok = true;
};

inline BoundOutcome run_bound(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int workers = 1) {
  std::filesystem::create_directories(out_dir);
  const BoundRunConfig& bc = cfg.bound;
  const std::vector<double> alphas = bc.alphas.empty() ? std::vector<double>{0.1, 0.5} : bc.alphas;
  const std::vector<double> sigmas = bc.sigmas.empty() ? std::vector<double>{0.0, 0.5, 1.0} : bc.sigmas;
  const std::vector<double> clips = bc.clips.empty() ? std::vector<double>{1.0, 5.0} : bc.clips;

  struct Combo {
    double alpha, sigma, clip;
  };
  std::vector<Combo> combos;
  for (double a : alphas)
    for (double s : sigmas)
      for (double c : clips) combos.push_back({a, s, c});

  BoundOutcome outcome;
  outcome.rows.resize(combos.size());

  detail::parallel_for(combos.size(), workers, [&](std::size_t i) {
    const Combo& combo = combos[i];
    BoundRow& row = outcome.rows[i];
    row.alpha = combo.alpha;
    row.sigma = combo.sigma;
    row.clip = combo.clip;
    row.steps = bc.steps;
    row.eta = bc.eta;
    row.d = bc.d;
    row.delta_conf = bc.delta_conf;
    try {
      BoundInputs in;
      in.alpha = combo.alpha;
      in.sigma = combo.sigma;
      in.clip = combo.clip;
      in.steps = bc.steps;
      in.eta = bc.eta;
      in.d = bc.d;
      in.delta_conf = bc.delta_conf;
      in.dist0 = bc.dist0;

      const double xi = bc.xi.value_or(1.0 / (2.0 * combo.alpha * bc.eta));
      const Vec target(bc.d, 0.0);
      Vec theta0(bc.d, 0.0);
      theta0[0] = bc.dist0;
      // Base population minimum sits at the target so the redirect stays
      // implementable along the whole path even when clipping binds.
      const Landscape land = quadratic_landscape(target, theta0, target, bc.curvature);

      const SimResult sim =
          simulate_dynamics(land, in, xi, bc.trials,
                            derive_seed(cfg.master_seed, std::string_view("bound"), combo.alpha, combo.sigma,
                                        combo.clip));

      double worst_xi = std::numeric_limits<double>::infinity();
      std::int64_t saturated = 0;
      for (const TrialResult& tr : sim.trials) {
        worst_xi = std::min(worst_xi, tr.xi_min_realized);
        saturated += tr.clip_saturated_steps;
      }
      row.clip_saturated_frac =
          static_cast<double>(saturated) / (static_cast<double>(bc.trials) * static_cast<double>(bc.steps));
      row.empirical_q05 = sim.success_q05;

      BoundInputs report_in = in;
      VerifyReport verify;
      if (bc.xi_min) {
        report_in.xi_min = *bc.xi_min;
        row.xi_mode = "analytic";
        const BoundResult bound = compute_bound(report_in);
        verify = verify_bound(sim, bound, bc.delta_conf);
        row.contraction_rate = bound.contraction_rate;
        row.noise_horizon = bound.noise_horizon;
        row.dimension_factor = bound.dimension_factor;
        row.lower_bound = bound.lower_bound;
        row.status = bound.contraction_ok ? (verify.pass ? "pass" : "fail") : "contraction_violated";
      } else {
        report_in.xi_min = worst_xi;
        row.xi_mode = "realized";
        const BoundResult bound = compute_bound(report_in);  // most conservative single bound
        verify = verify_bound_realized(sim, in);
        row.contraction_rate = bound.contraction_rate;
        row.noise_horizon = bound.noise_horizon;
        row.dimension_factor = bound.dimension_factor;
        row.lower_bound = bound.lower_bound;
        row.status = bound.contraction_ok ? (verify.pass ? "pass" : "fail") : "contraction_violated";
      }
      row.violation_rate = verify.violation_rate;
    } catch (const std::exception& e) {
      row.status = detail::csv_safe(e.what());
    }
  });

  for (const BoundRow& row : outcome.rows)
    if (row.status == "fail" || (row.status != "pass" && row.status != "contraction_violated"))
      outcome.all_ok = false;

  std::ofstream out(out_dir / "bound.csv");
  if (!out) throw io_error("cannot write bound.csv under " + out_dir.string());
  out << "alpha,sigma,clip,T,eta,d,delta,B,f1,f2,bound,empirical_q05,violation_rate,xi_mode,clip_saturated_frac,"
         "status\n";
  for (const BoundRow& r : outcome.rows)
    out << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.sigma) << ',' << detail::fmt17(r.clip) << ',' << r.steps
        << ',' << detail::fmt17(r.eta) << ',' << r.d << ',' << detail::fmt17(r.delta_conf) << ','
        << detail::fmt17(r.contraction_rate) << ',' << detail::fmt17(r.noise_horizon) << ','
        << detail::fmt17(r.dimension_factor) << ',' << detail::fmt17(r.lower_bound) << ','
        << detail::fmt17(r.empirical_q05) << ',' << detail::fmt17(r.violation_rate) << ',' << r.xi_mode << ','
        << detail::fmt17(r.clip_saturated_frac) << ',' << r.status << '\n';
  return outcome;
}

// --- membership inference ----------------------------------------------------

struct MiaRow {
  double alpha = 0.0, epsilon = 0.0, clip = 0.0;
  double auc = 0.0, tpr_at_low_fpr = 0.0;
  double auc_clean = 0.0, tpr_clean = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

struct MiaOutcome {
  std::vector<MiaRow> rows;
  bool all_ok = true;
};

inline MiaOutcome run_mia(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int workers = 1) {
  const SweepContext ctx = make_sweep_context(cfg);
  std::filesystem::create_directories(out_dir);

  // Attack pool: a seeded subset of the training side (or all of it).
  Dataset pool = ctx.train_set;
  if (cfg.mia_pool > 0 && cfg.mia_pool < pool.size()) {
    std::vector<std::size_t> perm(pool.size());
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(derive_seed(cfg.master_seed, std::string_view("mia_pool")));
    std::shuffle(perm.begin(), perm.end(), rng);
    Dataset subset;
    subset.d_in = pool.d_in;
    subset.num_classes = pool.num_classes;
    for (std::size_t i = 0; i < cfg.mia_pool; ++i) subset.examples.push_back(pool.examples[perm[i]]);
    subset.feature_range = compute_feature_range(subset.examples, subset.d_in);
    pool = std::move(subset);
  }

  struct Cell {
    PrivacyCell privacy;
    double alpha;
  };
  std::vector<Cell> cells;
  for (const PrivacyCell& p : cfg.privacy_grid)
    for (double alpha : cfg.alphas) cells.push_back({p, alpha});

  MiaOutcome outcome;
  outcome.rows.resize(cells.size());
  std::vector<AttackResult> details(cells.size());

  detail::parallel_for(cells.size(), workers, [&](std::size_t i) {
    const Cell& c = cells[i];
    MiaRow& row = outcome.rows[i];
    row.alpha = c.alpha;
    row.clip = c.privacy.clip;
    row.seed = derive_seed(cfg.master_seed, std::string_view("mia"), c.privacy.sigma, c.privacy.clip, c.alpha);
    try {
      TrainConfig tc = cfg.train;
      if (cfg.mia_steps > 0) tc.steps = cfg.mia_steps;
      const PrivacyParams privacy{c.privacy.sigma, c.privacy.clip, cfg.delta};
      const TrainFn train_fn = [&, tc, privacy](const Dataset& members, std::uint64_t seed) {
        TrainConfig run = tc;
        run.seed = derive_seed(seed, std::string_view("train"));
        return train(members, ctx.spec, run, privacy,
                     init_model(ctx.spec, derive_seed(seed, std::string_view("init")), cfg.init_scale))
            .final_params;
      };
      const Strategy strategy{ctx.transform, cfg.target_label, c.alpha};
      const AttackResult attack =
          lira_attack(pool, ctx.spec, cfg.mia_shadows, c.alpha > 0.0 ? &strategy : nullptr, train_fn, row.seed);
      row.auc = attack.auc_all;
      row.tpr_at_low_fpr = attack.tpr_at_low_fpr_all;
      row.auc_clean = attack.auc_clean;
      row.tpr_clean = attack.tpr_at_low_fpr_clean;
      const std::size_t member_count = pool.size() / 2;
      ExperimentConfig eps_cfg = cfg;
      if (cfg.mia_steps > 0) eps_cfg.train.steps = cfg.mia_steps;
      row.epsilon = sweep_epsilon(eps_cfg, c.privacy, member_count);
      details[i] = attack;
    } catch (const std::exception& e) {
      row.status = detail::csv_safe(e.what());
      row.epsilon = row.auc = row.tpr_at_low_fpr = std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (const MiaRow& row : outcome.rows)
    if (row.status != "ok") outcome.all_ok = false;

  {
    std::ofstream out(out_dir / "mia_summary.csv");
    if (!out) throw io_error("cannot write mia_summary.csv under " + out_dir.string());
    out << "alpha,epsilon,clip,auc,tpr_at_0.001_fpr,seed,status\n";
    for (const MiaRow& r : outcome.rows)
      out << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.epsilon) << ',' << detail::fmt17(r.clip) << ','
          << detail::fmt17(r.auc) << ',' << detail::fmt17(r.tpr_at_low_fpr) << ',' << r.seed << ',' << r.status
          << '\n';
  }
  {
    // Same metrics restricted to examples the collective never touched.
    std::ofstream out(out_dir / "mia_summary_noncollective.csv");
    out << "alpha,epsilon,clip,auc,tpr_at_0.001_fpr,seed,status\n";
    for (const MiaRow& r : outcome.rows)
      out << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.epsilon) << ',' << detail::fmt17(r.clip) << ','
          << detail::fmt17(r.auc_clean) << ',' << detail::fmt17(r.tpr_clean) << ',' << r.seed << ',' << r.status
          << '\n';
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (outcome.rows[i].status != "ok") continue;
    std::ofstream out(out_dir / ("mia_scores_" + std::to_string(i) + ".csv"));
    out << "score,is_member\n";
    for (std::size_t j = 0; j < details[i].scores.size(); ++j)
      out << detail::fmt17(details[i].scores[j]) << ',' << (details[i].is_member[j] ? 1 : 0) << '\n';
  }
  return outcome;
}

// --- signal export -----------------------------------------------------------

// Writes `count` (original, planted) image pairs from the raw (un-normalized)
// dataset as binary PGM/PPM: signal_<i>_original.* and signal_<i>_planted.*.
inline void export_signals(const ExperimentConfig& cfg, std::size_t count, const std::filesystem::path& out_dir) {
  ExperimentConfig raw_cfg = cfg;
  raw_cfg.normalization = Normalize::none;  // transforms are defined on raw intensities
  const Dataset ds = load_dataset(raw_cfg);
  if (!cfg.geometry.valid() || cfg.geometry.flat_size() != ds.d_in)
    throw std::invalid_argument("export-signals requires an image-shaped dataset (set dataset.image_*)");
  const SignalTransform transform = parse_transform(cfg.transform_text, cfg.geometry);
  std::filesystem::create_directories(out_dir);

  const std::string ext = cfg.geometry.channels == 1 ? ".pgm" : ".ppm";
  char name[64];
  for (std::size_t i = 0; i < count && i < ds.size(); ++i) {
    std::snprintf(name, sizeof(name), "signal_%03zu", i);
    write_image(out_dir / (std::string(name) + "_original" + ext), ds.examples[i].features, cfg.geometry);
    write_image(out_dir / (std::string(name) + "_planted" + ext), apply_signal(ds.examples[i].features, transform),
                cfg.geometry);
  }
}

// --- plotting ----------------------------------------------------------------

namespace detail {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal SVG line chart; enough for the CSV post-processing subcommand.
inline void write_svg_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<Series>& series) {
  const double w = 720, h = 480, ml = 70, mr = 170, mt = 50, mb = 60;
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const Series& s : series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_min > x_max) {
    x_min = 0;
    x_max = 1;
    y_min = 0;
    y_max = 1;
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
  const auto sy = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ofstream out(path);
  if (!out) throw io_error("cannot write SVG: " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", fx);
    out << "<text x='" << sx(fx) << "' y='" << h - mb + 20 << "' text-anchor='middle' font-size='11'>" << buf
        << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", fy);
    out << "<text x='" << ml - 8 << "' y='" << sy(fy) + 4 << "' text-anchor='end' font-size='11'>" << buf
        << "</text>\n";
  }
  out << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 16 << "' text-anchor='middle' font-size='13'>" << x_label
      << "</text>\n";
  out << "<text x='18' y='" << (mt + h - mb) / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
      << (mt + h - mb) / 2 << ")'>" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 8];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : series[s].points)
      if (std::isfinite(x) && std::isfinite(y)) out << sx(x) << ',' << sy(y) << ' ';
    out << "'/>\n";
    for (const auto& [x, y] : series[s].points)
      if (std::isfinite(x) && std::isfinite(y))
        out << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='2.5' fill='" << color << "'/>\n";
    const double ly = mt + 18.0 * static_cast<double>(s);
    out << "<line x1='" << w - mr + 10 << "' y1='" << ly << "' x2='" << w - mr + 34 << "' y2='" << ly << "' stroke='"
        << color << "' stroke-width='2'/>\n";
    out << "<text x='" << w - mr + 40 << "' y='" << ly + 4 << "' font-size='11'>" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

inline std::string cell_label(double sigma, double clip) {
  char buf[64];
  if (std::isinf(clip))
    std::snprintf(buf, sizeof(buf), "sigma=%g, C=inf", sigma);
  else
    std::snprintf(buf, sizeof(buf), "sigma=%g, C=%g", sigma, clip);
  return buf;
}

}  // namespace detail

// Renders whatever result CSVs exist under out_dir into SVG charts.
// Returns the number of charts written.
inline int plot_results(const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  int written = 0;

  if (fs::exists(out_dir / "sweep.csv")) {
    const detail::CsvTable t = detail::read_csv_table(out_dir / "sweep.csv");
    const std::size_t ca = t.column("alpha"), cs = t.column("sigma"), cc = t.column("clip"),
                      cy = t.column("success");
    std::map<std::pair<double, double>, std::map<double, std::pair<double, int>>> groups;
    for (const auto& row : t.rows) {
      if (std::isnan(row[cy])) continue;
      auto& acc = groups[{row[cs], row[cc]}][row[ca]];
      acc.first += row[cy];
      acc.second += 1;
    }
    std::vector<detail::Series> series;
    for (const auto& [key, by_alpha] : groups) {
      detail::Series s;
      s.label = detail::cell_label(key.first, key.second);
      for (const auto& [alpha, acc] : by_alpha) s.points.emplace_back(alpha, acc.first / acc.second);
      series.push_back(std::move(s));
    }
    detail::write_svg_chart(out_dir / "success_vs_alpha.svg", "Collective success vs size", "alpha", "success",
                            series);
    ++written;
  }

  if (fs::exists(out_dir / "bound.csv")) {
    const detail::CsvTable t = detail::read_csv_table(out_dir / "bound.csv");
    const std::size_t ca = t.column("alpha"), cs = t.column("sigma"), cc = t.column("clip"), cb = t.column("bound");
    std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> groups;
    for (const auto& row : t.rows) groups[{row[ca], row[cc]}].emplace_back(row[cs], row[cb]);
    std::vector<detail::Series> series;
    for (auto& [key, points] : groups) {
      std::sort(points.begin(), points.end());
      char buf[64];
      std::snprintf(buf, sizeof(buf), "alpha=%g, C=%g", key.first, key.second);
      series.push_back({buf, points});
    }
    detail::write_svg_chart(out_dir / "bound_vs_sigma.svg", "Success lower bound vs noise", "sigma", "bound", series);
    ++written;
  }

  if (fs::exists(out_dir / "mia_summary.csv")) {
    const detail::CsvTable t = detail::read_csv_table(out_dir / "mia_summary.csv");
    const std::size_t ca = t.column("alpha"), ce = t.column("epsilon"), cc = t.column("clip"), cy = t.column("auc");
    std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> groups;
    for (const auto& row : t.rows)
      if (!std::isnan(row[cy])) groups[{row[ce], row[cc]}].emplace_back(row[ca], row[cy]);
    std::vector<detail::Series> series;
    for (auto& [key, points] : groups) {
      std::sort(points.begin(), points.end());
      char buf[64];
      if (std::isinf(key.first))
        std::snprintf(buf, sizeof(buf), "eps=inf, C=%g", key.second);
      else
        std::snprintf(buf, sizeof(buf), "eps=%.3g, C=%g", key.first, key.second);
      series.push_back({buf, points});
    }
    detail::write_svg_chart(out_dir / "mia_auc_vs_alpha.svg", "Membership-inference AUC vs collective size", "alpha",
                            "auc", series);
    ++written;
  }
  return written;
}

}  // namespace aca
