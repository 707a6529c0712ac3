#include "losp/config.hpp"
#include "losp/experiment.hpp"
#include "losp/fft.hpp"
#include "losp/io.hpp"
#include "losp/label_oracle.hpp"
#include "losp/metrics.hpp"
#include "losp/parallel.hpp"
#include "losp/prompt_net.hpp"
#include "losp/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace losp;

namespace {

struct Globals
{
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  bool timing = false;
};

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
public:
  Csv(fs::path const &path, std::string const &header) : out_(path, std::ios::binary)
  {
    if (!out_) {
      throw Error("cannot write " + path.string());
    }
    out_ << header << '\n';
  }

  template <class... T>
  void row(T const &...values)
  {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }

private:
  static std::string cell(std::string const &s) { return s; }
  static std::string cell(char const *s) { return s; }
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  std::ofstream out_;
};

class Context {
public:
  explicit Context(Globals const &g) : timing(g.timing)
  {
    if (!g.config_path.empty()) {
      if (!fs::exists(g.config_path)) {
        throw ConfigError("config file not found: " + g.config_path);
      }
      config = load_run_config(g.config_path);
    }
    if (g.seed) {
      config.seed = *g.seed;
    }
    if (!g.out.empty()) {
      config.output_dir = g.out;
    }
    if (g.threads < 1) {
      throw ConfigError("--threads must be >= 1");
    }
    set_thread_count(g.threads);
    out = config.output_dir;
    fs::create_directories(out);
  }

  fs::path path(std::string const &name) const { return out / name; }

  /// Solver settings with the policy resolved from the config or an override.
  SolverConfig solver(std::string policy = {}, std::string weights = {}) const
  {
    SolverConfig c = solver_config(config);
    if (policy.empty()) {
      policy = config.solver.policy;
    }
    if (weights.empty()) {
      weights = config.solver.weights;
    }
    if (policy == "fixed") {
      c.policy = FixedRank{config.solver.rank};
    } else if (policy == "oracle") {
      c.policy = OracleRank{};
    } else if (policy == "learned") {
      if (weights.empty()) {
        throw ConfigError("learned policy needs a weights file (solver.weights or --weights)");
      }
      c.policy = LearnedRank{load_weights(weights)};
    } else {
      throw ConfigError("unknown rank policy: " + policy);
    }
    c.validate();
    return c;
  }

  void save_config() const { save_run_config(config, path("config.json")); }

  RunConfig config;
  fs::path out;
  bool timing;
};

char const *policy_name(RankPolicy const &p)
{
  if (std::holds_alternative<FixedRank>(p)) {
    return "fixed";
  }
  return std::holds_alternative<OracleRank>(p) ? "oracle" : "learned";
}

void write_ranks(fs::path const &path, SolverResult const &r)
{
  Csv csv(path, "direction,position,rank");
  for (std::size_t i = 0; i < r.ranks_ro.size(); ++i) {
    csv.row("RO", i, r.ranks_ro[i]);
  }
  for (std::size_t i = 0; i < r.ranks_pe.size(); ++i) {
    csv.row("PE", i, r.ranks_pe[i]);
  }
}

void write_solver_log(fs::path const &path, SolverResult const &r, bool timing)
{
  Csv csv(path, timing ? "iteration,objective,primal_residual,data_residual,cg_residual,wall_seconds"
                       : "iteration,objective,primal_residual,data_residual,cg_residual");
  for (auto const &l : r.logs) {
    if (timing) {
      csv.row(l.iteration, l.objective, l.primal_residual, l.data_residual, l.cg_residual, l.wall_seconds);
    } else {
      csv.row(l.iteration, l.objective, l.primal_residual, l.data_residual, l.cg_residual);
    }
  }
}

void cmd_phantom(Context const &ctx)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  Instance const in = make_instance(s, ctx.config.seed);
  write_array(to_array(in.phantom.magnitude), ctx.path("phantom.losparr"));
  export_image(in.phantom.magnitude, ctx.path("magnitude.pgm"), Window{0.0, 1.0});
  export_label_image(in.phantom.labels(), ctx.path("labels.pgm"));
  ShotArray images;
  for (auto const &k : in.ground_truth) {
    images.push_back(ifft2c(k));
  }
  write_array(to_array(images), ctx.path("shots.losparr"));
  write_array(to_array(in.ground_truth), ctx.path("kspace_gt.losparr"));
  write_array(to_array(in.data), ctx.path("kspace.losparr"));
  for (int j = 0; j < in.phase.n_shots; ++j) {
    export_image(render_shot_phase(in.phase, in.phantom, j), ctx.path("phase_shot" + std::to_string(j) + ".pgm"),
                 Window{-std::numbers::pi * 4, std::numbers::pi * 4});
  }
  nlohmann::json regions = nlohmann::json::array();
  for (auto const &r : in.phantom.regions) {
    regions.push_back({{"id", r.id}, {"pixels", r.pixel_count()}, {"magnitude", r.magnitude_value}});
  }
  write_json(nlohmann::json(in.phase), ctx.path("phase.json"));
  write_json({{"seed", ctx.config.seed}, {"regions", regions}}, ctx.path("phantom.json"));
  std::cout << "phantom: " << in.phantom.regions.size() << " regions, " << in.phase.n_shots << " shots -> "
            << ctx.out.string() << "\n";
}

LabeledDataset synth_from(Context const &ctx)
{
  SynthConfig sc = synth_config(ctx.config);
  return synthesize_dataset(sc, ctx.config.phase.n_shots);
}

void cmd_synth(Context const &ctx, std::string const &name)
{
  LabeledDataset const ds = synth_from(ctx);
  write_dataset(ds, ctx.path(name));
  std::cout << "synth: " << ds.samples.size() << " samples -> " << ctx.path(name).string() << "\n";
}

void cmd_train(Context const &ctx, std::string const &dataset, std::string const &name)
{
  LabeledDataset const ds = dataset.empty() ? synth_from(ctx) : read_dataset(dataset);
  auto const t0 = std::chrono::steady_clock::now();
  TrainResult const tr = train(ds, train_config(ctx.config));
  double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_weights(tr.weights, ctx.path(name));
  {
    Csv csv(ctx.path("train_log.csv"), "epoch,train_loss,val_loss");
    for (std::size_t e = 0; e < tr.history.train_loss.size(); ++e) {
      csv.row(e + 1, tr.history.train_loss[e], tr.history.val_loss[e]);
    }
  }
  double mae = 0;
  for (auto i : tr.history.val_indices) {
    mae += std::abs(predict_rank(tr.weights, ds.samples[i].noisy, ds.spec) - ds.samples[i].label);
  }
  mae /= std::max<std::size_t>(1, tr.history.val_indices.size());
  nlohmann::json j{{"samples", ds.samples.size()},
                   {"final_train_loss", tr.history.train_loss.back()},
                   {"final_val_loss", tr.history.val_loss.back()},
                   {"val_mae", mae}};
  if (ctx.timing) {
    j["wall_seconds"] = secs;
  }
  write_json(j, ctx.path("train.json"));
  std::cout << "train: val mse " << tr.history.val_loss.back() << ", val mae " << mae << " -> "
            << ctx.path(name).string() << "\n";
}

void cmd_recon(Context const &ctx, std::string const &policy, std::string const &weights)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  Instance const in = make_instance(s, ctx.config.seed);
  SolverConfig const c = ctx.solver(policy, weights);
  auto const t0 = std::chrono::steady_clock::now();
  SolverResult const r = run_solver(in, c);
  double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_array(to_array(r.X), ctx.path("recon.losparr"));
  RealImage const peak_ref = in.reference / in.reference.maxCoeff();
  Window const window{0.0, 1.0};
  export_image(shot_combine(r.X) / in.reference.maxCoeff(), ctx.path("recon.pgm"), window);
  export_image(shot_combine(adjoint_encode(in.data, in.coils)) / in.reference.maxCoeff(),
               ctx.path("zero_filled.pgm"), window);
  export_image(peak_ref, ctx.path("reference.pgm"), window);
  write_solver_log(ctx.path("solver_log.csv"), r, ctx.timing);
  write_ranks(ctx.path("ranks.csv"), r);

  double const psnr = recon_psnr(in, r.X);
  double const zf = zero_filled_psnr(in);
  nlohmann::json j{{"seed", ctx.config.seed},
                   {"policy", policy_name(c.policy)},
                   {"variant", to_string(c.variant)},
                   {"psnr", psnr},
                   {"zero_filled_psnr", zf},
                   {"cg_warnings", r.cg_warnings}};
  if (ctx.timing) {
    j["wall_seconds"] = secs;
  }
  write_json(j, ctx.path("metrics.json"));
  std::printf("recon: %s/%s psnr %.3f dB (zero-filled %.3f dB)\n", policy_name(c.policy), to_string(c.variant).c_str(),
              psnr, zf);
}

std::vector<std::uint64_t> seeds_of(Context const &ctx)
{
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < std::max(1, ctx.config.eval.n_seeds); ++i) {
    seeds.push_back(ctx.config.seed + static_cast<std::uint64_t>(i));
  }
  return seeds;
}

void cmd_ablate(Context const &ctx, std::string const &policy, std::string const &weights)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  SolverConfig const base = ctx.solver(policy, weights);
  Csv csv(ctx.path("ablation.csv"), "seed,variant,psnr");
  std::vector<double> mean(4, 0.0);
  auto const seeds = seeds_of(ctx);
  for (auto seed : seeds) {
    Instance const in = make_instance(s, seed);
    double const zf = zero_filled_psnr(in);
    csv.row(seed, "zero-filled", zf);
    mean[0] += zf / seeds.size();
    int k = 1;
    for (SolverVariant v : {SolverVariant::Ro, SolverVariant::Pe, SolverVariant::RoPe}) {
      SolverConfig c = base;
      c.variant = v;
      c.log_objective = false;
      double const p = recon_psnr(in, run_solver(in, c).X);
      csv.row(seed, to_string(v), p);
      mean[k++] += p / seeds.size();
    }
  }
  std::printf("ablate (%s, %zu seeds): zero-filled %.3f  ro %.3f  pe %.3f  ro+pe %.3f dB\n", policy_name(base.policy),
              seeds.size(), mean[0], mean[1], mean[2], mean[3]);
}

void cmd_sweep(Context const &ctx)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  SolverConfig base = ctx.solver("fixed");
  base.log_objective = false;
  Csv csv(ctx.path("sweep.csv"), "seed,rank,psnr");
  nlohmann::json best = nlohmann::json::array();
  for (auto seed : seeds_of(ctx)) {
    Instance const in = make_instance(s, seed);
    RankSweepResult const r = sweep_fixed_ranks(in, base, ctx.config.eval.sweep_ranks);
    for (std::size_t i = 0; i < r.ranks.size(); ++i) {
      csv.row(seed, r.ranks[i], r.psnr[i]);
    }
    best.push_back({{"seed", seed}, {"best_rank", r.best_rank}, {"best_psnr", r.best_psnr}});
    std::printf("sweep-rank seed %llu: best r = %d, %.3f dB\n", static_cast<unsigned long long>(seed), r.best_rank,
                r.best_psnr);
  }
  write_json(best, ctx.path("sweep.json"));
}

void cmd_adc(Context const &ctx, std::string const &policy, std::string const &weights)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  AdcSetup const a = adc_setup(ctx.config);
  SolverConfig c = ctx.solver(policy, weights);
  c.log_objective = false;
  AdcResult const r = run_adc_experiment(s, a, c, ctx.config.seed);
  write_array(to_array(r.adc), ctx.path("adc.losparr"));
  export_image(r.adc.max(0.0), ctx.path("adc.pgm"), Window{0.0, 3e-3});
  double const peak = r.combined.front().maxCoeff();
  for (std::size_t i = 0; i < r.combined.size(); ++i) {
    export_image(r.combined[i] / peak, ctx.path("dwi_b" + std::to_string(static_cast<int>(a.b_values[i])) + ".pgm"),
                 Window{0.0, 1.0});
  }
  double const rel = (r.liver_mean - a.liver_adc) / a.liver_adc;
  write_json({{"seed", ctx.config.seed},
              {"policy", policy_name(c.policy)},
              {"liver_adc_true", a.liver_adc},
              {"liver_adc_mean", r.liver_mean},
              {"relative_error", rel},
              {"region_adc", r.region_adc}},
             ctx.path("adc.json"));
  std::printf("adc: liver mean %.5g mm^2/s (true %.5g, %+.2f%%)\n", r.liver_mean, a.liver_adc, 100 * rel);
}

void cmd_sv_curve(Context const &ctx, std::string const &direction, int position, std::string const &source)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  Instance const in = make_instance(s, ctx.config.seed);
  Direction const d = direction == "pe" ? Direction::PE : Direction::RO;
  if (direction != "ro" && direction != "pe") {
    throw ConfigError("--direction must be ro or pe");
  }
  ShotArray X;
  if (source == "gt") {
    X = in.ground_truth;
  } else if (source == "zero-filled") {
    X = adjoint_encode(in.data, in.coils);
  } else {
    throw ConfigError("--source must be gt or zero-filled");
  }
  auto const lines = extract_lines(X, d, true);
  if (position < 0) {
    position = static_cast<int>(lines.size()) / 2;
  }
  if (position >= static_cast<int>(lines.size())) {
    throw ConfigError("--position out of range");
  }
  auto const &line = lines[position];
  HankelSpec const spec{ctx.config.solver.window, line.length(), line.n_shots(), HankelLayout::ComplexShotConcat};
  export_sv_curve(line.signals, spec, ctx.path("sv_curve.csv"));
  Eigen::VectorXd const sv = singular_values(line.signals, spec);
  std::printf("sv-curve: %s line %d, 99%% energy rank %d -> %s\n", to_string(d), position, energy_rank(sv, 0.99),
              ctx.path("sv_curve.csv").string().c_str());
}

void cmd_eval(Context const &ctx, std::string const &weights)
{
  ExperimentSetup const s = experiment_setup(ctx.config);
  std::vector<std::pair<std::string, SolverConfig>> methods{{"fixed", ctx.solver("fixed")},
                                                            {"oracle", ctx.solver("oracle")}};
  std::string const w = weights.empty() ? ctx.config.solver.weights : weights;
  if (!w.empty()) {
    methods.emplace_back("learned", ctx.solver("learned", w));
  }
  Csv csv(ctx.path("eval.csv"), "seed,method,psnr");
  std::vector<double> mean(methods.size() + 1, 0.0);
  auto const seeds = seeds_of(ctx);
  for (auto seed : seeds) {
    Instance const in = make_instance(s, seed);
    double const zf = zero_filled_psnr(in);
    csv.row(seed, "zero-filled", zf);
    mean[0] += zf / seeds.size();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      SolverConfig c = methods[m].second;
      c.log_objective = false;
      double const p = recon_psnr(in, run_solver(in, c).X);
      csv.row(seed, methods[m].first, p);
      mean[m + 1] += p / seeds.size();
    }
  }
  std::printf("%-12s %10s\n", "method", "psnr [dB]");
  std::printf("%-12s %10.3f\n", "zero-filled", mean[0]);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::printf("%-12s %10.3f\n", methods[m].first.c_str(), mean[m + 1]);
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"LoSP multi-shot DWI reconstruction toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "RunConfig JSON file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--timing", g.timing, "record wall-clock times in logs");

  std::string policy, weights, dataset, dataset_name = "dataset.losds", weights_name = "weights.losnn";
  std::string direction = "ro", source = "gt";
  int position = -1;

  auto *phantom = app.add_subcommand("phantom", "emit phantom, region labels, shot images and phases");
  auto *synth = app.add_subcommand("synth", "build a labeled training dataset");
  synth->add_option("--name", dataset_name, "dataset file name");
  auto *trn = app.add_subcommand("train", "train the rank prediction network");
  trn->add_option("--dataset", dataset, "existing dataset (default: synthesize from config)");
  trn->add_option("--name", weights_name, "weights file name");
  auto *recon = app.add_subcommand("recon", "reconstruct one synthetic acquisition");
  auto *ablate = app.add_subcommand("ablate", "compare RO, PE and RO+PE variants");
  auto *sweep = app.add_subcommand("sweep-rank", "fixed-rank sweep");
  auto *adc = app.add_subcommand("adc", "multi-b-value reconstruction and ADC fit");
  auto *sv = app.add_subcommand("sv-curve", "singular value curve of one hybrid line");
  sv->add_option("--direction", direction, "ro or pe");
  sv->add_option("--position", position, "line index (default: centre)");
  sv->add_option("--source", source, "gt or zero-filled");
  auto *eval = app.add_subcommand("eval", "PSNR table over seeds");
  for (auto *sub : {recon, ablate, adc}) {
    sub->add_option("--policy", policy, "fixed, oracle or learned (default: config)");
  }
  for (auto *sub : {recon, ablate, adc, eval}) {
    sub->add_option("--weights", weights, "rank network weights for the learned policy");
  }

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Context const ctx(g);
    if (phantom->parsed()) {
      cmd_phantom(ctx);
    } else if (synth->parsed()) {
      cmd_synth(ctx, dataset_name);
    } else if (trn->parsed()) {
      cmd_train(ctx, dataset, weights_name);
    } else if (recon->parsed()) {
      cmd_recon(ctx, policy, weights);
    } else if (ablate->parsed()) {
      cmd_ablate(ctx, policy, weights);
    } else if (sweep->parsed()) {
      cmd_sweep(ctx);
    } else if (adc->parsed()) {
      cmd_adc(ctx, policy, weights);
    } else if (sv->parsed()) {
      cmd_sv_curve(ctx, direction, position, source);
    } else if (eval->parsed()) {
      cmd_eval(ctx, weights);
    }
    ctx.save_config();
  } catch (ConfigError const &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (NumericalError const &e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
