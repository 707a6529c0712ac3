#include "losp/config.hpp"

#include "losp/io.hpp"

#include <set>

namespace losp {

namespace {

using nlohmann::json;

/// Reads known keys from one JSON object and rejects the rest.
class Section {
public:
  Section(json const &j, std::string name) : j_(j), name_(std::move(name))
  {
    if (!j_.is_object()) {
      throw ConfigError("config section '" + name_ + "' must be an object");
    }
  }

  template <class T>
  Section &operator()(char const *key, T &value)
  {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        value = it->template get<T>();
      } catch (json::exception const &e) {
        throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
      }
    }
    return *this;
  }

  json const *child(char const *key)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const
  {
    for (auto const &[key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError("unknown config key '" + (name_.empty() ? key : name_ + "." + key) + "'");
      }
    }
  }

private:
  json const &j_;
  std::string name_;
  std::set<std::string> seen_;
};

} // namespace

void to_json(nlohmann::json &j, RunConfig const &c)
{
  j = json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"phantom", {{"size_ro", c.phantom.size_ro}, {"size_pe", c.phantom.size_pe}, {"n_regions", c.phantom.n_regions}}},
      {"phase",
       {{"n_shots", c.phase.n_shots},
        {"liver_order", c.phase.liver_order},
        {"other_order", c.phase.other_order},
        {"coeff_scale", c.phase.coeff_scale},
        {"zero_first_shot", c.phase.zero_first_shot}}},
      {"encoding",
       {{"pattern", c.encoding.pattern},
        {"rate", c.encoding.rate},
        {"n_coils", c.encoding.n_coils},
        {"snr_db", c.encoding.snr_db}}},
      {"solver",
       {{"lambda", c.solver.lambda},
        {"iterations", c.solver.iterations},
        {"window", c.solver.window},
        {"rho", c.solver.rho},
        {"tau", c.solver.tau},
        {"cg_iterations", c.solver.cg_iterations},
        {"cg_tolerance", c.solver.cg_tolerance},
        {"variant", c.solver.variant},
        {"policy", c.solver.policy},
        {"rank", c.solver.rank},
        {"resolve_every_iteration", c.solver.resolve_every_iteration},
        {"weights", c.solver.weights}}},
      {"train",
       {{"n_images", c.train.n_images},
        {"n_regions", c.train.n_regions},
        {"min_order", c.train.min_order},
        {"max_order", c.train.max_order},
        {"snr_min_db", c.train.snr_min_db},
        {"snr_max_db", c.train.snr_max_db},
        {"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"decay", c.train.decay},
        {"decay_every", c.train.decay_every},
        {"batch_size", c.train.batch_size},
        {"train_fraction", c.train.train_fraction},
        {"filters", c.train.filters},
        {"blocks", c.train.blocks}}},
      {"eval",
       {{"sweep_ranks", c.eval.sweep_ranks},
        {"b_values", c.eval.b_values},
        {"b_averages", c.eval.b_averages},
        {"liver_adc", c.eval.liver_adc},
        {"adc_min", c.eval.adc_min},
        {"adc_max", c.eval.adc_max},
        {"adc_snr_db", c.eval.adc_snr_db},
        {"n_seeds", c.eval.n_seeds}}},
  };
}

RunConfig run_config_from_json(nlohmann::json const &j)
{
  RunConfig c;
  Section top(j, "");
  top("seed", c.seed)("output_dir", c.output_dir);
  if (auto const *s = top.child("phantom")) {
    Section(*s, "phantom")("size_ro", c.phantom.size_ro)("size_pe", c.phantom.size_pe)("n_regions", c.phantom.n_regions)
        .finish();
  }
  if (auto const *s = top.child("phase")) {
    Section(*s, "phase")("n_shots", c.phase.n_shots)("liver_order", c.phase.liver_order)("other_order",
                                                                                        c.phase.other_order)(
        "coeff_scale", c.phase.coeff_scale)("zero_first_shot", c.phase.zero_first_shot)
        .finish();
  }
  if (auto const *s = top.child("encoding")) {
    Section(*s, "encoding")("pattern", c.encoding.pattern)("rate", c.encoding.rate)("n_coils", c.encoding.n_coils)(
        "snr_db", c.encoding.snr_db)
        .finish();
  }
  if (auto const *s = top.child("solver")) {
    auto &v = c.solver;
    Section(*s, "solver")("lambda", v.lambda)("iterations", v.iterations)("window", v.window)("rho", v.rho)(
        "tau", v.tau)("cg_iterations", v.cg_iterations)("cg_tolerance", v.cg_tolerance)("variant", v.variant)(
        "policy", v.policy)("rank", v.rank)("resolve_every_iteration", v.resolve_every_iteration)("weights", v.weights)
        .finish();
  }
  if (auto const *s = top.child("train")) {
    auto &v = c.train;
    Section(*s, "train")("n_images", v.n_images)("n_regions", v.n_regions)("min_order", v.min_order)(
        "max_order", v.max_order)("snr_min_db", v.snr_min_db)("snr_max_db", v.snr_max_db)("epochs", v.epochs)(
        "learning_rate", v.learning_rate)("decay", v.decay)("decay_every", v.decay_every)("batch_size", v.batch_size)(
        "train_fraction", v.train_fraction)("filters", v.filters)("blocks", v.blocks)
        .finish();
  }
  if (auto const *s = top.child("eval")) {
    auto &v = c.eval;
    Section(*s, "eval")("sweep_ranks", v.sweep_ranks)("b_values", v.b_values)("b_averages", v.b_averages)(
        "liver_adc", v.liver_adc)("adc_min", v.adc_min)("adc_max", v.adc_max)("adc_snr_db", v.adc_snr_db)(
        "n_seeds", v.n_seeds)
        .finish();
  }
  top.finish();

  if (c.solver.policy != "fixed" && c.solver.policy != "oracle" && c.solver.policy != "learned") {
    throw ConfigError("solver.policy must be fixed, oracle or learned");
  }
  solver_variant_from_string(c.solver.variant);
  sampling_pattern_from_string(c.encoding.pattern);
  if (c.phase.n_shots < 1 || c.encoding.n_coils < 1) {
    throw ConfigError("phase.n_shots and encoding.n_coils must be positive");
  }
  if (c.eval.n_seeds < 1) {
    throw ConfigError("eval.n_seeds must be positive");
  }
  return c;
}

RunConfig load_run_config(std::filesystem::path const &path) { return run_config_from_json(read_json(path)); }

void save_run_config(RunConfig const &c, std::filesystem::path const &path)
{
  json j;
  to_json(j, c);
  write_json(j, path);
}

SolverConfig solver_config(RunConfig const &c)
{
  SolverConfig s;
  s.lambda = c.solver.lambda;
  s.iterations = c.solver.iterations;
  s.window = c.solver.window;
  s.rho = c.solver.rho;
  s.tau = c.solver.tau;
  s.cg_iterations = c.solver.cg_iterations;
  s.cg_tolerance = c.solver.cg_tolerance;
  s.variant = solver_variant_from_string(c.solver.variant);
  s.policy = FixedRank{c.solver.rank};
  s.resolve_every_iteration = c.solver.resolve_every_iteration;
  s.validate();
  return s;
}

SynthConfig synth_config(RunConfig const &c)
{
  if (c.phantom.size_ro != c.phantom.size_pe) {
    throw ConfigError("training data synthesis needs square images");
  }
  SynthConfig s;
  s.size = c.phantom.size_ro;
  s.n_regions = c.train.n_regions;
  s.phase.order_range = {c.train.min_order, c.train.max_order};
  s.phase.coeff_scale = c.phase.coeff_scale;
  s.phase.zero_first_shot = c.phase.zero_first_shot;
  s.shot_counts = {c.phase.n_shots};
  s.snr_min_db = c.train.snr_min_db;
  s.snr_max_db = c.train.snr_max_db;
  s.n_images = c.train.n_images;
  s.window = c.solver.window;
  s.seed = c.seed;
  return s;
}

TrainConfig train_config(RunConfig const &c)
{
  TrainConfig t;
  t.epochs = c.train.epochs;
  t.learning_rate = c.train.learning_rate;
  t.decay = c.train.decay;
  t.decay_every = c.train.decay_every;
  t.batch_size = c.train.batch_size;
  t.train_fraction = c.train.train_fraction;
  t.filters = c.train.filters;
  t.blocks = c.train.blocks;
  t.seed = c.seed;
  t.validate();
  return t;
}

} // namespace losp
