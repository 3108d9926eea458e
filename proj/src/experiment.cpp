#include "nsstab/experiment.hpp"

#include "nsstab/checkpoint.hpp"
#include "nsstab/diagnostics.hpp"
#include "nsstab/dynamics.hpp"
#include "nsstab/hardy.hpp"
#include "nsstab/mild.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace nsstab {

namespace {

constexpr const char* kRunStateKind = "run-state";

struct FieldCodec
{
  std::function<void(ExperimentConfig&, const YAML::Node&)> read;
  std::function<void(const ExperimentConfig&, YAML::Emitter&)> write;
};

template <class T>
FieldCodec plain(T ExperimentConfig::*member)
{
  return {[member](ExperimentConfig& c, const YAML::Node& n) { c.*member = n.as<T>(); },
          [member](const ExperimentConfig& c, YAML::Emitter& e) { e << c.*member; }};
}

const std::vector<std::pair<std::string, FieldCodec>>& field_table()
{
  static const std::vector<std::pair<std::string, FieldCodec>> table = {
      {"L", plain(&ExperimentConfig::L)},
      {"N", plain(&ExperimentConfig::N)},
      {"dealias", plain(&ExperimentConfig::dealias)},
      {"scenario",
       {[](ExperimentConfig& c, const YAML::Node& n) { c.scenario = parse_scenario(n.as<std::string>()); },
        [](const ExperimentConfig& c, YAML::Emitter& e) { e << to_string(c.scenario); }}},
      {"space",
       {[](ExperimentConfig& c, const YAML::Node& n) { c.space = SpaceNorm::parse(n.as<std::string>()); },
        [](const ExperimentConfig& c, YAML::Emitter& e) { e << c.space.to_string(); }}},
      {"amplitude", plain(&ExperimentConfig::amplitude)},
      {"seed", plain(&ExperimentConfig::seed)},
      {"t_max", plain(&ExperimentConfig::t_max)},
      {"dt", plain(&ExperimentConfig::dt)},
      {"alpha", plain(&ExperimentConfig::alpha)},
      {"hardy_trials", plain(&ExperimentConfig::hardy_trials)},
      {"output_dir", plain(&ExperimentConfig::output_dir)},
      {"checkpoint_every", plain(&ExperimentConfig::checkpoint_every)},
      {"w0_rms", plain(&ExperimentConfig::w0_rms)},
      {"w0_spectrum_exponent", plain(&ExperimentConfig::w0_spectrum_exponent)},
      {"w0_kmin", plain(&ExperimentConfig::w0_kmin)},
      {"V_spectrum_exponent", plain(&ExperimentConfig::V_spectrum_exponent)},
      {"mild_horizon", plain(&ExperimentConfig::mild_horizon)},
      {"mild_slices", plain(&ExperimentConfig::mild_slices)},
      {"picard_max_iters", plain(&ExperimentConfig::picard_max_iters)},
      {"picard_tol", plain(&ExperimentConfig::picard_tol)},
      {"calderon_R", plain(&ExperimentConfig::calderon_R)},
      {"u0_amplitude", plain(&ExperimentConfig::u0_amplitude)},
      {"store_every", plain(&ExperimentConfig::store_every)},
      {"galerkin_m", plain(&ExperimentConfig::galerkin_m)},
      {"quadrature", plain(&ExperimentConfig::quadrature)},
      {"gen_energy_pairs", plain(&ExperimentConfig::gen_energy_pairs)},
      {"decay_threshold", plain(&ExperimentConfig::decay_threshold)},
      {"transient_fraction", plain(&ExperimentConfig::transient_fraction)},
      {"morrey_center_stride", plain(&ExperimentConfig::morrey_center_stride)},
  };
  return table;
}

void require(bool ok, const std::string& field, const std::string& message)
{
  if (!ok)
    throw ConfigError(field, 0, message);
}

std::string fmt(const char* format, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string g6(double v) { return fmt("%.6g", v); }

/// Everything built before time stepping.
struct Setup
{
  ExperimentConfig config;
  std::filesystem::path out;
  std::optional<HardyEstimate> hardy;
  std::optional<MildTrajectory> V;
  std::optional<StandingAssumptionReport> standing;
  std::optional<SpectralVectorField> w0;
  std::optional<CalderonSplit> calderon;
  std::ostringstream report;
};

void add_suite(RunSummary& summary, const std::string& name, bool passed, const std::string& detail)
{
  summary.suites.push_back({name, passed, detail});
}

/// Stages 1-3: Hardy constant, background flow, admissibility. Returns false
/// when a stage failed and the run cannot continue.
bool prepare(Setup& s, RunSummary& summary)
{
  const auto& c = s.config;
  const auto grid = c.grid();
  const NormOptions norm_opts{c.morrey_center_stride};

  s.hardy = estimate_hardy_constant(c.space, grid, c.hardy_trials, c.seed + 2, norm_opts);
  write_hardy_csv(s.out / "hardy.csv", *s.hardy);
  s.report << "hardy: space " << c.space.to_string() << ", trials " << s.hardy->trials << ", K_hat "
           << g6(s.hardy->K_hat) << ", rejected " << s.hardy->rejected << "\n";

  const double horizon = c.mild_horizon > 0.0 ? c.mild_horizon : std::max(c.t_max, c.dt);
  auto picard = [&](const SpectralVectorField& V0) -> bool {
    try {
      s.V = picard_iterate(V0, geometric_time_grid(horizon, c.mild_slices), c.picard_max_iters, c.picard_tol,
                           c.space, norm_opts);
    } catch (const PicardFailure& e) {
      std::string hist;
      for (const double h : e.history())
        hist += " " + g6(h);
      add_suite(summary, "mild_contraction", false, e.what() + std::string("; history") + hist);
      s.report << "mild: " << e.what() << "\n";
      return false;
    }
    std::string hist;
    bool decreasing = true;
    for (std::size_t i = 0; i < s.V->contraction_history.size(); ++i) {
      hist += " " + g6(s.V->contraction_history[i]);
      if (i > 0 && !(s.V->contraction_history[i] < s.V->contraction_history[i - 1]))
        decreasing = false;
    }
    add_suite(summary, "mild_contraction", decreasing,
              std::to_string(s.V->iterations) + " iterations, history" + hist);
    s.report << "mild: " << s.V->iterations << " iterations over " << s.V->times.size() << " slices to t = "
             << g6(horizon) << ", contraction history" << hist << "\n";
    return true;
  };

  switch (c.scenario) {
  case Scenario::ZeroV:
    s.V = zero_trajectory(grid, c.space);
    break;
  case Scenario::SmallStationaryV: {
    auto V0 = random_divfree_field(grid, c.V_spectrum_exponent, c.seed + 1, 0.0);
    const double vmax = max_velocity(V0);
    V0 *= vmax > 0.0 ? c.amplitude / vmax : 0.0;
    V0.set_divergence_free(true);
    s.V = stationary_trajectory(V0, c.space, norm_opts);
    break;
  }
  case Scenario::SelfSimilarV:
    if (!picard(homogeneous_minus_one_data(grid, c.amplitude, c.seed + 1)))
      return false;
    break;
  case Scenario::CalderonSplit: {
    auto u0 = random_divfree_field(grid, c.V_spectrum_exponent, c.seed + 3, 0.0);
    u0 *= c.u0_amplitude / max_velocity(u0);
    u0.set_divergence_free(true);
    s.calderon = calderon_split(u0, c.calderon_R);
    s.report << "calderon: R " << g6(c.calderon_R) << ", ||V0||_3 " << g6(s.calderon->l3_of_smooth)
             << ", ||w0||_2 " << g6(s.calderon->l2_of_rough) << "\n";
    if (!picard(s.calderon->V0))
      return false;
    break;
  }
  }

  s.standing = verify_standing_assumptions(*s.V, s.hardy->K_hat);
  const bool admissible = s.standing->admissible && s.standing->max_divergence_residual <= 1e-10;
  add_suite(summary, "admissibility", admissible,
            "K_hat * sup ||V||_X = " + g6(s.standing->product) + ", div residual " +
                g6(s.standing->max_divergence_residual));
  s.report << "background: sup ||V||_X " << g6(s.standing->sup_norm) << ", K_hat * sup " << g6(s.standing->product)
           << (admissible ? " (admissible)" : " (NOT admissible)") << ", continuity proxy "
           << g6(s.standing->continuity_proxy) << "\n";
  if (!admissible)
    return false;

  if (s.calderon) {
    s.w0 = s.calderon->w0;
  } else {
    auto w0 = random_divfree_field(grid, c.w0_spectrum_exponent, c.seed, c.w0_kmin);
    const double rms = rms_velocity(w0);
    w0 *= rms > 0.0 ? c.w0_rms / rms : 0.0;
    w0.set_divergence_free(true);
    s.w0 = std::move(w0);
  }
  return true;
}

EvolveOptions evolve_options(const ExperimentConfig& c)
{
  EvolveOptions o;
  o.t_max = c.t_max;
  o.dt = c.dt;
  if (c.galerkin_m > 0.0)
    o.truncation = GalerkinTruncation{c.galerkin_m};
  o.store_every = c.store_every;
  o.quadrature = parse_quadrature(c.quadrature);
  o.checkpoint_every = c.checkpoint_every;
  return o;
}

void write_state(const std::filesystem::path& path, const ExperimentConfig& config, const EvolveState& st)
{
  CheckpointContents cc;
  cc.kind = kRunStateKind;
  cc.grid = st.w.grid();
  cc.meta = {{"config", to_yaml(config)}, {"step", st.step}, {"ledger", ledger_to_json(st.ledger)}};
  cc.fields.push_back(st.w);
  write_checkpoint(path, cc);
}

/// Stages 4-6 plus artifacts for a finished (or interrupted) evolution.
void finish(Setup& s, const EvolveResult& result, RunSummary& summary)
{
  const auto& c = s.config;
  const auto& ledger = result.state.ledger;
  const auto& traj = result.trajectory;
  write_ledger_csv(s.out / "ledger.csv", ledger);
  write_state(s.out / "checkpoints" / "final.ckpt", c, result.state);

  const double e0 = ledger.rows.front().l2_sq;
  summary.completed = result.completed();
  if (result.error) {
    summary.failure = *result.error;
    add_suite(summary, "evolution", false, *result.error);
    s.report << "evolution: stopped early: " << *result.error << "\n";
  }

  const auto worst = ledger.min_pair_slack();
  const double tol = energy_tolerance(e0, c.dt);
  const double diss = ledger.dissipation_bound_ratio();
  const bool ledger_ok = worst.value >= -tol && diss <= 1.0 + (e0 > 0.0 ? tol / e0 : 0.0);
  add_suite(summary, "energy_ledger", ledger_ok,
            "min pair slack " + g6(worst.value) + " (tol " + g6(tol) + "), dissipation bound ratio " + g6(diss));
  s.report << "ledger: rows " << ledger.rows.size() << ", K_sup_V " << g6(ledger.K_sup_V) << ", min pair slack "
           << g6(worst.value) << " at (t_s, t) = (" << g6(ledger.rows[worst.s].t) << ", "
           << g6(ledger.rows[worst.t].t) << "), tolerance " << g6(tol) << ", dissipation bound ratio " << g6(diss)
           << "\n";

  double div = 0.0;
  for (const auto& w : traj.snapshots)
    div = std::max(div, w.divergence_residual());
  add_suite(summary, "divergence", div <= 1e-9, "max residual " + g6(div));

  if (traj.snapshots.size() < 2) {
    s.report << "diagnostics: fewer than two stored states, skipped\n";
    return;
  }

  const auto& V = *s.V;
  bool ge_ok = true;
  double ge_worst = 0.0;
  std::vector<double> t0s;
  for (const auto mode : {PsiMode::HeatKernelShifted, PsiMode::DeltaMinusPhi}) {
    const auto pairs = sample_time_pairs(traj.times, c.gen_energy_pairs, c.seed + 4);
    const auto checks = check_gen_energy(traj, V, c.alpha, mode, pairs);
    s.report << "gen-energy " << to_string(mode) << ":\n";
    for (const auto& g : checks) {
      const double gtol = gen_energy_tolerance(e0, c.alpha, mode, g.t);
      const bool ok = g.slack >= -gtol;
      ge_ok = ge_ok && ok;
      if (gtol > 0.0)
        ge_worst = std::min(ge_worst, g.slack / gtol);
      s.report << "  s " << g6(g.s) << " t " << g6(g.t) << " lhs " << g6(g.lhs) << " rhs " << g6(g.rhs)
               << " slack " << g6(g.slack) << (ok ? "" : "  VIOLATED") << "\n";
    }
  }
  add_suite(summary, "gen_energy", ge_ok, "worst slack / tolerance " + g6(ge_worst));

  SplittingOptions sopt;
  sopt.transient_fraction = c.transient_fraction;
  const auto d = run_splitting_analysis(traj, V, ledger, c.alpha, sopt);
  write_diagnostics_csv(s.out / "diagnostics.csv", d);
  const bool split_ok = d.annihilation_residual <= 1e-12 && d.multiplier_bounds &&
                        d.triangle_violation <= 1e-10 * std::max(1.0, std::sqrt(e0)) &&
                        d.completeness_residual <= 1e-12 && d.high_dominance && d.I_bounds_hold() &&
                        d.J_bounds_hold();
  add_suite(summary, "splitting", split_ok,
            "annihilation " + g6(d.annihilation_residual) + ", completeness " + g6(d.completeness_residual));
  s.report << "splitting (alpha " << g6(c.alpha) << "): E'-2EG^2 residual " << g6(d.annihilation_residual)
           << ", multiplier bounds " << (d.multiplier_bounds ? "ok" : "FAIL") << ", completeness "
           << g6(d.completeness_residual) << ", triangle violation " << g6(d.triangle_violation)
           << ", high dominance " << (d.high_dominance ? "ok" : "FAIL") << "\n";
  s.report << "  I2/I3/I4 pointwise bounds " << (d.I_bounds_hold() ? "hold" : "FAIL") << "\n";
  for (const auto& b : d.J)
    s.report << "  " << b.name << " " << g6(b.lhs) << " <= " << g6(b.rhs) << (b.holds() ? "" : "  FAIL") << "\n";
  s.report << "  budget ratio at t_max/2 " << g6(d.budget_ratio_half) << ", at t_max " << g6(d.budget_ratio_end)
           << (d.budget_trend() ? " (decreasing)" : " (not decreasing)") << "\n";
  s.report << "  tail dissipation monotone " << (d.tail_monotone ? "yes" : "no") << ", low mass monotone "
           << (d.low_monotone ? "yes" : "no") << ", high mass monotone " << (d.high_monotone ? "yes" : "no")
           << "\n";

  const auto decay = decay_report(traj, V, ledger, d, c.decay_threshold > 0.0 ? c.decay_threshold : 1.0);
  s.report << "decay:\n" << format_decay_report(decay);
  if (c.decay_threshold > 0.0)
    add_suite(summary, "decay", decay.pass(), "final/initial " + g6(decay.final_over_initial));
}

void write_report(Setup& s, const RunSummary& summary)
{
  std::ofstream out(s.out / "report.txt");
  out << "scenario " << to_string(s.config.scenario) << ", N " << s.config.N << ", L " << g6(s.config.L)
      << ", t_max " << g6(s.config.t_max) << ", dt " << g6(s.config.dt) << "\n";
  out << s.report.str();
  out << "suites:\n";
  for (const auto& suite : summary.suites)
    out << "  " << (suite.passed ? "PASS " : "FAIL ") << suite.name << ": " << suite.detail << "\n";
  out << (summary.passed() ? "RESULT PASS" : "RESULT FAIL") << "\n";
}

RunSummary execute(Setup& s, std::optional<EvolveState> resume_from)
{
  RunSummary summary;
  summary.output_dir = s.out;
  std::filesystem::create_directories(s.out / "checkpoints");
  {
    std::ofstream cfg(s.out / "config.yaml");
    cfg << to_yaml(s.config);
  }
  try {
    if (prepare(s, summary)) {
      auto opts = evolve_options(s.config);
      const auto dir = s.out / "checkpoints";
      const auto& config = s.config;
      opts.on_checkpoint = [&](const EvolveState& st) {
        char name[48];
        std::snprintf(name, sizeof name, "step_%08lld.ckpt", static_cast<long long>(st.step));
        write_state(dir / name, config, st);
      };
      const auto result = resume_from ? resume(std::move(*resume_from), *s.V, opts) : evolve(*s.w0, *s.V, opts);
      finish(s, result, summary);
    }
  } catch (const std::exception& e) {
    summary.failure = e.what();
    add_suite(summary, "run", false, e.what());
    s.report << "run aborted: " << e.what() << "\n";
  }
  write_report(s, summary);
  return summary;
}

} // namespace

std::string to_string(Scenario s)
{
  switch (s) {
  case Scenario::ZeroV:
    return "zero_V";
  case Scenario::SmallStationaryV:
    return "small_stationary_V";
  case Scenario::SelfSimilarV:
    return "self_similar_V";
  case Scenario::CalderonSplit:
    return "calderon_split";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& text)
{
  for (const auto s : {Scenario::ZeroV, Scenario::SmallStationaryV, Scenario::SelfSimilarV, Scenario::CalderonSplit})
    if (to_string(s) == text)
      return s;
  throw std::invalid_argument("unknown scenario '" + text + "'");
}

ConfigError::ConfigError(const std::string& field, int line, const std::string& message)
  : std::runtime_error("config" + (line > 0 ? " line " + std::to_string(line) : std::string()) +
                       (field.empty() ? std::string() : ", field '" + field + "'") + ": " + message),
    field_(field), message_(message), line_(line)
{}

void ExperimentConfig::validate() const
{
  try {
    grid().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("N", 0, e.what());
  }
  try {
    space.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("space", 0, e.what());
  }
  require(amplitude >= 0.0 && std::isfinite(amplitude), "amplitude", "must be non-negative");
  require(t_max >= 0.0 && std::isfinite(t_max), "t_max", "must be non-negative");
  require(dt > 0.0 && std::isfinite(dt), "dt", "must be positive");
  const double ratio = t_max / dt;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio), "t_max",
          "must be an integer multiple of dt");
  require(alpha > 0.0, "alpha", "must be positive");
  require(hardy_trials >= 1, "hardy_trials", "must be at least 1");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(checkpoint_every >= 0, "checkpoint_every", "must be non-negative");
  require(w0_rms >= 0.0, "w0_rms", "must be non-negative");
  require(w0_spectrum_exponent > 1.5, "w0_spectrum_exponent", "must exceed 3/2");
  require(w0_kmin >= 0.0, "w0_kmin", "must be non-negative");
  require(V_spectrum_exponent > 1.5, "V_spectrum_exponent", "must exceed 3/2");
  require(mild_horizon >= 0.0, "mild_horizon", "must be non-negative");
  require(mild_slices >= 1, "mild_slices", "must be at least 1");
  require(picard_max_iters >= 1, "picard_max_iters", "must be at least 1");
  require(picard_tol > 0.0, "picard_tol", "must be positive");
  require(calderon_R > 0.0, "calderon_R", "must be positive");
  require(u0_amplitude > 0.0, "u0_amplitude", "must be positive");
  require(store_every >= 1, "store_every", "must be at least 1");
  require(galerkin_m == 0.0 || (galerkin_m >= 1.0 && galerkin_m <= grid().kmax()), "galerkin_m",
          "must be 0 or lie in [1, kmax]");
  try {
    parse_quadrature(quadrature);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("quadrature", 0, e.what());
  }
  require(gen_energy_pairs >= 0 && gen_energy_pairs <= 210, "gen_energy_pairs", "must lie in [0, 210]");
  require(decay_threshold >= 0.0, "decay_threshold", "must be non-negative");
  require(transient_fraction >= 0.0 && transient_fraction < 1.0, "transient_fraction", "must lie in [0, 1)");
  require(morrey_center_stride >= 1, "morrey_center_stride", "must be at least 1");
}

ExperimentConfig parse_config(const std::string& yaml_text)
{
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  ExperimentConfig c;
  if (root.IsNull())
    return c;
  if (!root.IsMap())
    throw ConfigError("", root.Mark().line + 1, "top level must be a mapping of keys to values");

  std::map<std::string, const FieldCodec*> codecs;
  for (const auto& [name, codec] : field_table())
    codecs.emplace(name, &codec);
  std::map<std::string, int> lines;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const int line = kv.first.Mark().line + 1;
    if (!lines.emplace(key, line).second)
      throw ConfigError(key, line, "duplicate key");
    const auto it = codecs.find(key);
    if (it == codecs.end())
      throw ConfigError(key, line, "unknown key");
    if (!kv.second.IsScalar())
      throw ConfigError(key, line, "value must be a scalar");
    try {
      it->second->read(c, kv.second);
    } catch (const YAML::BadConversion&) {
      throw ConfigError(key, line, "cannot convert '" + kv.second.Scalar() + "'");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, line, e.what());
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    const auto it = lines.find(e.field());
    if (it == lines.end())
      throw;
    throw ConfigError(e.field(), it->second, e.message());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("", 0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const ExperimentConfig& config)
{
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  for (const auto& [name, codec] : field_table()) {
    e << YAML::Key << name << YAML::Value;
    codec.write(config, e);
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config)
{
  if (const char* env = std::getenv("NSSTAB_OUTPUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return config.output_dir;
}

bool RunSummary::passed() const
{
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

RunSummary run_experiment(const ExperimentConfig& config)
{
  config.validate();
  Setup s;
  s.config = config;
  s.out = resolve_output_dir(config);
  return execute(s, std::nullopt);
}

RunSummary replay_experiment(const std::filesystem::path& checkpoint, double extra_time)
{
  if (!(extra_time >= 0.0))
    throw std::invalid_argument("replay: extra time must be non-negative");
  const auto cc = read_checkpoint(checkpoint);
  if (cc.kind != kRunStateKind || cc.fields.size() != 1)
    throw CheckpointError(checkpoint.string() + " is not a run-state checkpoint");
  ExperimentConfig config;
  EvolveState state{0, cc.fields.front(), {}};
  try {
    config = parse_config(cc.meta.at("config").get<std::string>());
    state.step = cc.meta.at("step").get<std::int64_t>();
    state.ledger = ledger_from_json(cc.meta.at("ledger"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad run-state metadata in " + checkpoint.string() + ": " + e.what());
  }
  if (state.ledger.rows.size() != static_cast<std::size_t>(state.step) + 1)
    throw CheckpointError("ledger length does not match the step in " + checkpoint.string());
  state.w.set_divergence_free(true);
  config.t_max = static_cast<double>(state.step) * config.dt + extra_time;
  config.validate();

  Setup s;
  s.config = config;
  s.out = resolve_output_dir(config);
  return execute(s, std::move(state));
}

} // namespace nsstab
