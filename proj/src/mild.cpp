#include "nsstab/mild.hpp"

#include "nsstab/checkpoint.hpp"
#include "nsstab/nonlinear.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace nsstab {

namespace {

double sup_l2(const std::vector<SpectralVectorField>& slices)
{
  double s = 0.0;
  for (const auto& v : slices)
    s = std::max(s, l2_norm(v));
  return s;
}

double sup_l2_diff(const std::vector<SpectralVectorField>& a, const std::vector<SpectralVectorField>& b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s = std::max(s, l2_norm(a[i] - b[i]));
  return s;
}

double sup_space_norm(const std::vector<SpectralVectorField>& slices, const SpaceNorm& space,
                      const NormOptions& opts)
{
  double s = 0.0;
  for (const auto& v : slices)
    s = std::max(s, norm(v, space, opts));
  return s;
}

void check_time_grid(const std::vector<double>& times)
{
  if (times.empty() || times.front() != 0.0)
    throw std::invalid_argument("mild trajectory time grid must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("mild trajectory time grid must be strictly increasing");
}

} // namespace

bool MildTrajectory::is_zero() const
{
  return std::all_of(slices.begin(), slices.end(), [](const auto& s) { return s.is_zero(); });
}

SpectralVectorField MildTrajectory::at(double t) const
{
  if (slices.empty())
    throw std::logic_error("MildTrajectory::at on an empty trajectory");
  if (stationary || t <= 0.0)
    return slices.front();
  if (t >= times.back())
    return heat_semigroup(slices.back(), t - times.back());
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[i - 1], t1 = times[i];
  const double theta = (t - t0) / (t1 - t0);
  auto v = slices[i - 1] * (1.0 - theta);
  v += slices[i] * theta;
  v.set_divergence_free(true);
  return v;
}

std::vector<double> geometric_time_grid(double horizon, int slices)
{
  if (!(horizon > 0.0) || slices < 1)
    throw std::invalid_argument("geometric_time_grid: need horizon > 0 and at least one slice");
  std::vector<double> t(static_cast<std::size_t>(slices) + 1);
  for (int i = 0; i <= slices; ++i) {
    const double s = static_cast<double>(i) / slices;
    t[i] = horizon * s * s;
  }
  return t;
}

std::vector<SpectralVectorField> duhamel_trapezoid(const std::vector<double>& times,
                                                   const std::vector<SpectralVectorField>& integrand)
{
  std::vector<SpectralVectorField> out;
  out.reserve(times.size());
  out.emplace_back(integrand.front().table_ptr());
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double h = times[i] - times[i - 1];
    auto next = heat_semigroup(out.back() + integrand[i - 1] * (0.5 * h), h);
    next += integrand[i] * (0.5 * h);
    next.set_divergence_free(true);
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<SpectralVectorField> picard_map(const SpectralVectorField& V0, const std::vector<double>& times,
                                            const std::vector<SpectralVectorField>& current)
{
  std::vector<SpectralVectorField> B;
  B.reserve(current.size());
  for (const auto& v : current)
    B.push_back(v.is_zero() ? SpectralVectorField(v.table_ptr()) : projected_flux_divergence(v, nullptr));
  const auto duhamel = duhamel_trapezoid(times, B);
  std::vector<SpectralVectorField> next;
  next.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto v = heat_semigroup(V0, times[i]);
    v -= duhamel[i];
    v.set_divergence_free(true);
    next.push_back(std::move(v));
  }
  return next;
}

MildTrajectory picard_iterate(const SpectralVectorField& V0, const std::vector<double>& times, int max_iters,
                              double tol, const SpaceNorm& space, const NormOptions& opts)
{
  check_time_grid(times);
  if (!(tol > 0.0))
    throw std::invalid_argument("picard_iterate: tolerance must be positive");
  if (max_iters < 1)
    throw std::invalid_argument("picard_iterate: max_iters must be >= 1");
  if (V0.divergence_residual() > 1e-12)
    throw std::invalid_argument("picard_iterate: initial data is not divergence-free");
  space.validate();

  MildTrajectory traj;
  traj.grid = V0.grid();
  traj.times = times;
  traj.space = space;

  std::vector<SpectralVectorField> current(times.size(), SpectralVectorField(V0.table_ptr()));
  double previous_update = 0.0;
  bool converged = false;
  for (int n = 0; n < max_iters; ++n) {
    auto next = picard_map(V0, times, current);
    const double update = sup_l2_diff(next, current);
    const double size = sup_l2(current);
    ++traj.iterations;
    if (n > 0) {
      const double ratio = previous_update > 0.0 ? update / previous_update : 0.0;
      traj.update_ratios.push_back(ratio);
      traj.contraction_history.push_back(update / size);
      if (ratio >= 1.0)
        throw PicardFailure("picard_iterate: iteration does not contract (update ratio " + std::to_string(ratio) +
                                ")",
                            traj.contraction_history, traj.update_ratios);
    }
    current = std::move(next);
    previous_update = update;
    if (update == 0.0 || (n > 0 && update / size < tol)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw PicardFailure("picard_iterate: no convergence within " + std::to_string(max_iters) + " iterations",
                        traj.contraction_history, traj.update_ratios);

  traj.slices = std::move(current);
  traj.sup_norm = sup_space_norm(traj.slices, space, opts);
  return traj;
}

MildTrajectory stationary_trajectory(const SpectralVectorField& V, const SpaceNorm& space, const NormOptions& opts)
{
  space.validate();
  MildTrajectory traj;
  traj.grid = V.grid();
  traj.times = {0.0};
  traj.slices = {V};
  traj.space = space;
  traj.stationary = true;
  traj.sup_norm = norm(V, space, opts);
  return traj;
}

MildTrajectory zero_trajectory(const GridSpec& grid, const SpaceNorm& space)
{
  SpectralVectorField zero(grid);
  zero.set_divergence_free(true);
  return stationary_trajectory(zero, space);
}

SpectralVectorField homogeneous_minus_one_data(const GridSpec& grid, double amplitude, std::uint64_t profile_seed)
{
  if (!(amplitude > 0.0))
    throw std::invalid_argument("homogeneous_minus_one_data: amplitude must be positive");
  return leray_project(homogeneous_profile(grid, amplitude, profile_seed));
}

CalderonSplit calderon_split(const SpectralVectorField& u0, double R)
{
  if (!(R > 0.0))
    throw std::invalid_argument("calderon_split: R must be positive");
  const auto phys = to_physical(u0);
  PhysicalVectorField smooth(u0.grid()), rough(u0.grid());
  for (std::size_t i = 0; i < phys.size(); ++i) {
    const double mag = phys.magnitude(i);
    const double factor = mag > R ? R / mag : 1.0;
    for (int c = 0; c < 3; ++c) {
      smooth.comps[c][i] = phys.comps[c][i] * factor;
      rough.comps[c][i] = phys.comps[c][i] - smooth.comps[c][i];
    }
  }
  CalderonSplit out{R, leray_project(to_spectral(smooth)), leray_project(to_spectral(rough)), 0.0, 0.0};
  out.l3_of_smooth = norm(out.V0, SpaceNorm::of(SpaceNorm::Tag::Lebesgue3));
  out.l2_of_rough = l2_norm(out.w0);
  return out;
}

std::vector<SpectralVectorField> test_field_battery(const GridSpec& grid)
{
  std::vector<SpectralVectorField> out;
  const double L = grid.box_length;
  for (int k = 0; k < 8; ++k) {
    const std::array<double, 3> c{L * ((k & 1) ? 0.25 : -0.25), L * ((k & 2) ? 0.25 : -0.25),
                                  L * ((k & 4) ? 0.25 : -0.25)};
    out.push_back(solenoidal_bump(grid, c, L / 12.0, 1000 + static_cast<std::uint64_t>(k)));
  }
  return out;
}

StandingAssumptionReport verify_standing_assumptions(MildTrajectory& traj, double K_hat)
{
  traj.K_used = K_hat;
  StandingAssumptionReport r;
  r.sup_norm = traj.sup_norm;
  r.K_hat = K_hat;
  r.product = K_hat * traj.sup_norm;
  r.admissible = r.product < 1.0;
  for (const auto& s : traj.slices)
    r.max_divergence_residual = std::max(r.max_divergence_residual, s.divergence_residual());
  if (traj.slices.size() > 1 && !traj.is_zero()) {
    const auto battery = test_field_battery(traj.grid);
    for (std::size_t i = 1; i < traj.slices.size(); ++i) {
      const auto d = traj.slices[i] - traj.slices[i - 1];
      for (const auto& phi : battery)
        r.continuity_proxy = std::max(r.continuity_proxy, std::abs(l2_inner(d, phi)));
    }
  }
  return r;
}

void save_trajectory(const std::filesystem::path& dir, const MildTrajectory& traj)
{
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.slices.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%05zu.ckpt", i);
    write_field(dir / name, traj.slices[i], {{"time", traj.times[i]}});
    files.push_back(name);
  }
  const nlohmann::json manifest{{"version", kCheckpointVersion},
                                {"grid", grid_to_json(traj.grid)},
                                {"times", traj.times},
                                {"space", traj.space.to_string()},
                                {"sup_norm", traj.sup_norm},
                                {"K_used", traj.K_used},
                                {"stationary", traj.stationary},
                                {"iterations", traj.iterations},
                                {"contraction_history", traj.contraction_history},
                                {"update_ratios", traj.update_ratios},
                                {"files", files}};
  std::ofstream out(dir / "manifest.json");
  if (!out)
    throw CheckpointError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

MildTrajectory load_trajectory(const std::filesystem::path& dir)
{
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw CheckpointError("missing manifest in " + dir.string());
  MildTrajectory traj;
  try {
    const auto m = nlohmann::json::parse(in);
    if (m.at("version").get<int>() != kCheckpointVersion)
      throw CheckpointError("unsupported trajectory version in " + dir.string());
    traj.grid = grid_from_json(m.at("grid"));
    traj.times = m.at("times").get<std::vector<double>>();
    traj.space = SpaceNorm::parse(m.at("space").get<std::string>());
    traj.sup_norm = m.at("sup_norm").get<double>();
    traj.K_used = m.at("K_used").get<double>();
    traj.stationary = m.at("stationary").get<bool>();
    traj.iterations = m.at("iterations").get<int>();
    traj.contraction_history = m.at("contraction_history").get<std::vector<double>>();
    traj.update_ratios = m.at("update_ratios").get<std::vector<double>>();
    for (const auto& f : m.at("files"))
      traj.slices.push_back(read_field(dir / f.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad manifest in " + dir.string() + ": " + e.what());
  }
  if (traj.slices.size() != traj.times.size())
    throw CheckpointError("manifest in " + dir.string() + " lists a different number of slices and times");
  for (auto& s : traj.slices)
    s.set_divergence_free(true);
  return traj;
}

} // namespace nsstab
