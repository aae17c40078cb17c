#include "mfcl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mfcl/format.hpp"
#include "mfcl/parallel.hpp"

namespace mfcl {

namespace {

RateRow summarize(Index n, const std::vector<double>& xs) {
  RateRow row{n, static_cast<Index>(xs.size()), 0.0, 0.0};
  if (xs.empty()) return row;
  const double k = static_cast<double>(xs.size());
  row.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - row.mean) * (x - row.mean);
    row.std_error = std::sqrt(ss / (k - 1.0) / k);
  }
  return row;
}

void finish_table(RateTable& t, const std::vector<Index>& sizes) {
  t.rows.clear();
  for (std::size_t k = 0; k < sizes.size(); ++k) t.rows.push_back(summarize(sizes[k], t.samples[k]));
  t.theory_slope = sizes.size() >= 2 ? theory_slope(sizes, t.dim) : 0.0;
  const bool positive = std::all_of(t.rows.begin(), t.rows.end(), [](const RateRow& r) { return r.mean > 0.0; });
  if (t.rows.size() >= 3 && positive)
    t.fit = fit_slope(t);
  else
    t.fit = {std::nan(""), std::nan(""), std::nan("")};
}

void check_sizes(const std::vector<Index>& sizes) {
  require(!sizes.empty(), "experiment needs at least one size");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    require(sizes[k] >= 2, "experiment sizes must be at least 2");
    require(k == 0 || sizes[k] > sizes[k - 1], "experiment sizes must be strictly increasing");
  }
}

template <typename Job>
void run_jobs(Index count, int threads, Job&& job) {
  parallel_for(count, threads, [&](Index k) { job(k); });
}

std::string context(Index n, Index rep) {
  return "N=" + std::to_string(n) + " replicate " + std::to_string(rep) + ": ";
}

}  // namespace

bool RateTable::strictly_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].mean < rows[k - 1].mean)) return false;
  return !rows.empty();
}

SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& mean) {
  require(n.size() == mean.size(), "fit_slope: size mismatch");
  require(n.size() >= 3, "fit_slope needs at least 3 rows");
  const auto k = static_cast<double>(n.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(n.size()), y(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    require(n[i] > 0.0 && mean[i] > 0.0, "fit_slope needs positive sizes and means");
    x[i] = std::log(n[i]);
    y[i] = std::log(mean[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "fit_slope needs distinct sizes");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.std_error = n.size() > 2 ? std::sqrt(rss / (k - 2.0) / sxx) : 0.0;
  return f;
}

SlopeFit fit_slope(const RateTable& table) {
  std::vector<double> n, m;
  for (const auto& r : table.rows) {
    n.push_back(static_cast<double>(r.n));
    m.push_back(r.mean);
  }
  return fit_slope(n, m);
}

double theory_slope(const std::vector<Index>& sizes, int dim) {
  std::vector<double> n, m;
  for (Index s : sizes) {
    n.push_back(static_cast<double>(s));
    m.push_back(rate_cd(s, dim));
  }
  if (n.size() < 3) {
    require(n.size() == 2, "theory_slope needs two sizes");
    return std::log(m[1] / m[0]) / std::log(n[1] / n[0]);
  }
  return fit_slope(n, m).slope;
}

void MonitorTally::add(const Trajectory& tr) {
  for (const auto& s : tr.monitor) {
    min_velocity_slack = std::min(min_velocity_slack, s.velocity_slack);
    min_support_slack = std::min(min_support_slack, s.support_slack);
    min_printed_slack = std::min(min_printed_slack, s.printed_slack);
  }
  ++runs;
}

void MonitorTally::merge(const MonitorTally& o) {
  min_velocity_slack = std::min(min_velocity_slack, o.min_velocity_slack);
  min_support_slack = std::min(min_support_slack, o.min_support_slack);
  min_printed_slack = std::min(min_printed_slack, o.min_printed_slack);
  runs += o.runs;
}

double phase_w2_squared(const ParticleEnsemble& a, const ParticleEnsemble& b) {
  require(a.dim() == b.dim(), "phase_w2_squared: dimension mismatch");
  const WeightedCloud ca = phase_cloud(a), cb = phase_cloud(b);
  std::vector<Index> rows;
  for (Index r = 0; r < ca.dim(); ++r) {
    const double c = ca.points(r, 0);
    const bool constant = (ca.points.row(r).array() == c).all() && (cb.points.row(r).array() == c).all();
    if (!constant) rows.push_back(r);
  }
  if (rows.empty()) return 0.0;
  WeightedCloud ra{Eigen::MatrixXd(static_cast<Index>(rows.size()), ca.size()), ca.weights};
  WeightedCloud rb{Eigen::MatrixXd(static_cast<Index>(rows.size()), cb.size()), cb.weights};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ra.points.row(static_cast<Index>(k)) = ca.points.row(rows[k]);
    rb.points.row(static_cast<Index>(k)) = cb.points.row(rows[k]);
  }
  const double d = w2_distance(ra, rb);
  return d * d;
}

RateTable fg_rate_experiment(const InitialSpec& rho, int dim, const std::vector<Index>& sizes,
                             Index replicates, std::uint64_t seed, Index reference_size,
                             int threads) {
  check_sizes(sizes);
  require(replicates >= 1, "need at least one replicate");
  const ParticleEnsemble ref = quadrature_initial(rho, dim, reference_size);
  RateTable t;
  t.id = "fournier-guillin";
  t.dim = rho.spread_dimension(dim) > 0 ? rho.spread_dimension(dim) : dim;
  t.samples.assign(sizes.size(), std::vector<double>(static_cast<std::size_t>(replicates)));
  const Index jobs = static_cast<Index>(sizes.size()) * replicates;
  run_jobs(jobs, threads, [&](Index k) {
    const auto s = static_cast<std::size_t>(k / replicates);
    const Index rep = k % replicates;
    const ParticleEnsemble e = sample_initial(rho, dim, sizes[s], seed, static_cast<std::uint64_t>(rep));
    t.samples[s][static_cast<std::size_t>(rep)] = phase_w2_squared(e, ref);
  });
  finish_table(t, sizes);
  const double floor = quadrature_floor(rho, dim, reference_size);
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& r : t.rows) smallest = std::min(smallest, std::sqrt(r.mean));
  if (floor > 0.1 * smallest)
    throw DomainError("reference quadrature floor " + format_real(floor) +
                      " exceeds 10% of the smallest distance " + format_real(smallest) +
                      "; increase the reference size");
  return t;
}

SimConfig at_experiment_time(SimConfig config) {
  if (config.horizon == config.experiment.time) return config;
  config.horizon = config.experiment.time;
  return validate(std::move(config));
}

MeanFieldStudy meanfield_study(const SimConfig& config, int threads) {
  const SimConfig c = at_experiment_time(config);
  const auto& sizes = c.experiment.sizes;
  check_sizes(sizes);
  const Index reps = c.experiment.replicates;
  require(c.experiment.reference_size >= 4 * sizes.back(),
          "reference size must be at least 4 times the largest N");

  MeanFieldStudy out;
  const Trajectory ref = vlasov_reference(c, c.experiment.reference_size, threads);
  out.monitor.add(ref);
  const SimState& rs = ref.final_state();

  out.distance.id = "meanfield";
  out.gap.id = "chemgap";
  out.distance.dim = out.gap.dim = c.dim;
  out.distance.samples.assign(sizes.size(), std::vector<double>(static_cast<std::size_t>(reps)));
  out.gap.samples = out.distance.samples;
  std::vector<MonitorTally> tallies(sizes.size() * static_cast<std::size_t>(reps));
  const Index jobs = static_cast<Index>(sizes.size()) * reps;
  run_jobs(jobs, threads, [&](Index k) {
    const auto s = static_cast<std::size_t>(k / reps);
    const Index rep = k % reps;
    try {
      const Trajectory tr = simulate(c, initial_ensemble(c, sizes[s], static_cast<std::uint64_t>(rep)));
      tallies[static_cast<std::size_t>(k)].add(tr);
      const SimState& fs = tr.final_state();
      out.distance.samples[s][static_cast<std::size_t>(rep)] = phase_w2_squared(fs.ensemble, rs.ensemble);
      const double g = c.evolves_field() ? grad_gap_sup(fs.grid, rs.grid) : 0.0;
      out.gap.samples[s][static_cast<std::size_t>(rep)] = g * g;
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(context(sizes[s], rep) + e.what());
    }
  });
  for (const auto& t : tallies) out.monitor.merge(t);
  finish_table(out.distance, sizes);
  finish_table(out.gap, sizes);
  return out;
}

RateTable meanfield_experiment(const SimConfig& config, int threads) {
  return meanfield_study(config, threads).distance;
}

RateTable chem_gap_experiment(const SimConfig& config, int threads) {
  return meanfield_study(config, threads).gap;
}

std::vector<FrozenGapSample> frozen_gap_check(const SimConfig& config, int threads) {
  SimConfig c = config;
  c.kernel.kind = KernelSpec::Kind::Zero;
  c.eta = 0.0;
  c.initial.monokinetic = true;
  c.initial.profile = VelocityProfile{};
  c = at_experiment_time(validate(std::move(c)));
  const auto& sizes = c.experiment.sizes;
  check_sizes(sizes);
  const Index reps = c.experiment.replicates;
  const Trajectory ref = vlasov_reference(c, c.experiment.reference_size, threads);
  const double lip = bound_constants(c, c.horizon).lip_grad_chi;

  std::vector<FrozenGapSample> out(sizes.size() * static_cast<std::size_t>(reps));
  run_jobs(static_cast<Index>(out.size()), threads, [&](Index k) {
    const auto s = static_cast<std::size_t>(k / reps);
    const Index rep = k % reps;
    const ParticleEnsemble init = initial_ensemble(c, sizes[s], static_cast<std::uint64_t>(rep));
    const Trajectory tr = simulate(c, init);
    FrozenGapSample& f = out[static_cast<std::size_t>(k)];
    f.n = sizes[s];
    f.replicate = rep;
    f.gap = grad_gap_sup(tr.final_state().grid, ref.final_state().grid);
    f.w2 = std::sqrt(phase_w2_squared(init, ref.states.front().ensemble));
    f.bound = c.horizon * lip * f.w2;
  });
  return out;
}

std::vector<DobrushinSample> dobrushin_experiment(const ParticleEnsemble& rho1,
                                                  const ParticleEnsemble& rho2,
                                                  const SimConfig& config, int threads,
                                                  MonitorTally* tally) {
  const Trajectory t1 = simulate(config, rho1, threads);
  const Trajectory t2 = simulate(config, rho2, threads);
  if (tally) {
    tally->add(t1);
    tally->add(t2);
  }
  require(t1.states.size() == t2.states.size(), "trajectories must share reporting times");
  const double w0 = phase_w2_squared(rho1, rho2);
  std::vector<DobrushinSample> out;
  for (std::size_t k = 0; k < t1.states.size(); ++k) {
    const double t = t1.states[k].t;
    out.push_back({t, phase_w2_squared(t1.states[k].ensemble, t2.states[k].ensemble),
                   t1.constants.dobrushin_factor(t) * w0});
  }
  return out;
}

MarginalReport marginal_lemma_check(const Eigen::MatrixXd& Z) {
  const Index dz = Z.rows();
  const int n = static_cast<int>(Z.cols());
  require(n >= 1 && n <= 5, "marginal_lemma_check: 1 <= N <= 5");
  MarginalReport rep;
  rep.n = n;
  for (int k = 2; k <= n; ++k) rep.factorial *= k;

  const WeightedCloud sym = symmetrized_delta(Z);
  require(sym.size() == rep.factorial, "symmetrized delta must hold N! configurations");
  using Key = std::vector<double>;
  std::map<Key, std::pair<long long, long long>> counts;
  auto key = [&](const Eigen::MatrixXd& m, Index col, Index row0) {
    Key k(static_cast<std::size_t>(dz));
    for (Index r = 0; r < dz; ++r) k[static_cast<std::size_t>(r)] = m(row0 + r, col);
    return k;
  };
  const double share = 1.0 / static_cast<double>(rep.factorial);
  for (Index s = 0; s < sym.size(); ++s) {
    // Every configuration carries exactly 1/N!, so masses are integer counts.
    require(sym.weights(s) == share, "symmetrized delta weights must equal 1/N!");
    counts[key(sym.points, s, 0)].first += 1;
  }
  for (Index j = 0; j < n; ++j) counts[key(Z, j, 0)].second += 1;

  rep.equal = true;
  for (const auto& [z, c] : counts) {
    MarginalAtom a;
    a.z = Eigen::Map<const Eigen::VectorXd>(z.data(), dz);
    a.lhs_count = c.first;
    a.rhs_count = c.second;
    // lhs / N! == rhs / N
    if (a.lhs_count * n != a.rhs_count * rep.factorial) rep.equal = false;
    rep.atoms.push_back(std::move(a));
  }
  return rep;
}

double euler_time_step(const SimConfig& c, double spacing, double t_end) {
  const double umax = c.initial.profile.max_abs(c.initial.position.lo(), c.initial.position.hi());
  double dt = c.dt;
  if (umax > 0.0) dt = std::min(dt, 0.25 * spacing / umax);
  if (t_end <= 0.0) return dt;
  const double steps = std::ceil(t_end / dt - 1e-9);
  return t_end / steps;
}

double euler_momentum_drift(const SimConfig& config, Index cells, double t_end) {
  const Model model = make_model(config);
  EulerState s = euler_initial(config, cells);
  const double dt = euler_time_step(config, s.spacing(), t_end);
  const auto steps = static_cast<Index>(std::llround(t_end / dt));
  const double p0 = s.momentum();
  double drift = 0.0;
  for (Index k = 0; k < steps; ++k) {
    s = euler_step(s, dt, model);
    drift = std::max(drift, std::abs(s.momentum() - p0));
  }
  return drift;
}

EulerCompare euler_compare(const SimConfig& config, const std::vector<Index>& sizes, double h_fixed,
                           const std::vector<double>& spacings, Index replicates, int threads) {
  const SimConfig c = at_experiment_time(config);
  require(c.dim == 1 && c.initial.monokinetic && c.cloud.empty(),
          "euler_compare needs one-dimensional monokinetic data");
  check_sizes(sizes);
  require(replicates >= 1, "need at least one replicate");
  const Model model = make_model(c);
  const double t_end = c.horizon;
  const double a = c.grid.half_width;

  EulerCompare out;
  auto euler_at = [&](double h) {
    const auto cells = static_cast<Index>(std::llround(2.0 * a / h));
    require(std::abs(static_cast<double>(cells) * h - 2.0 * a) <= 1e-9 * a,
            "spacing must divide the box");
    const EulerState s0 = euler_initial(c, cells);
    EulerRun run = run_euler(s0, euler_time_step(c, h, t_end), t_end, model);
    out.mass_error = std::max(out.mass_error, std::abs(run.state.mass() - s0.mass()));
    out.crossed = out.crossed || run.crossed;
    return run.state;
  };

  // Particle runs: every size, replicates keyed by id.
  std::vector<std::vector<ParticleEnsemble>> finals(sizes.size());
  std::vector<MonitorTally> tallies(sizes.size() * static_cast<std::size_t>(replicates));
  for (auto& f : finals) f.reserve(static_cast<std::size_t>(replicates));
  std::vector<std::optional<ParticleEnsemble>> slots(tallies.size());
  run_jobs(static_cast<Index>(slots.size()), threads, [&](Index k) {
    const auto s = static_cast<std::size_t>(k / replicates);
    const Index rep = k % replicates;
    try {
      const Trajectory tr =
          simulate(c, monokinetic_sample(c.initial, sizes[s], c.seed, static_cast<std::uint64_t>(rep)));
      tallies[static_cast<std::size_t>(k)].add(tr);
      slots[static_cast<std::size_t>(k)] = tr.final_state().ensemble;
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(context(sizes[s], rep) + e.what());
    }
  });
  for (std::size_t k = 0; k < slots.size(); ++k) {
    finals[k / static_cast<std::size_t>(replicates)].push_back(std::move(*slots[k]));
    out.monitor.merge(tallies[k]);
  }

  auto row = [&](Index n, const EulerState& s, const std::vector<ParticleEnsemble>& ens) {
    std::vector<double> d(ens.size());
    run_jobs(static_cast<Index>(ens.size()), threads, [&](Index r) {
      const double v = monokinetic_distance(ens[static_cast<std::size_t>(r)], s);
      d[static_cast<std::size_t>(r)] = v * v;
    });
    const RateRow rr = summarize(n, d);
    return EulerCompareRow{n, s.cells(), s.spacing(), rr.mean, rr.std_error};
  };

  const EulerState fixed = euler_at(h_fixed);
  for (std::size_t s = 0; s < sizes.size(); ++s) out.by_n.push_back(row(sizes[s], fixed, finals[s]));
  for (double h : spacings) out.by_h.push_back(row(sizes.back(), euler_at(h), finals.back()));
  return out;
}

}  // namespace mfcl
