#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "mfcl/experiments.hpp"
#include "mfcl/format.hpp"
#include "mfcl/io.hpp"
#include "mfcl/parallel.hpp"

using namespace mfcl;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("--config", c.config, "configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--threads", c.threads, "worker threads (MFCL_THREADS overrides)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

SimConfig load(const Common& c) {
  SimConfig cfg = parse_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

nlohmann::json table_json(const RateTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n}, {"replicates", r.replicates}, {"mean", r.mean}, {"std_error", r.std_error}});
  return {{"id", t.id},
          {"dim", t.dim},
          {"rows", rows},
          {"slope", t.fit.slope},
          {"slope_std_error", t.fit.std_error},
          {"intercept", t.fit.intercept},
          {"theory_slope", t.theory_slope},
          {"strictly_decreasing", t.strictly_decreasing()}};
}

nlohmann::json tally_json(const MonitorTally& m) {
  return {{"runs", m.runs},
          {"min_velocity_slack", m.min_velocity_slack},
          {"min_support_slack", m.min_support_slack},
          {"min_printed_slack", m.min_printed_slack}};
}

void finish(const std::map<std::string, std::string>& records, RunManifest& m, const Common& c,
            std::chrono::steady_clock::time_point start) {
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(records, m, c.out);
  std::cout << "wrote " << records.size() << " files and manifest.json to " << c.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle, mean-field and Euler laboratory for chemotactic alignment dynamics"};
  app.require_subcommand(1);
  Common common;
  double shift = 0.05;
  double h_fixed = 1.0 / 512.0;
  std::vector<double> spacings{1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  Index euler_reps = 8;

  auto* simulate_cmd = app.add_subcommand("simulate", "run the particle system and record states");
  add_common(simulate_cmd, common);
  auto* fg_cmd = app.add_subcommand("rates-fg", "empirical-measure sampling rate");
  add_common(fg_cmd, common);
  auto* mf_cmd = app.add_subcommand("rates-meanfield", "particle vs Vlasov reference rate");
  add_common(mf_cmd, common);
  auto* gap_cmd = app.add_subcommand("rates-chemgap", "chemical gradient gap rate");
  add_common(gap_cmd, common);
  auto* dob_cmd = app.add_subcommand("dobrushin", "stability of two Vlasov solutions");
  add_common(dob_cmd, common);
  dob_cmd->add_option("--shift", shift, "position shift of the second cloud")->capture_default_str();
  auto* euler_cmd = app.add_subcommand("euler-compare", "particles against the pressureless Euler solver");
  add_common(euler_cmd, common);
  euler_cmd->add_option("--spacing", h_fixed, "Euler spacing for the N study")->capture_default_str();
  euler_cmd->add_option("--spacings", spacings, "Euler spacings for the h study");
  euler_cmd->add_option("--replicates", euler_reps, "particle replicates per size")->capture_default_str();
  auto* lemma_cmd = app.add_subcommand("check-lemmas", "marginal identity and coupling inequality");
  add_common(lemma_cmd, common, false);

  CLI11_PARSE(app, argc, argv);
  const int threads = resolve_threads(common.threads);
  const auto start = std::chrono::steady_clock::now();

  try {
    RunManifest m;
    m.command = app.get_subcommands().front()->get_name();
    std::map<std::string, std::string> rec;

    if (*simulate_cmd) {
      const SimConfig c = load(common);
      const Trajectory tr = simulate(c, 0, threads);
      m.config = c;
      m.constants = tr.constants;
      m.steps = tr.steps;
      m.results["initial_radius"] = tr.initial_radius;
      m.results["min_velocity_slack"] = tr.min_velocity_slack();
      m.results["min_support_slack"] = tr.min_support_slack();
      m.criteria["bounds_hold"] = true;
      rec["trajectory.csv"] = trajectory_csv(tr);
      rec["monitor.csv"] = monitor_csv(tr);
      rec["field.csv"] = field_csv(tr.final_state().grid);
    } else if (*fg_cmd) {
      const SimConfig c = load(common);
      const auto& e = c.experiment;
      const RateTable t =
          fg_rate_experiment(c.initial, c.dim, e.sizes, e.replicates, c.seed, e.reference_size, threads);
      m.config = c;
      m.results["table"] = table_json(t);
      m.criteria["slope_le_-0.45"] = t.fit.slope <= -0.45;
      rec["rates.csv"] = rate_table_csv(t);
      rec["replicates.csv"] = replicate_csv(t);
    } else if (*mf_cmd || *gap_cmd) {
      const SimConfig c = load(common);
      const MeanFieldStudy s = meanfield_study(c, threads);
      const RateTable& t = *mf_cmd ? s.distance : s.gap;
      m.config = c;
      m.constants = bound_constants(c, c.experiment.time);
      m.results["table"] = table_json(t);
      m.results["monitor"] = tally_json(s.monitor);
      m.criteria["strictly_decreasing"] = t.strictly_decreasing();
      m.criteria["slope_le_-0.45"] = t.fit.slope <= -0.45;
      rec["rates.csv"] = rate_table_csv(t);
      rec["replicates.csv"] = replicate_csv(t);
    } else if (*dob_cmd) {
      const SimConfig c = load(common);
      const ParticleEnsemble r1 = quadrature_initial(c.initial, c.dim, c.experiment.reference_size);
      Eigen::MatrixXd x = r1.positions();
      x.array() += shift;
      const ParticleEnsemble r2(x, r1.velocities(), r1.weights());
      MonitorTally tally;
      const auto samples = dobrushin_experiment(r1, r2, c, threads, &tally);
      bool holds = true;
      for (const auto& s : samples) holds = holds && s.measured <= s.bound;
      m.config = c;
      m.constants = bound_constants(c, c.horizon);
      m.results["monitor"] = tally_json(tally);
      m.criteria["measured_le_bound"] = holds;
      rec["dobrushin.csv"] = dobrushin_csv(samples);
    } else if (*euler_cmd) {
      const SimConfig c = load(common);
      const EulerCompare r = euler_compare(c, c.experiment.sizes, h_fixed, spacings, euler_reps, threads);
      bool dec_n = true, dec_h = true;
      for (std::size_t k = 1; k < r.by_n.size(); ++k) dec_n = dec_n && r.by_n[k].mean < r.by_n[k - 1].mean;
      for (std::size_t k = 1; k < r.by_h.size(); ++k) dec_h = dec_h && r.by_h[k].mean < r.by_h[k - 1].mean;
      m.config = c;
      m.results["mass_error"] = r.mass_error;
      m.results["crossed"] = r.crossed;
      m.results["monitor"] = tally_json(r.monitor);
      m.criteria["decreasing_in_n"] = dec_n;
      m.criteria["decreasing_in_h"] = dec_h;
      m.criteria["mass_conserved"] = r.mass_error <= 1e-10;
      rec["euler_compare.csv"] = euler_compare_csv(r);
    } else if (*lemma_cmd) {
      Eigen::MatrixXd z(2, 5);
      z << 0.1, -0.3, 0.1, 0.7, 0.2, 0.5, 0.0, 0.5, -0.2, 0.4;
      std::string csv = "n,atom_x,atom_v,lhs_count,factorial,rhs_count,equal\n";
      bool all = true;
      for (int n = 1; n <= 5; ++n) {
        const MarginalReport r = marginal_lemma_check(z.leftCols(n));
        all = all && r.equal;
        for (const auto& a : r.atoms)
          csv += std::to_string(n) + "," + format_real(a.z(0)) + "," + format_real(a.z(1)) + "," +
                 std::to_string(a.lhs_count) + "," + std::to_string(r.factorial) + "," +
                 std::to_string(a.rhs_count) + "," + (r.equal ? "1" : "0") + "\n";
      }
      m.criteria["marginal_identity"] = all;
      rec["marginal.csv"] = csv;
      if (!common.config.empty()) {
        const SimConfig c = load(common);
        const auto a = phase_cloud(initial_ensemble(c, c.particles, 0));
        const auto b = phase_cloud(initial_ensemble(c, c.particles, 1));
        const TransportResult plan = w2_exact_uniform(a, b);
        const CoupledSeries s = coupled_pair_evolution(a, b, plan.plan, c, threads);
        bool holds = true;
        for (const auto& p : s.samples) holds = holds && p.distance <= p.envelope;
        m.config = c;
        m.constants = bound_constants(c, c.horizon);
        m.criteria["coupling_le_envelope"] = holds;
        rec["coupling.csv"] = coupling_csv(s);
      }
    }
    finish(rec, m, common, start);
    bool ok = true;
    for (const auto& [name, pass] : m.criteria) {
      std::cout << (pass ? "PASS " : "FAIL ") << name << "\n";
      ok = ok && pass;
    }
    return ok ? 0 : 4;
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
