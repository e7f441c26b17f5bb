#include "vortexlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vortexlab/binary_io.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/kernels.hpp"
#include "vortexlab/mckean_vlasov.hpp"

namespace vortex::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

bool Fingerprints::coherent() const {
  if (fine_common != spde_consumed || fine_common != coarse_source || !coarse_sums_exact) return false;
  for (auto s : particle_sources) {
    if (s != fine_common) return false;
  }
  for (auto c : particle_consumed) {
    if (c != coarse_common) return false;
  }
  return true;
}

bool coarse_sums_exact(const noise::NoisePaths& fine, const noise::NoisePaths& coarse, int factor) {
  if (coarse.steps() * factor != fine.steps() || coarse.dimension() != fine.dimension()) return false;
  for (int j = 0; j < coarse.steps(); ++j) {
    for (int k = 0; k < fine.dimension(); ++k) {
      double acc = 0.0;
      for (int q = 0; q < factor; ++q) acc += fine.common(j * factor + q, k);
      if (acc != coarse.common(j, k)) return false;
    }
  }
  return true;
}

spectral::SpectralField initial_vorticity(const config::RunConfig& cfg) {
  return spectral::to_spectral(cfg.intensity.mean() * cfg.density.grid(cfg.grid), 0.0);
}

namespace {

using Clock = std::chrono::steady_clock;

class Manifest {
 public:
  Manifest(std::string root, std::string command, const config::RunConfig& cfg)
      : root_(std::move(root)), start_(Clock::now()) {
    doc_["manifest_version"] = 1;
    doc_["command"] = std::move(command);
    doc_["code_version"] = kVersion;
    doc_["config"] = cfg.source;
    const std::string canonical = cfg.source.dump();
    doc_["config_hash"] = io::hex64(io::fnv1a(std::as_bytes(std::span(canonical.data(), canonical.size()))));
    doc_["seeds"]["master_seed"] = cfg.master_seed;
  }

  std::string path(const std::string& rel) {
    artifacts_.push_back(rel);
    return (fs::path(root_) / rel).string();
  }

  json& doc() { return doc_; }

  void write() {
    json files = json::object();
    for (const auto& rel : artifacts_) files[rel] = io::hex64(io::fnv1a_file((fs::path(root_) / rel).string()));
    doc_["artifacts"] = files;
    // Every density pair this process compared, so callers can audit tv <= sqrt(2 H).
    const metrics::CkpLedger ckp = metrics::ckp_ledger();
    doc_["ckp_ledger"] = {{"pairs", ckp.pairs}, {"violations", ckp.violations}};
    doc_["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    std::ofstream out(fs::path(root_) / "manifest.json");
    if (!out) throw ValidationError("cannot write manifest in " + root_);
    out << doc_.dump(2) << '\n';
  }

 private:
  std::string root_;
  Clock::time_point start_;
  json doc_;
  std::vector<std::string> artifacts_;
};

void prepare(const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "fields");
  fs::create_directories(fs::path(out_dir) / "particles");
}

std::string indexed(const std::string& stem, int k, const std::string& ext) {
  std::ostringstream s;
  s << stem << std::setw(3) << std::setfill('0') << k << ext;
  return s.str();
}

// Normalized density on the g x g subgrid of a field's physical values.
metrics::GriddedDensity density_on_subgrid(const spectral::SpectralField& v, int g) {
  const Eigen::ArrayXXd phys = spectral::to_physical(v);
  const int stride = v.n() / g;
  Eigen::ArrayXXd sub(g, g);
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) sub(i, j) = std::max(0.0, phys(i * stride, j * stride));
  }
  metrics::GriddedDensity d = metrics::torus_density(std::move(sub));
  d.values /= d.integral();
  return d;
}

// The field convolved with the same wrapped Gaussian the KDE uses.
spectral::SpectralField gaussian_smoothed(spectral::SpectralField v, double h) {
  const int n = v.n();
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      const int m1 = spectral::mode_of(k1, n);
      const int m2 = spectral::mode_of(k2, n);
      v.coeffs()(k1, k2) *= std::exp(-0.5 * h * h * (m1 * m1 + m2 * m2));
    }
  }
  return v;
}

double mean_inverse_distance(const Eigen::Matrix2Xd& x) {
  const auto n = x.cols();
  if (n < 2) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) acc += 1.0 / torus_distance(x.col(i), x.col(j));
  }
  return 2.0 * acc / (static_cast<double>(n) * (n - 1));
}

std::vector<double> snapshot_times(double horizon, double spacing) {
  std::vector<double> t;
  const long count = std::lround(horizon / spacing);
  for (long k = 0; k <= count; ++k) t.push_back(k == count ? horizon : k * spacing);
  return t;
}

void write_spde_outputs(const spde::SpdeRun& run, Manifest& manifest, const std::string& prefix) {
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    spectral::save_snapshot(run.snapshots[k], manifest.path("fields/" + indexed(prefix, static_cast<int>(k), ".bin")));
  }
  spde::write_diagnostics_csv(run.diagnostics, manifest.path("fields/diagnostics.csv"));
}

void write_json(const json& doc, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  out << doc.dump(2) << '\n';
}

struct ReplicaOutcome {
  metrics::ReplicaMetrics metrics;
  std::uint64_t source = 0;
  std::uint64_t consumed = 0;
  double fisher_proxy = 0.0;
  double inverse_distance = 0.0;
};

}  // namespace

ConvergeResult converge(const config::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  prepare(out_dir);
  Manifest manifest(out_dir, "converge", cfg);
  const noise::SeedTree seeds(cfg.master_seed);
  const sigma::SigmaBasis basis = cfg.active_basis();
  const int factor = cfg.coarsening();

  const noise::TimeGrid fine_grid = noise::TimeGrid::uniform(cfg.horizon, cfg.fine_steps(cfg.horizon));
  const noise::NoisePaths fine = noise::make_paths(seeds, fine_grid, {basis.size(), 0, 0, 0, 0});
  const spde::SpdeRun reference =
      spde::run(initial_vorticity(cfg), fine, cfg.spde_config(), basis, cfg.output_times);
  write_spde_outputs(reference, manifest, "v_");
  const noise::NoisePaths coarse = noise::derive_coarse(fine, factor);

  ConvergeResult result;
  result.counts = cfg.counts;
  result.fingerprints.fine_common = fine.common_fingerprint();
  result.fingerprints.spde_consumed = reference.path_fingerprint;
  result.fingerprints.coarse_common = coarse.common_fingerprint();
  result.fingerprints.coarse_source = coarse.source_fingerprint;
  result.fingerprints.coarse_sums_exact = coarse_sums_exact(fine, coarse, factor);

  const int g = cfg.metrics.kde_grid;
  std::vector<metrics::ModeArray> field_modes;
  std::vector<metrics::GriddedDensity> targets;
  for (const auto& v : reference.snapshots) {
    field_modes.push_back(metrics::field_modes(v, cfg.metrics.cutoff));
    targets.push_back(density_on_subgrid(v, g));
  }
  const Eigen::ArrayXXd density = cfg.density.grid(cfg.grid);

  particles::ParticleConfig pcfg;
  pcfg.epsilon = cfg.effective_epsilon();
  pcfg.dt = cfg.particle_dt;
  pcfg.mode_cutoff = cfg.mode_cutoff;
  pcfg.warning_radius = cfg.warning_radius;

  struct Task {
    std::size_t count_index;
    int replica;
  };
  std::vector<Task> tasks;
  // Largest N first so the dynamic schedule balances; results land by index.
  for (std::size_t a = cfg.counts.size(); a-- > 0;) {
    for (int r = 0; r < cfg.replicas; ++r) tasks.push_back({a, r});
  }
  std::vector<std::vector<ReplicaOutcome>> outcomes(cfg.counts.size(),
                                                    std::vector<ReplicaOutcome>(static_cast<std::size_t>(cfg.replicas)));
  std::vector<std::vector<particles::ParticleEnsemble>> kept(cfg.counts.size());
  std::vector<std::vector<particles::ParticleDiagnostics>> kept_diag(cfg.counts.size());
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    try {
      const auto [a, r] = tasks[t];
      const int n = cfg.counts[a];
      const auto level = static_cast<std::uint64_t>(n);
      const auto replica = static_cast<std::uint64_t>(r);
      const noise::NoisePaths paths = noise::attach_individual(coarse, seeds, n, level, replica);
      const particles::ParticleEnsemble e0 = particles::make_ensemble(
          noise::sample_initial(seeds, density, n, level, replica),
          noise::sample_intensities(seeds, cfg.intensity, n, level, replica).values);
      particles::RunOptions opts;
      opts.diagnostics = r == 0;
      const particles::ParticleRun run = particles::run(e0, paths, pcfg, basis, cfg.output_times, opts);

      ReplicaOutcome& out = outcomes[a][static_cast<std::size_t>(r)];
      out.source = paths.source_fingerprint;
      out.consumed = run.path_fingerprint;
      out.metrics.path_fingerprint = paths.source_fingerprint;
      const double h = cfg.metrics.bandwidth_for(n);
      for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const auto& e = run.snapshots[k];
        metrics::MetricPoint p;
        p.t = e.t;
        const metrics::ModeArray mu = metrics::empirical_fourier(e.positions, e.intensities, cfg.metrics.cutoff);
        p.h_minus_s = metrics::h_minus_s_distance(mu, field_modes[k], cfg.metrics.s, cfg.metrics.cutoff);
        const metrics::GriddedDensity kde = metrics::kde_density(e.positions, e.intensities, h, g);
        const metrics::CkpCheck ckp = metrics::ckp_check(kde, targets[k]);
        p.tv = ckp.tv;
        p.relative_entropy = ckp.relative_entropy;
        p.ckp_ok = ckp.ok;
        p.fisher = metrics::fisher_information(kde);
        out.metrics.points.push_back(p);
        if (k + 1 == run.snapshots.size()) {
          out.fisher_proxy = 2.0 * p.fisher;
          out.inverse_distance = mean_inverse_distance(e.positions);
        }
      }
      if (r == 0) {
        kept[a] = run.snapshots;
        kept_diag[a] = run.diagnostics;
      }
    } catch (...) {
#pragma omp critical(converge_failure)
      if (!failure) failure = std::current_exception();
    }
  }

  manifest.doc()["status"] = failure ? "failed" : "ok";
  std::vector<metrics::MetricReport> all_reports;
  std::ofstream envelope_csv(manifest.path("particles/distance_envelope.csv"));
  envelope_csv << "N,replica,fisher_2marginal_proxy,mean_inverse_distance\n" << std::setprecision(17);
  double envelope = 0.0;
  for (std::size_t a = 0; a < cfg.counts.size(); ++a) {
    const int n = cfg.counts[a];
    std::vector<metrics::ReplicaMetrics> reps;
    bool complete = true;
    for (const auto& o : outcomes[a]) {
      if (o.metrics.points.size() != cfg.output_times.size()) complete = false;
    }
    if (!complete) continue;
    for (std::size_t r = 0; r < outcomes[a].size(); ++r) {
      const auto& o = outcomes[a][r];
      reps.push_back(o.metrics);
      result.fingerprints.particle_sources.push_back(o.source);
      result.fingerprints.particle_consumed.push_back(o.consumed);
      envelope_csv << n << ',' << r << ',' << o.fisher_proxy << ',' << o.inverse_distance << '\n';
      envelope = std::max(envelope, o.inverse_distance / (std::pow(o.fisher_proxy, 0.875) + 1.0));
    }
    auto reports = metrics::conditional_average(reps, n);
    double sup = 0.0;
    for (const auto& rep : reports) sup = std::max(sup, rep.h_minus_s_squared.mean);
    result.errors.push_back(sup);
    all_reports.insert(all_reports.end(), reports.begin(), reports.end());
    result.reports.push_back(std::move(reports));
    for (std::size_t k = 0; k < kept[a].size(); ++k) {
      particles::save_snapshot(kept[a][k], manifest.path("particles/" + indexed("N" + std::to_string(n) + "_t", static_cast<int>(k), ".bin")));
    }
    particles::write_diagnostics_csv(kept_diag[a], manifest.path("particles/N" + std::to_string(n) + "_diagnostics.csv"));
  }
  envelope_csv.close();
  metrics::write_reports_csv(all_reports, manifest.path("metrics.csv"));

  json rates;
  rates["metric"] = {{"s", cfg.metrics.s}, {"cutoff", cfg.metrics.cutoff}, {"error", "sup_t mean_R h_minus_s^2"}};
  json pts = json::array();
  for (std::size_t a = 0; a < result.errors.size(); ++a) pts.push_back({{"N", cfg.counts[a]}, {"error", result.errors[a]}});
  rates["points"] = pts;
  if (!failure && result.errors.size() >= 3) {
    std::vector<std::pair<double, double>> fit_points;
    for (std::size_t a = 0; a < result.errors.size(); ++a) fit_points.emplace_back(cfg.counts[a], result.errors[a]);
    result.fit = metrics::rate_fit(fit_points);
    rates["fit"] = {{"slope", result.fit->slope}, {"intercept", result.fit->intercept}, {"r2", result.fit->r2}};
  } else {
    rates["fit"] = nullptr;
    rates["fit_refused"] = failure ? "sweep aborted" : "fewer than three particle counts";
  }
  const auto& fp = result.fingerprints;
  json fps = {{"fine_common", io::hex64(fp.fine_common)},
              {"spde_consumed", io::hex64(fp.spde_consumed)},
              {"coarse_common", io::hex64(fp.coarse_common)},
              {"coarse_source", io::hex64(fp.coarse_source)},
              {"coarse_sums_exact", fp.coarse_sums_exact},
              {"coherent", fp.coherent()}};
  rates["fingerprints"] = fps;
  rates["distance_envelope"] = {{"beta", 0.875}, {"envelope_constant", envelope}};
  write_json(rates, manifest.path("rates.json"));

  manifest.doc()["fingerprints"] = fps;
  manifest.doc()["seeds"]["streams"] = {"common: (tag 1, level 0, replica 0, index k)",
                                        "individual: (tag 2, level N, replica r, index i)",
                                        "initial positions: (tag 3, level N, replica r)",
                                        "intensities: (tag 4, level N, replica r)"};
  manifest.doc()["steps"] = {{"spde", reference.steps}, {"particles", coarse.steps()}};
  manifest.write();
  if (failure) std::rethrow_exception(failure);
  if (!fp.coherent()) throw ValidationError("common-path fingerprints disagree between the SPDE and particle runs");
  return result;
}

MvResult mv_check(const config::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  prepare(out_dir);
  Manifest manifest(out_dir, "mv-check", cfg);
  const noise::SeedTree seeds(cfg.master_seed);
  const sigma::SigmaBasis basis = cfg.active_basis();
  const int factor = cfg.coarsening();
  const double horizon = cfg.mv.time;

  const noise::TimeGrid fine_grid = noise::TimeGrid::uniform(horizon, cfg.fine_steps(horizon));
  const noise::NoisePaths fine = noise::make_paths(seeds, fine_grid, {basis.size(), 0, 0, 0, 0});
  const std::vector<double> times = snapshot_times(horizon, cfg.particle_dt);
  const spde::SpdeRun field = spde::run(initial_vorticity(cfg), fine, cfg.spde_config(), basis, times);
  const mv::FieldTrajectory traj(field.snapshots, cfg.mv.synthesis_cutoff, cfg.biot_savart_scale,
                                 fine.common_fingerprint());
  spectral::save_snapshot(field.snapshots.back(), manifest.path("fields/v_final.bin"));
  spde::write_diagnostics_csv(field.diagnostics, manifest.path("fields/diagnostics.csv"));

  int most = 0;
  for (int c : cfg.mv.copies) most = std::max(most, c);
  const noise::NoisePaths coarse = noise::derive_coarse(fine, factor);
  const noise::NoisePaths paths = noise::attach_individual(coarse, seeds, most, kCopiesLevel, 0);
  const Eigen::Matrix2Xd y0 = noise::sample_initial(seeds, cfg.density.grid(cfg.grid), most, kCopiesLevel, 0);
  const mv::CopiesRun copies = mv::run_copies(traj, paths, y0, basis, {horizon});
  const Eigen::Matrix2Xd& y = copies.snapshots.back();

  const int g = cfg.metrics.kde_grid;
  const double h = cfg.mv.bandwidth;
  const metrics::GriddedDensity target = density_on_subgrid(gaussian_smoothed(field.snapshots.back(), h), g);

  MvResult result;
  for (int c : cfg.mv.copies) {
    const metrics::GriddedDensity kde = metrics::kde_density(y.leftCols(c), Eigen::VectorXd::Ones(c), h, g);
    const metrics::CkpCheck ckp = metrics::ckp_check(kde, target);
    result.copies.push_back(c);
    result.tv.push_back(ckp.tv);
    result.relative_entropy.push_back(ckp.relative_entropy);
  }
  for (std::size_t k = 0; k + 1 < result.tv.size(); ++k) result.ratios.push_back(result.tv[k + 1] / result.tv[k]);

  {
    std::ofstream out(manifest.path("metrics.csv"));
    out << "t,copies,tv,rel_entropy,ckp_ok\n" << std::setprecision(17);
    for (std::size_t k = 0; k < result.copies.size(); ++k) {
      const bool ok = result.tv[k] <= std::sqrt(2.0 * result.relative_entropy[k]) + 1e-12;
      out << horizon << ',' << result.copies[k] << ',' << result.tv[k] << ',' << result.relative_entropy[k] << ','
          << (ok ? 1 : 0) << '\n';
    }
  }
  json rates;
  rates["time"] = horizon;
  rates["bandwidth"] = h;
  rates["copies"] = result.copies;
  rates["tv"] = result.tv;
  rates["ratios"] = result.ratios;
  write_json(rates, manifest.path("rates.json"));
  manifest.doc()["status"] = "ok";
  manifest.doc()["fingerprints"] = {{"fine_common", io::hex64(fine.common_fingerprint())},
                                    {"copies_source", io::hex64(paths.source_fingerprint)}};
  manifest.doc()["steps"] = {{"spde", field.steps}, {"copies", paths.steps()}};
  manifest.write();
  return result;
}

spde::SpdeRun solve_spde(const config::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  prepare(out_dir);
  Manifest manifest(out_dir, "solve-spde", cfg);
  const noise::SeedTree seeds(cfg.master_seed);
  const sigma::SigmaBasis basis = cfg.active_basis();
  const noise::TimeGrid grid = noise::TimeGrid::uniform(cfg.horizon, cfg.fine_steps(cfg.horizon));
  const noise::NoisePaths paths = noise::make_paths(seeds, grid, {basis.size(), 0, 0, 0, 0});
  spde::SpdeRun run = spde::run(initial_vorticity(cfg), paths, cfg.spde_config(), basis, cfg.output_times);
  write_spde_outputs(run, manifest, "v_");
  std::vector<spde::DiagnosticsRow> at_outputs;
  for (const auto& s : run.snapshots) at_outputs.push_back(spde::diagnose(s));
  spde::write_diagnostics_csv(at_outputs, manifest.path("metrics.csv"));
  manifest.doc()["status"] = "ok";
  manifest.doc()["fingerprints"] = {{"fine_common", io::hex64(run.path_fingerprint)}};
  manifest.doc()["steps"] = {{"spde", run.steps}};
  manifest.write();
  return run;
}

particles::ParticleRun simulate_particles(const config::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  prepare(out_dir);
  Manifest manifest(out_dir, "simulate-particles", cfg);
  const noise::SeedTree seeds(cfg.master_seed);
  const sigma::SigmaBasis basis = cfg.active_basis();
  const int n = cfg.counts.front();
  const auto level = static_cast<std::uint64_t>(n);
  const noise::TimeGrid fine_grid = noise::TimeGrid::uniform(cfg.horizon, cfg.fine_steps(cfg.horizon));
  const noise::NoisePaths fine = noise::make_paths(seeds, fine_grid, {basis.size(), 0, 0, 0, 0});
  const noise::NoisePaths paths =
      noise::attach_individual(noise::derive_coarse(fine, cfg.coarsening()), seeds, n, level, 0);
  const particles::ParticleEnsemble e0 =
      particles::make_ensemble(noise::sample_initial(seeds, cfg.density.grid(cfg.grid), n, level, 0),
                               noise::sample_intensities(seeds, cfg.intensity, n, level, 0).values);
  particles::ParticleConfig pcfg;
  pcfg.epsilon = cfg.effective_epsilon();
  pcfg.dt = cfg.particle_dt;
  pcfg.mode_cutoff = cfg.mode_cutoff;
  pcfg.warning_radius = cfg.warning_radius;
  particles::RunOptions opts;
  opts.dump_file = (fs::path(out_dir) / "particles" / "failure_state.bin").string();
  particles::ParticleRun run = particles::run(e0, paths, pcfg, basis, cfg.output_times, opts);
  particles::write_trajectory_csv(run.snapshots, manifest.path("particles/trajectory.csv"));
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    particles::save_snapshot(run.snapshots[k], manifest.path("particles/" + indexed("snapshot_", static_cast<int>(k), ".bin")));
  }
  particles::write_diagnostics_csv(run.diagnostics, manifest.path("particles/diagnostics.csv"));
  particles::write_diagnostics_csv(run.diagnostics, manifest.path("metrics.csv"));
  manifest.doc()["status"] = "ok";
  manifest.doc()["fingerprints"] = {{"fine_common", io::hex64(fine.common_fingerprint())},
                                    {"particles_source", io::hex64(paths.source_fingerprint)}};
  manifest.doc()["steps"] = {{"particles", run.steps}};
  manifest.write();
  return run;
}

void kernel_table(const config::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  Manifest manifest(out_dir, "kernel-table", cfg);
  const kernels::KernelSpec spec{cfg.kernel_table.mode_cutoff.value_or(cfg.mode_cutoff), cfg.kernel_table.epsilon};
  spec.validate();
  const int p = cfg.kernel_table.points;
  {
    std::ofstream out(manifest.path("kernel_table.csv"));
    out << "x1,x2,G,K1,K2\n" << std::setprecision(17);
    // Cell-centred sample points never hit the singular origin.
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        const Vec2 x(-kPi + kTwoPi * (i + 0.5) / p, -kPi + kTwoPi * (j + 0.5) / p);
        const double gv = spec.epsilon ? kernels::green_regularized(x, spec) : kernels::green(x, spec);
        const Vec2 k = spec.epsilon ? kernels::biot_savart_regularized(x, spec) : kernels::biot_savart(x, spec);
        out << x.x() << ',' << x.y() << ',' << gv << ',' << k.x() << ',' << k.y() << '\n';
      }
    }
  }
  manifest.doc()["status"] = "ok";
  manifest.doc()["kernel"] = {{"mode_cutoff", spec.mode_cutoff},
                              {"epsilon", spec.epsilon ? json(*spec.epsilon) : json(nullptr)},
                              {"resolution_warning", spec.resolution_warning()}};
  manifest.write();
}

}  // namespace vortex::experiments
