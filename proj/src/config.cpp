#include "vortexlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vortexlab/errors.hpp"
#include "vortexlab/spectral.hpp"

namespace vortex::config {

using nlohmann::json;

double InitialDensity::value(const Vec2& x) const {
  double v = offset;
  for (const auto& t : terms) {
    const double phase = t.m.x() * x.x() + t.m.y() * x.y();
    v += t.cos * std::cos(phase) + t.sin * std::sin(phase);
  }
  return v / (offset * kTorusArea);
}

Eigen::ArrayXXd InitialDensity::grid(int n) const {
  Eigen::ArrayXXd g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = value({spectral::grid_coordinate(i, n), spectral::grid_coordinate(j, n)});
  }
  return g;
}

void InitialDensity::validate(int n) const {
  if (!(offset > 0.0)) throw ConfigError("initial density offset must be positive");
  for (const auto& t : terms) {
    if (t.m.isZero()) throw ConfigError("initial density terms need a nonzero mode");
    if (std::abs(t.m.x()) >= n / 2 || std::abs(t.m.y()) >= n / 2) {
      throw ConfigError("initial density mode not representable on the grid");
    }
  }
  if (!(grid(n) > 0.0).all()) throw ConfigError("initial density must be strictly positive on the grid");
}

double MetricParams::bandwidth_for(int n) const { return bandwidth.value_or(2.0 * kTwoPi / std::sqrt(n)); }

int RunConfig::fine_steps(double horizon_value) const {
  const double steps = horizon_value / dt;
  const long rounded = std::lround(steps);
  if (rounded < 1 || std::abs(steps - rounded) > 1e-6 * std::max(1.0, steps)) {
    throw ConfigError("time " + std::to_string(horizon_value) + " is not a whole number of SPDE steps");
  }
  return static_cast<int>(rounded);
}

int RunConfig::coarsening() const {
  const double ratio = particle_dt / dt;
  const long rounded = std::lround(ratio);
  if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError("particle dt must be a whole multiple of the SPDE dt");
  }
  return static_cast<int>(rounded);
}

spde::SpdeConfig RunConfig::spde_config() const {
  spde::SpdeConfig c;
  c.n = grid;
  c.dt = dt;
  c.viscosity = viscosity;
  c.nonlinear = nonlinear;
  c.noise = common_noise;
  c.noise_mode = noise_mode;
  c.splitting = splitting;
  c.biot_savart_scale = biot_savart_scale;
  c.cfl = cfl;
  return c;
}

void RunConfig::validate() const {
  spde_config().validate();
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  const int fine = fine_steps(horizon);
  const int factor = coarsening();
  if (fine % factor != 0) throw ConfigError("horizon must be a whole number of particle steps");
  if (output_times.empty()) throw ConfigError("at least one output time required");
  double last = -1.0;
  for (double t : output_times) {
    if (!(t > last)) throw ConfigError("output times must increase strictly");
    if (t < 0.0 || t > horizon + 1e-12) throw ConfigError("output time outside [0, horizon]");
    if (t > 0.0) {
      const int k = fine_steps(t);
      if (k % factor != 0) throw ConfigError("output times must fall on the particle grid");
    }
    last = t;
  }
  if (counts.empty()) throw ConfigError("at least one particle count required");
  for (int n : counts) {
    if (n < 1) throw ConfigError("particle counts must be positive");
  }
  if (replicas < 1) throw ConfigError("replica count must be positive");
  if (mode_cutoff < 1) throw ConfigError("kernel mode cutoff must be at least 1");
  const double eps = effective_epsilon();
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  intensity.validate();
  density.validate(grid);
  if (noise_mode == spde::NoiseMode::ExactTranslation && !basis.all_constant()) {
    throw ConfigError("exact-translation noise needs constant sigma fields");
  }
  if (!(metrics.s > 0.0)) throw ConfigError("metric order s must be positive");
  if (metrics.cutoff < 1 || metrics.cutoff >= grid / 2) throw ConfigError("metric cutoff must lie in [1, grid/2)");
  if (metrics.bandwidth && !(*metrics.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  if (metrics.kde_grid < 4 || grid % metrics.kde_grid != 0) {
    throw ConfigError("kde grid must divide the SPDE grid");
  }
  if (mv.copies.empty()) throw ConfigError("mv_check needs at least one copy count");
  for (int c : mv.copies) {
    if (c < 1) throw ConfigError("copy counts must be positive");
  }
  if (!(mv.bandwidth > 0.0)) throw ConfigError("mv_check bandwidth must be positive");
  if (mv.synthesis_cutoff < 1 || mv.synthesis_cutoff >= grid / 2) {
    throw ConfigError("synthesis cutoff must lie in [1, grid/2)");
  }
  if (fine_steps(mv.time) % factor != 0) throw ConfigError("mv_check time must fall on the particle grid");
  if (kernel_table.points < 1) throw ConfigError("kernel table needs at least one point per axis");
  if (kernel_table.mode_cutoff && *kernel_table.mode_cutoff < 1) throw ConfigError("kernel table cutoff must be >= 1");
  if (kernel_table.epsilon && !(*kernel_table.epsilon > 0.0 && *kernel_table.epsilon < 1.0)) {
    throw ConfigError("kernel table epsilon must lie in (0, 1)");
  }
}

sigma::SigmaBasis default_basis() {
  return sigma::SigmaBasis({sigma::SigmaField::constant(Vec2(0.7, -0.3)),
                            sigma::SigmaField::stream({{Eigen::Vector2i(1, 0), 0.5, 0.0}})});
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& target) {
  if (obj.contains(key) && !obj.at(key).is_null()) target = obj.at(key).get<T>();
}

Eigen::Vector2i read_mode(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 2) throw ConfigError("mode must have two integer components");
  return {v[0], v[1]};
}

sigma::SigmaField read_sigma(const json& j) {
  check_keys(j, {"constant", "stream"}, "noise.sigma entry");
  if (j.contains("constant") == j.contains("stream")) {
    throw ConfigError("each sigma entry needs exactly one of 'constant' or 'stream'");
  }
  if (j.contains("constant")) {
    const auto v = j.at("constant").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("constant sigma must have two components");
    return sigma::SigmaField::constant(Vec2(v[0], v[1]));
  }
  std::vector<sigma::StreamTerm> terms;
  for (const auto& t : j.at("stream")) {
    check_keys(t, {"k", "amplitude", "phase"}, "stream term");
    sigma::StreamTerm term;
    term.k = read_mode(t.at("k"));
    if (term.k.isZero()) throw ConfigError("stream term needs a nonzero wave vector");
    read(t, "amplitude", term.amplitude);
    read(t, "phase", term.phase);
    terms.push_back(term);
  }
  if (terms.empty()) throw ConfigError("stream sigma needs at least one term");
  return sigma::SigmaField::stream(std::move(terms));
}

spde::NoiseMode read_noise_mode(const std::string& s) {
  if (s == "ito-corrected") return spde::NoiseMode::ItoCorrected;
  if (s == "exact-translation") return spde::NoiseMode::ExactTranslation;
  throw ConfigError("noise_mode must be 'ito-corrected' or 'exact-translation'");
}

spde::Splitting read_splitting(const std::string& s) {
  if (s == "lie") return spde::Splitting::Lie;
  if (s == "strang") return spde::Splitting::Strang;
  throw ConfigError("splitting must be 'lie' or 'strang'");
}

RunConfig parse_unchecked(const json& doc) {
  RunConfig c;
  c.basis = default_basis();
  check_keys(doc,
             {"master_seed", "grid", "dt", "horizon", "output_times", "particles", "noise", "intensity",
              "initial_density", "spde", "metrics", "mv_check", "kernel_table"},
             "config");
  read(doc, "master_seed", c.master_seed);
  read(doc, "grid", c.grid);
  read(doc, "dt", c.dt);
  read(doc, "horizon", c.horizon);
  read(doc, "output_times", c.output_times);

  if (doc.contains("particles")) {
    const json& p = doc.at("particles");
    check_keys(p, {"counts", "replicas", "dt", "mode_cutoff", "epsilon", "warning_radius"}, "particles");
    read(p, "counts", c.counts);
    read(p, "replicas", c.replicas);
    read(p, "dt", c.particle_dt);
    read(p, "mode_cutoff", c.mode_cutoff);
    read(p, "epsilon", c.epsilon);
    read(p, "warning_radius", c.warning_radius);
  }
  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, {"common", "sigma"}, "noise");
    read(n, "common", c.common_noise);
    if (n.contains("sigma")) {
      std::vector<sigma::SigmaField> fields;
      for (const auto& s : n.at("sigma")) fields.push_back(read_sigma(s));
      c.basis = sigma::SigmaBasis(std::move(fields));
    }
  }
  if (doc.contains("intensity")) {
    const json& l = doc.at("intensity");
    check_keys(l, {"law", "min", "max", "values", "weights"}, "intensity");
    const std::string law = l.value("law", std::string("uniform"));
    if (law == "uniform") {
      c.intensity = noise::IntensityLaw::uniform(l.value("min", 0.5), l.value("max", 1.5));
    } else if (law == "atoms") {
      c.intensity = noise::IntensityLaw::discrete(l.at("values").get<std::vector<double>>(),
                                                  l.at("weights").get<std::vector<double>>());
    } else {
      throw ConfigError("intensity law must be 'uniform' or 'atoms'");
    }
  }
  if (doc.contains("initial_density")) {
    const json& d = doc.at("initial_density");
    check_keys(d, {"offset", "terms"}, "initial_density");
    read(d, "offset", c.density.offset);
    if (d.contains("terms")) {
      c.density.terms.clear();
      for (const auto& t : d.at("terms")) {
        check_keys(t, {"m", "cos", "sin"}, "initial_density term");
        DensityTerm term;
        term.m = read_mode(t.at("m"));
        read(t, "cos", term.cos);
        read(t, "sin", term.sin);
        c.density.terms.push_back(term);
      }
    }
  }
  if (doc.contains("spde")) {
    const json& s = doc.at("spde");
    check_keys(s, {"viscosity", "nonlinear", "noise_mode", "splitting", "biot_savart_scale", "cfl"}, "spde");
    read(s, "viscosity", c.viscosity);
    read(s, "nonlinear", c.nonlinear);
    if (s.contains("noise_mode")) c.noise_mode = read_noise_mode(s.at("noise_mode").get<std::string>());
    if (s.contains("splitting")) c.splitting = read_splitting(s.at("splitting").get<std::string>());
    read(s, "biot_savart_scale", c.biot_savart_scale);
    read(s, "cfl", c.cfl);
  }
  if (doc.contains("metrics")) {
    const json& m = doc.at("metrics");
    check_keys(m, {"s", "cutoff", "bandwidth", "kde_grid"}, "metrics");
    read(m, "s", c.metrics.s);
    read(m, "cutoff", c.metrics.cutoff);
    read(m, "bandwidth", c.metrics.bandwidth);
    read(m, "kde_grid", c.metrics.kde_grid);
  }
  if (doc.contains("mv_check")) {
    const json& m = doc.at("mv_check");
    check_keys(m, {"copies", "time", "bandwidth", "synthesis_cutoff"}, "mv_check");
    read(m, "copies", c.mv.copies);
    read(m, "time", c.mv.time);
    read(m, "bandwidth", c.mv.bandwidth);
    read(m, "synthesis_cutoff", c.mv.synthesis_cutoff);
  }
  if (doc.contains("kernel_table")) {
    const json& k = doc.at("kernel_table");
    check_keys(k, {"points", "mode_cutoff", "epsilon"}, "kernel_table");
    read(k, "points", c.kernel_table.points);
    read(k, "mode_cutoff", c.kernel_table.mode_cutoff);
    read(k, "epsilon", c.kernel_table.epsilon);
  }
  // Resolution-dependent defaults shrink with coarse grids.
  const bool metrics_given = doc.contains("metrics");
  if (!(metrics_given && doc.at("metrics").contains("cutoff"))) c.metrics.cutoff = std::min(16, c.grid / 2 - 1);
  if (!(metrics_given && doc.at("metrics").contains("kde_grid"))) c.metrics.kde_grid = std::min(64, c.grid);
  if (!(doc.contains("mv_check") && doc.at("mv_check").contains("synthesis_cutoff"))) {
    c.mv.synthesis_cutoff = std::min(16, c.grid / 2 - 1);
  }
  c.source = doc;
  return c;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  try {
    c = parse_unchecked(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& file, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + file + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config")) throw ConfigError("manifest carries no config");
    doc = doc.at("config");
  }
  if (seed_override) doc["master_seed"] = *seed_override;
  return parse_config(doc);
}

}  // namespace vortex::config
