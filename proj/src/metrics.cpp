#include "vortexlab/metrics.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "vortexlab/errors.hpp"
#include "vortexlab/mode_sums.hpp"

namespace vortex::metrics {

ModeArray empirical_fourier(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& intensities, int cutoff) {
  if (cutoff < 0) throw ConfigError("mode cutoff must be non-negative");
  ModeArray a;
  a.cutoff = cutoff;
  a.convention = FourierConvention::Integral;
  const auto n = positions.cols();
  a.values = modesums::weighted_mode_sums(positions, intensities, cutoff);
  if (n > 0) a.values /= static_cast<double>(n);
  return a;
}

ModeArray field_modes(const spectral::SpectralField& v, int cutoff) {
  if (cutoff >= v.n() / 2) throw ConfigError("mode cutoff must stay below the field's Nyquist mode");
  ModeArray a;
  a.cutoff = cutoff;
  a.convention = FourierConvention::Integral;
  a.values.resize(2 * cutoff + 1, 2 * cutoff + 1);
  for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) a.values(m1 + cutoff, m2 + cutoff) = kTorusArea * v.mode(m1, m2);
  }
  return a;
}

double h_minus_s_distance(const ModeArray& a, const ModeArray& b, double s, int cutoff) {
  if (a.convention != b.convention) throw ConfigError("mode arrays use different Fourier conventions");
  if (cutoff > a.cutoff || cutoff > b.cutoff) throw ConfigError("distance cutoff exceeds a mode array's extent");
  double sum = 0.0;
  for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
      const int r2 = m1 * m1 + m2 * m2;
      if (r2 > cutoff * cutoff) continue;
      sum += std::pow(1.0 + r2, -s) * std::norm(a.at(m1, m2) - b.at(m1, m2));
    }
  }
  return std::sqrt(sum);
}

double h_minus_s_distance(const ModeArray& mu, const spectral::SpectralField& v, double s, int cutoff) {
  return h_minus_s_distance(mu, field_modes(v, cutoff), s, cutoff);
}

GriddedDensity torus_density(Eigen::ArrayXXd values) {
  const auto n = static_cast<double>(values.rows());
  const double h = kTwoPi / n;
  return {std::move(values), h * h};
}

Eigen::VectorXd wrapped_gaussian(double centre, double bandwidth, int n) {
  const double norm = 1.0 / (std::sqrt(kTwoPi) * bandwidth);
  const int wraps = static_cast<int>(std::ceil(6.0 * bandwidth / kTwoPi)) + 1;
  const double inv2h2 = 0.5 / (bandwidth * bandwidth);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    const double d = wrap_coordinate(spectral::grid_coordinate(i, n) - centre);
    double acc = 0.0;
    for (int k = -wraps; k <= wraps; ++k) {
      const double y = d + kTwoPi * k;
      acc += std::exp(-y * y * inv2h2);
    }
    g[i] = norm * acc;
  }
  return g;
}

GriddedDensity kde_density(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& weights, double bandwidth,
                           int n) {
  if (!(bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be positive");
  const auto count = positions.cols();
  if (weights.size() != count) throw ConfigError("one weight per particle required");
  if (count == 0) throw ValidationError("KDE of an empty ensemble");
  const double total = weights.sum();
  if (!(total > 0.0)) throw ValidationError("KDE weights must have positive sum");
  Eigen::MatrixXd a(n, count);
  Eigen::MatrixXd b(n, count);
  for (Eigen::Index p = 0; p < count; ++p) {
    a.col(p) = wrapped_gaussian(positions(0, p), bandwidth, n) * (weights[p] / total);
    b.col(p) = wrapped_gaussian(positions(1, p), bandwidth, n);
  }
  GriddedDensity d = torus_density((a * b.transpose()).array());
  d.values /= d.integral();
  return d;
}

double relative_entropy(const GriddedDensity& p, const GriddedDensity& q) {
  if (p.values.rows() != q.values.rows() || p.values.cols() != q.values.cols()) {
    throw ConfigError("densities live on different grids");
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
      const double pv = p.values(i, j);
      if (pv <= 0.0) continue;
      const double qv = q.values(i, j);
      if (qv <= 0.0) return std::numeric_limits<double>::infinity();
      sum += pv * std::log(pv / qv);
    }
  }
  // Exact zero for p == q; tiny negatives are rounding.
  return std::max(0.0, sum * p.cell_area);
}

double fisher_information(const GriddedDensity& p) {
  const Eigen::Index n1 = p.values.rows();
  const Eigen::Index n2 = p.values.cols();
  const double h = std::sqrt(p.cell_area);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n2; ++j) {
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double v = p.values(i, j);
      if (v < 1e-14) continue;
      const double d1 = (p.values((i + 1) % n1, j) - p.values((i + n1 - 1) % n1, j)) / (2.0 * h);
      const double d2 = (p.values(i, (j + 1) % n2) - p.values(i, (j + n2 - 1) % n2)) / (2.0 * h);
      sum += (d1 * d1 + d2 * d2) / v;
    }
  }
  return sum * p.cell_area;
}

double tv_distance(const GriddedDensity& p, const GriddedDensity& q) {
  if (p.values.rows() != q.values.rows() || p.values.cols() != q.values.cols() || p.cell_area != q.cell_area) {
    throw ConfigError("densities live on different grids");
  }
  return 0.5 * (p.values - q.values).abs().sum() * p.cell_area;
}

namespace {

std::atomic<std::uint64_t> g_pairs{0};
std::atomic<std::uint64_t> g_violations{0};

}  // namespace

CkpCheck ckp_check(const GriddedDensity& p, const GriddedDensity& q) {
  CkpCheck c;
  c.tv = tv_distance(p, q);
  c.relative_entropy = relative_entropy(p, q);
  c.ok = c.tv <= std::sqrt(2.0 * c.relative_entropy) + 1e-12;
  g_pairs.fetch_add(1, std::memory_order_relaxed);
  if (!c.ok) g_violations.fetch_add(1, std::memory_order_relaxed);
  return c;
}

CkpLedger ckp_ledger() { return {g_pairs.load(), g_violations.load()}; }

MeanStderr mean_stderr(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty sample");
  const auto r = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= r;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (r - 1.0) / r)};
}

std::vector<MetricReport> conditional_average(const std::vector<ReplicaMetrics>& replicas, int n) {
  if (replicas.empty()) throw ValidationError("no replicas to average");
  const auto& first = replicas.front();
  for (const auto& r : replicas) {
    if (r.path_fingerprint != first.path_fingerprint) {
      throw ConfigError("replicas were driven by different common paths");
    }
    if (r.points.size() != first.points.size()) throw ValidationError("replicas report different output times");
  }
  std::vector<MetricReport> out;
  const std::size_t count = replicas.size();
  for (std::size_t k = 0; k < first.points.size(); ++k) {
    std::vector<double> h(count), h2(count), tv(count), ent(count), fi(count);
    MetricReport rep;
    rep.t = first.points[k].t;
    rep.n = n;
    rep.replicas = static_cast<int>(count);
    for (std::size_t r = 0; r < count; ++r) {
      const MetricPoint& p = replicas[r].points[k];
      if (p.t != rep.t) throw ValidationError("replicas report different output times");
      h[r] = p.h_minus_s;
      h2[r] = p.h_minus_s * p.h_minus_s;
      tv[r] = p.tv;
      ent[r] = p.relative_entropy;
      fi[r] = p.fisher;
      rep.ckp_ok = rep.ckp_ok && p.ckp_ok;
    }
    rep.h_minus_s = mean_stderr(h);
    rep.h_minus_s_squared = mean_stderr(h2);
    rep.tv = mean_stderr(tv);
    rep.relative_entropy = mean_stderr(ent);
    rep.fisher = mean_stderr(fi);
    out.push_back(rep);
  }
  return out;
}

void write_reports_csv(const std::vector<MetricReport>& reports, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  out << "t,N,R,h_minus_s,h_minus_s_sq,tv,rel_entropy,fisher,ckp_ok,"
         "h_minus_s_stderr,h_minus_s_sq_stderr,tv_stderr,rel_entropy_stderr,fisher_stderr\n"
      << std::setprecision(17);
  for (const auto& r : reports) {
    out << r.t << ',' << r.n << ',' << r.replicas << ',' << r.h_minus_s.mean << ',' << r.h_minus_s_squared.mean << ','
        << r.tv.mean << ',' << r.relative_entropy.mean << ',' << r.fisher.mean << ',' << (r.ckp_ok ? 1 : 0) << ','
        << r.h_minus_s.stderr_ << ',' << r.h_minus_s_squared.stderr_ << ',' << r.tv.stderr_ << ','
        << r.relative_entropy.stderr_ << ',' << r.fisher.stderr_ << '\n';
  }
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ValidationError("rate fit needs at least three points");
  const auto k = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, e] : points) {
    if (!(n > 0.0) || !(e > 0.0)) throw ValidationError("rate fit needs positive N and error");
    sx += std::log(n);
    sy += std::log(e);
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [n, e] : points) {
    const double dx = std::log(n) - mx;
    const double dy = std::log(e) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ValidationError("rate fit needs at least two distinct N");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace vortex::metrics
