#pragma once

// Rotationally symmetric metric dr^2 + f1(r)^2 g_S: warping function, radial
// curvature, Liouville potential, gauge transport of eigenfunctions and
// manifold L2 bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/ode_engine.hpp"
#include "spectral_forge/origin.hpp"
#include "spectral_forge/schedule.hpp"

namespace spectral_forge {

struct MetricValues {
  double f1 = 0.0;
  double log_f1 = 0.0;
  double S = 0.0;
  double K = 0.0;
  double q = 0.0;
};

/// Warping profile built from the perturbation f. log f1 is kept instead of
/// f1 since f1 grows like exp(sqrt(K0) r).
class MetricProfile {
 public:
  static constexpr double kPanel = 0.5;

  MetricProfile(double K0, int n, PiecewisePotential f) : K0_(K0), n_(n), f_(std::move(f)) {
    if (n < 2) throw Error(Errc::BadDimension, "dimension n must be at least 2");
    if (!(K0 >= 0.0)) throw Error(Errc::InvalidArgument, "K0 must be non-negative");
    build_cache();
  }

  [[nodiscard]] double K0() const { return K0_; }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] const PiecewisePotential& f() const { return f_; }
  [[nodiscard]] double E0() const { return 0.25 * (n_ - 1) * (n_ - 1) * K0_; }

  /// F(r) = integral of f over [1, r], r >= 1.
  [[nodiscard]] double integral(double r) const {
    const long i = f_.locate(r);
    if (i < 0) {
      // after every segment that ends at or before r
      auto it = std::upper_bound(f_.segments.begin(), f_.segments.end(), r,
                                 [](double v, const WvnSegment& s) { return v < s.x1; });
      const auto done = static_cast<std::size_t>(it - f_.segments.begin());
      return done == 0 ? 0.0 : seg_total_[done - 1];
    }
    const auto s = static_cast<std::size_t>(i);
    const WvnSegment& seg = f_.segments[s];
    const auto& nodes = panel_values_[s];
    const double width = (seg.x1 - seg.x0) / static_cast<double>(nodes.size() - 1);
    const auto p = std::min(nodes.size() - 2, static_cast<std::size_t>((r - seg.x0) / width));
    const double a = seg.x0 + static_cast<double>(p) * width;
    return nodes[p] + quad(seg, a, r);
  }

  [[nodiscard]] double log_f1(double r) const {
    if (!(r > 0.0)) throw Error(Errc::OutOfDomain, "radius must be positive");
    if (r <= 0.5) return std::log(r);
    if (r < 1.0) return std::log(glue_f1(r, K0_).f1);
    return std::sqrt(K0_) * (r - 1.0) + integral(r);
  }

  /// with_f1 = false skips the warping integral (S, K and q are local in f).
  [[nodiscard]] MetricValues eval(double r, bool with_f1 = true) const {
    if (!(r > 0.0)) throw Error(Errc::OutOfDomain, "radius must be positive");
    MetricValues m;
    const double nm = n_ - 1;
    if (r < 1.0) {
      double S, K;
      if (r <= 0.5) {
        S = 1.0 / r;
        K = 0.0;
        m.log_f1 = std::log(r);
      } else {
        const GlueValue g = glue_f1(r, K0_);
        S = g.f1p / g.f1;
        K = -g.f1pp / g.f1;
        m.log_f1 = std::log(g.f1);
      }
      m.S = S;
      m.K = K;
      m.q = 0.25 * nm * (nm - 2.0) * S * S - 0.5 * nm * K;
    } else {
      const FieldValue v = f_.eval(r);
      const double k = std::sqrt(K0_);
      m.log_f1 = with_f1 ? k * (r - 1.0) + integral(r) : std::nan("");
      m.S = k + v.f;
      m.K = -K0_ - 2.0 * k * v.f - v.f * v.f - v.fp;
      m.q = 0.25 * nm * nm * m.S * m.S + 0.5 * nm * v.fp;
    }
    m.f1 = std::exp(m.log_f1);
    return m;
  }

 private:
  static double quad(const WvnSegment& seg, double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss<double, 20>::integrate(
        [&seg](double x) { return segment_field(seg, x).f; }, a, b);
  }

  void build_cache() {
    double total = 0.0;
    for (const auto& seg : f_.segments) {
      const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((seg.x1 - seg.x0) / kPanel)));
      const double width = (seg.x1 - seg.x0) / static_cast<double>(panels);
      std::vector<double> nodes(panels + 1);
      nodes[0] = total;
      for (std::size_t p = 0; p < panels; ++p) {
        const double a = seg.x0 + static_cast<double>(p) * width;
        nodes[p + 1] = nodes[p] + quad(seg, a, p + 1 == panels ? seg.x1 : a + width);
      }
      total = nodes.back();
      seg_total_.push_back(total);
      panel_values_.push_back(std::move(nodes));
    }
  }

  double K0_;
  int n_;
  PiecewisePotential f_;
  std::vector<double> seg_total_;
  std::vector<std::vector<double>> panel_values_;
};

inline MetricValues metric_eval(const MetricProfile& profile, double r) { return profile.eval(r); }

struct CurvatureRow {
  double r = 0.0;
  double K = 0.0;
  double rK = 0.0;  // r |K + K0|
  double S_excess = 0.0;
  double q_excess = 0.0;
};

struct CurvatureProfile {
  std::vector<CurvatureRow> rows;
  double sup_rK = 0.0;
  double argmax_rK = 0.0;
  std::optional<double> sup_budget_ratio;
  double argmax_ratio = 0.0;
};

inline CurvatureProfile curvature_profile(const MetricProfile& profile, const std::vector<double>& r_samples,
                                          const std::optional<Budget>& budget = std::nullopt) {
  CurvatureProfile out;
  out.rows.reserve(r_samples.size());
  const double k = std::sqrt(profile.K0());
  if (budget) out.sup_budget_ratio = 0.0;
  for (double r : r_samples) {
    const MetricValues m = profile.eval(r);
    CurvatureRow row{r, m.K, r * std::abs(m.K + profile.K0()), m.S - k, m.q - profile.E0()};
    if (row.rK > out.sup_rK) {
      out.sup_rK = row.rK;
      out.argmax_rK = r;
    }
    if (budget) {
      const double ratio = row.rK / (*budget)(r);
      if (ratio > *out.sup_budget_ratio) {
        out.sup_budget_ratio = ratio;
        out.argmax_ratio = r;
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

/// Radial eigenfunction h: h1 on (0, 1], scale * f1^{-(n-1)/2} w beyond.
struct GlobalEigenfunction {
  double lambda = 1.0;
  int n = 3;
  RadialSamples inner;
  StateVec h1_at_one;
  std::vector<double> grid;  // r >= 1
  std::vector<StateVec> w;
  double scale = 1.0;
  double junction_value_error = 0.0;
  double junction_derivative_error = 0.0;

  /// h2 = f1^{-(n-1)/2} w and its derivative at grid index i.
  [[nodiscard]] StateVec h2(const MetricProfile& profile, std::size_t i) const {
    const MetricValues m = profile.eval(grid[i]);
    const double c = 0.5 * (n - 1);
    const double g = std::exp(-c * m.log_f1);
    return {g * w[i].y, g * (w[i].yp - c * m.S * w[i].y)};
  }
};

inline GlobalEigenfunction eigenfunction_assemble(double lambda, std::vector<double> grid, std::vector<StateVec> w,
                                                  StateVec h1_at_one, const MetricProfile& profile,
                                                  RadialSamples inner = {}) {
  if (grid.empty() || std::abs(grid.front() - 1.0) > 1e-12) {
    throw Error(Errc::InvalidArgument, "w trajectory must start at r = 1");
  }
  GlobalEigenfunction h;
  h.lambda = lambda;
  h.n = profile.n();
  h.inner = std::move(inner);
  h.h1_at_one = h1_at_one;
  h.grid = std::move(grid);
  h.w = std::move(w);
  const StateVec h2 = h.h2(profile, 0);
  const double tiny = 1e-14 * std::hypot(h2.y, h2.yp);
  if (std::abs(h2.y) > tiny) {
    h.scale = h1_at_one.y / h2.y;
  } else if (std::abs(h2.yp) > tiny) {
    h.scale = h1_at_one.yp / h2.yp;
  } else {
    throw Error(Errc::ZeroAtJunction, "h2 vanishes with its derivative at r = 1");
  }
  const double vref = std::max({std::abs(h1_at_one.y), std::abs(h.scale * h2.y), 1e-300});
  const double dref = std::max({std::abs(h1_at_one.yp), std::abs(h.scale * h2.yp), std::abs(h1_at_one.y), 1e-300});
  h.junction_value_error = std::abs(h1_at_one.y - h.scale * h2.y) / vref;
  h.junction_derivative_error = std::abs(h1_at_one.yp - h.scale * h2.yp) / dref;
  return h;
}

/// Trapezoid integral of y^2 over [lo, hi] on a sampled trajectory.
inline double interval_l2(const std::vector<double>& grid, const std::vector<StateVec>& s, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = std::max(lo, grid[i]), b = std::min(hi, grid[i + 1]);
    if (!(b > a)) continue;
    const double t0 = (a - grid[i]) / (grid[i + 1] - grid[i]);
    const double t1 = (b - grid[i]) / (grid[i + 1] - grid[i]);
    const double ya = s[i].y + t0 * (s[i + 1].y - s[i].y);
    const double yb = s[i].y + t1 * (s[i + 1].y - s[i].y);
    acc += 0.5 * (b - a) * (ya * ya + yb * yb);
  }
  return acc;
}

struct L2Report {
  double ball = 0.0;                   // integral over (0, 1] of h^2 f1^{n-1}
  std::vector<double> contributions;   // between consecutive junctions
  std::vector<double> partial_norms;   // cumulative, at each junction
  std::vector<double> ratios;          // contributions[k+1] / contributions[k]
};

/// Junction-by-junction L2 bookkeeping of w, scaled by scale^2 (sphere area omitted).
inline L2Report l2_contributions(const std::vector<double>& grid, const std::vector<StateVec>& w,
                                 const std::vector<double>& junctions, double start, double scale = 1.0,
                                 double ball = 0.0) {
  L2Report rep;
  rep.ball = ball;
  double lo = start, acc = ball;
  for (double J : junctions) {
    const double c = scale * scale * interval_l2(grid, w, lo, J);
    rep.contributions.push_back(c);
    acc += c;
    rep.partial_norms.push_back(acc);
    lo = J;
  }
  for (std::size_t k = 0; k + 1 < rep.contributions.size(); ++k) {
    rep.ratios.push_back(rep.contributions[k + 1] / rep.contributions[k]);
  }
  return rep;
}

inline L2Report l2_norm_manifold(const GlobalEigenfunction& h, const MetricProfile& profile,
                                 const std::vector<double>& junctions) {
  double ball = 0.0;
  const auto& r = h.inner.r;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const auto weight = [&](std::size_t j) {
      return h.inner.h[j].y * h.inner.h[j].y * std::exp((h.n - 1) * profile.log_f1(r[j]));
    };
    ball += 0.5 * (r[i + 1] - r[i]) * (weight(i) + weight(i + 1));
  }
  if (!r.empty()) {
    // (0, r_0]: h ~ 1, f1 = r
    ball += std::pow(r.front(), h.n) / h.n * h.inner.h.front().y * h.inner.h.front().y;
  }
  return l2_contributions(h.grid, h.w, junctions, 1.0, h.scale, ball);
}

}  // namespace spectral_forge
