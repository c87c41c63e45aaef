#include "tvslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tvslab/errors.hpp"

namespace tvslab {

namespace {

// Q_KS(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2)
double kolmogorov_q(double t) {
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// P(D >= d) for two samples of sizes n, m: the share of interleavings whose
// path stays inside the band |i/n - j/m| < d. u(i,j) is that share among
// paths ending at (i,j).
double ks_exact(std::size_t n, std::size_t m, double d) {
  const double eps = 1e-9;
  auto inside = [&](std::size_t i, std::size_t j) {
    return std::abs(static_cast<double>(i) / static_cast<double>(n) -
                    static_cast<double>(j) / static_cast<double>(m)) < d - eps;
  };
  std::vector<double> row(m + 1, 0.0);
  row[0] = 1.0;
  for (std::size_t j = 1; j <= m; ++j) row[j] = inside(0, j) ? row[j - 1] : 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    row[0] = inside(i, 0) ? row[0] : 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      if (!inside(i, j)) {
        row[j] = 0.0;
        continue;
      }
      const double s = static_cast<double>(i + j);
      row[j] = row[j] * (static_cast<double>(i) / s) + row[j - 1] * (static_cast<double>(j) / s);
    }
  }
  return std::clamp(1.0 - row[m], 0.0, 1.0);
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidParameter("mean: empty input");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double std_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

TestReport ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw InvalidParameter("ks_two_sample: empty input");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  TestReport r;
  r.statistic = d;
  r.n = a.size() + b.size();
  r.method = "KS";
  const double ne = n * m / (n + m);
  if (d <= 0.0) {
    r.p_value = 1.0;
  } else if (ne < 50.0) {
    r.p_value = ks_exact(a.size(), b.size(), d);
  } else {
    const double sq = std::sqrt(ne);
    r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  }
  return r;
}

TestReport chi_square(std::span<const double> observed, std::span<const double> expected, int constraints) {
  if (observed.empty() || observed.size() != expected.size()) {
    throw InvalidParameter("chi_square: observed and expected must be non-empty and equal length");
  }
  std::vector<double> o;
  std::vector<double> e;
  double acc_o = 0.0;
  double acc_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= 5.0) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (e.empty()) {
      o.push_back(acc_o);
      e.push_back(acc_e);
    } else {
      o.back() += acc_o;
      e.back() += acc_e;
    }
  }
  TestReport r;
  r.method = "chi-square";
  double n = 0.0;
  for (std::size_t i = 0; i < o.size(); ++i) {
    n += o[i];
    if (e[i] > 0.0) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  }
  r.n = static_cast<std::size_t>(std::llround(n));
  const int dof = static_cast<int>(o.size()) - constraints;
  if (dof < 1) {
    r.p_value = 1.0;
  } else {
    r.p_value = r.statistic <= 0.0 ? 1.0 : boost::math::gamma_q(0.5 * dof, 0.5 * r.statistic);
  }
  return r;
}

TestReport chi_square_independence(std::span<const double> table, std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2 || table.size() != rows * cols) {
    throw InvalidParameter("chi_square_independence: need a table of at least 2 x 2");
  }
  std::vector<double> rs(rows, 0.0);
  std::vector<double> cs(cols, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      rs[i] += table[i * cols + j];
      cs[j] += table[i * cols + j];
      n += table[i * cols + j];
    }
  }
  if (n <= 0.0) throw InvalidParameter("chi_square_independence: empty table");
  TestReport r;
  r.method = "chi-square";
  r.n = static_cast<std::size_t>(std::llround(n));
  std::size_t live_rows = 0;
  std::size_t live_cols = 0;
  for (double x : rs) live_rows += x > 0.0;
  for (double x : cs) live_cols += x > 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = rs[i] * cs[j] / n;
      if (e > 0.0) r.statistic += (table[i * cols + j] - e) * (table[i * cols + j] - e) / e;
    }
  }
  const double dof = (live_rows < 2 || live_cols < 2) ? 0.0 : static_cast<double>((live_rows - 1) * (live_cols - 1));
  r.p_value = (dof < 1.0 || r.statistic <= 0.0) ? 1.0 : boost::math::gamma_q(0.5 * dof, 0.5 * r.statistic);
  return r;
}

Interval wilson_ci(std::size_t successes, std::size_t n, double level) {
  if (n == 0) throw InvalidParameter("wilson_ci: n must be > 0");
  if (successes > n) throw InvalidParameter("wilson_ci: successes exceed n");
  if (!(level > 0.0 && level < 1.0)) throw InvalidParameter("wilson_ci: level must be in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TrendReport mesh_trend(std::span<const double> meshes, const std::vector<std::vector<double>>& values,
                       Direction direction) {
  if (meshes.size() < 2 || meshes.size() != values.size()) {
    throw InvalidParameter("mesh_trend: need at least two meshes with one value list each");
  }
  for (std::size_t k = 1; k < meshes.size(); ++k) {
    if (!(meshes[k] > meshes[k - 1]) || !(meshes[0] > 0.0)) throw InvalidParameter("mesh_trend: meshes must be positive and ascending");
  }
  TrendReport out;
  out.test.method = "trend";
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    if (values[k].empty()) throw InvalidParameter("mesh_trend: empty replica list");
    out.means.push_back(mean(values[k]));
    out.std_errors.push_back(std_error(values[k]));
    for (double v : values[k]) {
      sx += std::log2(meshes[k]);
      sy += v;
      ++n;
    }
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    const double x = std::log2(meshes[k]) - mx;
    for (double v : values[k]) {
      sxx += x * x;
      sxy += x * (v - my);
    }
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    const double x = std::log2(meshes[k]) - mx;
    for (double v : values[k]) {
      const double res = v - my - slope * x;
      sse += res * res;
    }
  }
  out.test.statistic = slope;
  out.test.n = n;
  const double sign = direction == Direction::kDecreasing ? -1.0 : 1.0;
  if (n <= 2 || sse <= 0.0) {
    out.test.p_value = sign * slope > 0.0 ? 0.0 : 1.0;
  } else {
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const double t = sign * slope / se;
    out.test.p_value = boost::math::cdf(boost::math::complement(boost::math::students_t(static_cast<double>(n - 2)), t));
  }
  for (std::size_t k = 1; k < meshes.size(); ++k) {
    const double step = sign * (out.means[k] - out.means[k - 1]);
    const double noise = 2.0 * std::hypot(out.std_errors[k], out.std_errors[k - 1]);
    if (step < -noise) out.monotone = false;
  }
  return out;
}

DimensionFit box_counting_dimension(std::span<const Point> points, int min_box, int max_box) {
  if (points.size() < 100) throw InvalidParameter("box_counting_dimension: need at least 100 points");
  if (min_box < 1 || max_box < 4 * min_box) {
    throw InvalidParameter("box_counting_dimension: window must span at least 3 dyadic sizes");
  }
  DimensionFit fit;
  fit.min_box = min_box;
  fit.max_box = max_box;
  int xmin = points[0].x;
  int ymin = points[0].y;
  for (const Point& p : points) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
  }
  std::unordered_set<std::uint64_t> boxes;
  for (int s = min_box; s <= max_box; s *= 2) {
    boxes.clear();
    for (const Point& p : points) {
      const auto bx = static_cast<std::uint64_t>((p.x - xmin) / s);
      const auto by = static_cast<std::uint64_t>((p.y - ymin) / s);
      boxes.insert(bx << 32 | by);
    }
    fit.box_sizes.push_back(s);
    fit.counts.push_back(boxes.size());
  }
  const auto k = static_cast<double>(fit.box_sizes.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < fit.box_sizes.size(); ++i) {
    const double x = -std::log(static_cast<double>(fit.box_sizes[i]));
    const double y = std::log(static_cast<double>(fit.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cxx = sxx - sx * sx / k;
  const double cxy = sxy - sx * sy / k;
  const double cyy = syy - sy * sy / k;
  fit.slope = cxy / cxx;
  fit.r2 = cyy > 0.0 ? std::clamp(cxy * cxy / (cxx * cyy), 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace tvslab
