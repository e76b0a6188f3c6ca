#include "bdc/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdc {
namespace {

double simpson(double fa, double fm, double fb, double a, double b) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50);
}

double norm_q(const Eigen::Ref<const Eigen::RowVectorXd>& v, double q) {
  if (q == 2.0) return v.norm();
  return std::pow(v.array().abs().pow(q).sum(), 1.0 / q);
}

}  // namespace

double gamma_upper_tail(double alpha, double t, double rel_tol) {
  if (!(alpha > 0.0)) throw ParameterError("gamma tail: alpha must be > 0");
  if (t <= 0.0) return 1.0;
  const double log_norm = -std::lgamma(alpha);
  auto f = [&](double x) { return std::exp(log_norm + (alpha - 1.0) * std::log(x) - x); };
  // Beyond `hi` the remaining mass is below exp(-60) relative to the density scale.
  const double hi = std::max(t, alpha) + 60.0 + 10.0 * std::sqrt(alpha);
  // Split at the mode and at unit intervals past it so each piece is smooth
  // and the absolute tolerance tracks the local magnitude.
  double total = 0.0;
  double a = t;
  while (a < hi) {
    const double b = std::min(hi, a + 1.0);
    const double scale = std::max(f(a), f(b));
    total += integrate(f, a, b, rel_tol * scale);
    a = b;
  }
  return total;
}

TailBoundReport tail_bound_check(const std::vector<double>& alpha_grid, const std::vector<double>& t_grid) {
  if (alpha_grid.empty() || t_grid.empty()) throw ParameterError("tail bound check: empty grid");
  TailBoundReport rep;
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());
  for (double alpha : alpha_grid) {
    if (!(alpha >= 1.0)) throw ParameterError("tail bound check: alpha must be >= 1");
    const double log_m = -alpha * std::log(alpha) + alpha;
    double holds_from = std::numeric_limits<double>::infinity();
    bool unbroken = true;
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
      TailBoundPoint pt;
      pt.alpha = alpha;
      pt.t = *it;
      pt.exact = gamma_upper_tail(alpha, pt.t);
      pt.bound = std::exp(log_m + alpha * std::log(pt.t) - pt.t);
      pt.vacuous = pt.bound >= 1.0;
      pt.holds = pt.exact <= pt.bound;
      if (!pt.holds) ++rep.violations;
      unbroken = unbroken && pt.holds;
      if (unbroken) holds_from = pt.t;
      rep.points.push_back(pt);
    }
    rep.holds_from.push_back(holds_from);
  }
  return rep;
}

EmpiricalTailReport empirical_tail_check(const GeneratorSpec& spec, const TailBoundParams& params, int n_t) {
  if (n_t < 1) throw ParameterError("empirical tail check: n_t must be >= 1");
  if (!(params.q >= 1.0)) throw ParameterError("empirical tail check: q must be >= 1");
  Rng rng = make_rng(spec.seed);
  const GeneratedData data = generate(spec, rng);
  const Matrix& x = data.x.values();
  const int n = data.x.n();
  const int p = data.x.p();

  EmpiricalTailReport rep;
  rep.params = params;

  // Centred coordinates, per cluster.
  std::vector<double> dev;
  const int k = static_cast<int>(spec.components.size());
  for (int h = 0; h < k; ++h) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (data.labels[i] == h) idx.push_back(i);
    if (idx.size() < 2) continue;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p);
    for (int i : idx) mean += x.row(i);
    mean /= static_cast<double>(idx.size());
    for (int i : idx)
      for (int j = 0; j < p; ++j) dev.push_back(x(i, j) - mean(j));
  }
  if (dev.empty()) throw ValidationError("empirical tail check: no cluster with two or more points");

  if (rep.params.nu <= 0.0) {
    double var = 0.0;
    for (double v : dev) var += v * v;
    var /= static_cast<double>(dev.size());
    // Variance proxy doubled: a sub-exponential MGF exceeds the Gaussian one
    // at the raw variance.
    rep.params.nu = std::sqrt(2.0 * var);
  }
  if (rep.params.b <= 0.0) {
    // Largest s on a grid such that the empirical MGF stays under
    // exp(nu^2 s^2 / 2) on [-s, s]; b = 1 / s.
    const double nu2 = rep.params.nu * rep.params.nu;
    double s_ok = 0.0;
    for (int g = 1; g <= 400; ++g) {
      const double s = 0.01 * g;
      double mp = 0.0;
      double mm = 0.0;
      for (double v : dev) {
        mp += std::exp(s * v);
        mm += std::exp(-s * v);
      }
      mp /= static_cast<double>(dev.size());
      mm /= static_cast<double>(dev.size());
      const double lim = std::exp(0.5 * nu2 * s * s);
      if (mp > lim || mm > lim) break;
      s_ok = s;
    }
    rep.params.b = s_ok > 0.0 ? 1.0 / s_ok : 100.0;
  }
  if (rep.params.m2 <= 0.0 || rep.params.m1 <= 0.0) {
    std::vector<double> absdev(dev.size());
    std::transform(dev.begin(), dev.end(), absdev.begin(), [](double v) { return std::abs(v); });
    std::sort(absdev.begin(), absdev.end());
    const double m = static_cast<double>(absdev.size());
    // Slope of log survival over the central-to-upper range, then the
    // smallest m1 that makes the bound hold at every observed deviation.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t r = absdev.size() / 2; r + 10 < absdev.size(); r += std::max<size_t>(1, absdev.size() / 200)) {
      const double surv = (m - r) / m;
      const double tt = absdev[r];
      sx += tt;
      sy += std::log(surv);
      sxx += tt * tt;
      sxy += tt * std::log(surv);
      ++cnt;
    }
    const double slope = cnt > 1 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : -1.0;
    rep.params.m2 = slope < 0.0 ? -slope : 1.0;
    double m1 = 1.0;
    for (size_t r = 0; r < absdev.size(); ++r)
      m1 = std::max(m1, (m - r) / m * std::exp(rep.params.m2 * absdev[r]));
    rep.params.m1 = m1;
  }

  std::vector<double> dists;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (data.labels[i] == data.labels[j]) dists.push_back(norm_q(x.row(i) - x.row(j), params.q));
  std::sort(dists.begin(), dists.end());
  rep.pairs = static_cast<long>(dists.size());
  if (dists.empty()) return rep;

  const double pe = std::pow(p, params.eta);
  const double expo = params.eta - 1.0 / params.q;
  rep.t_min = std::pow(p, -expo) * 2.0 * rep.params.nu * rep.params.nu;
  const double t_max = dists.back() / (rep.params.b * pe);
  for (int g = 0; g < n_t; ++g) {
    EmpiricalTailPoint pt;
    pt.t = rep.t_min * std::pow(std::max(t_max, rep.t_min * 1.0001) / rep.t_min, (g + 1.0) / n_t);
    pt.threshold = pt.t * rep.params.b * pe;
    const auto above = dists.end() - std::upper_bound(dists.begin(), dists.end(), pt.threshold);
    pt.empirical = static_cast<double>(above) / static_cast<double>(dists.size());
    pt.bound = 2.0 * p * std::exp(-pt.t * std::pow(p, expo) / 2.0);
    pt.holds = pt.empirical <= pt.bound;
    if (!pt.holds) ++rep.violations;
    rep.points.push_back(pt);
  }
  return rep;
}

std::vector<ModeReport> mode_concentration_check(const std::vector<int>& p_list, std::uint64_t seed, int n,
                                                 double bin_width) {
  if (p_list.empty()) throw ParameterError("mode check: empty dimension list");
  if (!(bin_width > 0.0)) throw ParameterError("mode check: bin_width must be > 0");
  std::vector<ModeReport> out;
  for (int p : p_list) {
    if (p < 1) throw ParameterError("mode check: p must be >= 1");
    GeneratorSpec spec;
    spec.family = GeneratorFamily::Laplace;
    spec.n = n;
    spec.p = p;
    spec.seed = seed;
    spec.weights = Vector::Constant(2, 0.5);
    ComponentSpec c1;
    c1.location = Vector::Zero(p);
    c1.scale = 0.5;
    ComponentSpec c2 = c1;
    c2.location = Vector::Constant(p, 3.0);
    spec.components = {c1, c2};
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(p));
    const GeneratedData data = generate(spec, rng);
    const Matrix& x = data.x.values();
    const double scale = std::sqrt(static_cast<double>(p));

    std::vector<double> within;
    std::vector<double> across;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = (x.row(i) - x.row(j)).norm() / scale;
        (data.labels[i] == data.labels[j] ? within : across).push_back(d);
      }
    ModeReport rep;
    rep.p = p;
    if (!within.empty()) {
      const double top = *std::max_element(within.begin(), within.end());
      std::vector<long> hist(static_cast<size_t>(top / bin_width) + 1, 0);
      for (double d : within) ++hist[static_cast<size_t>(d / bin_width)];
      const size_t best = static_cast<size_t>(std::max_element(hist.begin(), hist.end()) - hist.begin());
      rep.within_mode = (best + 0.5) * bin_width;
      std::nth_element(within.begin(), within.begin() + within.size() / 2, within.end());
      rep.within_median = within[within.size() / 2];
    }
    if (!across.empty()) {
      std::nth_element(across.begin(), across.begin() + across.size() / 2, across.end());
      rep.across_median = across[across.size() / 2];
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace bdc
