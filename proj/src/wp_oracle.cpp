#include "dgpe/wp_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace dgpe {

namespace {

using State = std::array<double, 2>;
namespace odeint = boost::numeric::odeint;

constexpr double kAbsTol = 1e-15;
constexpr double kRelTol = 1e-13;
constexpr double kCoarseRelTol = 1e-9;
constexpr double kTailThreshold = 1e-12;
// Past this level of W / W(0) the shot is replaced by the decaying tail.
constexpr double kMatchLevel = 1e-7;

struct RadialSystem {
  const WpEquation& eq;
  void operator()(const State& x, State& dxdr, double r) const {
    dxdr[0] = x[1];
    const double w = x[0];
    dxdr[1] = -2.0 * x[1] / r + eq.omega * w - eq.alpha * std::pow(std::abs(w), eq.p - 2.0) * w;
  }
};

// Start just off the origin with the series W(r) = W0 + W''(0) r^2 / 2.
double series_start_radius(const WpEquation& eq) { return 1e-5 / std::sqrt(eq.omega); }

State series_start(const WpEquation& eq, double w0, double r0) {
  const double curvature = (eq.omega * w0 - eq.alpha * std::pow(w0, eq.p - 1.0)) / 3.0;
  return {w0 + 0.5 * curvature * r0 * r0, curvature * r0};
}

auto make_stepper(double abs_tol = kAbsTol, double rel_tol = kRelTol) {
  return odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
}

// Integrates on the nodes r_i = i dr (i >= 1) until the trajectory leaves
// the positive decreasing branch or r_end is reached. Returns the class:
// +1 crossed zero, -1 turned upward, 0 reached r_end.
template <class Visit>
int integrate_nodes(const WpEquation& eq, double w0, double dr, double r_end, Visit&& visit) {
  const double r0 = series_start_radius(eq);
  State x = series_start(eq, w0, r0);
  auto stepper = make_stepper();
  stepper.initialize(x, r0, std::min(1e-3, 0.1 * dr));
  RadialSystem sys{eq};
  std::size_t node = 1;
  State at{};
  while (true) {
    const auto [t0, t1] = stepper.do_step(sys);
    (void)t0;
    while (node * dr <= t1) {
      const double r = node * dr;
      if (r > r_end) return 0;
      stepper.calc_state(r, at);
      if (!visit(node, at)) return 0;
      ++node;
    }
    const State& cur = stepper.current_state();
    if (cur[0] < 0.0) return 1;
    if (cur[1] > 0.0) return -1;
    if (t1 > r_end) return 0;
  }
}

// Integrates inward from r_far, starting on the decaying
// asymptote A exp(-k r) / r, down to node stop. Stores nodes stop..last
// in out when given and returns W at node stop (infinity if the
// trajectory stops decreasing).
double inward_tail(const WpEquation& eq, double log_amplitude, double r_far, double dr, std::size_t stop,
                   std::vector<State>* out) {
  const double k = eq.decay_rate();
  const double w = std::exp(log_amplitude - k * r_far - std::log(r_far));
  // An underflowed start is below the decaying solution, not above it.
  if (!(w > 1e-290)) return 0.0;
  State x{w, -w * (k + 1.0 / r_far)};
  const std::size_t top = static_cast<std::size_t>(std::llround(r_far / dr));
  if (out) (*out)[top - stop] = x;
  // The tail starts far below kAbsTol, so only the relative error counts.
  auto stepper = make_stepper(1e-300);
  stepper.initialize(x, r_far, -std::min(1e-3, 0.1 * dr));
  RadialSystem sys{eq};
  std::size_t node = top;
  State at{};
  const double r_stop = stop * dr;
  while (node > stop) {
    const auto [t0, t1] = stepper.do_step(sys);
    (void)t0;
    while (out && node > stop && (node - 1) * dr >= t1) {
      --node;
      stepper.calc_state(node * dr, at);
      (*out)[node - stop] = at;
    }
    // Too large an amplitude overshoots and turns back over.
    if (stepper.current_state()[1] >= 0.0) return std::numeric_limits<double>::infinity();
    if (t1 <= r_stop) break;
  }
  if (!out) stepper.calc_state(r_stop, at);
  return at[0];
}

int classify_shot(const WpEquation& eq, double w0, double rel_tol) {
  const double r0 = series_start_radius(eq);
  State x = series_start(eq, w0, r0);
  if (x[1] > 0.0) return -1;
  auto stepper = make_stepper(kAbsTol, rel_tol);
  stepper.initialize(x, r0, 1e-4);
  RadialSystem sys{eq};
  const double r_cap = 2000.0 / eq.decay_rate();
  while (stepper.current_time() < r_cap) {
    stepper.do_step(sys);
    const State& cur = stepper.current_state();
    if (cur[0] < 0.0) return 1;
    if (cur[1] > 0.0) return -1;
  }
  // Numerically indistinguishable from the decaying solution.
  return -1;
}

std::pair<double, double> bisect_shots(const WpEquation& eq, double lo, double hi, double rel_tol, double width) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= width) break;
    if (classify_shot(eq, mid, rel_tol) > 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {lo, hi};
}

}  // namespace

WpEquation::WpEquation(double p_) : p(p_), delta(3.0 * (p_ - 2.0) / (2.0 * p_)) {
  omega = 1.0 / delta - 1.0;
  alpha = 2.0 / (p * delta);
}

double WpEquation::decay_rate() const { return std::sqrt(omega); }

int shooting_class(const WpEquation& eq, double w0) { return classify_shot(eq, w0, kRelTol); }

std::pair<double, double> shooting_bracket(double p, double lo, double hi) {
  const WpEquation eq(p);
  if (shooting_class(eq, lo) != -1 || shooting_class(eq, hi) != 1) {
    throw std::runtime_error("shooting_bracket: start values do not bracket W(0)");
  }
  // Cheap shots narrow the bracket first; the result is confirmed at full accuracy.
  // Below kRelTol the classification is integration noise.
  const auto [clo, chi] = bisect_shots(eq, lo, hi, kCoarseRelTol, 1e-6 * hi);
  if (shooting_class(eq, clo) == -1 && shooting_class(eq, chi) == 1) {
    lo = clo;
    hi = chi;
  }
  return bisect_shots(eq, lo, hi, kRelTol, kRelTol * hi);
}

RadialProfile solve_wp(double p, double r_max, double tol) {
  if (!(p > 2.0 && p < 6.0)) {
    throw std::invalid_argument("solve_wp: p must lie in (2, 6)");
  }
  if (!(r_max > 0.0)) throw std::invalid_argument("solve_wp: r_max must be positive");
  const WpEquation eq(p);
  const double k = eq.decay_rate();

  // Below the constant solution level the trajectory turns upward at once.
  const double lo0 = std::pow(eq.omega / eq.alpha, 1.0 / (p - 2.0));
  double hi0 = 2.0 * lo0;
  int doublings = 0;
  while (shooting_class(eq, hi0) != 1) {
    hi0 *= 2.0;
    if (++doublings > 60) throw std::runtime_error("solve_wp: no overshoot bracket found");
  }
  const auto [lo, hi] = shooting_bracket(p, lo0, hi0);

  const double dr = 2e-3 / std::max(1.0, k);
  RadialProfile prof;
  prof.p = p;
  prof.dr = dr;
  prof.decay_rate = k;

  const double w_start = 0.5 * (lo + hi);
  std::vector<State> low_path{{lo, 0.0}};
  std::vector<State> high_path{{hi, 0.0}};
  const double r_cap = 200.0 / k;
  integrate_nodes(eq, lo, dr, r_cap, [&](std::size_t, const State& s) {
    low_path.push_back(s);
    return s[0] > 0.1 * kMatchLevel * lo;
  });
  integrate_nodes(eq, hi, dr, r_cap, [&](std::size_t, const State& s) {
    high_path.push_back(s);
    return s[0] > 0.1 * kMatchLevel * lo;
  });

  // Matching node: W has decayed to kMatchLevel while both bracket ends
  // still agree to a relative 1e-9.
  const std::size_t common = std::min(low_path.size(), high_path.size());
  std::size_t match = 0;
  for (std::size_t i = 1; i < common; ++i) {
    const double wl = low_path[i][0];
    const double wh = high_path[i][0];
    if (wl < kMatchLevel * w_start || std::abs(wh - wl) > 1e-9 * std::abs(wl) || wh < 0.0) {
      match = i;
      break;
    }
  }
  if (match < 10) {
    throw std::runtime_error("solve_wp: shooting diverged before the profile decayed");
  }

  const double r_match = match * dr;
  const double w_match = 0.5 * (low_path[match][0] + high_path[match][0]);
  const double r_blend = std::max(0.5 * r_match, r_match - 1.0 / k);
  const std::size_t blend = static_cast<std::size_t>(std::floor(r_blend / dr));

  // Tail: the decaying solution integrated inward from the outer radius,
  // its amplitude fitted so that it meets the shot at r_match.
  double radius = std::max({r_max, 2.0 * r_match, r_match + 30.0 / k});
  std::vector<State> tail;
  for (int attempt = 0;; ++attempt) {
    const std::size_t last = static_cast<std::size_t>(std::ceil(radius / dr / 2.0)) * 2;
    const double r_far = last * dr;
    // log W(r_match) is close to linear in log A: secant steps, falling back
    // to bisection inside the bracket when a step leaves it or overshoots.
    auto miss = [&](double log_a) {
      return std::log(inward_tail(eq, log_a, r_far, dr, match, nullptr)) - std::log(w_match);
    };
    double log_lo = std::log(w_match) - 10.0;
    double log_hi = std::log(w_match) + k * (r_far - r_match) + std::log(r_far / r_match) + 10.0;
    double x0 = std::log(w_match) + k * r_match + std::log(r_match);
    double f0 = miss(x0);
    double x1 = x0 - 1e-3;
    double log_a = x0;
    double best = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      if (f0 < 0.0) log_lo = std::max(log_lo, x0);
      if (!(f0 < 0.0)) log_hi = std::min(log_hi, x0);
      if (std::abs(f0) < best) {
        best = std::abs(f0);
        log_a = x0;
      }
      // The inward integration is only good to about 1e-11 in log W.
      if (best < 1e-10 || log_hi - log_lo < 1e-15 * std::abs(log_hi)) break;
      const double f1 = miss(x1);
      double next = 0.5 * (log_lo + log_hi);
      if (std::isfinite(f0) && std::isfinite(f1) && f1 != f0) {
        const double secant = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (secant > log_lo && secant < log_hi) next = secant;
      }
      x0 = x1;
      f0 = f1;
      x1 = next;
    }
    tail.assign(last + 1 - blend, State{});
    inward_tail(eq, log_a, r_far, dr, blend, &tail);
    radius = r_far;
    if (tail.back()[0] < kTailThreshold * w_start) break;
    if (attempt > 8) throw std::runtime_error("solve_wp: tail does not decay");
    radius *= 2.0;
  }

  const std::size_t nodes = blend + tail.size();
  prof.r.resize(nodes);
  prof.w.resize(nodes);
  prof.dw.resize(nodes);
  // Quintic blend from the shot into the tail over one decay length.
  const double r_lo = blend * dr;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double r = i * dr;
    prof.r[i] = r;
    if (i >= match) {
      prof.w[i] = tail[i - blend][0];
      prof.dw[i] = tail[i - blend][1];
      continue;
    }
    const double ws = 0.5 * (low_path[i][0] + high_path[i][0]);
    const double dws = 0.5 * (low_path[i][1] + high_path[i][1]);
    if (i <= blend) {
      prof.w[i] = ws;
      prof.dw[i] = dws;
      continue;
    }
    const double wt = tail[i - blend][0];
    const double dwt = tail[i - blend][1];
    const double x = (r - r_lo) / (r_match - r_lo);
    const double s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    const double ds = 30.0 * x * x * (1.0 - x) * (1.0 - x) / (r_match - r_lo);
    prof.w[i] = (1.0 - s) * ws + s * wt;
    prof.dw[i] = (1.0 - s) * dws + s * dwt + ds * (wt - ws);
  }
  prof.w[0] = w_start;
  prof.dw[0] = 0.0;
  prof.r_max = prof.r.back();
  prof.r_match = r_match;

  const double residual = ode_residual(prof);
  if (!(residual < tol)) {
    throw std::runtime_error("solve_wp: ODE residual " + std::to_string(residual) +
                             " above tolerance");
  }
  return prof;
}

double RadialProfile::value(double radius) const {
  radius = std::abs(radius);
  if (radius >= r_max) {
    return w.back() * (r_max / radius) * std::exp(-decay_rate * (radius - r_max));
  }
  const std::size_t i = static_cast<std::size_t>(radius / dr);
  const double t = (radius - r[i]) / dr;
  const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  return h00 * w[i] + h10 * dr * dw[i] + h01 * w[i + 1] + h11 * dr * dw[i + 1];
}

double RadialProfile::derivative(double radius) const {
  radius = std::abs(radius);
  if (radius >= r_max) {
    return -value(radius) * (decay_rate + 1.0 / radius);
  }
  const std::size_t i = static_cast<std::size_t>(radius / dr);
  const double t = (radius - r[i]) / dr;
  const double d00 = 6.0 * t * t - 6.0 * t;
  const double d10 = 3.0 * t * t - 4.0 * t + 1.0;
  const double d01 = -d00;
  const double d11 = 3.0 * t * t - 2.0 * t;
  return (d00 * w[i] + d01 * w[i + 1]) / dr + d10 * dw[i] + d11 * dw[i + 1];
}

double ode_residual(const RadialProfile& prof) {
  const WpEquation eq(prof.p);
  const std::size_t n = prof.w.size();
  const double h = prof.dr;
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    // Fourth-order central difference of W'.
    const double w2 = (-prof.dw[i + 2] + 8.0 * prof.dw[i + 1] - 8.0 * prof.dw[i - 1] +
                       prof.dw[i - 2]) / (12.0 * h);
    const double w = prof.w[i];
    const double res = w2 + 2.0 * prof.dw[i] / prof.r[i] - eq.omega * w +
                       eq.alpha * std::pow(std::abs(w), eq.p - 2.0) * w;
    worst = std::max(worst, std::abs(res));
  }
  return worst / prof.w0();
}

RadialNorms radial_norms(const RadialProfile& prof, double p) {
  const std::size_t n = prof.r.size();
  double mass = 0.0;
  double grad = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double weight = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double r2 = prof.r[i] * prof.r[i];
    mass += weight * prof.w[i] * prof.w[i] * r2;
    grad += weight * prof.dw[i] * prof.dw[i] * r2;
    lp += weight * std::pow(std::abs(prof.w[i]), p) * r2;
  }
  const double scale = 4.0 * std::numbers::pi * prof.dr / 3.0;
  return {std::sqrt(scale * mass), std::sqrt(scale * grad), scale * lp};
}

double gn_constant(const RadialProfile& profile, double p) {
  const double mass = radial_norms(profile, p).mass;
  return std::pow(p / (2.0 * std::pow(mass, p - 2.0)), 1.0 / p);
}

std::shared_ptr<const RadialProfile> wp_profile_cached(double p) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const RadialProfile>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(p); it != cache.end()) return it->second;
  }
  auto prof = std::make_shared<const RadialProfile>(solve_wp(p));
  std::lock_guard lock(mutex);
  return cache.emplace(p, std::move(prof)).first->second;
}

double gn_constant_cached(double p) {
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(p); it != cache.end()) return it->second;
  }
  const double value = gn_constant(*wp_profile_cached(p), p);
  std::lock_guard lock(mutex);
  return cache.emplace(p, value).first->second;
}

void to_json(nlohmann::json& j, const RadialProfile& profile) {
  const RadialNorms norms = radial_norms(profile, profile.p);
  j = nlohmann::json{{"p", profile.p},
                     {"W0", profile.w0()},
                     {"mass_norm", norms.mass},
                     {"C_p", gn_constant(profile, profile.p)},
                     {"r_max", profile.r_max}};
}

}  // namespace dgpe
