#pragma once

// Test oracle: evaluates the per-cycle moments numerically from the defining
// recursions — conditional expectations built with adaptive quadrature and
// 2x2 linear solves, channel transition probabilities via a matrix
// exponential — without touching the simplified closed forms. Slow, tight
// (quadrature tolerance 1e-12), and deliberately redundant.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "craoi/analytic.hpp"
#include "craoi/params.hpp"

namespace craoi {

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  double tol = 1e-12;           // absolute quadrature tolerance per integral
  int max_depth = 48;           // adaptive bisection depth
  double residual_tol = 1e-9;   // back-substitution check on linear solves
};

class RecursionOracle {
 public:
  explicit RecursionOracle(OracleOptions opts = {}) : opts_(opts) {}

  // IDLE->IDLE transition probability via the matrix exponential of the
  // two-state generator (scaling-and-squaring Taylor series).
  double transition_idle_idle(const ChannelActivity& chan, double t) const {
    std::array<double, 4> a{-chan.u * t, chan.u * t, chan.v * t, -chan.v * t};
    int s = 0;
    double norm = std::max(std::abs(a[0]) + std::abs(a[1]), std::abs(a[2]) + std::abs(a[3]));
    while (norm > 0.5) { norm *= 0.5; ++s; }
    const double scale = std::ldexp(1.0, -s);
    for (auto& x : a) x *= scale;
    // exp(B) = I + B + B^2/2! + ...
    std::array<double, 4> term{1, 0, 0, 1}, sum{1, 0, 0, 1};
    for (int k = 1; k < 40; ++k) {
      term = mul(term, a);
      for (auto& x : term) x /= k;
      for (int i = 0; i < 4; ++i) sum[i] += term[i];
      if (std::abs(term[0]) + std::abs(term[1]) + std::abs(term[2]) + std::abs(term[3]) < 1e-20)
        break;
    }
    for (int i = 0; i < s; ++i) sum = mul(sum, sum);
    return sum[0];
  }

  CycleMoments moments(const ChannelActivity& chan, const SdTraffic& traffic, double tP) const {
    const double u = chan.u, v = chan.v, lam = traffic.lambda;
    CycleMoments m;
    m.EW = tail(0.0, lam, [&](double t) { return t * lam * std::exp(-lam * t); });
    m.EW2 = tail(0.0, lam, [&](double t) { return t * t * lam * std::exp(-lam * t); });

    const double pr_ik =
        tail(0.0, lam, [&](double t) { return pii(chan, t) * lam * std::exp(-lam * t); });
    const double pr_bk = 1.0 - pr_ik;

    // coefficients shared by the K recursions; split at the 1/u scale so the
    // adaptive rule cannot mistake a left-edge spike for zero
    const double a_fail = finite(0.0, tP, [&](double t) { return u * std::exp(-u * t); }, 1.0 / u);
    const double a_succ = tail(tP, u, [&](double t) { return u * std::exp(-u * t); });
    const double a_t = finite(0.0, tP, [&](double t) { return t * u * std::exp(-u * t); }, 1.0 / u);
    const double a_t2 =
        finite(0.0, tP, [&](double t) { return t * t * u * std::exp(-u * t); }, 1.0 / u);
    const double b_t = tail(0.0, v, [&](double t) { return t * v * std::exp(-v * t); });
    const double b_t2 = tail(0.0, v, [&](double t) { return t * t * v * std::exp(-v * t); });

    // E[K|.]: x_I = tP*a_succ + a_t + a_fail*x_B ; x_B = b_t + x_I
    const double ek_r1 = tP * a_succ + a_t;
    auto [ek_i, ek_b] = solve2(1.0, -a_fail, ek_r1, -1.0, 1.0, b_t);
    check_residual(ek_i - a_fail * ek_b, ek_r1, "E[K|I] recursion");
    check_residual(ek_b - ek_i, b_t, "E[K|B] recursion");
    m.EK = pr_ik * ek_i + pr_bk * ek_b;
    m.EY = m.EW + m.EK;

    // E[K^2|.]: x_I = tP^2*a_succ + a_t2 + 2 a_t x_B' ... with means plugged in
    const double ek2_r1 = tP * tP * a_succ + a_t2 + 2.0 * a_t * ek_b;
    const double ek2_r2 = b_t2 + 2.0 * b_t * ek_i;
    auto [ek2_i, ek2_b] = solve2(1.0, -a_fail, ek2_r1, -1.0, 1.0, ek2_r2);
    check_residual(ek2_i - a_fail * ek2_b, ek2_r1, "E[K^2|I] recursion");
    check_residual(ek2_b - ek2_i, ek2_r2, "E[K^2|B] recursion");
    m.EK2 = pr_ik * ek2_i + pr_bk * ek2_b;

    // E[WK] via the conditional independence of W and K given the start state
    const double ew_i =
        tail(0.0, lam, [&](double t) { return t * pii(chan, t) * lam * std::exp(-lam * t); }) /
        pr_ik;
    const double ew_b = tail(0.0, lam, [&](double t) {
                          return t * (1.0 - pii(chan, t)) * lam * std::exp(-lam * t);
                        }) / pr_bk;
    m.EWK = pr_ik * ew_i * ek_i + pr_bk * ew_b * ek_b;
    m.EY2 = m.EW2 + 2.0 * m.EWK + m.EK2;

    m.ES = expected_s_oracle(chan, traffic, tP, pr_ik, pr_bk, m.EK, a_fail, a_succ, a_t);
    return m;
  }

  SuccessProbs success(const ChannelActivity& chan, const SdTraffic& traffic, double tP) const {
    const double u = chan.u, v = chan.v, lam = traffic.lambda;
    const double a_fail = finite(0.0, tP, [&](double t) { return u * std::exp(-u * t); }, 1.0 / u);
    const double a_succ = tail(tP, u, [&](double t) { return u * std::exp(-u * t); });
    const double surv = survival_kernel(chan, traffic);
    // PhiI = a_succ + PhiB * a_fail ; PhiB = PhiI * surv
    auto [phi_i, phi_b] = solve2(1.0, -a_fail, a_succ, -surv, 1.0, 0.0);
    check_residual(phi_i - a_fail * phi_b, a_succ, "Phi_S|I recursion");
    check_residual(phi_b - surv * phi_i, 0.0, "Phi_S|B recursion");
    SuccessProbs p;
    p.PrPhi_I = phi_i;
    p.PrPhi_B = phi_b;
    // delivered-packet state split: one first update per cycle plus the
    // replacement stream over the busy holding time
    const double pr_ik =
        tail(0.0, lam, [&](double t) { return pii(chan, t) * lam * std::exp(-lam * t); });
    const double pr_bk = 1.0 - pr_ik;
    const double a_t = finite(0.0, tP, [&](double t) { return t * u * std::exp(-u * t); }, 1.0 / u);
    // E[K] and T^T again, by quadrature/series only
    const double b_t = tail(0.0, v, [&](double t) { return t * v * std::exp(-v * t); });
    auto [ek_i, ek_b] = solve2(1.0, -a_fail, tP * a_succ + a_t, -1.0, 1.0, b_t);
    const double ek = pr_ik * ek_i + pr_bk * ek_b;
    const double t_int = a_t / a_fail;                 // mean transmit time per interruption
    const double tt = a_fail / a_succ * t_int + tP;    // geometric count times t^I plus tP
    const double busy_hold = ek - tt;
    const double wi = pr_ik * phi_i;
    const double wb = (pr_bk + lam * busy_hold) * phi_b;
    p.PrIS = wi / (wi + wb);
    p.PrBS = wb / (wi + wb);
    return p;
  }

 private:
  OracleOptions opts_;

  static std::array<double, 4> mul(const std::array<double, 4>& x,
                                   const std::array<double, 4>& y) {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
  }

  double pii(const ChannelActivity& chan, double t) const {
    return transition_idle_idle(chan, t);
  }

  void check_residual(double lhs, double rhs, const char* what) const {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    if (std::abs(lhs - rhs) > opts_.residual_tol * scale)
      throw OracleError(std::string("recursion oracle: residual check failed for ") + what);
  }

  static std::pair<double, double> solve2(double a11, double a12, double r1, double a21,
                                          double a22, double r2) {
    const double det = a11 * a22 - a12 * a21;
    if (det == 0.0 || !std::isfinite(det))
      throw OracleError("recursion oracle: singular 2x2 system (parameters too extreme)");
    return {(r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det};
  }

  // E[S] assembled from the survival-conditioned recursions and the
  // delivered-packet weights; every ingredient numeric.
  double expected_s_oracle(const ChannelActivity& chan, const SdTraffic& traffic, double tP,
                           double pr_ik, double pr_bk, double ek, double a_fail,
                           double a_succ, double a_t) const {
    const double v = chan.v, lam = traffic.lambda;
    const double surv = survival_kernel(chan, traffic);
    auto [phi_i, phi_b] = solve2(1.0, -a_fail, a_succ, -surv, 1.0, 0.0);
    // E[S|I_S] = (1/phi_i)(tP a_succ) + (phi_b/phi_i)(a_t + a_fail E[S|B_S])
    // E[S|B_S] = (phi_i/phi_b)(c_s + surv E[S|I_S])
    const double c_s = tail(0.0, v, [&](double s) {
      return s * std::exp(-lam * s) * v * std::exp(-v * s);
    });
    const double k1 = phi_b / phi_i;
    const double k2 = phi_i / phi_b;
    auto [es_i, es_b] = solve2(1.0, -k1 * a_fail, tP * a_succ / phi_i + k1 * a_t,
                               -k2 * surv, 1.0, k2 * c_s);
    check_residual(es_i - k1 * a_fail * es_b, tP * a_succ / phi_i + k1 * a_t, "E[S|I] recursion");
    check_residual(es_b - k2 * surv * es_i, k2 * c_s, "E[S|B] recursion");
    const double t_int = a_t / a_fail;
    const double tt = a_fail / a_succ * t_int + tP;
    const double busy_hold = ek - tt;
    const double wi = pr_ik * phi_i;
    const double wb = (pr_bk + lam * busy_hold) * phi_b;
    return (wi * es_i + wb * es_b) / (wi + wb);
  }

  // survival through one busy residual: double integral of the joint density
  // of (next arrival, busy end), evaluated by nested quadrature
  double survival_kernel(const ChannelActivity& chan, const SdTraffic& traffic) const {
    const double v = chan.v, lam = traffic.lambda;
    return tail(0.0, v, [&](double s) {
      const double inner = tail(s, lam, [&](double t) { return lam * std::exp(-lam * t); });
      return inner * v * std::exp(-v * s);
    });
  }

  // adaptive Gauss-Kronrod 15(7) on a finite interval; an optional split
  // scale keeps a sharp left-edge boundary layer visible to the first pass
  template <typename F>
  double finite(double a, double b, F&& f, double split_scale = 0.0) const {
    if (split_scale > 0.0 && a + split_scale < b) {
      return gk_adapt(a, a + split_scale, f, opts_.tol * 0.5, opts_.max_depth) +
             gk_adapt(a + split_scale, b, f, opts_.tol * 0.5, opts_.max_depth);
    }
    return gk_adapt(a, b, f, opts_.tol, opts_.max_depth);
  }

  // [a, inf) with integrand decaying at least like e^{-rate * t}:
  // substitute t = a - ln(1-x)/rate, x in [0,1)
  template <typename F>
  double tail(double a, double rate, F&& f) const {
    auto g = [&](double x) {
      const double one_minus = 1.0 - x;
      const double t = a - std::log(one_minus) / rate;
      return f(t) / (rate * one_minus);
    };
    return gk_adapt(0.0, 1.0 - 1e-15, g, opts_.tol, opts_.max_depth);
  }

  template <typename F>
  double gk_adapt(double a, double b, F& f, double tol, int depth) const {
    auto [val, err] = gk15(a, b, f);
    if (err <= tol || depth <= 0) return val;
    const double mid = 0.5 * (a + b);
    return gk_adapt(a, mid, f, tol * 0.5, depth - 1) +
           gk_adapt(mid, b, f, tol * 0.5, depth - 1);
  }

  template <typename F>
  static std::pair<double, double> gk15(double a, double b, F& f) {
    // Gauss-Kronrod 15-point nodes/weights with embedded 7-point Gauss rule
    static constexpr double xk[8] = {
        0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
        0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
    static constexpr double wk[8] = {
        0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
        0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
    static constexpr double wg[4] = {
        0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double dx = h * xk[i];
      const double fv = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
      kron += wk[i] * fv;
      if (i % 2 == 1) gauss += wg[i / 2] * fv;
    }
    kron *= h;
    gauss *= h;
    return {kron, std::abs(kron - gauss)};
  }
};

inline CycleMoments recursion_oracle(const ChannelActivity& chan, const SdTraffic& traffic,
                                     double tP) {
  return RecursionOracle{}.moments(chan, traffic, tP);
}

}  // namespace craoi
