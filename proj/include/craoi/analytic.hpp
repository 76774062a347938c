#pragma once

// Closed-form per-cycle moments, average age of information and energy
// efficiency of the secondary device, plus the derivative expressions used by
// the optimizer. Pure functions over immutable inputs.
//
// A departure cycle Y splits into W (wait for a fresh update after a
// delivery) and K (first generation after a delivery until the next
// delivery). S is the service time of the delivered packet, i.e. delivery
// minus the generation instant of the update that actually got through
// (replacements while waiting move that instant forward).

#include <cmath>
#include <stdexcept>
#include <utility>

#include "craoi/params.hpp"

namespace craoi {

// Exponent guard: beyond this the cycle moments exceed double range and the
// model is deep in its divergent regime; callers get +inf / 0 plus a flag.
inline constexpr double kAsymptoticExponent = 700.0;

inline bool asymptotic_regime(const ChannelActivity& chan, double tP) {
  return chan.u * tP > kAsymptoticExponent;
}

// h, g, q appear throughout the second-moment algebra; l is the coefficient
// tying the service time to the interruption count.
struct HelperConstants {
  double h;  // 1/u + 1/v
  double g;  // 1/lambda + u/(v(u+v+lambda)) - h
  double q;  // 1/(uv) - (v+lambda)/(v(u+v+lambda)^2)
  double l;  // (u+v)/u

  static HelperConstants of(const ChannelActivity& chan, const SdTraffic& traffic) {
    const double u = chan.u, v = chan.v, lam = traffic.lambda;
    const double s = u + v + lam;
    HelperConstants c;
    c.h = 1.0 / u + 1.0 / v;
    c.g = 1.0 / lam + u / (v * s) - c.h;
    c.q = 1.0 / (u * v) - (v + lam) / (v * s * s);
    c.l = (u + v) / u;
    return c;
  }
};

struct CycleMoments {
  double EW, EW2, EK, EK2, EWK, EY, EY2, ES;
};

struct SuccessProbs {
  double PrPhi_I;  // delivery probability of an in-play packet generated while IDLE
  double PrPhi_B;  // same, generated while BUSY
  double PrIS;     // probability the delivered packet was generated while IDLE
  double PrBS;
};

struct ConditionalMoments {
  double EK_I, EK_B;
  double EK2_I, EK2_B;
  double EW_I, EW_B;
  double PrIK, PrBK;
  double PrPhi_I, PrPhi_B;
  double PrIS, PrBS;
  double ES_I, ES_B;
};

struct Metrics {
  double avg_aoi;     // s
  double ee;          // bits/Joule
  double E_T, E_S, E_C, E_sum;  // Joules per cycle
  double T_T, T_S, T_C;         // s per cycle
  bool asymptotic;    // u*tP beyond double range; avg_aoi=+inf, ee=0
};

namespace detail {
inline void require_time(double tP) {
  require(std::isfinite(tP) && tP > 0.0, "transmission time tP must be positive and finite");
}
}  // namespace detail

// IDLE->IDLE and IDLE->BUSY transition probabilities of the channel chain
// after time t.
inline std::pair<double, double> transition_probs(const ChannelActivity& chan, double t) {
  detail::require(std::isfinite(t) && t >= 0.0, "transition time must be >= 0");
  const double u = chan.u, v = chan.v;
  const double pii = v / (u + v) + u / (u + v) * std::exp(-(u + v) * t);
  return {pii, 1.0 - pii};
}

// Channel state distribution seen by the first update generated after a
// delivery (the chain is IDLE at the delivery instant).
inline std::pair<double, double> k_start_probs(const ChannelActivity& chan,
                                               const SdTraffic& traffic) {
  const double s = chan.u + chan.v + traffic.lambda;
  return {(chan.v + traffic.lambda) / s, chan.u / s};
}

// E[K | IDLE at K start] and E[K | BUSY at K start].
inline std::pair<double, double> conditional_k(const ChannelActivity& chan, double tP) {
  detail::require_time(tP);
  const double h = 1.0 / chan.u + 1.0 / chan.v;
  const double ek_i = h * std::expm1(chan.u * tP);
  return {ek_i, 1.0 / chan.v + ek_i};
}

inline double expected_k(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, s = u + v + traffic.lambda;
  return (1.0 / u + 1.0 / v) * std::expm1(u * tP) + u / (v * s);
}

inline double expected_y(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  return 1.0 / traffic.lambda + expected_k(chan, traffic, tP);
}

// Probability that a transmission attempt is cut short, and the mean transmit
// time sunk into one interrupted attempt.
inline std::pair<double, double> interruption_stats(const ChannelActivity& chan, double tP) {
  detail::require_time(tP);
  const double x = chan.u * tP;
  const double pI = -std::expm1(-x);
  const double ex = std::expm1(x);
  const double tI = (ex - x) / (chan.u * ex);
  return {pI, tI};
}

// Mean total transmit time per cycle: wasted partial attempts plus the one
// complete transmission.
inline double expected_transmit_time(const ChannelActivity& chan, double tP) {
  detail::require_time(tP);
  return std::expm1(chan.u * tP) / chan.u;
}

inline double expected_k2(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, s = u + v + traffic.lambda;
  const double h = 1.0 / u + 1.0 / v;
  const double E = std::exp(u * tP);
  return 2.0 / (u * v) - 2.0 / (v * s) + 2.0 * h * h * E * E +
         2.0 * (h * (u / (v * s) - h - tP) - 1.0 / (u * v)) * E;
}

inline double expected_wk(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  const double s = chan.u + chan.v + traffic.lambda;
  return expected_k(chan, traffic, tP) / traffic.lambda + chan.u / (chan.v * s * s);
}

inline double expected_y2(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const auto c = HelperConstants::of(chan, traffic);
  const double E = std::exp(u * tP);
  return 2.0 * (c.h * c.h * E * E + (c.h * (c.g - tP) - 1.0 / (u * v)) * E + c.g / lam + c.q);
}

// Delivery probabilities of in-play packets and the generation-state split of
// the packet that actually gets delivered. An in-play packet is one the
// device ever holds: the cycle's first update or a replacement arriving
// during a busy wait; updates arriving mid-transmission are dropped and never
// delivered, which biases the delivered packet away from IDLE generations.
inline SuccessProbs success_probs(const ChannelActivity& chan, const SdTraffic& traffic,
                                  double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const double z = std::exp(-u * tP);
  SuccessProbs p;
  p.PrPhi_I = z * (v + lam) / (lam + v * z);
  p.PrPhi_B = z * v / (lam + v * z);
  // PrIS = Pr{I_K} * PrPhi_I; the busy side absorbs the replacement stream.
  const double s = u + v + lam;
  p.PrIS = (lam + v) * (lam + v) * z / ((lam + v * z) * s);
  p.PrBS = 1.0 - p.PrIS;
  return p;
}

// E[S | delivered, generated while IDLE] and ... BUSY.
inline std::pair<double, double> conditional_s(const ChannelActivity& chan,
                                               const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const double s = u + v + lam;
  const double E = std::exp(u * tP);
  const double es_i =
      (lam * tP * E + v * s / (u * (v + lam)) * std::expm1(u * tP)) / (lam * E + v);
  return {es_i, es_i + 1.0 / (v + lam)};
}

// Mean service time of the delivered packet.
inline double expected_s(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const double z = std::exp(-u * tP);
  const double s = u + v + lam;
  return (lam * tP + (1.0 + v / u) * (1.0 - z) + (u / s) * z) / (lam + v * z);
}

inline ConditionalMoments conditional_moments(const ChannelActivity& chan,
                                              const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const double s = u + v + lam;
  ConditionalMoments m;
  std::tie(m.EK_I, m.EK_B) = conditional_k(chan, tP);
  std::tie(m.PrIK, m.PrBK) = k_start_probs(chan, traffic);
  // second moments of K conditioned on the start state, from the recursion
  // pair: EK2_I = a2 + 2*a1*EK_B + (1-z)*EK2_B, EK2_B = 2/v^2 + 2*EK_I/v + EK2_I
  const double z = std::exp(-u * tP);
  const double a1 = -std::expm1(-u * tP) / u - tP * z;              // int_0^tP t u e^{-ut}
  const double a2 = 2.0 * (-std::expm1(-u * tP)) / (u * u) - 2.0 * tP * z / u - tP * tP * z;
  const double rhs1 = tP * tP * z + a2 + 2.0 * a1 * m.EK_B;
  const double rhs2 = 2.0 / (v * v) + 2.0 * m.EK_I / v;
  m.EK2_I = (rhs1 + (1.0 - z) * rhs2) / z;
  m.EK2_B = rhs2 + m.EK2_I;
  // mean wait conditioned on the K start state
  m.EW_I = s / (v + lam) * (v / ((u + v) * lam) + u * lam / ((u + v) * s * s));
  m.EW_B = s / (u + v) * (1.0 / lam - lam / (s * s));
  const SuccessProbs sp = success_probs(chan, traffic, tP);
  m.PrPhi_I = sp.PrPhi_I;
  m.PrPhi_B = sp.PrPhi_B;
  m.PrIS = sp.PrIS;
  m.PrBS = sp.PrBS;
  std::tie(m.ES_I, m.ES_B) = conditional_s(chan, traffic, tP);
  return m;
}

inline CycleMoments cycle_moments(const ChannelActivity& chan, const SdTraffic& traffic,
                                  double tP) {
  CycleMoments m;
  m.EW = 1.0 / traffic.lambda;
  m.EW2 = 2.0 / (traffic.lambda * traffic.lambda);
  m.EK = expected_k(chan, traffic, tP);
  m.EK2 = expected_k2(chan, traffic, tP);
  m.EWK = expected_wk(chan, traffic, tP);
  m.EY = expected_y(chan, traffic, tP);
  m.EY2 = expected_y2(chan, traffic, tP);
  m.ES = expected_s(chan, traffic, tP);
  return m;
}

// E[Y^2] / (2 E[Y]), evaluated with the dominant exponential factored out so
// the ratio stays finite as long as the true value fits in a double.
inline double aoi_y2_over_2y(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const auto c = HelperConstants::of(chan, traffic);
  const double E = std::exp(u * tP);
  const double z = std::exp(-u * tP);
  const double A = c.h * (c.g - tP) - 1.0 / (u * v);
  const double C = c.g / lam + c.q;
  return (c.h * c.h * E + A + C * z) / (c.h + c.g * z);
}

inline double avg_aoi(const ChannelActivity& chan, const SdTraffic& traffic, double tP) {
  detail::require_time(tP);
  if (asymptotic_regime(chan, tP)) return std::numeric_limits<double>::infinity();
  return expected_s(chan, traffic, tP) + aoi_y2_over_2y(chan, traffic, tP);
}

// Energy bookkeeping per cycle at transmission time tP. tP below the budget
// boundary (power above Pmax) is rejected unless extrapolation is allowed.
inline Metrics energy_metrics(const ChannelActivity& chan, const SdTraffic& traffic,
                              double tP, const RadioConfig& cfg,
                              bool allow_extrapolation = false) {
  detail::require_time(tP);
  const double tmin = power_to_time(cfg.Pmax, cfg, traffic);
  if (!allow_extrapolation && tP < tmin * (1.0 - 1e-12))
    throw std::domain_error("craoi: infeasible power (tP below the Pmax boundary)");
  Metrics m;
  m.asymptotic = asymptotic_regime(chan, tP);
  const double Pt = time_to_power(tP, cfg, traffic);
  m.T_T = expected_transmit_time(chan, tP);
  m.T_S = expected_k(chan, traffic, tP);
  m.T_C = expected_y(chan, traffic, tP);
  m.E_T = Pt * m.T_T;
  m.E_S = cfg.Ps * m.T_S;
  m.E_C = cfg.Pc * m.T_C;
  m.E_sum = m.E_T + m.E_S + m.E_C;
  m.ee = m.asymptotic ? 0.0 : traffic.D / m.E_sum;
  m.avg_aoi = m.asymptotic ? std::numeric_limits<double>::infinity()
                           : avg_aoi(chan, traffic, tP);
  return m;
}

// r(tP): numerator polynomial of d(E[Y^2]/2E[Y])/dtP after factoring e^{u tP};
// strictly positive, which makes the age strictly increasing in tP.
inline double aoi_r_polynomial(const ChannelActivity& chan, const SdTraffic& traffic,
                               double tP) {
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const auto c = HelperConstants::of(chan, traffic);
  const double E = std::exp(u * tP);
  const double Dh = c.h * c.h * (2.0 * u * c.g - 1.0);
  const double R0 = u * c.h * c.g * c.g - u * c.h * c.g * tP - c.g / v - c.h * c.g -
                    u * c.h * c.g / lam - u * c.h * c.q;
  return u * c.h * c.h * c.h * E * E + Dh * E + R0;
}

// d(average AoI)/dtP, strictly positive on (0, inf).
inline double aoi_derivative(const ChannelActivity& chan, const SdTraffic& traffic,
                             double tP) {
  detail::require_time(tP);
  const double u = chan.u, v = chan.v, lam = traffic.lambda;
  const double s = u + v + lam;
  const double E = std::exp(u * tP);
  const double z = std::exp(-u * tP);
  // dE[S]/dtP with e^{2 u tP} factored out of numerator and denominator
  const double poly = lam * u * v * s * tP + lam * lam * (u + 2.0 * v) +
                      lam * v * (4.0 * u + 3.0 * v) + v * (u + v) * (u + v);
  const double dES = (lam * lam * s + poly * z) / (s * (lam + v * z) * (lam + v * z));
  // d(E[Y^2]/2E[Y])/dtP, same factoring
  const auto c = HelperConstants::of(chan, traffic);
  const double Dh = c.h * c.h * (2.0 * u * c.g - 1.0);
  const double R0 = u * c.h * c.g * c.g - u * c.h * c.g * tP - c.g / v - c.h * c.g -
                    u * c.h * c.g / lam - u * c.h * c.q;
  const double den = c.h + c.g * z;
  const double dY = (u * c.h * c.h * c.h * E + Dh + R0 * z) / (den * den);
  return dES + dY;
}

// d(E_T)/dtP. E_T(tP) = (N0 B / u) (e^{a tP} - 1)(e^{b/tP} - 1) with a = u and
// b = D ln2 / B; the lone zero of the derivative sits at sqrt(b/a).
inline double transmit_energy_derivative(const ChannelActivity& chan, const SdTraffic& traffic,
                                         const RadioConfig& cfg, double tP) {
  detail::require_time(tP);
  const double a = chan.u;
  const double b = traffic.D * M_LN2 / cfg.B;
  const double scale = cfg.effective_noise() * cfg.B / a;
  if (b / tP > 709.0) {
    // e^{b/tP} overflows; the sign is decided by the position vs sqrt(b/a)
    const double inf = std::numeric_limits<double>::infinity();
    return tP < std::sqrt(b / a) ? -inf : inf;
  }
  const double fp = std::exp(b / tP) *
                    (a * std::exp(a * tP) * (-std::expm1(-b / tP)) -
                     b / (tP * tP) * std::expm1(a * tP));
  return scale * fp;
}

// d(E_T + E_S + E_C)/dtP.
inline double esum_derivative(const ChannelActivity& chan, const SdTraffic& traffic,
                              const RadioConfig& cfg, double tP) {
  const double dK = chan.u * (1.0 / chan.u + 1.0 / chan.v) * std::exp(chan.u * tP);
  return transmit_energy_derivative(chan, traffic, cfg, tP) + (cfg.Ps + cfg.Pc) * dK;
}

}  // namespace craoi
