#pragma once

// Physical parameters of the spectrum-sharing link and the bijection between
// transmit power and the time needed to push one packet through the channel.
//
// Units are SI throughout: seconds, Watts, bits, Hz. Rates are per second.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace craoi {

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("craoi: ") + what);
}
inline bool pos_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace detail

// Two-state IDLE/BUSY process of the licensed channel. u is the rate
// IDLE -> BUSY, v the rate BUSY -> IDLE, so idle bursts last Exp(u) and busy
// bursts Exp(v).
struct ChannelActivity {
  double u;
  double v;

  ChannelActivity(double u_, double v_) : u(u_), v(v_) {
    detail::require(detail::pos_finite(u), "channel rate u must be positive and finite");
    detail::require(detail::pos_finite(v), "channel rate v must be positive and finite");
    detail::require(detail::pos_finite(v / u), "idle/busy ratio v/u must be positive and finite");
  }

  double idle_busy_ratio() const { return v / u; }       // k = v/u
  double stationary_idle() const { return v / (u + v); }
};

// Status-update traffic of the secondary device: Poisson generation of rate
// lambda, fixed packet size D bits.
struct SdTraffic {
  double lambda;
  double D;

  SdTraffic(double lambda_, double D_) : lambda(lambda_), D(D_) {
    detail::require(detail::pos_finite(lambda), "generation rate lambda must be positive and finite");
    detail::require(detail::pos_finite(D), "packet size D must be positive and finite");
  }
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Radio-side constants: bandwidth, receiver noise density, distance/path loss,
// and the three power figures (sensing, static circuit, transmit budget).
struct RadioConfig {
  double B;           // channel bandwidth, Hz
  double N0_rx_dbm;   // receiver noise power density, dBm/Hz
  double L;           // SD-SAP distance
  double theta;       // path loss exponent
  double Ps;          // sensing power, W
  double Pc;          // static circuit power, W
  double Pmax;        // transmit power budget, W

  RadioConfig(double B_, double N0_rx_dbm_, double L_, double theta_,
              double Ps_, double Pc_, double Pmax_)
      : B(B_), N0_rx_dbm(N0_rx_dbm_), L(L_), theta(theta_), Ps(Ps_), Pc(Pc_), Pmax(Pmax_) {
    detail::require(detail::pos_finite(B), "bandwidth B must be positive and finite");
    detail::require(std::isfinite(N0_rx_dbm), "N0_rx_dbm must be finite");
    detail::require(detail::pos_finite(L), "distance L must be positive and finite");
    detail::require(detail::pos_finite(theta), "path loss exponent theta must be positive and finite");
    detail::require(std::isfinite(Ps) && Ps >= 0.0, "sensing power Ps must be >= 0");
    detail::require(std::isfinite(Pc) && Pc >= 0.0, "circuit power Pc must be >= 0");
    detail::require(detail::pos_finite(Pmax), "power budget Pmax must be positive and finite");
    detail::require(detail::pos_finite(effective_noise()), "effective noise density must be positive and finite");
  }

  // Noise density referred to the transmitter: the receiver-side density is
  // inflated by the path loss L^theta (eta = L^-theta, N0 = N0_rx / eta).
  double effective_noise() const {
    return dbm_to_watt(N0_rx_dbm) * std::pow(L, theta);
  }
};

inline double effective_noise(const RadioConfig& cfg) { return cfg.effective_noise(); }

inline double shannon_rate(double Pt, const RadioConfig& cfg) {
  detail::require(detail::pos_finite(Pt), "transmit power must be positive and finite");
  const double n0b = cfg.effective_noise() * cfg.B;
  return cfg.B * std::log2(1.0 + Pt / n0b);
}

// Time to move one D-bit packet at Shannon rate; strictly decreasing in Pt.
inline double power_to_time(double Pt, const RadioConfig& cfg, const SdTraffic& traffic) {
  return traffic.D / shannon_rate(Pt, cfg);
}

// Exact inverse of power_to_time.
inline double time_to_power(double tP, const RadioConfig& cfg, const SdTraffic& traffic) {
  detail::require(detail::pos_finite(tP), "transmission time must be positive and finite");
  const double n0b = cfg.effective_noise() * cfg.B;
  return n0b * std::expm1(traffic.D * M_LN2 / (cfg.B * tP));
}

// A consistent (Pt, tP, C) triple on the rate curve.
struct OperatingPoint {
  double Pt;
  double tP;
  double C;

  static OperatingPoint from_power(double Pt, const RadioConfig& cfg, const SdTraffic& traffic) {
    OperatingPoint p;
    p.Pt = Pt;
    p.C = shannon_rate(Pt, cfg);
    p.tP = traffic.D / p.C;
    return p;
  }
  static OperatingPoint from_time(double tP, const RadioConfig& cfg, const SdTraffic& traffic) {
    OperatingPoint p;
    p.tP = tP;
    p.Pt = time_to_power(tP, cfg, traffic);
    p.C = traffic.D / tP;
    return p;
  }

 private:
  OperatingPoint() = default;
};

}  // namespace craoi
