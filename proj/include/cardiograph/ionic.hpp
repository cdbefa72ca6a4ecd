#pragma once

namespace cardiograph {

// Two-variable phenomenological membrane model (Rogers-McCulloch form):
//   I_ion(v, w) = G v (1 - v/v_th)(1 - v/v_p) + eta1 v w
//   dw/dt       = eta2 (v/v_p - eta3 w)
// (0, 0) is an exact equilibrium; I_ion(., w=0) has roots {0, v_th, v_p}.
struct IonicParams {
  double G = 1.5;
  double eta1 = 4.4;
  double eta2 = 0.012;
  double eta3 = 1.0;
  double v_th = 13.0;
  double v_p = 100.0;
};

inline double ionic_current(double v, double w, const IonicParams& p) {
  return p.G * v * (1.0 - v / p.v_th) * (1.0 - v / p.v_p) + p.eta1 * v * w;
}

inline double recovery_rhs(double v, double w, const IonicParams& p) {
  return p.eta2 * (v / p.v_p - p.eta3 * w);
}

}  // namespace cardiograph
