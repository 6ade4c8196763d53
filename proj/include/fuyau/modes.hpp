#pragma once

// Fourier-mode descriptions of smooth data (rho, mu, initial perturbations)
// and random smooth generators used by the oracle suites.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "fuyau/hermitian.hpp"

namespace fuyau {

using Wavevector = std::array<int, 4>;  ///< (k_x1, k_y1, k_x2, k_y2)

inline double phase_at(const Wavevector& k, double x1, double y1, double x2, double y2) {
  return k[0] * x1 + k[1] * y1 + k[2] * x2 + k[3] * y2;
}

/// One entry of rho_{pbar q}: c exp(i k.x) with c = re + i im. Off-diagonal
/// entries are completed with conj(c) exp(-i k.x) in the (q, p) slot; diagonal
/// entries contribute Re(c exp(i k.x)).
struct RhoMode {
  int p = 1;
  int q = 1;
  Wavevector k{};
  double re = 0.0;
  double im = 0.0;
};

/// amplitude * cos(k.x + phase)
struct RealMode {
  Wavevector k{};
  double amplitude = 0.0;
  double phase = 0.0;
};

inline RealField field_from_modes(const GridSpec& g, const std::vector<RealMode>& modes) {
  return generate(g, [&](double x1, double y1, double x2, double y2) {
    double s = 0.0;
    for (const auto& m : modes) s += m.amplitude * std::cos(phase_at(m.k, x1, y1, x2, y2) + m.phase);
    return s;
  });
}

inline HermitianField rho_from_modes(const GridSpec& g, const std::vector<RhoMode>& modes) {
  HermitianField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto m = g.unflat(i);
    const double x1 = g.coordinate(m[0]), y1 = g.coordinate(m[1]);
    const double x2 = g.coordinate(m[2]), y2 = g.coordinate(m[3]);
    Herm2 h;
    for (const auto& mode : modes) {
      const cplx term = cplx(mode.re, mode.im) * std::polar(1.0, phase_at(mode.k, x1, y1, x2, y2));
      if (mode.p == mode.q) {
        (mode.p == 1 ? h.a11 : h.a22) += term.real();
      } else if (mode.p == 1) {
        h.a12 += term;
      } else {
        h.a12 += std::conj(term);
      }
    }
    out[i] = h;
  }
  return out;
}

/// Sum of `count` cosines with random wavevectors in [-max_k, max_k]^4
/// (zero mode excluded) and amplitudes uniform in [-amplitude, amplitude].
template <class Rng>
std::vector<RealMode> random_real_modes(Rng& rng, int count, int max_k, double amplitude) {
  std::uniform_int_distribution<int> kd(-max_k, max_k);
  std::uniform_real_distribution<double> ad(-amplitude, amplitude);
  std::uniform_real_distribution<double> pd(0.0, 2.0 * std::numbers::pi);
  std::vector<RealMode> modes;
  while (static_cast<int>(modes.size()) < count) {
    Wavevector k{kd(rng), kd(rng), kd(rng), kd(rng)};
    if (k == Wavevector{}) continue;
    modes.push_back({k, ad(rng), pd(rng)});
  }
  return modes;
}

template <class Rng>
std::vector<RhoMode> random_rho_modes(Rng& rng, int count, int max_k, double amplitude) {
  std::uniform_int_distribution<int> kd(-max_k, max_k);
  std::uniform_int_distribution<int> slot(1, 2);
  std::uniform_real_distribution<double> ad(-amplitude, amplitude);
  std::vector<RhoMode> modes;
  for (int i = 0; i < count; ++i) {
    modes.push_back({slot(rng), slot(rng), Wavevector{kd(rng), kd(rng), kd(rng), kd(rng)}, ad(rng),
                     ad(rng)});
  }
  return modes;
}

template <class Rng>
RealField random_smooth_field(const GridSpec& g, Rng& rng, int count, int max_k, double amplitude) {
  return field_from_modes(g, random_real_modes(rng, count, max_k, amplitude));
}

template <class Rng>
HermitianField random_hermitian_field(const GridSpec& g, Rng& rng, int count, int max_k,
                                      double amplitude) {
  return rho_from_modes(g, random_rho_modes(rng, count, max_k, amplitude));
}

}  // namespace fuyau
