#pragma once

// Discretization of the flat torus C^2 / (2 pi Z)^4 with the flat Kahler
// metric, plus exact spectral differentiation and grid-average integration.
//
// Grid points are stored in lexicographic order of the real coordinates
// (x1, y1, x2, y2) with x1 varying slowest; z^j = x^j + i y^j.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fuyau {

using cplx = std::complex<double>;

/// Raised when a field stops being finite; the flow treats it as a blow-up.
class BlowUpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  static constexpr double period = 2.0 * std::numbers::pi;

  int n = 0;             ///< points per real dimension
  bool dealias = false;  ///< 2/3-rule truncation of assembled nonlinear outputs

  std::size_t size() const {
    const auto m = static_cast<std::size_t>(n);
    return m * m * m * m;
  }
  double spacing() const { return period / n; }
  double coordinate(int m) const { return period * m / n; }

  /// Signed wavenumber of index m in [0, n): 0..n/2-1, then -n/2..-1.
  int wavenumber(int m) const { return m < n / 2 ? m : m - n; }
  int index_of(int k) const { return ((k % n) + n) % n; }

  std::size_t flat(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * n + b) * n + c) * n + d;
  }
  std::array<int, 4> unflat(std::size_t idx) const {
    std::array<int, 4> m{};
    for (int axis = 3; axis >= 0; --axis) {
      m[axis] = static_cast<int>(idx % n);
      idx /= n;
    }
    return m;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.n == b.n && a.dealias == b.dealias;
  }
};

inline GridSpec build_grid(int n_per_dim, bool dealias = false) {
  if (n_per_dim < 8) {
    throw std::invalid_argument("grid size must be at least 8, got " + std::to_string(n_per_dim));
  }
  if (n_per_dim % 2 != 0) {
    throw std::invalid_argument("grid size must be even, got " + std::to_string(n_per_dim));
  }
  return GridSpec{n_per_dim, dealias};
}

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (a.n != b.n) {
    throw std::invalid_argument("grid mismatch: n=" + std::to_string(a.n) + " vs n=" +
                                std::to_string(b.n));
  }
}

template <class T>
struct Field {
  GridSpec grid;
  std::vector<T> values;

  Field() = default;
  explicit Field(const GridSpec& g, T init = T{}) : grid(g), values(g.size(), init) {}

  std::size_t size() const { return values.size(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
  auto begin() { return values.begin(); }
  auto end() { return values.end(); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// Coefficients c(k) of f(x) = sum_k c(k) exp(i k.x), stored at the FFT
/// index of each signed wavenumber.
struct SpectralField {
  GridSpec grid;
  std::vector<cplx> coefficients;

  SpectralField() = default;
  explicit SpectralField(const GridSpec& g) : grid(g), coefficients(g.size()) {}

  cplx& at(int k0, int k1, int k2, int k3) {
    return coefficients[grid.flat(grid.index_of(k0), grid.index_of(k1), grid.index_of(k2),
                                  grid.index_of(k3))];
  }
  const cplx& at(int k0, int k1, int k2, int k3) const {
    return coefficients[grid.flat(grid.index_of(k0), grid.index_of(k1), grid.index_of(k2),
                                  grid.index_of(k3))];
  }
};

// ---------------------------------------------------------------------------
// pointwise algebra

template <class Fn>
RealField generate(const GridSpec& g, Fn&& fn) {
  RealField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto m = g.unflat(i);
    out[i] = fn(g.coordinate(m[0]), g.coordinate(m[1]), g.coordinate(m[2]), g.coordinate(m[3]));
  }
  return out;
}

template <class T, class Fn>
auto map(const Field<T>& f, Fn&& fn) {
  using R = decltype(fn(f[0]));
  Field<R> out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = fn(f[i]);
  return out;
}

template <class A, class B, class Fn>
auto zip(const Field<A>& a, const Field<B>& b, Fn&& fn) {
  require_same_grid(a.grid, b.grid);
  using R = decltype(fn(a[0], b[0]));
  Field<R> out(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

template <class T>
Field<T> operator+(const Field<T>& a, const Field<T>& b) {
  return zip(a, b, [](T x, T y) { return x + y; });
}
template <class T>
Field<T> operator-(const Field<T>& a, const Field<T>& b) {
  return zip(a, b, [](T x, T y) { return x - y; });
}
template <class T>
Field<T> operator*(const Field<T>& a, const Field<T>& b) {
  return zip(a, b, [](T x, T y) { return x * y; });
}
template <class T>
Field<T> operator-(const Field<T>& a) {
  return map(a, [](T x) { return -x; });
}
template <class T>
Field<T> operator*(T s, const Field<T>& a) {
  return map(a, [s](T x) { return s * x; });
}
inline RealField operator*(double s, const RealField& a) {
  return map(a, [s](double x) { return s * x; });
}
inline RealField operator+(const RealField& a, double s) {
  return map(a, [s](double x) { return x + s; });
}
inline RealField operator-(const RealField& a, double s) { return a + (-s); }

inline RealField exp(const RealField& f) {
  return map(f, [](double x) { return std::exp(x); });
}
inline RealField log(const RealField& f) {
  return map(f, [](double x) { return std::log(x); });
}

inline RealField real_part(const ComplexField& f) {
  return map(f, [](cplx z) { return z.real(); });
}
inline RealField imag_part(const ComplexField& f) {
  return map(f, [](cplx z) { return z.imag(); });
}
inline ComplexField to_complex(const RealField& f) {
  return map(f, [](double x) { return cplx(x, 0.0); });
}
inline ComplexField conj(const ComplexField& f) {
  return map(f, [](cplx z) { return std::conj(z); });
}

template <class T>
bool all_finite(const Field<T>& f) {
  return std::all_of(f.begin(), f.end(), [](const T& v) {
    if constexpr (std::is_same_v<T, cplx>) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
      return std::isfinite(v);
    }
  });
}

template <class T>
void require_finite(const Field<T>& f, const char* what) {
  if (!all_finite(f)) throw BlowUpError(std::string("non-finite values in ") + what);
}

// ---------------------------------------------------------------------------
// grid integration: the measure is the grid average, so the torus has unit
// volume and mean(f) is the integral of f against the background volume form.

namespace detail {

/// Neumaier-compensated sum.
inline double compensated_sum(auto first, auto last, auto part) {
  double s = 0.0, c = 0.0;
  for (; first != last; ++first) {
    const double v = part(*first);
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace detail

inline double mean(const RealField& f) {
  return detail::compensated_sum(f.begin(), f.end(), [](double v) { return v; }) /
         static_cast<double>(f.size());
}
inline cplx mean(const ComplexField& f) {
  const double re = detail::compensated_sum(f.begin(), f.end(), [](cplx v) { return v.real(); });
  const double im = detail::compensated_sum(f.begin(), f.end(), [](cplx v) { return v.imag(); });
  return cplx(re, im) / static_cast<double>(f.size());
}
inline double sup(const RealField& f) { return *std::max_element(f.begin(), f.end()); }
inline double inf(const RealField& f) { return *std::min_element(f.begin(), f.end()); }

/// max |f| over the grid
template <class T>
double sup_abs(const Field<T>& f) {
  double m = 0.0;
  for (const auto& v : f) m = std::max(m, std::abs(v));
  return m;
}

namespace detail {

/// Shortest readable form of a double for messages (std::to_string prints fixed point).
inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FFT engine

namespace detail {

class FftPlans {
 public:
  explicit FftPlans(int n) {
    const int dims[4] = {n, n, n, n};
    const std::size_t total = static_cast<std::size_t>(n) * n * n * n;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    // measured plans are made once per grid size and reused for every transform
    constexpr unsigned flags = FFTW_MEASURE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(4, dims, buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(4, dims, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(std::vector<cplx>& data) const {
    fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }
  void backward(std::vector<cplx>& data) const {
    fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Honors FUYAU_THREADS once, before the first plan is created.
inline void configure_threads_locked() {
  static bool done = false;
  if (done) return;
  done = true;
  if (const char* env = std::getenv("FUYAU_THREADS")) {
    const int threads = std::atoi(env);
    if (threads > 1 && fftw_init_threads() != 0) fftw_plan_with_nthreads(threads);
  }
}

inline const FftPlans& plans_for(int n) {
  std::lock_guard lock(planner_mutex());
  configure_threads_locked();
  static std::map<int, std::unique_ptr<FftPlans>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlans>(n);
  return *slot;
}

}  // namespace detail

inline SpectralField to_spectral(const ComplexField& f) {
  SpectralField c(f.grid);
  c.coefficients = f.values;
  detail::plans_for(f.grid.n).forward(c.coefficients);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (auto& v : c.coefficients) v *= scale;
  return c;
}

inline SpectralField to_spectral(const RealField& f) {
  SpectralField c(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) c.coefficients[i] = cplx(f[i], 0.0);
  detail::plans_for(f.grid.n).forward(c.coefficients);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (auto& v : c.coefficients) v *= scale;
  return c;
}

inline ComplexField from_spectral(const SpectralField& c) {
  ComplexField f(c.grid);
  f.values = c.coefficients;
  detail::plans_for(c.grid.n).backward(f.values);
  return f;
}

inline RealField from_spectral_real(const SpectralField& c) {
  return real_part(from_spectral(c));
}

namespace detail {

/// Flat index of the mode -k given the flat index of k.
inline std::size_t mirror_index(const GridSpec& g, std::size_t i) {
  const auto m = g.unflat(i);
  auto neg = [n = g.n](int a) { return a == 0 ? 0 : n - a; };
  return g.flat(neg(m[0]), neg(m[1]), neg(m[2]), neg(m[3]));
}

}  // namespace detail

/// Spectra of two real fields from one complex transform of a + i b.
inline std::pair<SpectralField, SpectralField> to_spectral_pair(const RealField& a,
                                                                 const RealField& b) {
  require_same_grid(a.grid, b.grid);
  ComplexField packed(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) packed[i] = cplx(a[i], b[i]);
  const SpectralField z = to_spectral(packed);
  std::pair<SpectralField, SpectralField> out{SpectralField(a.grid), SpectralField(a.grid)};
  for (std::size_t i = 0; i < z.coefficients.size(); ++i) {
    const cplx zi = z.coefficients[i];
    const cplx zm = std::conj(z.coefficients[detail::mirror_index(a.grid, i)]);
    out.first.coefficients[i] = 0.5 * (zi + zm);
    out.second.coefficients[i] = cplx(0.0, -0.5) * (zi - zm);
  }
  return out;
}

/// Inverse of to_spectral_pair. Both spectra must be those of real fields;
/// any imaginary part they would carry is folded into the other output.
inline std::pair<RealField, RealField> from_spectral_pair(const SpectralField& a,
                                                          const SpectralField& b) {
  require_same_grid(a.grid, b.grid);
  SpectralField packed(a.grid);
  for (std::size_t i = 0; i < packed.coefficients.size(); ++i) {
    packed.coefficients[i] = a.coefficients[i] + cplx(0.0, 1.0) * b.coefficients[i];
  }
  const ComplexField z = from_spectral(packed);
  return {real_part(z), imag_part(z)};
}

/// Largest |c(k) - conj(c(-k))| relative to max |c|; zero for the spectrum of a real field.
inline double real_symmetry_defect(const SpectralField& c) {
  double scale_sq = 0.0, defect_sq = 0.0;
  for (std::size_t i = 0; i < c.coefficients.size(); ++i) {
    const cplx v = c.coefficients[i];
    scale_sq = std::max(scale_sq, std::norm(v));
    defect_sq = std::max(defect_sq,
                         std::norm(v - std::conj(c.coefficients[detail::mirror_index(c.grid, i)])));
  }
  return scale_sq == 0.0 ? 0.0 : std::sqrt(defect_sq / scale_sq);
}

/// Applies fn(k) to every coefficient, where k = (k_x1, k_y1, k_x2, k_y2).
template <class Fn>
SpectralField apply_multiplier(const SpectralField& c, Fn&& fn) {
  SpectralField out(c.grid);
  const GridSpec& g = c.grid;
  std::size_t i = 0;
  std::array<int, 4> k{};
  for (int a = 0; a < g.n; ++a) {
    k[0] = g.wavenumber(a);
    for (int b = 0; b < g.n; ++b) {
      k[1] = g.wavenumber(b);
      for (int p = 0; p < g.n; ++p) {
        k[2] = g.wavenumber(p);
        for (int q = 0; q < g.n; ++q, ++i) {
          k[3] = g.wavenumber(q);
          out.coefficients[i] = c.coefficients[i] * fn(std::as_const(k));
        }
      }
    }
  }
  return out;
}

inline SpectralField add(const SpectralField& a, const SpectralField& b, cplx sb = 1.0) {
  require_same_grid(a.grid, b.grid);
  SpectralField out(a.grid);
  for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
    out.coefficients[i] = a.coefficients[i] + sb * b.coefficients[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// complex derivatives: d/dz^j = (d/dx^j - i d/dy^j)/2, d/dzbar^j = (d/dx^j + i d/dy^j)/2.
// On exp(i k.x) these act by (i k_x + k_y)/2 and (i k_x - k_y)/2. The Nyquist
// wavenumber -n/2 is treated as zero so real fields stay real.

namespace detail {
inline int resolved(int k, int n) { return k == -n / 2 ? 0 : k; }
}  // namespace detail

inline cplx dz_symbol(const std::array<int, 4>& k, int j, int n) {
  const double kx = detail::resolved(k[2 * (j - 1)], n);
  const double ky = detail::resolved(k[2 * (j - 1) + 1], n);
  return cplx(0.5 * ky, 0.5 * kx);
}
inline cplx dzbar_symbol(const std::array<int, 4>& k, int j, int n) {
  const double kx = detail::resolved(k[2 * (j - 1)], n);
  const double ky = detail::resolved(k[2 * (j - 1) + 1], n);
  return cplx(-0.5 * ky, 0.5 * kx);
}

/// -|k|^2 / 4: the symbol of the background trace Laplacian sum_j d_j d_jbar.
inline double trace_laplacian_symbol(const std::array<int, 4>& k, int n) {
  return (dz_symbol(k, 1, n) * dzbar_symbol(k, 1, n) + dz_symbol(k, 2, n) * dzbar_symbol(k, 2, n))
      .real();
}

inline void check_direction(int j) {
  if (j != 1 && j != 2) throw std::invalid_argument("complex direction must be 1 or 2");
}

inline SpectralField deriv_z(const SpectralField& c, int j) {
  check_direction(j);
  const int n = c.grid.n;
  return apply_multiplier(c, [&](const auto& k) { return dz_symbol(k, j, n); });
}
inline SpectralField deriv_zbar(const SpectralField& c, int j) {
  check_direction(j);
  const int n = c.grid.n;
  return apply_multiplier(c, [&](const auto& k) { return dzbar_symbol(k, j, n); });
}

template <class T>
ComplexField deriv_z(const Field<T>& f, int j) {
  return from_spectral(deriv_z(to_spectral(f), j));
}
template <class T>
ComplexField deriv_zbar(const Field<T>& f, int j) {
  return from_spectral(deriv_zbar(to_spectral(f), j));
}

/// 2/3-rule projection: zero every mode with some |k_i| > n/3.
inline SpectralField truncate_two_thirds(const SpectralField& c) {
  const int cutoff = c.grid.n / 3;
  return apply_multiplier(c, [cutoff](const auto& k) {
    for (int v : k) {
      if (std::abs(v) > cutoff) return 0.0;
    }
    return 1.0;
  });
}

/// Applies the 2/3 rule when the grid asks for dealiasing; identity otherwise.
inline RealField dealiased(const RealField& f) {
  if (!f.grid.dealias) return f;
  return from_spectral_real(truncate_two_thirds(to_spectral(f)));
}

/// Moves coefficients to a grid of another size: zero-padding when it is finer,
/// dropping modes when it is coarser. Modes at either Nyquist wavenumber are
/// dropped so real fields stay real.
inline SpectralField resample(const SpectralField& c, const GridSpec& target) {
  const int limit = std::min(c.grid.n, target.n) / 2;
  const auto kept = [limit](const std::array<int, 4>& k) {
    return std::all_of(k.begin(), k.end(), [limit](int v) { return std::abs(v) < limit; });
  };
  SpectralField out(target);
  std::size_t i = 0;
  std::array<int, 4> k{};
  for (int a = 0; a < target.n; ++a) {
    k[0] = target.wavenumber(a);
    for (int b = 0; b < target.n; ++b) {
      k[1] = target.wavenumber(b);
      for (int p = 0; p < target.n; ++p) {
        k[2] = target.wavenumber(p);
        for (int q = 0; q < target.n; ++q, ++i) {
          k[3] = target.wavenumber(q);
          if (kept(k)) out.coefficients[i] = c.at(k[0], k[1], k[2], k[3]);
        }
      }
    }
  }
  return out;
}

inline RealField resample(const RealField& f, const GridSpec& target) {
  return from_spectral_real(resample(to_spectral(f), target));
}

/// Size of the padded grid used to form products on a dealiased grid of size n
/// (the 3/2 rule, rounded up to an even size).
inline int padded_size(int n) { return 2 * ((3 * n + 3) / 4); }

}  // namespace fuyau
