#include "cardiograph/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <unordered_map>

#include "cardiograph/errors.hpp"

namespace cardiograph::fft {

namespace {

enum class Kind { r2c, c2r, c2c_backward };

struct PlanKey {
  std::vector<int> dims;
  std::size_t howmany;
  Kind kind;
  bool operator==(const PlanKey& o) const {
    return kind == o.kind && howmany == o.howmany && dims == o.dims;
  }
};

struct PlanKeyHash {
  std::size_t operator()(const PlanKey& k) const {
    std::size_t h = k.howmany * 1315423911u + static_cast<std::size_t>(k.kind);
    for (int d : k.dims) h = h * 1000003u + static_cast<std::size_t>(d);
    return h;
  }
};

void validate(const std::vector<int>& dims, std::size_t howmany) {
  if (dims.empty() || howmany == 0) raise(errc::InvalidDims, "empty transform shape");
  for (int d : dims)
    if (d < 1) raise(errc::InvalidDims, "transform axis length " + std::to_string(d));
}

// Plans are created once per (shape, batch, kind) with FFTW_ESTIMATE so the
// chosen algorithm never depends on runtime measurements, and with
// FFTW_UNALIGNED so the new-array execute functions accept any buffer.
fftw_plan get_plan(const std::vector<int>& dims, std::size_t howmany, Kind kind) {
  static std::unordered_map<PlanKey, fftw_plan, PlanKeyHash> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const PlanKey key{dims, howmany, kind};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const int rank = static_cast<int>(dims.size());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const std::size_t nreal = real_size(dims);
  const std::size_t nspec = spec_size(dims);
  fftw_plan plan = nullptr;
  if (kind == Kind::r2c) {
    std::vector<double> rbuf(nreal * howmany);
    std::vector<std::complex<double>> cbuf(nspec * howmany);
    plan = fftw_plan_many_dft_r2c(rank, dims.data(), static_cast<int>(howmany), rbuf.data(),
                                  nullptr, 1, static_cast<int>(nreal),
                                  reinterpret_cast<fftw_complex*>(cbuf.data()), nullptr, 1,
                                  static_cast<int>(nspec), flags);
  } else if (kind == Kind::c2r) {
    std::vector<std::complex<double>> cbuf(nspec * howmany);
    std::vector<double> rbuf(nreal * howmany);
    plan = fftw_plan_many_dft_c2r(rank, dims.data(), static_cast<int>(howmany),
                                  reinterpret_cast<fftw_complex*>(cbuf.data()), nullptr, 1,
                                  static_cast<int>(nspec), rbuf.data(), nullptr, 1,
                                  static_cast<int>(nreal), flags);
  } else {
    std::vector<std::complex<double>> a(nreal * howmany), b(nreal * howmany);
    plan = fftw_plan_many_dft(rank, dims.data(), static_cast<int>(howmany),
                              reinterpret_cast<fftw_complex*>(a.data()), nullptr, 1,
                              static_cast<int>(nreal),
                              reinterpret_cast<fftw_complex*>(b.data()), nullptr, 1,
                              static_cast<int>(nreal), FFTW_BACKWARD, flags);
  }
  if (!plan) raise(errc::Unsupported, "transform planning failed");
  cache.emplace(key, plan);
  return plan;
}

// Visits every stored bin of the self-mirror planes (last-axis index 0 and,
// for even axes, n/2) together with its in-plane mirror.
template <typename Fn>
void for_self_mirror_pairs(const std::vector<int>& dims, Fn&& fn) {
  const int rank = static_cast<int>(dims.size());
  const int nlast = dims[rank - 1];
  const int hlast = nlast / 2 + 1;
  std::size_t perp = 1;
  for (int a = 0; a < rank - 1; ++a) perp *= static_cast<std::size_t>(dims[a]);
  std::vector<int> idx(rank - 1, 0);
  for (std::size_t flat = 0; flat < perp; ++flat) {
    // Decode row-major perpendicular index and its negation mod n.
    std::size_t rem = flat, mflat = 0;
    bool self = true;
    for (int a = 0; a < rank - 1; ++a) {
      std::size_t tail = 1;
      for (int b = a + 1; b < rank - 1; ++b) tail *= static_cast<std::size_t>(dims[b]);
      idx[a] = static_cast<int>(rem / tail);
      rem %= tail;
      const int m = idx[a] == 0 ? 0 : dims[a] - idx[a];
      if (m != idx[a]) self = false;
      mflat = mflat * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(m);
    }
    if (mflat < flat) continue;  // pair handled from the mirror side
    const int nplanes = (nlast % 2 == 0 && nlast >= 2) ? 2 : 1;
    for (int t = 0; t < nplanes; ++t) {
      const int p = t == 0 ? 0 : nlast / 2;
      fn(flat * hlast + p, mflat * hlast + p, self);
    }
  }
}

}  // namespace

std::size_t real_size(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<int> spec_dims(const std::vector<int>& dims) {
  std::vector<int> s(dims);
  s.back() = s.back() / 2 + 1;
  return s;
}

std::size_t spec_size(const std::vector<int>& dims) {
  std::size_t n = 1;
  const auto s = spec_dims(dims);
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

void rfft(const std::vector<int>& dims, std::size_t howmany, const double* x,
          std::complex<double>* spec) {
  validate(dims, howmany);
  fftw_plan plan = get_plan(dims, howmany, Kind::r2c);
  fftw_execute_dft_r2c(plan, const_cast<double*>(x), reinterpret_cast<fftw_complex*>(spec));
}

void irfft(const std::vector<int>& dims, std::size_t howmany, const std::complex<double>* spec,
           double* x) {
  validate(dims, howmany);
  const std::size_t nspec = spec_size(dims);
  const std::size_t nreal = real_size(dims);
  static thread_local std::vector<std::complex<double>> scratch;
  scratch.assign(spec, spec + nspec * howmany);
  for (std::size_t f = 0; f < howmany; ++f) {
    std::complex<double>* s = scratch.data() + f * nspec;
    for_self_mirror_pairs(dims, [&](std::size_t i, std::size_t j, bool self) {
      if (self) {
        s[i].imag(0.0);
      } else {
        const std::complex<double> avg = 0.5 * (s[i] + std::conj(s[j]));
        s[i] = avg;
        s[j] = std::conj(avg);
      }
    });
  }
  fftw_plan plan = get_plan(dims, howmany, Kind::c2r);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(scratch.data()), x);
  const double inv = 1.0 / static_cast<double>(nreal);
  for (std::size_t i = 0; i < nreal * howmany; ++i) x[i] *= inv;
}

void rfft_adjoint(const std::vector<int>& dims, std::size_t howmany,
                  const std::complex<double>* spec, double* x) {
  validate(dims, howmany);
  const std::size_t nreal = real_size(dims);
  const std::size_t nspec = spec_size(dims);
  const int rank = static_cast<int>(dims.size());
  const int hlast = dims[rank - 1] / 2 + 1;
  static thread_local std::vector<std::complex<double>> in, out;
  in.assign(nreal * howmany, {0.0, 0.0});
  out.resize(nreal * howmany);
  // Embed the stored half spectrum into the full cube, leaving the
  // unstored mirror bins zero: the adjoint uses each stored bin once.
  const std::size_t rows = nreal / static_cast<std::size_t>(dims[rank - 1]);
  for (std::size_t f = 0; f < howmany; ++f)
    for (std::size_t r = 0; r < rows; ++r)
      std::memcpy(in.data() + f * nreal + r * dims[rank - 1],
                  spec + f * nspec + r * hlast, sizeof(std::complex<double>) * hlast);
  fftw_plan plan = get_plan(dims, howmany, Kind::c2c_backward);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  for (std::size_t i = 0; i < nreal * howmany; ++i) x[i] = out[i].real();
}

void irfft_adjoint(const std::vector<int>& dims, std::size_t howmany, const double* x,
                   std::complex<double>* spec) {
  validate(dims, howmany);
  const std::size_t nspec = spec_size(dims);
  const std::size_t nreal = real_size(dims);
  rfft(dims, howmany, x, spec);
  const double inv = 1.0 / static_cast<double>(nreal);
  const double two = 2.0 * inv;
  for (std::size_t i = 0; i < nspec * howmany; ++i) spec[i] *= two;
  for (std::size_t f = 0; f < howmany; ++f) {
    std::complex<double>* s = spec + f * nspec;
    for_self_mirror_pairs(dims, [&](std::size_t i, std::size_t j, bool self) {
      s[i] *= 0.5;
      if (self)
        s[i].imag(0.0);
      else
        s[j] *= 0.5;
    });
  }
}

}  // namespace cardiograph::fft
