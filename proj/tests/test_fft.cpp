#include <complex>
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "cardiograph/fft.hpp"
#include "cardiograph/rng.hpp"

using namespace cardiograph;
using cplx = std::complex<double>;

namespace {

// O(J^2) reference DFT of a real field, returning the full complex spectrum
// in the same row-major (last axis fastest) layout as the field.
std::vector<cplx> naive_dft(const std::vector<int>& dims, const std::vector<double>& x) {
  const std::size_t rank = dims.size();
  std::size_t total = 1;
  for (const int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<cplx> out(total);
  std::vector<int> k(rank, 0), j(rank, 0);
  for (std::size_t ko = 0; ko < total; ++ko) {
    std::size_t rem = ko;
    for (std::size_t a = rank; a-- > 0;) {
      k[a] = static_cast<int>(rem % dims[a]);
      rem /= dims[a];
    }
    cplx acc = 0.0;
    for (std::size_t jo = 0; jo < total; ++jo) {
      rem = jo;
      double phase = 0.0;
      for (std::size_t a = rank; a-- > 0;) {
        j[a] = static_cast<int>(rem % dims[a]);
        rem /= dims[a];
        phase += static_cast<double>(k[a]) * j[a] / dims[a];
      }
      acc += x[jo] * std::polar(1.0, -2.0 * M_PI * phase);
    }
    out[ko] = acc;
  }
  return out;
}

// Index of a full-spectrum bin from its per-axis indices.
std::size_t full_index(const std::vector<int>& dims, const std::vector<int>& k) {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dims.size(); ++a)
    idx = idx * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(k[a]);
  return idx;
}

std::vector<double> random_field(const std::vector<int>& dims, std::uint64_t seed) {
  std::vector<double> x(fft::real_size(dims));
  rng::Counter c(seed, 8);
  for (double& v : x) v = c.uniform(-1.0, 1.0);
  return x;
}

const std::vector<std::vector<int>> kDimSets = {{8}, {7}, {6, 4}, {8, 6}, {3, 4, 5}};

}  // namespace

TEST_CASE("size helpers follow the halved-last-axis layout") {
  CHECK(fft::real_size({6, 4}) == 24);
  CHECK(fft::spec_size({6, 4}) == 18);
  CHECK(fft::spec_dims({6, 4}) == std::vector<int>{6, 3});
  CHECK(fft::spec_dims({5}) == std::vector<int>{3});
  CHECK(fft::spec_dims({3, 4, 5}) == std::vector<int>{3, 4, 3});
}

TEST_CASE("rfft matches the reference DFT on every stored bin") {
  for (const auto& dims : kDimSets) {
    CAPTURE(dims);
    const std::vector<double> x = random_field(dims, 11);
    std::vector<cplx> spec(fft::spec_size(dims));
    fft::rfft(dims, 1, x.data(), spec.data());
    const std::vector<cplx> full = naive_dft(dims, x);

    const std::vector<int> sdims = fft::spec_dims(dims);
    std::vector<int> k(dims.size(), 0);
    for (std::size_t s = 0; s < spec.size(); ++s) {
      std::size_t rem = s;
      for (std::size_t a = dims.size(); a-- > 0;) {
        k[a] = static_cast<int>(rem % sdims[a]);
        rem /= sdims[a];
      }
      CHECK(std::abs(spec[s] - full[full_index(dims, k)]) < 1e-10);
    }
  }
}

TEST_CASE("a delta gives a flat spectrum and a constant gives pure DC") {
  const std::vector<int> dims = {6, 4};
  std::vector<double> delta(fft::real_size(dims), 0.0);
  delta[0] = 1.0;
  std::vector<cplx> spec(fft::spec_size(dims));
  fft::rfft(dims, 1, delta.data(), spec.data());
  for (const cplx& v : spec) CHECK(std::abs(v - 1.0) < 1e-12);

  std::vector<double> ones(fft::real_size(dims), 1.0);
  fft::rfft(dims, 1, ones.data(), spec.data());
  CHECK(std::abs(spec[0] - 24.0) < 1e-12);
  for (std::size_t s = 1; s < spec.size(); ++s) CHECK(std::abs(spec[s]) < 1e-10);
}

TEST_CASE("irfft inverts rfft with 1/J normalization") {
  for (const auto& dims : kDimSets) {
    CAPTURE(dims);
    const std::vector<double> x = random_field(dims, 12);
    std::vector<cplx> spec(fft::spec_size(dims));
    std::vector<double> back(x.size());
    fft::rfft(dims, 1, x.data(), spec.data());
    fft::irfft(dims, 1, spec.data(), back.data());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
}

TEST_CASE("Parseval holds with mirror weights on the stored bins") {
  for (const auto& dims : kDimSets) {
    CAPTURE(dims);
    const std::vector<double> x = random_field(dims, 13);
    std::vector<cplx> spec(fft::spec_size(dims));
    fft::rfft(dims, 1, x.data(), spec.data());

    double lhs = 0.0;
    for (const double v : x) lhs += v * v;

    const int n_last = dims.back();
    const std::vector<int> sdims = fft::spec_dims(dims);
    const int s_last = sdims.back();
    double rhs = 0.0;
    for (std::size_t s = 0; s < spec.size(); ++s) {
      const int kx = static_cast<int>(s % static_cast<std::size_t>(s_last));
      const bool self = kx == 0 || (n_last % 2 == 0 && kx == n_last / 2);
      rhs += (self ? 1.0 : 2.0) * std::norm(spec[s]);
    }
    const double total = static_cast<double>(x.size());
    CHECK(rhs / total == doctest::Approx(lhs).epsilon(1e-12));
  }
}

TEST_CASE("batched transforms equal per-sample transforms") {
  const std::vector<int> dims = {6, 4};
  const std::size_t howmany = 3;
  const std::size_t rs = fft::real_size(dims);
  const std::size_t ss = fft::spec_size(dims);
  std::vector<double> x(howmany * rs);
  rng::Counter c(14, 8);
  for (double& v : x) v = c.normal();

  std::vector<cplx> batched(howmany * ss);
  fft::rfft(dims, howmany, x.data(), batched.data());
  for (std::size_t b = 0; b < howmany; ++b) {
    std::vector<cplx> one(ss);
    fft::rfft(dims, 1, x.data() + b * rs, one.data());
    for (std::size_t s = 0; s < ss; ++s) CHECK(std::abs(batched[b * ss + s] - one[s]) < 1e-12);
  }
}

TEST_CASE("irfft Hermitian-averages the self-mirror planes") {
  // Feed a spectrum that is NOT a valid rfft image (imaginary DC) and check
  // the result equals the transform of its averaged projection.
  const std::vector<int> dims = {4};
  std::vector<cplx> spec = {{0.0, 1.0}, {1.0, 2.0}, {3.0, -4.0}};
  std::vector<double> x(4);
  fft::irfft(dims, 1, spec.data(), x.data());
  std::vector<cplx> projected = {{0.0, 0.0}, {1.0, 2.0}, {3.0, 0.0}};
  std::vector<double> y(4);
  fft::irfft(dims, 1, projected.data(), y.data());
  for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-14));
}

TEST_CASE("rfft_adjoint satisfies the stored-bin pairing identity") {
  for (const auto& dims : kDimSets) {
    CAPTURE(dims);
    const std::vector<double> x = random_field(dims, 15);
    std::vector<cplx> s(fft::spec_size(dims));
    rng::Counter c(16, 8);
    for (cplx& v : s) v = {c.normal(), c.normal()};

    std::vector<cplx> fx(s.size());
    fft::rfft(dims, 1, x.data(), fx.data());
    double lhs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      lhs += fx[i].real() * s[i].real() + fx[i].imag() * s[i].imag();

    std::vector<double> adj(x.size());
    fft::rfft_adjoint(dims, 1, s.data(), adj.data());
    double rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * adj[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("irfft_adjoint satisfies the real-side pairing identity") {
  for (const auto& dims : kDimSets) {
    CAPTURE(dims);
    const std::vector<double> y = random_field(dims, 17);
    std::vector<cplx> s(fft::spec_size(dims));
    rng::Counter c(18, 8);
    for (cplx& v : s) v = {c.normal(), c.normal()};

    std::vector<double> iy(y.size());
    fft::irfft(dims, 1, s.data(), iy.data());
    double lhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += iy[i] * y[i];

    std::vector<cplx> adj(s.size());
    fft::irfft_adjoint(dims, 1, y.data(), adj.data());
    double rhs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      rhs += s[i].real() * adj[i].real() + s[i].imag() * adj[i].imag();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}
