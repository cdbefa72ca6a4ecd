#include "cardiograph/kol.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cardiograph/cholesky.hpp"
#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/threading.hpp"
#include "cardiograph/version.hpp"

namespace cardiograph {

namespace {

constexpr int kQuadOrder = 32;

void validate_spec(const KernelSpec& s) {
  switch (s.family) {
    case KernelFamily::RBF:
      if (!(s.rbf_sigma > 0.0)) raise(errc::ConfigError, "rbf_sigma must be positive");
      break;
    case KernelFamily::IQ:
      if (s.iq_sigma1 < 0.0 || !(s.iq_sigma2 > 0.0))
        raise(errc::ConfigError, "iq kernel needs sigma1 >= 0 and sigma2 > 0");
      break;
    case KernelFamily::NTK:
      if (s.ntk_depth < 2) raise(errc::ConfigError, "ntk_depth must be at least 2");
      break;
  }
}

// Gauss-Hermite nodes of the standard normal (Golub-Welsch on the Jacobi
// matrix of the physicists' Hermite recurrence): E[f(Z)] = sum w_i f(z_i).
struct NormalQuad {
  std::array<double, kQuadOrder> z{};
  std::array<double, kQuadOrder> w{};
};

const NormalQuad& normal_quad() {
  static const NormalQuad q = [] {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(kQuadOrder, kQuadOrder);
    for (int k = 1; k < kQuadOrder; ++k) {
      const double beta = std::sqrt(k / 2.0);
      jac(k, k - 1) = beta;
      jac(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    NormalQuad out;
    for (int i = 0; i < kQuadOrder; ++i) {
      out.z[i] = std::sqrt(2.0) * es.eigenvalues()(i);
      const double q1 = es.eigenvectors()(0, i);
      out.w[i] = q1 * q1;
    }
    return out;
  }();
  return q;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double sigmoid_prime(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

// E[f(u) g(v)] for (u, v) centered Gaussian with Cov [[a, c], [c, b]],
// evaluated by tensorized quadrature through the Cholesky factor.
template <typename F, typename G>
double gaussian_pair_expect(double a, double b, double c, F&& f, G&& g) {
  const NormalQuad& q = normal_quad();
  if (!(a > 0.0)) {
    const double f0 = f(0.0);
    if (!(b > 0.0)) return f0 * g(0.0);
    const double sb = std::sqrt(b);
    double acc = 0.0;
    for (int j = 0; j < kQuadOrder; ++j) acc += q.w[j] * g(sb * q.z[j]);
    return f0 * acc;
  }
  const double sa = std::sqrt(a);
  const double mu = c / sa;
  const double s2 = std::max(b - mu * mu, 0.0);
  const double s = std::sqrt(s2);
  double acc = 0.0;
  for (int i = 0; i < kQuadOrder; ++i) {
    const double u = sa * q.z[i];
    const double vi = mu * q.z[i];
    double inner = 0.0;
    for (int j = 0; j < kQuadOrder; ++j) inner += q.w[j] * g(vi + s * q.z[j]);
    acc += q.w[i] * f(u) * inner;
  }
  return acc;
}

double gaussian_self_expect(double a, double (*f)(double)) {
  if (!(a > 0.0)) {
    const double v = f(0.0);
    return v * v;
  }
  const NormalQuad& q = normal_quad();
  const double sa = std::sqrt(a);
  double acc = 0.0;
  for (int i = 0; i < kQuadOrder; ++i) {
    const double v = f(sa * q.z[i]);
    acc += q.w[i] * v * v;
  }
  return acc;
}

// Arc-cosine closed forms for ReLU with unit weight variance.
void relu_expectations(double a, double b, double c, double* ess, double* epp) {
  const double ab = std::max(a * b, 0.0);
  const double norm = std::sqrt(ab);
  double cth = norm > 0.0 ? c / norm : 1.0;
  cth = std::clamp(cth, -1.0, 1.0);
  const double theta = std::acos(cth);
  constexpr double kPi = 3.14159265358979323846;
  *ess = norm / (2.0 * kPi) * (std::sin(theta) + (kPi - theta) * cth);
  *epp = (kPi - theta) / (2.0 * kPi);
}

// Per-input trajectory of the self-covariance through the layer recursion.
std::vector<double> ntk_self_trajectory(const KernelSpec& s, double sigma0) {
  std::vector<double> traj(static_cast<std::size_t>(s.ntk_depth) - 1);
  double a = sigma0;
  for (int l = 0; l + 1 < s.ntk_depth; ++l) {
    traj[static_cast<std::size_t>(l)] = a;
    if (s.ntk_activation == NtkActivation::Relu)
      a = a / 2.0;  // arc-cosine diagonal: E[relu(u)^2] = a/2
    else
      a = gaussian_self_expect(a, sigmoid);
  }
  return traj;
}

// NTK recursion given the two self trajectories and the level-0 cross term:
//   Sigma^{l+1} = E[act(u) act(v)],  NTK^{l+1} = Sigma^{l+1} + NTK^l E[act'(u) act'(v)].
double ntk_from_trajectories(const KernelSpec& s, const std::vector<double>& ta,
                             const std::vector<double>& tb, double cross0) {
  double c = cross0;
  double ntk = cross0;
  for (int l = 0; l + 1 < s.ntk_depth; ++l) {
    const double a = ta[static_cast<std::size_t>(l)];
    const double b = tb[static_cast<std::size_t>(l)];
    double ess, epp;
    if (s.ntk_activation == NtkActivation::Relu) {
      relu_expectations(a, b, c, &ess, &epp);
    } else {
      ess = gaussian_pair_expect(a, b, c, sigmoid, sigmoid);
      epp = gaussian_pair_expect(a, b, c, sigmoid_prime, sigmoid_prime);
    }
    ntk = ess + ntk * epp;
    c = ess;
  }
  return ntk;
}

double mask_inner(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < a.size(); ++i) overlap += (a[i] != 0) & (b[i] != 0);
  return static_cast<double>(overlap) / static_cast<double>(a.size());
}

bool mask_empty(const std::vector<std::uint8_t>& m) {
  return std::none_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
}

double centroid_distance(const Vec3& c1, const Vec3& c2, int dim) {
  double d2 = 0.0;
  for (int a = 0; a < dim; ++a) d2 += (c1[a] - c2[a]) * (c1[a] - c2[a]);
  return std::sqrt(d2);
}

double centroid_kernel(const KernelSpec& s, double dist) {
  if (s.family == KernelFamily::RBF)
    return std::exp(-dist * dist / (2.0 * s.rbf_sigma * s.rbf_sigma));
  return 1.0 / std::sqrt(s.iq_sigma1 * dist + s.iq_sigma2);
}

void check_mask(const std::vector<std::uint8_t>& mask, const Geometry& g) {
  if (mask.size() != g.node_count())
    raise(errc::GeometryMismatch, "mask length differs from node count");
}

}  // namespace

KernelSpec kernel_preset(const std::string& name) {
  KernelSpec s;
  s.preset_name = name;
  if (name == "iq1" || name == "iq2" || name == "iq3" || name == "iq4" || name == "iq5") {
    s.family = KernelFamily::IQ;
    if (name == "iq1") { s.iq_sigma1 = 1e-5; s.iq_sigma2 = 1e-2; }
    if (name == "iq2") { s.iq_sigma1 = 1e-5; s.iq_sigma2 = 1e-1; }
    if (name == "iq3") { s.iq_sigma1 = 1e-4; s.iq_sigma2 = 1e-2; }
    if (name == "iq4") { s.iq_sigma1 = 1e-4; s.iq_sigma2 = 1e-1; }
    if (name == "iq5") { s.iq_sigma1 = 1e-3; s.iq_sigma2 = 1e-2; }
  } else if (name == "rbf1" || name == "rbf2" || name == "rbf3") {
    s.family = KernelFamily::RBF;
    s.rbf_sigma = name == "rbf1" ? 1.0 : name == "rbf2" ? 10.0 : 100.0;
  } else if (name == "ntk1" || name == "ntk2" || name == "ntk3") {
    s.family = KernelFamily::NTK;
    s.ntk_depth = name == "ntk2" ? 4 : 3;
    s.ntk_activation = name == "ntk3" ? NtkActivation::Relu : NtkActivation::Sigmoid;
  } else {
    raise(errc::ConfigError, "unknown kernel preset '" + name + "'");
  }
  return s;
}

const std::vector<std::string>& kernel_preset_names() {
  static const std::vector<std::string> names = {"iq1",  "iq2",  "iq3",  "iq4",  "iq5", "rbf1",
                                                 "rbf2", "rbf3", "ntk1", "ntk2", "ntk3"};
  return names;
}

Vec3 centroid(const std::vector<std::uint8_t>& mask, const Geometry& g) {
  check_mask(mask, g);
  Vec3 c{0.0, 0.0, 0.0};
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++count;
    for (int a = 0; a < 3; ++a) c[a] += g.coords[i][a];
  }
  if (count == 0) raise(errc::EmptyMask, "mask has no active node");
  for (int a = 0; a < 3; ++a) c[a] /= static_cast<double>(count);
  return c;
}

double kernel_eval(const KernelSpec& spec, const std::vector<std::uint8_t>& a1,
                   const std::vector<std::uint8_t>& a2, const Geometry& g) {
  validate_spec(spec);
  check_mask(a1, g);
  check_mask(a2, g);
  if (spec.family == KernelFamily::NTK) {
    if (mask_empty(a1) || mask_empty(a2)) raise(errc::EmptyMask, "mask has no active node");
    const auto ta = ntk_self_trajectory(spec, mask_inner(a1, a1));
    const auto tb = ntk_self_trajectory(spec, mask_inner(a2, a2));
    return ntk_from_trajectories(spec, ta, tb, mask_inner(a1, a2));
  }
  const Vec3 c1 = centroid(a1, g);
  const Vec3 c2 = centroid(a2, g);
  return centroid_kernel(spec, centroid_distance(c1, c2, g.dim));
}

std::vector<double> kol_gram(const KernelSpec& spec,
                             const std::vector<std::vector<std::uint8_t>>& masks,
                             const Geometry& g) {
  validate_spec(spec);
  const std::size_t n = masks.size();
  if (n == 0) raise(errc::TooSmall, "gram needs at least one mask");
  for (const auto& m : masks) check_mask(m, g);

  std::vector<double> gram(n * n);
  if (spec.family == KernelFamily::NTK) {
    std::vector<std::vector<double>> traj(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask_empty(masks[i])) raise(errc::EmptyMask, "mask has no active node");
      traj[i] = ntk_self_trajectory(spec, mask_inner(masks[i], masks[i]));
    }
#pragma omp parallel for schedule(dynamic) num_threads(threading::effective_workers())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      for (std::size_t j = ui; j < n; ++j) {
        const double v =
            ntk_from_trajectories(spec, traj[ui], traj[j], mask_inner(masks[ui], masks[j]));
        gram[ui * n + j] = v;
        gram[j * n + ui] = v;
      }
    }
    return gram;
  }

  std::vector<Vec3> cents(n);
  for (std::size_t i = 0; i < n; ++i) cents[i] = centroid(masks[i], g);
#pragma omp parallel for schedule(dynamic) num_threads(threading::effective_workers())
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = ui; j < n; ++j) {
      const double v = centroid_kernel(spec, centroid_distance(cents[ui], cents[j], g.dim));
      gram[ui * n + j] = v;
      gram[j * n + ui] = v;
    }
  }
  return gram;
}

KolModel fit_kol(const KernelSpec& spec, std::vector<std::vector<std::uint8_t>> masks,
                 const std::vector<double>& targets, std::size_t out_cols, const Geometry& g,
                 double reg) {
  validate_spec(spec);
  const std::size_t n = masks.size();
  if (n == 0) raise(errc::TooSmall, "fit needs at least one sample");
  if (targets.size() != n * out_cols)
    raise(errc::ShapeMismatch, "targets are not n_train x out_cols");

  std::vector<double> gram = kol_gram(spec, masks, g);
  for (std::size_t i = 0; i < n; ++i) gram[i * n + i] += reg;
  cholesky_factor(gram, n);

  KolModel m;
  m.spec = spec;
  m.geometry = g;
  m.reg = reg;
  m.out_cols = out_cols;
  m.train_centroids.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.train_centroids[i] = centroid(masks[i], g);
  m.train_masks = std::move(masks);
  m.alphas = targets;
  cholesky_solve_in_place(gram, n, m.alphas.data(), out_cols);
  return m;
}

std::vector<double> predict_kol(const KolModel& m, const std::vector<std::uint8_t>& mask) {
  validate_spec(m.spec);
  check_mask(mask, m.geometry);
  const std::size_t n = m.n_train();

  std::vector<double> row(n);
  if (m.spec.family == KernelFamily::NTK) {
    if (mask_empty(mask)) raise(errc::EmptyMask, "mask has no active node");
    const auto tq = ntk_self_trajectory(m.spec, mask_inner(mask, mask));
    for (std::size_t j = 0; j < n; ++j) {
      const auto tj = ntk_self_trajectory(m.spec, mask_inner(m.train_masks[j], m.train_masks[j]));
      row[j] = ntk_from_trajectories(m.spec, tq, tj, mask_inner(mask, m.train_masks[j]));
    }
  } else {
    const Vec3 c = centroid(mask, m.geometry);
    for (std::size_t j = 0; j < n; ++j)
      row[j] = centroid_kernel(m.spec,
                               centroid_distance(c, m.train_centroids[j], m.geometry.dim));
  }

  std::vector<double> out(m.out_cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = row[j];
    const double* alpha = m.alphas.data() + j * m.out_cols;
    for (std::size_t c = 0; c < m.out_cols; ++c) out[c] += k * alpha[c];
  }
  return out;
}

double interpolate_at(const std::vector<double>& field, const Geometry& g, const Vec3& x) {
  if (!g.structured()) raise(errc::Unsupported, "interpolation needs a structured grid");
  if (field.size() != g.node_count())
    raise(errc::ShapeMismatch, "field length differs from node count");

  int base[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    const double u = std::clamp(x[a], 0.0, g.extent[a]) / g.spacing[a];
    base[a] = std::min(static_cast<int>(u), g.dims[a] - 2);
    base[a] = std::max(base[a], 0);
    frac[a] = std::clamp(u - base[a], 0.0, 1.0);
  }
  double acc = 0.0;
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    double wgt = 1.0;
    int ijk[3] = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      const int hi = (c >> a) & 1;
      ijk[a] = base[a] + hi;
      wgt *= hi ? frac[a] : 1.0 - frac[a];
    }
    acc += wgt * field[g.index(ijk[0], ijk[1], ijk[2])];
  }
  return acc;
}

void save_kol(const KolModel& m, const std::string& path, const nlohmann::json& extra_meta) {
  if (m.n_train() == 0) raise(errc::TooSmall, "refusing to save an empty model");
  epds::Container c;
  if (extra_meta.is_object())
    for (const auto& [key, value] : extra_meta.items()) c.meta[key] = value;
  nlohmann::json spec;
  spec["family"] = m.spec.family == KernelFamily::RBF ? "rbf"
                   : m.spec.family == KernelFamily::IQ ? "iq"
                                                       : "ntk";
  spec["rbf_sigma"] = m.spec.rbf_sigma;
  spec["iq_sigma1"] = m.spec.iq_sigma1;
  spec["iq_sigma2"] = m.spec.iq_sigma2;
  spec["ntk_depth"] = m.spec.ntk_depth;
  spec["ntk_activation"] = m.spec.ntk_activation == NtkActivation::Relu ? "relu" : "sigmoid";
  spec["preset"] = m.spec.preset_name;
  c.meta["kind"] = "kol_model";
  c.meta["spec"] = spec;
  c.meta["reg"] = m.reg;
  c.meta["tool_version"] = kToolVersion;
  nlohmann::json geo;
  geo["dims"] = std::vector<int>(m.geometry.dims.begin(), m.geometry.dims.end());
  geo["extent"] =
      std::vector<double>(m.geometry.extent.begin(), m.geometry.extent.begin() + m.geometry.dim);
  c.meta["geometry"] = geo;

  const std::size_t n = m.n_train();
  const std::size_t nodes = m.geometry.node_count();
  std::vector<double> masks(n * nodes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < nodes; ++j) masks[i * nodes + j] = m.train_masks[i][j];
  std::vector<double> cents(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) cents[i * 3 + static_cast<std::size_t>(a)] = m.train_centroids[i][a];
  c.add("masks", {n, nodes}, std::move(masks));
  c.add("centroids", {n, 3}, std::move(cents));
  c.add("alphas", {n, m.out_cols}, m.alphas);
  epds::write_container(c, path);
}

KolModel load_kol(const std::string& path, nlohmann::json* meta_out) {
  const epds::Container c = epds::read_container(path);
  if (!c.meta.contains("kind") || c.meta["kind"] != "kol_model")
    raise(errc::IoError, "'" + path + "' is not a kernel model container");
  if (meta_out != nullptr) *meta_out = c.meta;

  KolModel m;
  const auto& spec = c.meta["spec"];
  const std::string family = spec["family"].get<std::string>();
  m.spec.family = family == "rbf"  ? KernelFamily::RBF
                  : family == "iq" ? KernelFamily::IQ
                                   : KernelFamily::NTK;
  m.spec.rbf_sigma = spec["rbf_sigma"].get<double>();
  m.spec.iq_sigma1 = spec["iq_sigma1"].get<double>();
  m.spec.iq_sigma2 = spec["iq_sigma2"].get<double>();
  m.spec.ntk_depth = spec["ntk_depth"].get<int>();
  m.spec.ntk_activation =
      spec["ntk_activation"].get<std::string>() == "relu" ? NtkActivation::Relu
                                                          : NtkActivation::Sigmoid;
  m.spec.preset_name = spec["preset"].get<std::string>();
  m.reg = c.meta["reg"].get<double>();
  const auto dims = c.meta["geometry"]["dims"].get<std::vector<int>>();
  const auto extent = c.meta["geometry"]["extent"].get<std::vector<double>>();
  m.geometry = build_structured(dims, extent);

  const epds::Array& masks = c.at("masks");
  const epds::Array& cents = c.at("centroids");
  const epds::Array& alphas = c.at("alphas");
  const std::size_t nodes = m.geometry.node_count();
  if (masks.dims.size() != 2 || masks.dims[1] != nodes)
    raise(errc::ShapeMismatch, "stored masks do not match the geometry");
  const std::size_t n = masks.dims[0];
  if (cents.dims.size() != 2 || cents.dims[0] != n || cents.dims[1] != 3 ||
      alphas.dims.size() != 2 || alphas.dims[0] != n)
    raise(errc::ShapeMismatch, "stored model arrays disagree on sample count");

  m.out_cols = alphas.dims[1];
  m.alphas = alphas.data;
  m.train_masks.resize(n);
  m.train_centroids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.train_masks[i].resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j)
      m.train_masks[i][j] = masks.data[i * nodes + j] != 0.0 ? 1 : 0;
    for (int a = 0; a < 3; ++a)
      m.train_centroids[i][a] = cents.data[i * 3 + static_cast<std::size_t>(a)];
  }
  return m;
}

}  // namespace cardiograph
