#include "rangecap/green.hpp"

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rangecap/errors.hpp"
#include "rangecap/rng.hpp"

namespace rangecap {

// G(0,x) = int_0^inf prod_i e^{-t/d} I_{|x_i|}(t/d) dt  (continuous-time walk, unit jump rate).
// [0,1] is covered by linear Gauss-Kronrod panels, [1,T] by panels uniform in log t,
// and [T,inf) by the large-argument expansion of e^{-z} I_k(z) integrated term by term.

namespace {

constexpr int kNodes = 15;
constexpr int kLanes = 16;
constexpr int kTailTerms = 10;
constexpr int kMaxRefinements = 6;

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  alignas(64) std::array<double, kLanes> t{};
  alignas(64) std::array<double, kLanes> wk{};
  alignas(64) std::array<double, kLanes> wg{};
};

void fill_panel(Panel& p, double center, double half, bool log_scale) {
  for (int j = 0; j < 8; ++j) {
    const double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
    for (int side = 0; side < (j == 7 ? 1 : 2); ++side) {
      const int slot = (j == 7) ? 14 : j + 7 * side;
      const double s = center + (side ? half : -half) * kXgk[j];
      const double t = log_scale ? std::exp(s) : s;
      const double jac = log_scale ? half * t : half;
      p.t[slot] = t;
      p.wk[slot] = kWgk[j] * jac;
      p.wg[slot] = wg * jac;
    }
  }
}

double tail_horizon(int dim, int kmax) { return 40.0 * dim * (static_cast<double>(kmax) * kmax + 1.0) + 400.0; }

std::vector<Panel> make_panels(int dim, int kmax, int refinement) {
  const double horizon = tail_horizon(dim, kmax);
  const int lin = 2 << refinement;
  const double log_width = 0.25 / (1 << refinement);
  const int logs = static_cast<int>(std::ceil(std::log(horizon) / log_width));
  const double h = std::log(horizon) / logs;
  std::vector<Panel> panels(lin + logs);
  for (int i = 0; i < lin; ++i) fill_panel(panels[i], (i + 0.5) / lin, 0.5 / lin, false);
  for (int i = 0; i < logs; ++i) fill_panel(panels[lin + i], (i + 0.5) * h, 0.5 * h, true);
  return panels;
}

// e^{-z} I_k(z) for k = 0..kmax at the panel nodes; layout bes[k * kLanes + node].
void panel_bessel(const Panel& p, int dim, int kmax, std::vector<double>& bes) {
  bes.assign(static_cast<std::size_t>(kmax + 1) * kLanes, 0.0);
  std::vector<double> col(kmax + 1);
  for (int j = 0; j < kNodes; ++j) {
    const double z = p.t[j] / dim;
    // Skip orders whose value underflows; the downward recurrence would otherwise zero the rest.
    int kcut = kmax;
    double lg = -z;
    for (int k = 1; k <= kmax; ++k) {
      lg += std::log(z / 2.0) - std::log(static_cast<double>(k));
      if (lg < -650.0 && k > z) {
        kcut = k - 1;
        break;
      }
    }
    std::fill(col.begin(), col.end(), 0.0);
    const int status = gsl_sf_bessel_In_scaled_array(0, kcut, z, col.data());
    if (status != GSL_SUCCESS && status != GSL_EUNDRFLW)
      throw NumericalError(std::string("Bessel evaluation failed: ") + gsl_strerror(status));
    for (int k = 0; k <= kcut; ++k) bes[static_cast<std::size_t>(k) * kLanes + j] = col[k];
  }
}

// Coefficients a_j(k) of e^{-z} I_k(z) sqrt(2 pi z) ~ sum_j a_j(k) z^{-j}, signs included.
std::array<double, kTailTerms> bessel_series(int k) {
  std::array<double, kTailTerms> a{};
  a[0] = 1.0;
  const double mu = 4.0 * k * k;
  for (int j = 1; j < kTailTerms; ++j) {
    const double odd = 2.0 * j - 1.0;
    a[j] = -a[j - 1] * (mu - odd * odd) / (8.0 * j);
  }
  return a;
}

void poly_mul(std::array<double, kTailTerms>& acc, const std::array<double, kTailTerms>& f) {
  std::array<double, kTailTerms> out{};
  for (int i = 0; i < kTailTerms; ++i)
    for (int j = 0; i + j < kTailTerms; ++j) out[i + j] += acc[i] * f[j];
  acc = out;
}

// int_T^inf of the expansion given product coefficients c_j; err receives the last term.
double tail_integral(int dim, double horizon, const std::array<double, kTailTerms>& c, double* err) {
  const double half = 0.5 * dim;
  const double pref = std::pow(dim / (2.0 * std::numbers::pi), half);
  double sum = 0.0, term = 0.0;
  for (int j = 0; j < kTailTerms; ++j) {
    term = pref * c[j] * std::pow(static_cast<double>(dim), j) * std::pow(horizon, 1.0 - half - j) / (half + j - 1.0);
    sum += term;
  }
  if (err) *err = std::abs(term);
  return sum;
}

void check_green_dim(int dim) {
  check_dimension(dim);
  if (dim < 3) throw ValidationError("Green kernel is infinite for d < 3 (recurrent walk), got d=" + std::to_string(dim));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || (res.ptr != last && *res.ptr != '\r'))
    throw ValidationError("green table: bad number `" + s + "`");
  return v;
}

}  // namespace

double default_green_tolerance(int dim) { return dim <= 4 ? 1e-8 : 1e-7; }

int default_cache_radius(int dim) {
  switch (dim) {
    case 3: return 40;
    case 4: return 32;
    case 5: return 24;
    case 6: return 20;
    default: return 16;
  }
}

GreenQuadrature green_quadrature(int dim, const LatticePoint& x, double tol) {
  check_green_dim(dim);
  require(x.dim() == dim, "displacement dimension mismatch");
  require(tol > 0, "quadrature tolerance must be positive");
  gsl_set_error_handler_off();
  std::vector<int> a(dim);
  for (int i = 0; i < dim; ++i) {
    require(std::abs(x[i]) <= 100000, "displacement too large for direct quadrature");
    a[i] = static_cast<int>(std::abs(x[i]));
  }
  const int kmax = *std::max_element(a.begin(), a.end());
  const double horizon = tail_horizon(dim, kmax);

  std::array<double, kTailTerms> c{};
  c[0] = 1.0;
  for (int k : a) poly_mul(c, bessel_series(k));
  double tail_err = 0;
  const double tail = tail_integral(dim, horizon, c, &tail_err);

  std::vector<double> bes;
  double last = 0;
  for (int level = 0; level <= kMaxRefinements; ++level) {
    double sum = 0, err = 0;
    for (const Panel& p : make_panels(dim, kmax, level)) {
      panel_bessel(p, dim, kmax, bes);
      double k15 = 0, g7 = 0;
      for (int j = 0; j < kNodes; ++j) {
        double prod = 1.0;
        for (int k : a) prod *= bes[static_cast<std::size_t>(k) * kLanes + j];
        k15 += p.wk[j] * prod;
        g7 += p.wg[j] * prod;
      }
      sum += k15;
      err += std::abs(k15 - g7);
    }
    last = sum + tail;
    if (err + tail_err <= tol) return {last, err + tail_err, level};
  }
  throw NumericalError("Green quadrature did not reach tolerance " + format_double(tol) + " for x=" + x.to_string());
}

double green_exact(int dim, const LatticePoint& x, double tol) { return green_quadrature(dim, x, tol).value; }

// ---------------------------------------------------------------------------

void GreenOracle::init_indexing() {
  const int n = radius_ + dim_ + 1;
  binom_.assign(static_cast<std::size_t>(n) * (dim_ + 1), 0);
  for (int i = 0; i < n; ++i) {
    binom_[i * (dim_ + 1)] = 1;
    for (int k = 1; k <= std::min(i, dim_); ++k)
      binom_[i * (dim_ + 1) + k] = binom_[(i - 1) * (dim_ + 1) + k - 1] + (k <= i - 1 ? binom_[(i - 1) * (dim_ + 1) + k] : 0);
  }
}

std::size_t GreenOracle::index_of_sorted(const int* a) const noexcept {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) idx += binom_[static_cast<std::size_t>(a[i] + dim_ - 1 - i) * (dim_ + 1) + (dim_ - i)];
  return idx;
}

namespace {

// Visits every non-increasing tuple a_0 >= ... >= a_{d-1} >= 0 with a_0 <= radius.
// `enter(level, value)` is called when position `level` is set; `leaf()` at full depth.
template <class Enter, class Leaf>
void enumerate_orbits(int dim, int radius, Enter&& enter, Leaf&& leaf) {
  std::array<int, kMaxDim> a{};
  std::function<void(int, int)> rec = [&](int level, int bound) {
    for (int v = 0; v <= bound; ++v) {
      a[level] = v;
      enter(level, v, a);
      if (level + 1 == dim)
        leaf(a);
      else
        rec(level + 1, v);
    }
  };
  rec(0, radius);
}

double orbit_size(int dim, const std::array<int, kMaxDim>& a) {
  double perms = 1;
  for (int i = 2; i <= dim; ++i) perms *= i;
  int run = 1;
  for (int i = 1; i <= dim; ++i) {
    if (i < dim && a[i] == a[i - 1]) {
      ++run;
    } else {
      for (int r = 2; r <= run; ++r) perms /= r;
      run = 1;
    }
  }
  for (int i = 0; i < dim; ++i)
    if (a[i] != 0) perms *= 2;
  return perms;
}

double tuple_norm(int dim, const std::array<int, kMaxDim>& a) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += static_cast<double>(a[i]) * a[i];
  return std::sqrt(s);
}

}  // namespace

GreenOracle GreenOracle::build(int dim, int radius, double tol, double residual_gate, TailFit fit) {
  check_green_dim(dim);
  require(radius >= 1, "table radius must be >= 1");
  require(tol > 0, "quadrature tolerance must be positive");
  gsl_set_error_handler_off();
  GreenOracle g;
  g.dim_ = dim;
  g.radius_ = radius;
  g.tol_ = tol;
  g.init_indexing();
  const std::size_t count = g.binom_[static_cast<std::size_t>(radius + dim) * (dim + 1) + dim];
  std::vector<double> tail(count);

  {
    const double horizon = tail_horizon(dim, radius);
    std::vector<std::array<double, kTailTerms>> series(radius + 1);
    for (int k = 0; k <= radius; ++k) series[k] = bessel_series(k);
    std::vector<std::array<double, kTailTerms>> prefix(dim);
    std::array<std::size_t, kMaxDim + 1> idx{};
    enumerate_orbits(
        dim, radius,
        [&](int level, int v, const std::array<int, kMaxDim>&) {
          prefix[level] = level ? prefix[level - 1] : std::array<double, kTailTerms>{1.0};
          poly_mul(prefix[level], series[v]);
          idx[level + 1] =
              idx[level] + g.binom_[static_cast<std::size_t>(v + dim - 1 - level) * (dim + 1) + (dim - level)];
        },
        [&](const std::array<int, kMaxDim>&) { tail[idx[dim]] = tail_integral(dim, horizon, prefix[dim - 1], nullptr); });
  }

  std::vector<double> bes;
  for (int level = 0; level <= kMaxRefinements; ++level) {
    std::vector<double> sum(count, 0.0), err(count, 0.0);
    for (const Panel& p : make_panels(dim, radius, level)) {
      panel_bessel(p, dim, radius, bes);
      alignas(64) std::array<std::array<double, kLanes>, kMaxDim> prod{};
      std::array<std::size_t, kMaxDim + 1> idx{};
      enumerate_orbits(
          dim, radius,
          [&](int lv, int v, const std::array<int, kMaxDim>&) {
            const double* b = &bes[static_cast<std::size_t>(v) * kLanes];
            if (lv == 0)
              for (int j = 0; j < kLanes; ++j) prod[0][j] = b[j];
            else
              for (int j = 0; j < kLanes; ++j) prod[lv][j] = prod[lv - 1][j] * b[j];
            idx[lv + 1] = idx[lv] + g.binom_[static_cast<std::size_t>(v + dim - 1 - lv) * (dim + 1) + (dim - lv)];
          },
          [&](const std::array<int, kMaxDim>&) {
            const auto& pr = prod[dim - 1];
            double k15 = 0, g7 = 0;
            for (int j = 0; j < kLanes; ++j) {
              k15 += p.wk[j] * pr[j];
              g7 += p.wg[j] * pr[j];
            }
            sum[idx[dim]] += k15;
            err[idx[dim]] += std::abs(k15 - g7);
          });
    }
    const double worst = *std::max_element(err.begin(), err.end());
    if (worst <= tol) {
      g.table_.resize(count);
      for (std::size_t i = 0; i < count; ++i) g.table_[i] = sum[i] + tail[i];
      g.quad_error_ = worst;
      g.finalize(residual_gate, true, fit);
      return g;
    }
  }
  throw NumericalError("Green table quadrature did not reach tolerance " + format_double(tol));
}

GreenOracle GreenOracle::build_default(int dim) {
  return build(dim, default_cache_radius(dim), default_green_tolerance(dim));
}

void GreenOracle::finalize(double residual_gate, bool calibrate, TailFit fit) {
  if (!(table_[0] > 1.0)) throw NumericalError("Green table: G(0) <= 1 contradicts transience");
  auto moments = [&](const std::array<int, kMaxDim>& a, double& sq, double& s4) {
    sq = s4 = 0;
    for (int i = 0; i < dim_; ++i) {
      const double t = static_cast<double>(a[i]) * a[i];
      sq += t;
      s4 += t * t;
    }
  };
  if (calibrate) {
    // Relative least squares over the outer layers of the box, orbit-weighted.
    // Small boxes only determine the leading coefficient.
    const int terms = (fit == TailFit::kCorrected && radius_ >= 6) ? 3 : 1;
    const int inner = terms > 1 ? radius_ - 2 : radius_;
    Eigen::MatrixXd AtA = Eigen::MatrixXd::Zero(terms, terms);
    Eigen::VectorXd Atb = Eigen::VectorXd::Zero(terms);
    enumerate_orbits(
        dim_, radius_, [](int, int, const std::array<int, kMaxDim>&) {},
        [&](const std::array<int, kMaxDim>& a) {
          if (a[0] < inner) return;
          double sq, s4;
          moments(a, sq, s4);
          const double lead = std::pow(sq, 0.5 * (2 - dim_)) / table_[index_of_sorted(a.data())];
          Eigen::Vector3d f(lead, lead / sq, lead * s4 / (sq * sq * sq));
          const double w = orbit_size(dim_, a);
          AtA += w * f.head(terms) * f.head(terms).transpose();
          Atb += w * f.head(terms);
        });
    const Eigen::VectorXd p = AtA.ldlt().solve(Atb);
    tail_ = {p[0], terms > 1 ? p[1] : 0.0, terms > 2 ? p[2] : 0.0};
  }
  std::vector<std::pair<double, double>> norm_value;  // (norm, value)
  norm_value.reserve(table_.size());
  corr_table_.assign(table_.size(), 0.0);
  residual_ = 0;
  enumerate_orbits(
      dim_, radius_, [](int, int, const std::array<int, kMaxDim>&) {},
      [&](const std::array<int, kMaxDim>& a) {
        double sq, s4;
        moments(a, sq, s4);
        const double v = table_[index_of_sorted(a.data())];
        const double t = sq > 0 ? tail_sq(sq, s4) : 0.0;
        norm_value.emplace_back(std::sqrt(sq), v);
        corr_table_[index_of_sorted(a.data())] = v - t;
        if (a[0] == radius_) residual_ = std::max(residual_, std::abs(v - t) / v);
      });
  if (residual_ > residual_gate)
    throw NumericalError("Green table: tail calibration residual " + format_double(residual_) + " exceeds gate " +
                         format_double(residual_gate) + "; increase the table radius");

  dom_constant_ = 0;
  for (auto [r, v] : norm_value) dom_constant_ = std::max(dom_constant_, v * (1.0 + std::pow(r, dim_ - 2.0)));
  const double r1 = radius_ + 1.0;
  dom_constant_ = std::max(dom_constant_, tail_bound(r1) * (1.0 + std::pow(r1, dim_ - 2.0)));

  std::sort(norm_value.begin(), norm_value.end());
  env_norms_.resize(norm_value.size());
  env_suffix_max_.resize(norm_value.size());
  double m = 0;
  for (std::size_t i = norm_value.size(); i-- > 0;) {
    m = std::max(m, norm_value[i].second);
    env_norms_[i] = norm_value[i].first;
    env_suffix_max_[i] = m;
  }
}

double GreenOracle::value(const Coord* x) const noexcept {
  int a[kMaxDim];
  for (int i = 0; i < dim_; ++i) {
    const Coord v = x[i] < 0 ? -x[i] : x[i];
    if (v > radius_) return tail(x);
    a[i] = static_cast<int>(v);
  }
  for (int i = 1; i < dim_; ++i) {
    const int v = a[i];
    int j = i;
    for (; j > 0 && a[j - 1] < v; --j) a[j] = a[j - 1];
    a[j] = v;
  }
  return table_[index_of_sorted(a)];
}

double GreenOracle::correction(const Coord* x) const noexcept {
  int a[kMaxDim];
  for (int i = 0; i < dim_; ++i) {
    const Coord v = x[i] < 0 ? -x[i] : x[i];
    if (v > radius_) return 0.0;
    a[i] = static_cast<int>(v);
  }
  for (int i = 1; i < dim_; ++i) {
    const int v = a[i];
    int j = i;
    for (; j > 0 && a[j - 1] < v; --j) a[j] = a[j - 1];
    a[j] = v;
  }
  return corr_table_[index_of_sorted(a)];
}

double GreenOracle::value(const LatticePoint& x, const LatticePoint& y) const noexcept {
  Coord d[kMaxDim];
  for (int i = 0; i < dim_; ++i) d[i] = y[i] - x[i];
  return value(d);
}

double GreenOracle::tail_sq(double s, double s4) const noexcept {
  const double inv = 1.0 / s;
  return std::pow(s, 0.5 * (2 - dim_)) * (tail_.c + inv * (tail_.c_s + tail_.c_q * s4 * inv * inv));
}

double GreenOracle::tail(const Coord* x) const noexcept {
  double s = 0, s4 = 0;
  for (int j = 0; j < dim_; ++j) {
    const double t = static_cast<double>(x[j]) * static_cast<double>(x[j]);
    s += t;
    s4 += t * t;
  }
  return s > 0 ? tail_sq(s, s4) : 0.0;
}

double GreenOracle::tail_bound(double r) const noexcept {
  // sum x_i^4 / |x|^4 lies in [1/d, 1]; the bracket is then largest at an endpoint.
  const double second = std::max({0.0, tail_.c_s + tail_.c_q / dim_, tail_.c_s + tail_.c_q});
  return std::pow(r, 2.0 - dim_) * (tail_.c + second / (r * r));
}

double GreenOracle::envelope(double r) const noexcept {
  const double beyond = tail_bound(std::max(r, radius_ + 1.0));
  auto it = std::lower_bound(env_norms_.begin(), env_norms_.end(), r);
  if (it == env_norms_.end()) return beyond;
  return std::max(beyond, env_suffix_max_[it - env_norms_.begin()]);
}

std::vector<int> GreenOracle::orbit_representative(std::size_t index) const {
  // Greedy inversion of the combinatorial number system.
  std::vector<int> a(dim_);
  std::size_t rest = index;
  for (int i = 0; i < dim_; ++i) {
    const int k = dim_ - i;
    int c = k - 1;
    while (c + 1 < radius_ + dim_ && binom_[static_cast<std::size_t>(c + 1) * (dim_ + 1) + k] <= rest) ++c;
    rest -= binom_[static_cast<std::size_t>(c) * (dim_ + 1) + k];
    a[i] = c - (dim_ - 1 - i);
  }
  return a;
}

void GreenOracle::save(std::ostream& out) const {
  out << "# lattice green table\n";
  out << "d=" << dim_ << '\n';
  out << "radius=" << radius_ << '\n';
  out << "tol=" << format_double(tol_) << '\n';
  out << "tail_constant=" << format_double(tail_.c) << '\n';
  out << "tail_c_s=" << format_double(tail_.c_s) << '\n';
  out << "tail_c_q=" << format_double(tail_.c_q) << '\n';
  out << "entries=" << table_.size() << '\n';
  for (std::size_t i = 0; i < table_.size(); ++i) {
    for (int v : orbit_representative(i)) out << v << ' ';
    out << format_double(table_[i]) << '\n';
  }
  if (!out) throw IoError("failed writing green table");
}

void GreenOracle::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  save(out);
}

GreenOracle GreenOracle::load(std::istream& in) {
  GreenOracle g;
  std::string line;
  std::size_t entries = 0;
  int have_tail = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("green table: bad header line `" + line + "`");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "d") g.dim_ = std::stoi(val);
    else if (key == "radius") g.radius_ = std::stoi(val);
    else if (key == "tol") g.tol_ = parse_double(val);
    else if (key == "tail_constant") { g.tail_.c = parse_double(val); have_tail |= 1; }
    else if (key == "tail_c_s") { g.tail_.c_s = parse_double(val); have_tail |= 2; }
    else if (key == "tail_c_q") { g.tail_.c_q = parse_double(val); have_tail |= 4; }
    else if (key == "entries") { entries = std::stoull(val); break; }
    else throw ValidationError("green table: unknown header key `" + key + "`");
  }
  check_green_dim(g.dim_);
  require(g.radius_ >= 1 && have_tail == 7 && g.tol_ > 0, "green table: incomplete header");
  g.init_indexing();
  const std::size_t count = g.binom_[static_cast<std::size_t>(g.radius_ + g.dim_) * (g.dim_ + 1) + g.dim_];
  require(entries == count, "green table: entry count does not match d and radius");
  g.table_.assign(count, 0.0);
  std::vector<bool> seen(count, false);
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(in, line)) throw ValidationError("green table: truncated file");
    std::istringstream ls(line);
    std::array<int, kMaxDim> a{};
    for (int i = 0; i < g.dim_; ++i)
      if (!(ls >> a[i])) throw ValidationError("green table: bad row `" + line + "`");
    std::string num;
    ls >> num;
    for (int i = 0; i < g.dim_; ++i)
      require(a[i] >= 0 && a[i] <= g.radius_ && (i == 0 || a[i] <= a[i - 1]), "green table: row is not an orbit representative");
    const std::size_t idx = g.index_of_sorted(a.data());
    require(!seen[idx], "green table: duplicate row");
    seen[idx] = true;
    g.table_[idx] = parse_double(num);
  }
  g.quad_error_ = 0;
  // The stored tail model is authoritative; derived quantities are recomputed from it.
  g.finalize(std::numeric_limits<double>::infinity(), false);
  return g;
}

GreenOracle GreenOracle::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open green table " + path);
  return load(in);
}

TruncatedGreenEstimate green_truncated(int dim, const LatticePoint& x, std::uint64_t n, std::uint64_t replicas,
                                       std::uint64_t seed) {
  check_dimension(dim);
  require(x.dim() == dim, "displacement dimension mismatch");
  require(n >= 1, "horizon must be >= 1");
  require(replicas >= 1, "need at least one replica");
  double sum = 0, sumsq = 0;
  for (std::uint64_t r = 0; r < replicas; ++r) {
    auto rng = StreamRng::for_path(seed, {r, static_cast<std::uint64_t>(StreamTag::kTruncatedGreen)});
    LatticePoint p(dim);
    std::uint64_t visits = (p == x) ? 1 : 0;
    for (std::uint64_t k = 1; k < n; ++k) {
      const std::uint32_t dir = rng.below(static_cast<std::uint32_t>(2 * dim));
      p[static_cast<int>(dir >> 1)] += (dir & 1u) ? -1 : 1;
      if (p == x) ++visits;
    }
    sum += static_cast<double>(visits);
    sumsq += static_cast<double>(visits) * static_cast<double>(visits);
  }
  TruncatedGreenEstimate e;
  e.replicas = replicas;
  e.horizon = n;
  e.mean = sum / replicas;
  if (replicas > 1) {
    const double var = std::max(0.0, (sumsq - sum * e.mean) / (replicas - 1));
    e.standard_error = std::sqrt(var / replicas);
  }
  return e;
}

}  // namespace rangecap
