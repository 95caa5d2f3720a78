#include "shapelab/riesz.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

namespace shapelab {

namespace {

std::mutex fftw_mutex;  // plan creation is not thread-safe

double offset_norm(const CellIndex& d, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += double(d[a]) * d[a];
  return std::sqrt(s);
}

// Pair integral P(d, s, L) = int_{C_s(0)} int_{C_s(s d)} |x-y|^(alpha-N)
// over cubes of side s at center offset s*d. Midpoint once far or exhausted;
// the coincident pair closes through P(0,s) = s^(N+alpha) J0.
struct PairQuad {
  int dim;
  double alpha;
  double j0 = 0.0;

  double midpoint(const std::array<int, 3>& d, double s) const {
    double nn = 0.0;
    for (int a = 0; a < dim; ++a) nn += double(d[a]) * d[a];
    return std::pow(s, 2.0 * dim) * std::pow(std::sqrt(nn) * s, alpha - dim);
  }

  double pair(const std::array<int, 3>& d, double s, int level) const {
    int dinf = 0;
    for (int a = 0; a < dim; ++a) dinf = std::max(dinf, std::abs(d[a]));
    if (dinf == 0) return std::pow(s, dim + alpha) * j0;
    if (level == 0 || dinf >= 3) return midpoint(d, s);
    double tot = 0.0;
    std::array<int, 3> e{0, 0, 0};
    const int kmin = (dim == 3) ? -1 : 0;
    const int kmax = (dim == 3) ? 1 : 0;
    for (e[0] = -1; e[0] <= 1; ++e[0])
      for (e[1] = -1; e[1] <= 1; ++e[1])
        for (e[2] = kmin; e[2] <= kmax; ++e[2]) {
          double mult = 1.0;
          for (int a = 0; a < dim; ++a) mult *= 2 - std::abs(e[a]);
          std::array<int, 3> nd{2 * d[0] + e[0], 2 * d[1] + e[1],
                                2 * d[2] + e[2]};
          tot += mult * pair(nd, s / 2.0, level - 1);
        }
    return tot;
  }

  void close_self(int level) {
    // J0 (1 - 2^-alpha) = sum over non-coincident half-cube pairs
    double acc = 0.0;
    std::array<int, 3> e{0, 0, 0};
    const int kmin = (dim == 3) ? -1 : 0;
    const int kmax = (dim == 3) ? 1 : 0;
    for (e[0] = -1; e[0] <= 1; ++e[0])
      for (e[1] = -1; e[1] <= 1; ++e[1])
        for (e[2] = kmin; e[2] <= kmax; ++e[2]) {
          bool zero = true;
          for (int a = 0; a < dim; ++a)
            if (e[a] != 0) zero = false;
          if (zero) continue;
          double mult = 1.0;
          for (int a = 0; a < dim; ++a) mult *= 2 - std::abs(e[a]);
          acc += mult * pair(e, 0.5, level);
        }
    j0 = acc / (1.0 - std::pow(2.0, -alpha));
  }
};

}  // namespace

double RieszKernelTable::self_cell() const {
  return value({0, 0, 0});
}

double RieszKernelTable::value(const CellIndex& offset) const {
  int dinf = 0;
  std::array<int, 3> key{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    key[a] = std::abs(offset[a]);
    dinf = std::max(dinf, key[a]);
  }
  std::sort(key.begin(), key.begin() + dim, std::greater<int>());
  if (dinf <= 1) {
    auto it = near_corrections.find(key);
    if (it != near_corrections.end())
      return it->second * std::pow(h, alpha - dim);
  }
  return std::pow(offset_norm(offset, dim) * h, alpha - dim);
}

std::string RieszKernelTable::cache_key() const {
  std::ostringstream os;
  os.precision(17);
  os << "riesz_v1_N" << dim << "_a" << alpha << "_h" << h << "_n" << cells
     << "_ord" << correction_order;
  return os.str();
}

std::string kernel_cache_dir() {
  const char* env = std::getenv("SHAPELAB_KERNEL_CACHE");
  return env ? std::string(env) : std::string();
}

RieszKernelTable RieszKernelTable::build(int dim, double alpha,
                                         const GridSpec& spec,
                                         int correction_order) {
  if (!(alpha > 0.0 && alpha < dim))
    throw PreconditionError("alpha must lie in (0, N)");
  RieszKernelTable t;
  t.dim = dim;
  t.alpha = alpha;
  t.h = spec.h;
  t.cells = spec.cells;
  t.correction_order = correction_order;

  const std::string dir = kernel_cache_dir();
  std::filesystem::path cache_file;
  if (!dir.empty()) {
    cache_file = std::filesystem::path(dir) / (t.cache_key() + ".tab");
    std::ifstream in(cache_file);
    if (in) {
      std::string version;
      in >> version;
      if (version == "shapelab-kernel-v1") {
        int count = 0;
        in >> count;
        bool good = true;
        for (int i = 0; i < count && good; ++i) {
          std::array<int, 3> k{0, 0, 0};
          double v;
          if (in >> k[0] >> k[1] >> k[2] >> v)
            t.near_corrections[k] = v;
          else
            good = false;
        }
        if (good && !t.near_corrections.empty()) return t;
        t.near_corrections.clear();
      }
    }
  }

  PairQuad q{dim, alpha};
  q.close_self(correction_order);
  // canonical keys: sorted descending absolute offsets
  std::vector<std::array<int, 3>> keys;
  if (dim == 2)
    keys = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
  else
    keys = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  for (const auto& k : keys) {
    if (k[0] == 0)
      t.near_corrections[k] = q.j0;
    else
      t.near_corrections[k] = q.pair(k, 1.0, correction_order);
  }

  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(cache_file);
    if (out) {
      out.precision(17);
      out << "shapelab-kernel-v1\n" << t.near_corrections.size() << "\n";
      for (const auto& [k, v] : t.near_corrections)
        out << k[0] << " " << k[1] << " " << k[2] << " " << v << "\n";
    }
  }
  return t;
}

namespace {

int next_pow2_at_least(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// real-to-complex convolution of the mask with the kernel over the padded box
std::vector<double> fft_convolve(const GridDomain& dom,
                                 const RieszKernelTable& table) {
  const GridSpec& g = dom.spec;
  const int n = g.cells;
  const int P = next_pow2_at_least(2 * n);
  const int dim = g.dim;

  std::int64_t real_count = 1, cplx_count = 1;
  for (int a = 0; a < dim; ++a) real_count *= P;
  cplx_count = real_count / P * (P / 2 + 1);

  std::vector<double> kernel(real_count, 0.0), indicator(real_count, 0.0);

  auto wrap = [&](int d) { return d >= 0 ? d : d + P; };
  // The near offsets (|d|_inf <= 1, the corrected slots) are applied by exact
  // direct summation below; the FFT carries only the far kernel. Keeping the
  // large self/adjacent values out of the transform keeps the round-off of
  // the convolution comfortably under the 1e-12 brute-force agreement bound.
  auto is_near = [](int a, int b, int c) {
    return std::abs(a) <= 1 && std::abs(b) <= 1 && std::abs(c) <= 1;
  };
  if (dim == 2) {
    for (int di = -(n - 1); di <= n - 1; ++di)
      for (int dj = -(n - 1); dj <= n - 1; ++dj)
        if (!is_near(di, dj, 0))
          kernel[static_cast<std::int64_t>(wrap(di)) * P + wrap(dj)] =
              table.value({di, dj, 0});
    for (std::int64_t id = 0; id < g.cell_count(); ++id)
      if (dom.mask[id])
        indicator[(id / n) * P + (id % n)] = 1.0;
  } else {
    for (int di = -(n - 1); di <= n - 1; ++di)
      for (int dj = -(n - 1); dj <= n - 1; ++dj)
        for (int dk = -(n - 1); dk <= n - 1; ++dk)
          if (!is_near(di, dj, dk))
            kernel[(static_cast<std::int64_t>(wrap(di)) * P + wrap(dj)) * P +
                   wrap(dk)] = table.value({di, dj, dk});
    for (std::int64_t id = 0; id < g.cell_count(); ++id)
      if (dom.mask[id]) {
        const CellIndex c = g.unflat(id);
        indicator[(static_cast<std::int64_t>(c[0]) * P + c[1]) * P + c[2]] = 1.0;
      }
  }

  std::vector<fftw_complex> kf(cplx_count), xf(cplx_count);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_plan pk, px, pb;
    if (dim == 2) {
      pk = fftw_plan_dft_r2c_2d(P, P, kernel.data(), kf.data(), FFTW_ESTIMATE);
      px = fftw_plan_dft_r2c_2d(P, P, indicator.data(), xf.data(), FFTW_ESTIMATE);
    } else {
      pk = fftw_plan_dft_r2c_3d(P, P, P, kernel.data(), kf.data(), FFTW_ESTIMATE);
      px = fftw_plan_dft_r2c_3d(P, P, P, indicator.data(), xf.data(), FFTW_ESTIMATE);
    }
    fftw_execute(pk);
    fftw_execute(px);
    for (std::int64_t i = 0; i < cplx_count; ++i) {
      const double re = kf[i][0] * xf[i][0] - kf[i][1] * xf[i][1];
      const double im = kf[i][0] * xf[i][1] + kf[i][1] * xf[i][0];
      xf[i][0] = re;
      xf[i][1] = im;
    }
    if (dim == 2)
      pb = fftw_plan_dft_c2r_2d(P, P, xf.data(), kernel.data(), FFTW_ESTIMATE);
    else
      pb = fftw_plan_dft_c2r_3d(P, P, P, xf.data(), kernel.data(), FFTW_ESTIMATE);
    fftw_execute(pb);
    fftw_destroy_plan(pk);
    fftw_destroy_plan(px);
    fftw_destroy_plan(pb);
  }

  const double scale = 1.0 / static_cast<double>(real_count);
  std::vector<double> v(g.cell_count(), 0.0);
  const double hN = g.cell_volume();
  if (dim == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        v[static_cast<std::int64_t>(i) * n + j] =
            kernel[static_cast<std::int64_t>(i) * P + j] * scale * hN;
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          v[(static_cast<std::int64_t>(i) * n + j) * n + k] =
              kernel[(static_cast<std::int64_t>(i) * P + j) * P + k] * scale * hN;
  }

  // exact near-field gather over the corrected offsets
  double near_vals[27];
  std::vector<CellIndex> near_offs;
  {
    CellIndex o{0, 0, 0};
    const int kmin = (dim == 3) ? -1 : 0;
    const int kmax = (dim == 3) ? 1 : 0;
    for (o[0] = -1; o[0] <= 1; ++o[0])
      for (o[1] = -1; o[1] <= 1; ++o[1])
        for (o[2] = kmin; o[2] <= kmax; ++o[2]) {
          near_vals[near_offs.size()] = table.value(o);
          near_offs.push_back(o);
        }
  }
  for (std::int64_t id = 0; id < g.cell_count(); ++id) {
    const CellIndex c = g.unflat(id);
    double acc = 0.0;
    for (std::size_t s = 0; s < near_offs.size(); ++s) {
      CellIndex y{c[0] - near_offs[s][0], c[1] - near_offs[s][1],
                  c[2] - near_offs[s][2]};
      if (dom.occupied(y)) acc += near_vals[s];
    }
    v[id] += acc * hN;
  }
  return v;
}

}  // namespace

RieszPotentialField riesz_potential(const GridDomain& dom,
                                    const RieszKernelTable& table) {
  RieszPotentialField out;
  out.v.spec = dom.spec;
  out.v.values = fft_convolve(dom, table);
  double e = 0.0;
  for (std::int64_t id = 0; id < dom.spec.cell_count(); ++id)
    if (dom.mask[id]) e += out.v.values[id];
  out.energy = e * dom.spec.cell_volume();
  return out;
}

RieszPotentialField riesz_potential(const GridDomain& dom, double alpha) {
  return riesz_potential(dom,
                         RieszKernelTable::build(dom.spec.dim, alpha, dom.spec));
}

double riesz_energy(const GridDomain& dom, double alpha) {
  return riesz_potential(dom, alpha).energy;
}

double riesz_energy_bruteforce(const GridDomain& dom,
                               const RieszKernelTable& table) {
  std::vector<CellIndex> occ;
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t) { occ.push_back(c); });
  // compensated summation: millions of pair terms would otherwise accumulate
  // round-off above the 1e-12 agreement bound with the FFT path
  double e = 0.0, comp = 0.0;
  for (const auto& a : occ)
    for (const auto& b : occ) {
      const double term =
          table.value({a[0] - b[0], a[1] - b[1], a[2] - b[2]}) - comp;
      const double t = e + term;
      comp = (t - e) - term;
      e = t;
    }
  const double hN = dom.spec.cell_volume();
  return e * hN * hN;
}

namespace {

// gradient of the kernel: grad_x |x-y|^(alpha-N) = (alpha-N) (x-y) |x-y|^(a-N-2)
void grad_kernel(const Point& rel, int dim, double alpha, double out[3]) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += rel[a] * rel[a];
  const double r = std::sqrt(r2);
  const double f = (alpha - dim) * std::pow(r, alpha - dim - 2.0);
  for (int a = 0; a < dim; ++a) out[a] = f * rel[a];
}

// Recursive midpoint over a cell near the evaluation point. The subcell
// center offset is carried as the integer vector K with (x - y) = K * unit
// and unit = side/2, so refinement decisions are exact and mirror-symmetric
// (a floating threshold here would let rounding break the odd-integrand
// cancellation at symmetric points).
void near_gradient(const std::array<long long, 3>& K, double unit, int level,
                   int dim, double alpha, double acc[3]) {
  long long k2 = 0;
  for (int a = 0; a < dim; ++a) k2 += K[a] * K[a];
  if (level == 0 || k2 > 16 * dim) {
    if (k2 == 0) return;  // odd integrand, symmetric drop
    Point rel{0, 0, 0};
    for (int a = 0; a < dim; ++a) rel[a] = K[a] * unit;
    double gk[3];
    grad_kernel(rel, dim, alpha, gk);
    const double vol = std::pow(2.0 * unit, dim);
    for (int a = 0; a < dim; ++a) acc[a] += vol * gk[a];
    return;
  }
  std::array<int, 3> e{0, 0, 0};
  const int kmin = (dim == 3) ? -1 : 0;
  const int kmax = (dim == 3) ? 1 : 0;
  for (e[0] = -1; e[0] <= 1; e[0] += 2)
    for (e[1] = -1; e[1] <= 1; e[1] += 2)
      for (e[2] = kmin; e[2] <= kmax; e[2] += 2) {
        std::array<long long, 3> child{0, 0, 0};
        for (int a = 0; a < dim; ++a) child[a] = 2 * K[a] + e[a];
        near_gradient(child, unit / 2.0, level - 1, dim, alpha, acc);
      }
}

}  // namespace

std::array<double, 3> riesz_potential_gradient(const GridDomain& dom,
                                               double alpha, const Point& x) {
  const int dim = dom.spec.dim;
  if (!(alpha > 1.0 && alpha < dim))
    throw PreconditionError(
        "potential gradient requires alpha in (1, N); below 1 the gradient "
        "integral is not absolutely convergent");
  // snap to the nearest cell center (documented: evaluation is grid-aligned)
  CellIndex cx = dom.spec.cell_of(x);
  for (int a = 0; a < dim; ++a) cx[a] = std::clamp(cx[a], 0, dom.spec.cells - 1);
  const double h = dom.spec.h;

  std::array<double, 3> grad{0.0, 0.0, 0.0};
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t) {
    int dinf = 0;
    for (int a = 0; a < dim; ++a)
      dinf = std::max(dinf, std::abs(cx[a] - c[a]));
    if (dinf <= 2) {
      std::array<long long, 3> K{0, 0, 0};
      for (int a = 0; a < dim; ++a) K[a] = 2LL * (cx[a] - c[a]);
      double acc[3] = {0, 0, 0};
      near_gradient(K, h / 2.0, 8, dim, alpha, acc);
      for (int a = 0; a < dim; ++a) grad[a] += acc[a];
    } else {
      Point rel{0, 0, 0};
      for (int a = 0; a < dim; ++a)
        rel[a] = (cx[a] - c[a]) * h;  // lattice offsets, mirror-exact
      double gk[3];
      grad_kernel(rel, dim, alpha, gk);
      const double vol = dom.spec.cell_volume();
      for (int a = 0; a < dim; ++a) grad[a] += vol * gk[a];
    }
  });
  return grad;
}

double c0_constant(int dim, double alpha, bool* clamped) {
  if (!(alpha > 0.0 && alpha < dim))
    throw PreconditionError("alpha must lie in (0, N)");
  const double wn = unit_ball_volume(dim);
  const double r = std::pow(wn, -1.0 / dim);  // radius of the unit-measure ball
  const double value = dim * wn * std::pow(r, alpha) / alpha;
  if (clamped) *clamped = value < 1.0;
  return std::max(value, 1.0);
}

DifferenceBoundCheck km_difference_bound_check(const GridDomain& a,
                                               const GridDomain& b,
                                               double alpha) {
  if (!(a.spec == b.spec))
    throw SpecMismatchError("difference bound needs a common grid");
  DifferenceBoundCheck out;
  const auto table = RieszKernelTable::build(a.spec.dim, alpha, a.spec);
  out.lhs = riesz_potential(b, table).energy - riesz_potential(a, table).energy;
  const double c0 = c0_constant(a.spec.dim, alpha);
  const double ma = measure(a), mb = measure(b);
  out.rhs = c0 * symmetric_difference_measure(a, b) *
            (std::pow(ma, alpha / a.spec.dim) + std::pow(mb, alpha / a.spec.dim));
  out.ok = out.lhs <= out.rhs + 1e-6;
  return out;
}

}  // namespace shapelab
