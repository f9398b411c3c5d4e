#include "chainlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace chainlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Deterministic sample of mode indices: both spectral edges plus a stride
// through the bulk. Covers the ill-conditioned low-frequency end.
std::vector<int> sampled_modes(int count, int lo, int hi) {
  std::vector<int> ks;
  for (int k = lo; k <= hi && k < lo + 4; ++k) ks.push_back(k);
  for (int k = hi; k >= lo && k > hi - 4; --k) ks.push_back(k);
  int span = hi - lo + 1;
  int stride = std::max(1, span / std::max(1, count - 8));
  for (int k = lo; k <= hi; k += stride) ks.push_back(k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

}  // namespace

EigResult eig_sym_tridiag(const TridiagSym& a) {
  const int n = a.size();
  if (n < 2) throw std::invalid_argument("eig_sym_tridiag needs n >= 2");

  Vec d = a.diag;
  Vec e(n);
  e.head(n - 1) = a.off;
  e[n - 1] = 0.0;
  Mat z = Mat::Identity(n, n);

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= kEps * dd) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw std::runtime_error("eig_sym_tridiag: no convergence at mode " + std::to_string(l));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            // rotation chain collapsed early; restart the QL step
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;

          double* zi = z.data() + std::size_t(i) * n;
          double* zj = z.data() + std::size_t(i + 1) * n;
          for (int k = 0; k < n; ++k) {
            double fk = zj[k];
            zj[k] = s * zi[k] + c * fk;
            zi[k] = c * zi[k] - s * fk;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return d[i] < d[j]; });

  EigResult out;
  out.lambda.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    double lam = d[order[std::size_t(k)]];
    if (std::abs(lam) < 1e-12) lam = 0.0;
    out.lambda[k] = lam;
    out.vectors.col(k) = z.col(order[std::size_t(k)]);
    int imax = 0;
    out.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, k) < 0.0) out.vectors.col(k) = -out.vectors.col(k);
  }
  return out;
}

SpectralData build_spectral(const DisorderedChain& chain) {
  chain.validate();
  const int n = chain.n;
  TridiagSym ap = build_ap(chain);
  EigResult eig = eig_sym_tridiag(ap);

  const double norm_bound = ap.max_abs();
  if (std::abs(eig.lambda[0]) > 1e-10 * norm_bound)
    throw std::runtime_error("build_spectral: kernel eigenvalue missing");
  eig.lambda[0] = 0.0;
  if (!(eig.lambda[1] > 0.0))
    throw std::runtime_error("build_spectral: second eigenvalue not positive");

  SpectralData s;
  s.n = n;
  s.sqrt_mass = chain.sqrt_mass;
  for (int k = 0; k + 1 < n; ++k)
    if (eig.lambda[k + 1] - eig.lambda[k] < 1e-13) s.near_degenerate.push_back(k);
  s.omega = eig.lambda.cwiseMax(0.0).cwiseSqrt();
  s.phi_p = std::move(eig.vectors);
  s.phi_p.col(0) = chain.sqrt_mass / chain.sqrt_mass.norm();

  // The kernel direction is known exactly; projecting it out of the other
  // columns removes the eps*|A|/lambda_k tilt the solver leaves against the
  // snapped ground state, at O(eps*|A|) residual cost.
  Vec overlaps = s.phi_p.rightCols(n - 1).transpose() * s.phi_p.col(0);
  s.phi_p.rightCols(n - 1).noalias() -= s.phi_p.col(0) * overlaps.transpose();
  for (int k = 1; k < n; ++k) s.phi_p.col(k) /= s.phi_p.col(k).norm();

  s.phi_p_tilde = chain.sqrt_mass.cwiseInverse().asDiagonal() * s.phi_p;
  s.phi_r.resize(n - 1, n - 1);
  for (int k = 1; k < n; ++k) {
    const auto col = s.phi_p_tilde.col(k);
    s.phi_r.col(k - 1) = (col.tail(n - 1) - col.head(n - 1)) / s.omega[k];
  }

  SpectralCheck chk = validate_spectral(chain, s, false);
  if (!(chk.phi_p_orth < 1e-10))
    throw std::runtime_error("build_spectral: mode basis not orthonormal");
  if (!(chk.phi_r_orth_margin <= 1.0))
    throw std::runtime_error("build_spectral: bond-mode basis not orthonormal");
  if (!(chk.eig_residual_rel < 1e-9))
    throw std::runtime_error("build_spectral: eigen-residual too large");
  if (!(chk.completeness < 1e-10))
    throw std::runtime_error("build_spectral: completeness violated");
  if (!(chk.phi_r_reproduce < 1e-10))
    throw std::runtime_error("build_spectral: bond basis definition violated");
  if (!(chk.ar_residual < 1e-8))
    throw std::runtime_error("build_spectral: bond-side eigen-residual too large");
  return s;
}

SpectralCheck validate_spectral(const DisorderedChain& chain, const SpectralData& spec, bool full) {
  const int n = spec.n;
  TridiagSym ap = build_ap(chain);
  TridiagSym ar = build_ar(chain);
  const double norm_bound = ap.max_abs();

  SpectralCheck chk;

  // Orthonormality of phi_p: full Gram, or Gram rows for a sampled column set.
  if (full) {
    Mat g = spec.phi_p.transpose() * spec.phi_p;
    g.diagonal().array() -= 1.0;
    chk.phi_p_orth = g.cwiseAbs().maxCoeff();
  } else {
    for (int c : sampled_modes(16, 0, n - 1)) {
      Vec g = spec.phi_p.transpose() * spec.phi_p.col(c);
      g[c] -= 1.0;
      chk.phi_p_orth = std::max(chk.phi_p_orth, g.cwiseAbs().maxCoeff());
    }
  }

  // Orthonormality of phi_r. The admissible error for pair (j,k) grows like
  // eps*|A|/(omega_j omega_k): the basis is produced by dividing by omega, so
  // the lowest modes cannot do better in double precision.
  auto r_bound = [&](int j, int k) {
    return std::max(1e-10, 64.0 * kEps * norm_bound / (spec.omega[j + 1] * spec.omega[k + 1]));
  };
  auto scan_r_col = [&](int c, const Vec& g) {
    for (int j = 0; j < n - 1; ++j) {
      double err = std::abs(g[j] - (j == c ? 1.0 : 0.0));
      chk.phi_r_orth = std::max(chk.phi_r_orth, err);
      chk.phi_r_orth_margin = std::max(chk.phi_r_orth_margin, err / r_bound(j, c));
    }
  };
  if (full) {
    Mat g = spec.phi_r.transpose() * spec.phi_r;
    for (int c = 0; c < n - 1; ++c) scan_r_col(c, g.col(c));
  } else {
    for (int c : sampled_modes(16, 0, n - 2)) {
      Vec g = spec.phi_r.transpose() * spec.phi_r.col(c);
      scan_r_col(c, g);
    }
  }

  // Eigen-residuals on both sides, and the defining formula for phi_r.
  std::vector<int> ks = full ? sampled_modes(n, 0, n - 1) : sampled_modes(64, 0, n - 1);
  for (int k : ks) {
    double lam = spec.omega[k] * spec.omega[k];
    Vec res = ap.apply(spec.phi_p.col(k)) - lam * spec.phi_p.col(k);
    chk.eig_residual_rel = std::max(chk.eig_residual_rel, res.cwiseAbs().maxCoeff() / norm_bound);
    if (k >= 1) {
      const auto col = spec.phi_p_tilde.col(k);
      Vec rebuilt = (col.tail(n - 1) - col.head(n - 1)) / spec.omega[k];
      chk.phi_r_reproduce = std::max(
          chk.phi_r_reproduce, (rebuilt - spec.phi_r.col(k - 1)).cwiseAbs().maxCoeff());
      Vec rres = ar.apply(spec.phi_r.col(k - 1)) - lam * spec.phi_r.col(k - 1);
      chk.ar_residual = std::max(chk.ar_residual, rres.cwiseAbs().maxCoeff());
    }
  }

  // Completeness per site: rows of an orthogonal matrix are unit vectors.
  Vec row_norms = spec.phi_p.rowwise().squaredNorm();
  chk.completeness = (row_norms.array() - 1.0).abs().maxCoeff();

  return chk;
}

std::pair<Vec, Vec> mode_transform(const Vec& r, const Vec& p, const SpectralData& spec) {
  const int n = spec.n;
  if (r.size() != n - 1 || p.size() != n)
    throw std::invalid_argument("mode_transform: dimension mismatch");
  Vec phat = spec.phi_p_tilde.transpose() * p;
  Vec rhat = Vec::Zero(n);
  rhat.tail(n - 1) = spec.phi_r.transpose() * r;
  return {std::move(rhat), std::move(phat)};
}

std::pair<Vec, Vec> inverse_mode_transform(const Vec& rhat, const Vec& phat, const SpectralData& spec) {
  const int n = spec.n;
  if (rhat.size() != n || phat.size() != n)
    throw std::invalid_argument("inverse_mode_transform: dimension mismatch");
  Vec p = spec.sqrt_mass.asDiagonal() * (spec.phi_p * phat);
  Vec r = spec.phi_r * rhat.tail(n - 1);
  return {std::move(r), std::move(p)};
}

namespace {

constexpr char kMagic[8] = {'C', 'H', 'S', 'P', 'E', 'C', '0', '1'};
constexpr std::uint64_t kByteOrderSentinel = 0x0102030405060708ull;

void write_bytes(std::ostream& os, const void* data, std::size_t bytes) {
  os.write(static_cast<const char*>(data), std::streamsize(bytes));
}

void read_bytes(std::istream& is, void* data, std::size_t bytes) {
  is.read(static_cast<char*>(data), std::streamsize(bytes));
  if (!is) throw std::runtime_error("spectral cache: truncated file");
}

}  // namespace

void save_spectral(const SpectralData& spec, const DisorderedChain& chain, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_bytes(os, kMagic, sizeof kMagic);
  std::uint64_t header[4] = {kByteOrderSentinel, std::uint64_t(spec.n), chain.seed, chain.law.tag()};
  write_bytes(os, header, sizeof header);
  const int n = spec.n;
  write_bytes(os, chain.mass.data(), sizeof(double) * std::size_t(n));
  write_bytes(os, spec.omega.data(), sizeof(double) * std::size_t(n));
  write_bytes(os, spec.phi_p.data(), sizeof(double) * std::size_t(n) * std::size_t(n));
  write_bytes(os, spec.phi_r.data(), sizeof(double) * std::size_t(n - 1) * std::size_t(n - 1));
  std::uint64_t flags = spec.near_degenerate.size();
  write_bytes(os, &flags, sizeof flags);
  for (int k : spec.near_degenerate) {
    std::uint64_t v = std::uint64_t(k);
    write_bytes(os, &v, sizeof v);
  }
  if (!os) throw std::runtime_error("spectral cache: write failed for " + path);
}

SpectralData load_spectral(const DisorderedChain& chain, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  read_bytes(is, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("spectral cache: bad magic in " + path);
  std::uint64_t header[4];
  read_bytes(is, header, sizeof header);
  if (header[0] != kByteOrderSentinel)
    throw std::runtime_error("spectral cache: foreign byte order in " + path);
  const int n = int(header[1]);
  if (n != chain.n || header[2] != chain.seed || header[3] != chain.law.tag())
    throw std::runtime_error("spectral cache: key mismatch in " + path);

  Vec mass(n);
  read_bytes(is, mass.data(), sizeof(double) * std::size_t(n));
  if (std::memcmp(mass.data(), chain.mass.data(), sizeof(double) * std::size_t(n)) != 0)
    throw std::runtime_error("spectral cache: stored masses differ from the chain");

  SpectralData s;
  s.n = n;
  s.sqrt_mass = chain.sqrt_mass;
  s.omega.resize(n);
  read_bytes(is, s.omega.data(), sizeof(double) * std::size_t(n));
  s.phi_p.resize(n, n);
  read_bytes(is, s.phi_p.data(), sizeof(double) * std::size_t(n) * std::size_t(n));
  s.phi_r.resize(n - 1, n - 1);
  read_bytes(is, s.phi_r.data(), sizeof(double) * std::size_t(n - 1) * std::size_t(n - 1));
  std::uint64_t flags = 0;
  read_bytes(is, &flags, sizeof flags);
  for (std::uint64_t i = 0; i < flags; ++i) {
    std::uint64_t v = 0;
    read_bytes(is, &v, sizeof v);
    s.near_degenerate.push_back(int(v));
  }
  s.phi_p_tilde = chain.sqrt_mass.cwiseInverse().asDiagonal() * s.phi_p;
  return s;
}

SpectralData load_or_build_spectral(const DisorderedChain& chain, const std::string& cache_dir) {
  if (cache_dir.empty()) return build_spectral(chain);
  std::filesystem::create_directories(cache_dir);
  std::string path = cache_dir + "/spec_" + chain.law.name() + "_n" + std::to_string(chain.n) +
                     "_s" + std::to_string(chain.seed) + ".bin";
  if (std::filesystem::exists(path)) {
    try {
      return load_spectral(chain, path);
    } catch (const std::exception&) {
      // fall through and rebuild a stale or damaged cache entry
    }
  }
  SpectralData s = build_spectral(chain);
  save_spectral(s, chain, path);
  return s;
}

}  // namespace chainlab
