#include "chainlab/chain.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chainlab {

double MassLaw::mean() const {
  switch (kind) {
    case Kind::UniformInterval:
    case Kind::Beta22:
      return 0.5 * (m_minus + m_plus);  // both laws are symmetric on the interval
    case Kind::Constant:
      return m_minus;
  }
  return m_minus;
}

void MassLaw::validate() const {
  if (!(m_minus > 0.0)) throw std::invalid_argument("mass law needs m_minus > 0");
  if (!(m_plus >= m_minus)) throw std::invalid_argument("mass law needs m_plus >= m_minus");
  if (kind == Kind::Constant && m_plus != m_minus)
    throw std::invalid_argument("constant mass law needs m_plus == m_minus");
}

std::string MassLaw::name() const {
  switch (kind) {
    case Kind::UniformInterval:
      return "uniform";
    case Kind::Beta22:
      return "beta22";
    case Kind::Constant:
      return "constant";
  }
  return "beta22";
}

std::uint64_t MassLaw::tag() const {
  // Stable id for cache keys: kind plus the support, quantized at 1e-9.
  auto q = [](double x) { return static_cast<std::uint64_t>(std::llround(x * 1e9)); };
  std::uint64_t t = static_cast<std::uint64_t>(kind) + 1;
  t = t * 1000003ull + q(m_minus);
  t = t * 1000003ull + q(m_plus);
  return t;
}

MassLaw MassLaw::beta22(double lo, double hi) {
  MassLaw law;
  law.kind = Kind::Beta22;
  law.m_minus = lo;
  law.m_plus = hi;
  law.validate();
  return law;
}

MassLaw MassLaw::uniform(double lo, double hi) {
  MassLaw law;
  law.kind = Kind::UniformInterval;
  law.m_minus = lo;
  law.m_plus = hi;
  law.validate();
  return law;
}

MassLaw MassLaw::constant(double m) {
  MassLaw law;
  law.kind = Kind::Constant;
  law.m_minus = m;
  law.m_plus = m;
  law.validate();
  return law;
}

void DisorderedChain::validate() const {
  if (n < 2) throw std::invalid_argument("chain needs n >= 2");
  if (mass.size() != n) throw std::invalid_argument("mass vector size mismatch");
  for (int x = 0; x < n; ++x) {
    if (!(mass[x] >= law.m_minus && mass[x] <= law.m_plus))
      throw std::runtime_error("mass outside the declared support");
  }
}

DisorderedChain sample_masses(int n, const MassLaw& law, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_masses needs n >= 2");
  law.validate();

  DisorderedChain chain;
  chain.n = n;
  chain.seed = seed;
  chain.law = law;
  chain.mean_mass = law.mean();
  chain.mass.resize(n);

  StreamRng rng(seed, law.tag(), 0);
  const double width = law.m_plus - law.m_minus;
  for (int x = 0; x < n; ++x) {
    double u = 0.0;
    switch (law.kind) {
      case MassLaw::Kind::UniformInterval:
        u = rng.uniform();
        break;
      case MassLaw::Kind::Beta22:
        u = rng.beta22();
        break;
      case MassLaw::Kind::Constant:
        u = 0.0;
        break;
    }
    chain.mass[x] = law.m_minus + width * u;
  }
  chain.sqrt_mass = chain.mass.cwiseSqrt();
  chain.validate();
  return chain;
}

Mat TridiagSym::dense() const {
  const int n = size();
  Mat m = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
  return m;
}

Vec TridiagSym::apply(const Vec& v) const {
  const int n = size();
  if (v.size() != n) throw std::invalid_argument("tridiagonal apply: size mismatch");
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off[i - 1] * v[i - 1];
    if (i + 1 < n) s += off[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

double TridiagSym::max_abs() const {
  const int n = size();
  double bound = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = std::abs(diag[i]);
    if (i > 0) row += std::abs(off[i - 1]);
    if (i + 1 < n) row += std::abs(off[i]);
    bound = std::max(bound, row);
  }
  return bound;
}

TridiagSym build_ap(const DisorderedChain& chain) {
  chain.validate();
  const int n = chain.n;
  TridiagSym a;
  a.diag.resize(n);
  a.off.resize(n - 1);
  for (int x = 0; x < n; ++x) {
    const double d = (x == 0 || x == n - 1) ? 1.0 : 2.0;
    a.diag[x] = d / chain.mass[x];
  }
  for (int x = 0; x + 1 < n; ++x)
    a.off[x] = -1.0 / (chain.sqrt_mass[x] * chain.sqrt_mass[x + 1]);
  return a;
}

TridiagSym build_ar(const DisorderedChain& chain) {
  chain.validate();
  const int n = chain.n;
  TridiagSym a;
  a.diag.resize(n - 1);
  a.off.resize(n - 2);
  for (int y = 0; y + 1 < n; ++y) a.diag[y] = 1.0 / chain.mass[y] + 1.0 / chain.mass[y + 1];
  for (int y = 0; y + 2 < n; ++y) a.off[y] = -1.0 / chain.mass[y + 1];
  return a;
}

void save_chain(const DisorderedChain& chain, std::ostream& os) {
  os << "chain 1\n";
  os << "n " << chain.n << "\n";
  os << "law " << chain.law.name() << " ";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g %.17g\n", chain.law.m_minus, chain.law.m_plus);
  os << buf;
  os << "seed " << chain.seed << "\n";
  for (int x = 0; x < chain.n; ++x) {
    std::snprintf(buf, sizeof buf, "%.17g\n", chain.mass[x]);
    os << buf;
  }
}

DisorderedChain load_chain(std::istream& is) {
  std::string word;
  int version = 0;
  is >> word >> version;
  if (word != "chain" || version != 1) throw std::runtime_error("not a chain file");
  DisorderedChain chain;
  std::string law_name;
  is >> word >> chain.n;
  if (word != "n") throw std::runtime_error("chain file: expected n");
  is >> word >> law_name >> chain.law.m_minus >> chain.law.m_plus;
  if (word != "law") throw std::runtime_error("chain file: expected law");
  if (law_name == "uniform")
    chain.law.kind = MassLaw::Kind::UniformInterval;
  else if (law_name == "beta22")
    chain.law.kind = MassLaw::Kind::Beta22;
  else if (law_name == "constant")
    chain.law.kind = MassLaw::Kind::Constant;
  else
    throw std::runtime_error("chain file: unknown law " + law_name);
  is >> word >> chain.seed;
  if (word != "seed") throw std::runtime_error("chain file: expected seed");
  chain.mean_mass = chain.law.mean();
  chain.mass.resize(chain.n);
  for (int x = 0; x < chain.n; ++x) {
    if (!(is >> chain.mass[x])) throw std::runtime_error("chain file: truncated mass list");
  }
  chain.sqrt_mass = chain.mass.cwiseSqrt();
  chain.validate();
  return chain;
}

void save_chain_file(const DisorderedChain& chain, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_chain(chain, os);
}

DisorderedChain load_chain_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_chain(is);
}

}  // namespace chainlab
