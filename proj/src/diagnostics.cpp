#include "mcbench/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace mcbench::diag {

namespace {

struct Centered {
  VectorXd d;
  double c0 = 0.0;  // biased variance
};

Centered center(const VectorXd& x) {
  const double n = static_cast<double>(x.size());
  Centered c;
  c.d = x.array() - x.mean();
  c.c0 = c.d.squaredNorm() / n;
  return c;
}

double lag_corr(const Centered& c, Index t) {
  const Index n = c.d.size();
  const double cov = c.d.head(n - t).dot(c.d.tail(n - t)) / static_cast<double>(n - t);
  return cov / c.c0;
}

bool degenerate(double var, double scale) { return !(var > 1e-300) || var <= 1e-28 * scale * scale; }

// Paired-sum cutoff shared by single- and multi-chain ESS. `rho(t)` for t >= 1.
template <class Rho>
double cutoff_sum(Rho&& rho, Index max_t, Index cap) {
  double sum = 0.0;
  Index T = 0;
  while (T < cap && T + 2 <= max_t) {
    const double r1 = rho(T + 1);
    const double r2 = rho(T + 2);
    if (r1 + r2 < 0.0) break;
    sum += r1;
    ++T;
  }
  return sum;
}

}  // namespace

double autocorrelation(const VectorXd& x, Index t) {
  if (t < 0 || t >= x.size()) throw InputError("autocorrelation: lag out of range");
  const Centered c = center(x);
  if (degenerate(c.c0, x.cwiseAbs().maxCoeff())) throw DegenerateError("autocorrelation: constant series");
  return lag_corr(c, t);
}

VectorXd autocorrelations(const VectorXd& x, Index max_lag) {
  if (max_lag < 0 || max_lag >= x.size()) throw InputError("autocorrelations: lag out of range");
  const Centered c = center(x);
  if (degenerate(c.c0, x.cwiseAbs().maxCoeff())) throw DegenerateError("autocorrelation: constant series");
  VectorXd out(max_lag + 1);
  for (Index t = 0; t <= max_lag; ++t) out(t) = lag_corr(c, t);
  return out;
}

double autocorrelation_sum(const VectorXd& x, Index lag_cap) {
  const Index n = x.size();
  const Centered c = center(x);
  if (degenerate(c.c0, x.cwiseAbs().maxCoeff())) throw DegenerateError("autocorrelation: constant series");
  const Index cap = lag_cap < 0 ? n / 2 : lag_cap;
  return cutoff_sum([&](Index t) { return lag_corr(c, t); }, n - 1, cap);
}

double effective_sample_size(const VectorXd& x, Index lag_cap) {
  if (x.size() < 10) throw InputError("effective_sample_size: need at least 10 values");
  double s;
  try {
    s = autocorrelation_sum(x, lag_cap);
  } catch (const DegenerateError&) {
    return 1.0;
  }
  const double n = static_cast<double>(x.size());
  return n / (1.0 + 2.0 * s);
}

VectorXd effective_sample_size(const MatrixXd& states) {
  VectorXd out(states.cols());
  for (Index i = 0; i < states.cols(); ++i) out(i) = effective_sample_size(VectorXd(states.col(i)));
  return out;
}

VectorXd geweke_p(const MatrixXd& states, std::size_t B) {
  const Index n = states.rows() - static_cast<Index>(B);
  if (n < 100) throw InputError("geweke: fewer than 100 steps after the burn-in");
  const Index n10 = n / 10;
  const Index n50 = n / 2;
  VectorXd p(states.cols());
  for (Index i = 0; i < states.cols(); ++i) {
    const VectorXd a = states.col(i).segment(static_cast<Index>(B), n10);
    const VectorXd b = states.col(i).tail(n50);
    const double ma = a.mean(), mb = b.mean();
    const double va = (a.array() - ma).square().mean();
    const double vb = (b.array() - mb).square().mean();
    const double ea = effective_sample_size(a, n10 / 2);
    const double eb = effective_sample_size(b, n50 / 2);
    const double se2 = va / ea + vb / eb;
    const double diff = ma - mb;
    double z;
    if (se2 > 0.0) {
      z = diff / std::sqrt(se2);
    } else {
      z = diff == 0.0 ? 0.0 : prob::kInf;
    }
    p(i) = std::erfc(std::abs(z) / std::sqrt(2.0));
  }
  return p;
}

BurnIn find_burn_in(const MatrixXd& states, double eps_p, std::size_t step) {
  const std::size_t n = static_cast<std::size_t>(states.rows());
  if (n < 200) throw InputError("burn-in search: chain shorter than 200 steps");
  for (std::size_t B = 0; B < n / 2; B += step) {
    VectorXd p = geweke_p(states, B);
    if (p.minCoeff() >= eps_p) return {B, std::move(p)};
  }
  throw ConvergenceError("burn-in search: no B below N/2 passes the Geweke test");
}

std::size_t remove_burnin(Chain& chain) {
  if (chain.sampler == "nuts") {
    chain.burn_in = std::min(nuts_burn_in(chain.size()), chain.size() - 1);
    return chain.burn_in;
  }
  chain.burn_in = find_burn_in(chain.states).B;
  return chain.burn_in;
}

VectorXd gelman_rubin(const std::vector<MatrixXd>& chains, double within_scale) {
  const std::size_t M = chains.size();
  if (M < 2) throw InputError("gelman_rubin: need at least two chains");
  const Index p = chains.front().cols();
  double N = 0.0;
  for (const auto& c : chains) {
    if (c.cols() != p) throw InputError("gelman_rubin: chains differ in dimension");
    if (c.rows() < 2) throw InputError("gelman_rubin: chain too short");
    N += static_cast<double>(c.rows());
  }
  N /= static_cast<double>(M);
  VectorXd out(p);
  for (Index i = 0; i < p; ++i) {
    VectorXd mu(M), var(M);
    for (std::size_t m = 0; m < M; ++m) {
      const auto col = chains[m].col(i);
      mu(m) = col.mean();
      var(m) = within_scale * (col.array() - mu(m)).square().sum() / static_cast<double>(col.size() - 1);
    }
    const double within = var.sum();
    if (!(within > 0.0)) throw DegenerateError("gelman_rubin: zero within-chain variance");
    const double between = (mu.array() - mu.mean()).square().sum();
    const double Md = static_cast<double>(M);
    out(i) = std::sqrt((N - 1.0) / N + Md / (Md - 1.0) * between / within);
  }
  return out;
}

VectorXd multichain_ess(const std::vector<MatrixXd>& chains, double within_scale) {
  const std::size_t M = chains.size();
  if (M < 2) throw InputError("multichain_ess: need at least two chains");
  const Index p = chains.front().cols();
  double N = 0.0;
  Index n_min = chains.front().rows();
  for (const auto& c : chains) {
    if (c.cols() != p) throw InputError("multichain_ess: chains differ in dimension");
    N += static_cast<double>(c.rows());
    n_min = std::min(n_min, c.rows());
  }
  if (n_min < 10) throw InputError("multichain_ess: chains shorter than 10 steps");
  N /= static_cast<double>(M);
  const double Md = static_cast<double>(M);
  VectorXd out(p);
  for (Index i = 0; i < p; ++i) {
    VectorXd mu(M);
    double W = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const auto col = chains[m].col(i);
      mu(m) = col.mean();
      W += within_scale * (col.array() - mu(m)).square().sum() / static_cast<double>(col.size() - 1);
    }
    W /= Md;
    const double B_over_N = (mu.array() - mu.mean()).square().sum() / (Md - 1.0);
    const double var_plus = (N - 1.0) / N * W + B_over_N;
    if (!(var_plus > 0.0)) {
      out(i) = 1.0;
      continue;
    }
    auto rho = [&](Index t) {
      double v = 0.0;
      for (const auto& c : chains) {
        const Index n = c.rows();
        v += (c.col(i).tail(n - t) - c.col(i).head(n - t)).squaredNorm();
      }
      v *= within_scale / (Md * (N - static_cast<double>(t)));
      return 1.0 - v / (2.0 * var_plus);
    };
    const double s = cutoff_sum(rho, n_min - 1, static_cast<Index>(N / 2));
    out(i) = Md * N / (1.0 + 2.0 * s);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t ReferenceMesh::total() const {
  std::size_t t = 1;
  for (int b : nbins) t *= static_cast<std::size_t>(b);
  return t;
}

VectorXd ReferenceMesh::edges(Index i) const {
  const int nb = nbins[static_cast<std::size_t>(i)];
  VectorXd e(nb + 1);
  for (int k = 0; k <= nb; ++k) e(k) = lower(i) + k * width(i);
  return e;
}

VectorXd ReferenceMesh::centroid(std::size_t flat) const {
  VectorXd c(dim());
  for (Index i = 0; i < dim(); ++i) {
    const std::size_t nb = static_cast<std::size_t>(nbins[static_cast<std::size_t>(i)]);
    const std::size_t k = flat % nb;
    flat /= nb;
    c(i) = lower(i) + (static_cast<double>(k) + 0.5) * width(i);
  }
  return c;
}

long ReferenceMesh::locate(const VectorXd& x) const {
  long flat = 0;
  long stride = 1;
  for (Index i = 0; i < dim(); ++i) {
    const double u = (x(i) - lower(i)) / width(i);
    if (!(u >= 0.0)) return -1;
    const double k = std::floor(u);
    const int nb = nbins[static_cast<std::size_t>(i)];
    if (k >= nb) return -1;
    flat += static_cast<long>(k) * stride;
    stride *= nb;
  }
  return flat;
}

ReferenceMesh make_mesh(const VectorXd& mu, const VectorXd& sigma, double z, const std::vector<int>& bins) {
  const Index p = mu.size();
  const std::vector<int> nbins = bins.size() == 1 ? std::vector<int>(static_cast<std::size_t>(p), bins.front()) : bins;
  if (sigma.size() != p || static_cast<Index>(nbins.size()) != p) throw InputError("mesh: dimension mismatch");
  if (!(z > 0.0)) throw InputError("mesh: z must be positive");
  ReferenceMesh m;
  m.lower.resize(p);
  m.width.resize(p);
  m.nbins = nbins;
  for (Index i = 0; i < p; ++i) {
    if (nbins[static_cast<std::size_t>(i)] < 1) throw InputError("mesh: need at least one bin per dimension");
    if (!(sigma(i) > 0.0)) throw DegenerateError("mesh: zero spread in dimension " + std::to_string(i));
    m.width(i) = 2.0 * z * sigma(i) / nbins[static_cast<std::size_t>(i)];
    m.lower(i) = mu(i) - z * sigma(i);
  }
  return m;
}

ReferenceMesh build_reference_mesh(const std::vector<MatrixXd>& chains, double z, const std::vector<int>& nbins) {
  if (chains.empty()) throw InputError("mesh: no chains");
  const Index p = chains.front().cols();
  Index rows = 0;
  for (const auto& c : chains) {
    if (c.cols() != p) throw InputError("mesh: chains differ in dimension");
    rows += c.rows();
  }
  MatrixXd pooled(rows, p);
  Index r = 0;
  for (const auto& c : chains) {
    pooled.middleRows(r, c.rows()) = c;
    r += c.rows();
  }
  const VectorXd mu = pooled.colwise().mean();
  const VectorXd sigma = ((pooled.rowwise() - mu.transpose()).array().square().colwise().sum() /
                          static_cast<double>(std::max<Index>(rows - 1, 1)))
                             .sqrt()
                             .transpose();
  return make_mesh(mu, sigma, z, nbins);
}

BinnedDistribution bin_sample(const ReferenceMesh& mesh, const MatrixXd& samples) {
  if (samples.cols() != mesh.dim()) throw InputError("bin_sample: dimension mismatch");
  BinnedDistribution P;
  P.mesh = mesh;
  P.kind = BinnedDistribution::Kind::Sample;
  P.probs = VectorXd::Zero(static_cast<Index>(mesh.total()));
  for (Index r = 0; r < samples.rows(); ++r) {
    const long k = mesh.locate(samples.row(r).transpose());
    if (k < 0) {
      ++P.n_outside;
    } else {
      P.probs(k) += 1.0;
      ++P.n_inside;
    }
  }
  if (P.n_inside == 0) throw InputError("bin_sample: every sample lies outside the mesh");
  P.probs /= static_cast<double>(P.n_inside);
  return P;
}

BinnedDistribution bin_reference(const ReferenceMesh& mesh,
                                 const std::function<double(const VectorXd&)>& log_density, unsigned threads) {
  const std::size_t total = mesh.total();
  VectorXd lp(static_cast<Index>(total));
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) lp(static_cast<Index>(k)) = log_density(mesh.centroid(k));
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    work(0, total);
  } else {
    std::vector<std::thread> pool;
    const std::size_t block = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t lo = t * block;
      const std::size_t hi = std::min(total, lo + block);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  double mx = -prob::kInf;
  for (Index k = 0; k < lp.size(); ++k) {
    if (std::isnan(lp(k)) || lp(k) == prob::kInf) {
      throw EvaluationError("bin_reference: non-finite density at a centroid");
    }
    mx = std::max(mx, lp(k));
  }
  if (!std::isfinite(mx)) throw EvaluationError("bin_reference: density vanishes on the whole mesh");
  BinnedDistribution Q;
  Q.mesh = mesh;
  Q.kind = BinnedDistribution::Kind::Reference;
  // std::exp keeps -inf centroids at exactly zero mass.
  Q.probs = (lp.array() - mx).unaryExpr([](double v) { return std::exp(v); }) * mesh.volume();
  Q.probs /= Q.probs.sum();
  return Q;
}

double kl_divergence(const BinnedDistribution& P, const BinnedDistribution& Q) {
  if (P.probs.size() != Q.probs.size() || P.mesh.nbins != Q.mesh.nbins) {
    throw InputError("kl_divergence: distributions live on different meshes");
  }
  double kl = 0.0;
  for (Index k = 0; k < P.probs.size(); ++k) {
    const double pk = P.probs(k);
    if (pk <= 0.0) continue;
    const double qk = Q.probs(k);
    if (!(qk > 0.0)) throw DegenerateError("kl_divergence: reference bin has zero mass where samples exist");
    kl += pk * std::log(pk / qk);
  }
  return std::max(kl, 0.0);
}

double coverage(const BinnedDistribution& P) {
  if (P.probs.size() == 0) return 0.0;
  const auto hit = (P.probs.array() > 0.0).count();
  return static_cast<double>(hit) / static_cast<double>(P.probs.size());
}

}  // namespace mcbench::diag
