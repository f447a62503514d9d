#include "risnoma/beamforming.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "risnoma/rng.hpp"

namespace risnoma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSicSlack = 2e-9;  // relative SINR headroom kept on the SIC row
constexpr double kSicCheck = 1e-9;  // headroom required by fixed_direction_power

double gain(const CVector& h, const CVector& w) { return std::norm(h.dot(w.conjugate())); }

void check_pair(const CVector& a, const CVector& b, const char* what) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument(std::string(what) + ": vectors must be non-empty and of equal length");
}

// ---------------------------------------------------------------------------
// Dual of the semidefinite relaxation, solved with a log-barrier method.
//
// Scaled by 1/noise the relaxation reads
//   min tr Wm + tr Wn
//   s.t. tr(Hm Wm) - tm tr(Hm Wn) = tm        (lambda_1, free)
//        tr(Hn Wm) - tm tr(Hn Wn) >= tm       (lambda_2 >= 0)
//        tr(Hn Wn) >= tn                      (lambda_3 >= 0)
// and its dual is max b'lambda s.t. Sm, Sn >= 0 with
//   Sm = I - l1 Hm - l2 Hn,  Sn = I + tm l1 Hm + tm l2 Hn - l3 Hn.
// The SIC row carries the same small headroom as the recovered beamformers.

struct DualProblem {
  CMatrix hm, hn;
  double tm = 0.0, tn = 0.0;
  double tsic = 0.0;  // target in the SIC row, slightly above tm
  Eigen::Index dim = 0;

  std::array<CMatrix, 3> dsm() const { return {-hm, -hn, CMatrix::Zero(dim, dim)}; }
  std::array<CMatrix, 3> dsn() const { return {tm * hm, tsic * hn, -hn}; }

  CMatrix sm(const Eigen::Vector3d& l) const {
    return CMatrix::Identity(dim, dim) - l(0) * hm - l(1) * hn;
  }
  CMatrix sn(const Eigen::Vector3d& l) const {
    return CMatrix::Identity(dim, dim) + tm * l(0) * hm + tsic * l(1) * hn - l(2) * hn;
  }
  Eigen::Vector3d b() const { return {tm, tsic, tn}; }
};

bool log_det(const CMatrix& s, double& out) {
  Eigen::LLT<CMatrix> llt(s);
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixL();
  double v = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double d = std::real(l(i, i));
    if (!(d > 0.0)) return false;
    v += 2.0 * std::log(d);
  }
  out = v;
  return true;
}

struct DualSolution {
  Eigen::Vector3d lambda;
  double value = 0.0;
  double t = 0.0;
  bool bounded = true;
};

DualSolution solve_dual(const DualProblem& p) {
  const double scale = std::max(p.hm.trace().real(), p.hn.trace().real());
  Eigen::Vector3d l(0.0, 0.25 / ((1.0 + p.tsic) * scale), 0.25 / ((1.0 + p.tsic) * scale));
  const Eigen::Vector3d b = p.b();
  const auto am = p.dsm();
  const auto an = p.dsn();
  const bool use_l3 = p.tn > 0.0;
  if (!use_l3) l(2) = 0.0;

  auto barrier_value = [&](const Eigen::Vector3d& x, double t, double& out) {
    if (!(x(1) > 0.0) || (use_l3 && !(x(2) > 0.0))) return false;
    double a, c;
    if (!log_det(p.sm(x), a) || !log_det(p.sn(x), c)) return false;
    out = t * b.dot(x) + a + c + std::log(x(1)) + (use_l3 ? std::log(x(2)) : 0.0);
    return true;
  };

  const double m_dims = 2.0 * static_cast<double>(p.dim) + (use_l3 ? 2.0 : 1.0);
  double t = m_dims / std::max(b.dot(l), 1e-300);
  DualSolution out;
  const int nvar = use_l3 ? 3 : 2;
  for (int outer = 0; outer < 200; ++outer) {
    for (int newton = 0; newton < 100; ++newton) {
      const CMatrix smi = p.sm(l).inverse();
      const CMatrix sni = p.sn(l).inverse();
      Eigen::Vector3d g = t * b;
      Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
      std::array<CMatrix, 3> xm, xn;
      for (int i = 0; i < 3; ++i) {
        xm[i] = smi * am[i];
        xn[i] = sni * an[i];
        g(i) += xm[i].trace().real() + xn[i].trace().real();
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) h(i, j) = -(xm[i] * xm[j]).trace().real() - (xn[i] * xn[j]).trace().real();
      g(1) += 1.0 / l(1);
      h(1, 1) -= 1.0 / (l(1) * l(1));
      if (use_l3) {
        g(2) += 1.0 / l(2);
        h(2, 2) -= 1.0 / (l(2) * l(2));
      }
      Eigen::Vector3d step = Eigen::Vector3d::Zero();
      {
        const Eigen::MatrixXd hh = -h.topLeftCorner(nvar, nvar);
        const Eigen::VectorXd gg = g.head(nvar);
        step.head(nvar) = hh.ldlt().solve(gg);
      }
      const double decrement = g.head(nvar).dot(step.head(nvar));
      if (!(decrement == decrement)) break;
      if (decrement < 1e-14) break;
      double f0;
      barrier_value(l, t, f0);
      double s = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
        const Eigen::Vector3d cand = l + s * step;
        double f1;
        if (barrier_value(cand, t, f1) && f1 >= f0 + 0.25 * s * decrement) {
          l = cand;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    out.value = b.dot(l);
    if (!(out.value < 1e30)) {
      out.bounded = false;
      break;
    }
    if (m_dims / t < 1e-13 * std::max(out.value, 1e-300)) break;
    t *= 8.0;
  }
  out.lambda = l;
  out.t = t;
  return out;
}

// Smallest-eigenvalue direction of a dual slack matrix and the ratio of its
// two smallest eigenvalues (the relaxed primal has rank one when it is tiny).
CVector null_direction(const CMatrix& s, double* ratio) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(s);
  const auto& ev = es.eigenvalues();
  if (ratio) *ratio = ev.size() > 1 && ev(1) > 0.0 ? std::max(0.0, ev(0)) / ev(1) : 0.0;
  return es.eigenvectors().col(0);
}

// min ||w||^2  s.t. |x^T w|^2 = alpha, |y^T w|^2 >= beta.
bool min_norm_pair(const CVector& x, const CVector& y, double alpha, double beta, CVector& w) {
  const double xx = x.squaredNorm();
  if (!(xx > 0.0)) return false;
  w = std::sqrt(alpha) / xx * x.conjugate();
  if (gain(y, w) >= beta) return true;
  Eigen::Matrix2cd g;
  g(0, 0) = xx;
  g(1, 1) = y.squaredNorm();
  g(0, 1) = y.dot(x);  // x^T conj(y)
  g(1, 0) = std::conj(g(0, 1));
  const double det = std::real(g(0, 0) * g(1, 1)) - std::norm(g(0, 1));
  if (!(det > 1e-13 * std::real(g(0, 0) * g(1, 1)))) return false;
  const Eigen::Matrix2cd gi = g.inverse();
  const std::complex<double> g12 = gi(0, 1);
  const std::complex<double> phase = std::abs(g12) > 0.0 ? -std::conj(g12) / std::abs(g12) : 1.0;
  const Eigen::Vector2cd v(std::sqrt(alpha), std::sqrt(beta) * phase);
  CMatrix a(2, x.size());
  a.row(0) = x.transpose();
  a.row(1) = y.transpose();
  w = a.adjoint() * (gi * v);
  return true;
}


struct Candidate {
  double power = kInf;
  CVector wm, wn;
};

// Best beamformers once the direction of w_n is fixed: user n's own target is
// met with equality and w_m is the exact minimum-norm solution.
Candidate solve_given_un(const CVector& hm, const CVector& hn, CVector un, SinrTargets t, double noise) {
  Candidate c;
  double pn = 0.0;
  if (t.n > 0.0) {
    const double nn = un.norm();
    if (!(nn > 0.0)) return c;
    un /= nn;
    const double d = gain(hn, un);
    if (!(d > 0.0)) return c;
    pn = t.n * noise / d;
  }
  c.wn = std::sqrt(pn) * un;
  const double alpha = t.m * (gain(hm, c.wn) + noise);
  const double beta = t.m * (gain(hn, c.wn) + noise) * (1.0 + kSicSlack);
  if (!min_norm_pair(hm, hn, alpha, beta, c.wm)) return c;
  c.power = c.wm.squaredNorm() + c.wn.squaredNorm();
  return c;
}

// Power of min_norm_pair() from the Gram entries xx = |x|^2, yy = |y|^2,
// xy = x^T conj(y).
double min_norm_power(double xx, double yy, cd xy, double alpha, double beta) {
  if (!(xx > 0.0)) return kInf;
  if (alpha * std::norm(xy) / (xx * xx) >= beta) return alpha / xx;
  const double det = xx * yy - std::norm(xy);
  if (!(det > 1e-13 * xx * yy)) return kInf;
  return (alpha * yy + beta * xx - 2.0 * std::sqrt(alpha * beta) * std::abs(xy)) / det;
}

// Optimal directions of w_n have the form (I + mu H_m)^{-1} conj(h_n) with
// real mu, i.e. cos(psi) a + sin(psi) b with a, b the parts of conj(h_n)
// orthogonal and parallel to conj(h_m). Grid over psi plus golden refinement,
// on scalar inner products only.
struct DirectionScan {
  CVector a, b;
  double power = kInf;
  double psi = 0.0;
  CVector direction() const { return std::cos(psi) * a + std::sin(psi) * b; }
};

DirectionScan scan_power(const CVector& hm, const CVector& hn, SinrTargets t, double noise) {
  DirectionScan out;
  const CVector c = hn.conjugate();
  const double qn = hm.norm();
  out.b = CVector::Zero(c.size());
  if (qn > 0.0) {
    const CVector q = hm.conjugate() / qn;
    out.b = q * q.dot(c);
  }
  out.a = c - out.b;
  const double floor = 1e-12 * c.norm();
  const double la = out.a.norm() > floor ? 1.0 : 0.0, lb = out.b.norm() > floor ? 1.0 : 0.0;
  if (la > 0.0) out.a.normalize(); else out.a.setZero();
  if (lb > 0.0) out.b.normalize(); else out.b.setZero();
  const cd ma = (hm.transpose() * out.a).value(), mb = (hm.transpose() * out.b).value();
  const cd na = (hn.transpose() * out.a).value(), nb = (hn.transpose() * out.b).value();
  const double xx = hm.squaredNorm(), yy = hn.squaredNorm();
  const cd xy = hn.dot(hm);

  auto at = [&](double psi) {
    const double cs = std::cos(psi), sn = std::sin(psi);
    double pn = 0.0, bm = 0.0, dn = 0.0;
    if (t.n > 0.0) {
      const double nrm = cs * cs * la + sn * sn * lb;
      if (!(nrm > 0.0)) return kInf;
      dn = std::norm(cs * na + sn * nb) / nrm;
      if (!(dn > 0.0)) return kInf;
      pn = t.n * noise / dn;
      bm = std::norm(cs * ma + sn * mb) / nrm;
    }
    const double alpha = t.m * (bm * pn + noise);
    const double beta = t.m * (dn * pn + noise) * (1.0 + kSicSlack);
    return pn + min_norm_power(xx, yy, xy, alpha, beta);
  };

  constexpr int kGrid = 48;
  const double step = std::numbers::pi / kGrid;
  for (int i = 0; i < kGrid; ++i) {
    const double v = at(step * i);
    if (v < out.power) {
      out.power = v;
      out.psi = step * i;
    }
  }
  if (!std::isfinite(out.power)) return out;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = out.psi - step, hi = out.psi + step;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = at(x1), f2 = at(x2);
  for (int it = 0; it < 50; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = at(x2);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double v = at(mid);
  if (v < out.power) {
    out.power = v;
    out.psi = mid;
  }
  return out;
}

Candidate scan_directions(const CVector& hm, const CVector& hn, SinrTargets t, double noise) {
  const DirectionScan sc = scan_power(hm, hn, t, noise);
  if (!std::isfinite(sc.power)) return {};
  return solve_given_un(hm, hn, sc.direction(), t, noise);
}

}  // namespace

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const auto& v : vectors) p += v.squaredNorm();
  return p;
}

SicRateTriple sic_rate_triple(const CVector& h_m, const CVector& h_n, const CVector& w_m, const CVector& w_n,
                              double noise) {
  if (!(noise > 0.0)) throw std::invalid_argument("sic_rate_triple: noise must be > 0");
  check_pair(h_m, h_n, "sic_rate_triple");
  check_pair(h_m, w_m, "sic_rate_triple");
  check_pair(h_m, w_n, "sic_rate_triple");
  SicRateTriple r;
  r.r_mm = std::log2(1.0 + gain(h_m, w_m) / (gain(h_m, w_n) + noise));
  r.r_nm = std::log2(1.0 + gain(h_n, w_m) / (gain(h_n, w_n) + noise));
  r.r_nn = std::log2(1.0 + gain(h_n, w_n) / noise);
  return r;
}

bool sic_condition(const SicRateTriple& triple) { return triple.r_nm >= triple.r_mm; }

double fixed_direction_power(double a, double b, double c, double d, SinrTargets t, double noise, double* p_m,
                             double* p_n) {
  double pn_lo = 0.0, pn_hi = kInf;
  if (t.n > 0.0) {
    if (!(d > 0.0)) return kInf;
    pn_lo = t.n * noise / d;
  }
  double pm = 0.0;
  if (t.m > 0.0) {
    if (!(a > 0.0) || !(c > 0.0)) return kInf;
    // Own constraint tight; SIC with headroom e: pn (cb - (1+e) ad) >= noise ((1+e) a - c).
    const double e = 1.0 + kSicCheck;
    const double k = c * b - e * a * d;
    const double r = noise * (e * a - c);
    if (k > 0.0) {
      pn_lo = std::max(pn_lo, r / k);
    } else if (k < 0.0) {
      if (r > 0.0) return kInf;
      pn_hi = r / k;
    } else if (r > 0.0) {
      return kInf;
    }
    if (pn_lo > pn_hi) return kInf;
  }
  const double pn = pn_lo;
  if (t.m > 0.0) pm = t.m * (b * pn + noise) / a;
  if (p_m) *p_m = pm;
  if (p_n) *p_n = pn;
  return pm + pn;
}

double power_given_direction(const CVector& h_m, const CVector& h_n, const CVector& u_n, SinrTargets targets,
                             double noise, BeamformerSet* out) {
  check_pair(h_m, h_n, "power_given_direction");
  check_pair(h_m, u_n, "power_given_direction");
  const Candidate c = solve_given_un(h_m, h_n, u_n, targets, noise);
  if (out && std::isfinite(c.power)) out->vectors = {c.wm, c.wn};
  return c.power;
}

PowerMinSolution active_power_min(const CVector& h_m, const CVector& h_n, SinrTargets targets, double noise,
                                  std::uint64_t seed) {
  check_pair(h_m, h_n, "active_power_min");
  if (!(noise > 0.0)) throw std::invalid_argument("active_power_min: noise must be > 0");
  if (!(targets.m >= 0.0) || !(targets.n >= 0.0) || (targets.m == 0.0 && targets.n == 0.0))
    throw std::invalid_argument("active_power_min: targets must be >= 0 and not both zero");
  if (h_m.squaredNorm() == 0.0 || h_n.squaredNorm() == 0.0)
    throw InfeasibleTargets("active_power_min: a channel is zero, no beamformer reaches the targets");

  const Eigen::Index nt = h_m.size();
  PowerMinSolution sol;

  if (targets.m == 0.0) {
    // Only user n is served: matched filter.
    const CVector u = h_n.conjugate().normalized();
    const double p = targets.n * noise / h_n.squaredNorm();
    sol.beamformers.vectors = {CVector::Zero(nt), std::sqrt(p) * u};
    sol.power = sol.dual_bound = p;
    sol.certified = true;
    return sol;
  }

  DualProblem dp;
  dp.hm = h_m.conjugate() * h_m.transpose() / noise;
  dp.hn = h_n.conjugate() * h_n.transpose() / noise;
  dp.tm = targets.m;
  dp.tn = targets.n;
  dp.tsic = targets.m * (1.0 + kSicSlack);
  dp.dim = nt;
  const DualSolution ds = solve_dual(dp);
  if (!ds.bounded)
    throw InfeasibleTargets("active_power_min: targets infeasible (SIC at user n cannot support user m)");
  sol.dual_bound = std::max(0.0, ds.value);

  double rm = 0.0, rn = 0.0;
  null_direction(dp.sm(ds.lambda), &rm);
  const CMatrix sn = dp.sn(ds.lambda);
  CVector un = targets.n > 0.0 ? null_direction(sn, &rn) : CVector(h_n.conjugate().normalized());
  if (targets.n == 0.0) rn = 0.0;
  sol.rank_one = rm < 1e-6 && rn < 1e-6;

  Candidate best = solve_given_un(h_m, h_n, un, targets, noise);
  const double tol = 1e-7 * std::max(sol.dual_bound, 1e-300);
  if (targets.n > 0.0 && !(best.power - sol.dual_bound <= tol)) {
    // Gaussian randomization over the relaxed W_n, then a local search on u_n.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sn);
    const double floor = 1e-14 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
    Eigen::VectorXd scale(nt);
    for (Eigen::Index i = 0; i < nt; ++i) scale(i) = 1.0 / std::sqrt(std::max(es.eigenvalues()(i), floor));
    Rng rng(splitmix64(seed ^ 0xB3A3));
    for (int s = 0; s < 400; ++s) {
      CVector z(nt);
      for (Eigen::Index i = 0; i < nt; ++i) z(i) = scale(i) * rng.complex_normal();
      const CVector cand_un = es.eigenvectors() * z;
      auto cand = solve_given_un(h_m, h_n, cand_un, targets, noise);
      if (cand.power < best.power) {
        best = std::move(cand);
        un = cand_un.normalized();
        sol.randomized = true;
      }
    }
    if (std::isfinite(best.power)) {
      for (double step = 0.25; step > 1e-10; step *= 0.5) {
        bool improved = true;
        while (improved) {
          improved = false;
          for (Eigen::Index i = 0; i < nt; ++i)
            for (const std::complex<double> dir : {std::complex<double>(1, 0), std::complex<double>(-1, 0),
                                                   std::complex<double>(0, 1), std::complex<double>(0, -1)}) {
              CVector trial = un;
              trial(i) += step * dir;
              auto cand = solve_given_un(h_m, h_n, trial, targets, noise);
              if (cand.power < best.power * (1.0 - 1e-15)) {
                best = std::move(cand);
                un = trial.normalized();
                improved = true;
              }
            }
        }
      }
    }
  }
  if (!std::isfinite(best.power))
    throw InfeasibleTargets("active_power_min: no feasible beamformers (channels aligned, SIC cannot hold)");

  sol.beamformers.vectors = {best.wm, best.wn};
  sol.power = sol.beamformers.total_power();
  sol.gap = sol.power - sol.dual_bound;

  // Certification against the original constraints.
  const auto& w = sol.beamformers.vectors;
  const double sinr_mm = gain(h_m, w[0]) / (gain(h_m, w[1]) + noise);
  const double sinr_nm = gain(h_n, w[0]) / (gain(h_n, w[1]) + noise);
  const double sinr_nn = gain(h_n, w[1]) / noise;
  sol.certified = sinr_mm >= targets.m * (1 - 1e-6) && sinr_nm >= targets.m * (1 - 1e-6) &&
                  sinr_nn >= targets.n * (1 - 1e-6) && sinr_nm >= sinr_mm * (1 - 1e-6);
  return sol;
}

// ---------------------------------------------------------------------------

double evaluate_links(const LinkTerms& links, std::span<const RisProfile> profiles, const LinkObjective& objective) {
  CVector s = links.constant;
  Eigen::Index j = 0;
  for (const auto& p : profiles)
    for (Eigen::Index m = 0; m < p.coefficients.size(); ++m, ++j) s += links.slope.col(j) * p.coefficients(m);
  return objective.value({s.data(), static_cast<std::size_t>(s.size())});
}

std::vector<RisProfile> coordinate_ascent(const LinkTerms& links, const LinkObjective& objective,
                                          std::vector<RisProfile> profiles, const CoordinateOptions& options) {
  std::size_t total = 0;
  for (const auto& p : profiles) total += p.size();
  if (static_cast<std::size_t>(links.slope.cols()) != total || links.slope.rows() != links.constant.size())
    throw std::invalid_argument("coordinate_ascent: link terms do not match the profiles");
  if (total == 0) return profiles;

  const Eigen::Index nl = links.constant.size();
  CVector s = links.constant;
  {
    Eigen::Index j = 0;
    for (const auto& p : profiles)
      for (Eigen::Index m = 0; m < p.coefficients.size(); ++m, ++j) s += links.slope.col(j) * p.coefficients(m);
  }
  CVector trial(nl);
  auto eval_with = [&](const CVector& base, Eigen::Index j, cd coeff) {
    trial = base + links.slope.col(j) * coeff;
    return objective.value({trial.data(), static_cast<std::size_t>(nl)});
  };
  auto eval_current = [&]() { return objective.value({s.data(), static_cast<std::size_t>(nl)}); };

  double current = eval_current();
  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const double before = current;
    Eigen::Index j = 0;
    for (auto& prof : profiles) {
      for (Eigen::Index m = 0; m < prof.coefficients.size(); ++m, ++j) {
        const cd old = prof.coefficients(m);
        const double amp = std::abs(old);
        if (amp == 0.0) continue;
        const CVector base = s - links.slope.col(j) * old;
        double best_val = current;
        cd best = old;
        auto consider = [&](double phase) {
          const cd c = std::polar(amp, phase);
          const double v = eval_with(base, j, c);
          if (v > best_val) {
            best_val = v;
            best = c;
          }
        };
        if (prof.resolution_bits) {
          const int levels = 1 << *prof.resolution_bits;
          for (int l = 0; l < levels; ++l) consider(2.0 * std::numbers::pi * l / levels);
        } else if (objective.single_link) {
          const auto i = static_cast<Eigen::Index>(*objective.single_link);
          const cd d = links.slope(i, j);
          if (d != cd{}) consider(base(i) == cd{} ? -std::arg(d) : std::arg(base(i)) - std::arg(d));
        } else {
          const std::size_t g = std::max<std::size_t>(options.grid, 4);
          double arg_best = std::arg(old), grid_best = -kInf;
          for (std::size_t q = 0; q < g; ++q) {
            const double ph = 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(g);
            const double v = eval_with(base, j, std::polar(amp, ph));
            if (v > grid_best) {
              grid_best = v;
              arg_best = ph;
            }
          }
          consider(arg_best);
          const double width = 2.0 * std::numbers::pi / static_cast<double>(g);
          double lo = arg_best - width, hi = arg_best + width;
          const double r = 0.5 * (std::sqrt(5.0) - 1.0);
          double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
          double f1 = eval_with(base, j, std::polar(amp, x1)), f2 = eval_with(base, j, std::polar(amp, x2));
          for (int it = 0; it < 60; ++it) {
            if (f1 >= f2) {
              hi = x2;
              x2 = x1;
              f2 = f1;
              x1 = hi - r * (hi - lo);
              f1 = eval_with(base, j, std::polar(amp, x1));
            } else {
              lo = x1;
              x1 = x2;
              f1 = f2;
              x2 = lo + r * (hi - lo);
              f2 = eval_with(base, j, std::polar(amp, x2));
            }
          }
          consider(0.5 * (lo + hi));
        }
        if (best != old) {
          prof.coefficients(m) = best;
          s = base + links.slope.col(j) * best;
          // Re-evaluated from the updated terms.
          const double v = eval_current();
          if (v > current + 1e-13 * std::abs(current)) {
            current = v;
          } else {
            prof.coefficients(m) = old;
            s = base + links.slope.col(j) * old;
          }
        }
      }
    }
    if (!(current - before > options.tolerance * std::abs(before))) break;
  }
  return profiles;
}

LinkTerms two_user_links(const ChannelSet& channels, std::size_t weak, std::size_t strong) {
  std::size_t total = 0;
  for (std::size_t r = 0; r < channels.ris_count(); ++r) total += channels.elements(r);
  const Eigen::Index nt = static_cast<Eigen::Index>(channels.antennas());
  LinkTerms lt;
  lt.constant.resize(2 * nt);
  lt.slope.resize(2 * nt, static_cast<Eigen::Index>(total));
  const std::array<std::size_t, 2> users{weak, strong};
  for (int ui = 0; ui < 2; ++ui) {
    const std::size_t k = users[static_cast<std::size_t>(ui)];
    lt.constant.segment(ui * nt, nt) = channels.direct[k];
    Eigen::Index col = 0;
    for (std::size_t r = 0; r < channels.ris_count(); ++r) {
      const CMatrix& f = channels.bs_ris[r];
      const CVector& g = channels.ris_user[r][k];
      for (Eigen::Index e = 0; e < g.size(); ++e, ++col)
        lt.slope.block(ui * nt, col, nt, 1) = std::conj(g(e)) * f.row(e).transpose();
    }
  }
  return lt;
}

LinkObjective passive_objective(const PassiveSpec& spec, const BeamformerSet& beamformers) {
  if (beamformers.vectors.size() != 2) throw std::invalid_argument("passive_objective: two beamformers required");
  const CVector w_m = beamformers.vectors[0], w_n = beamformers.vectors[1];
  const Eigen::Index nt = w_m.size();
  auto split = [nt](std::span<const cd> s, CVector& hm, CVector& hn) {
    if (static_cast<Eigen::Index>(s.size()) != 2 * nt)
      throw std::invalid_argument("passive_objective: link count does not match the beamformers");
    hm = Eigen::Map<const CVector>(s.data(), nt);
    hn = Eigen::Map<const CVector>(s.data() + nt, nt);
  };
  LinkObjective obj;
  if (spec.objective == PassiveObjective::MinPowerMargin) {
    const double current = beamformers.total_power();
    const CVector u_n = w_n.norm() > 0.0 ? CVector(w_n.normalized()) : CVector(CVector::Zero(nt));
    obj.value = [spec, current, u_n, split](std::span<const cd> s) {
      CVector hm, hn;
      split(s, hm, hn);
      const double need = std::min(power_given_direction(hm, hn, u_n, spec.targets, spec.noise),
                                   scan_power(hm, hn, spec.targets, spec.noise).power);
      return std::isfinite(need) && need > 0.0 ? current / need : 0.0;
    };
  } else {
    obj.value = [spec, w_m, w_n, split](std::span<const cd> s) {
      CVector hm, hn;
      split(s, hm, hn);
      const auto r = sic_rate_triple(hm, hn, w_m, w_n, spec.noise);
      if (!sic_condition(r)) return -kInf;
      return spec.weight_m * r.r_mm + spec.weight_n * r.r_nn;
    };
  }
  return obj;
}

double passive_value(const ChannelSet& channels, const BeamformerSet& beamformers, const RisProfile& profile,
                     const PassiveSpec& spec) {
  const auto links = two_user_links(channels, spec.weak, spec.strong);
  const std::vector<RisProfile> ps{profile};
  return evaluate_links(links, ps, passive_objective(spec, beamformers));
}

RisProfile passive_update(const ChannelSet& channels, const BeamformerSet& beamformers, const RisProfile& profile,
                          const PassiveSpec& spec, const CoordinateOptions& options) {
  if (channels.ris_count() != 1) throw std::invalid_argument("passive_update: exactly one RIS");
  if (beamformers.vectors.size() != 2) throw std::invalid_argument("passive_update: two beamformers required");
  const auto links = two_user_links(channels, spec.weak, spec.strong);
  auto out = coordinate_ascent(links, passive_objective(spec, beamformers), {profile}, options);
  return out.front();
}

// ---------------------------------------------------------------------------

namespace {

struct Equivalent {
  CVector hm, hn;
};

Equivalent equivalent_pair(const ChannelSet& ch, const RisProfile& profile, std::size_t weak, std::size_t strong) {
  std::vector<RisProfile> ps;
  if (ch.ris_count() == 1) ps.push_back(profile);
  return {equivalent_channel(ch, weak, ps), equivalent_channel(ch, strong, ps)};
}

double wsr_value(const Equivalent& e, const BeamformerSet& bf, double wm, double wn, double noise) {
  const auto r = sic_rate_triple(e.hm, e.hn, bf.vectors[0], bf.vectors[1], noise);
  return wm * std::min(r.r_mm, r.r_nm) + wn * r.r_nn;
}

// Keeps the direction of w_n on new channels.
std::optional<BeamformerSet> rescale(const Equivalent& e, const BeamformerSet& bf, SinrTargets t, double noise) {
  BeamformerSet out;
  const double p = power_given_direction(e.hm, e.hn, bf.vectors[1], t, noise, &out);
  if (!std::isfinite(p)) return std::nullopt;
  return out;
}

}  // namespace

PowerMinSolution wsr_active_step(const CVector& h_m, const CVector& h_n, double weight_m, double weight_n,
                                 double power_budget, double noise, double* value) {
  if (!(power_budget > 0.0)) throw std::invalid_argument("wsr_active_step: power budget must be > 0");
  // The target search runs on the direction scan, an exact construction
  // that upper-bounds the least power; the relaxation runs once at the end.
  auto feasible = [&](double tm, double tn) {
    return scan_power(h_m, h_n, {tm, tn}, noise).power <= power_budget;
  };
  auto bisect = [&](double lo, double hi, auto&& ok) {
    for (int i = 0; i < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return lo;
  };
  const double tn_cap = power_budget * h_n.squaredNorm() / noise;
  const double tm_cap = power_budget * std::max(h_m.squaredNorm(), h_n.squaredNorm()) / noise;
  auto best_tn = [&](double tm) {
    if (tm == 0.0) return tn_cap;
    if (!feasible(tm, 0.0)) return -1.0;
    return bisect(0.0, tn_cap, [&](double tn) { return feasible(tm, tn); });
  };
  const double tm_max = bisect(0.0, tm_cap, [&](double tm) { return feasible(tm, 0.0); });
  auto phi = [&](double tm) {
    const double tn = best_tn(tm);
    if (tn < 0.0) return -kInf;
    return weight_m * std::log2(1.0 + tm) + weight_n * std::log2(1.0 + tn);
  };

  const int grid = 16;
  double best_t = 0.0, best_v = phi(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double tm = tm_max * i / grid;
    const double v = phi(tm);
    if (v > best_v) {
      best_v = v;
      best_t = tm;
    }
  }
  double lo = std::max(0.0, best_t - tm_max / grid), hi = std::min(tm_max, best_t + tm_max / grid);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = phi(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = phi(x2);
    }
  }
  for (double cand : {x1, x2}) {
    const double v = cand == x1 ? f1 : f2;
    if (v > best_v) {
      best_v = v;
      best_t = cand;
    }
  }

  PowerMinSolution sol;
  const double tn = best_tn(best_t);
  if (best_t == 0.0) {
    const CVector u = h_n.conjugate().normalized();
    sol.beamformers.vectors = {CVector::Zero(h_m.size()), std::sqrt(power_budget) * u};
    sol.power = power_budget;
    sol.certified = true;
  } else {
    const SinrTargets t{best_t, std::max(tn, 0.0)};
    // The search stops on the budget boundary; rounding overshoot is scaled away.
    auto fit = [&](PowerMinSolution& c) {
      if (!(c.power <= power_budget * (1.0 + 1e-9))) return false;
      if (c.power > power_budget) {
        const double k = std::sqrt(power_budget / c.power);
        for (auto& v : c.beamformers.vectors) v *= k;
        c.power = c.beamformers.total_power();
      }
      return true;
    };
    bool done = false;
    if (t.n > 0.0) {
      try {
        sol = active_power_min(h_m, h_n, t, noise);
        done = fit(sol);
      } catch (const InfeasibleTargets&) {
      }
    }
    if (!done) {
      const Candidate c = scan_directions(h_m, h_n, t, noise);
      sol = PowerMinSolution{};
      sol.beamformers.vectors = {c.wm, c.wn};
      sol.power = c.power;
      if (!std::isfinite(c.power) || !fit(sol)) throw InfeasibleTargets("wsr_active_step: no feasible operating point");
    }
  }
  if (value) {
    const Equivalent e{h_m, h_n};
    *value = wsr_value(e, sol.beamformers, weight_m, weight_n, noise);
  }
  return sol;
}

namespace {

AlternatingResult run_alternating(const ChannelSet& channels, const AlternatingConfig& config, RisProfile start) {
  const bool power_mode = config.mode == DesignMode::PowerMin;
  const std::size_t m_el = start.size();
  AlternatingResult res;
  res.profile = std::move(start);

  auto order_from = [&](const RisProfile& prof, std::size_t& weak, std::size_t& strong) {
    const auto e = equivalent_pair(channels, prof, 0, 1);
    const bool first_weak = e.hm.squaredNorm() <= e.hn.squaredNorm();
    weak = first_weak ? 0 : 1;
    strong = 1 - weak;
  };
  order_from(res.profile, res.weak, res.strong);

  auto active = [&](const Equivalent& e, double* objective) {
    if (power_mode) {
      auto s = active_power_min(e.hm, e.hn, config.targets, config.noise, config.seed);
      *objective = s.power;
      return s.beamformers;
    }
    double v = 0.0;
    auto s = wsr_active_step(e.hm, e.hn, config.weight_m, config.weight_n, config.power_budget, config.noise, &v);
    *objective = v;
    return s.beamformers;
  };
  auto record = [&](std::size_t it, const Equivalent& e) {
    const auto r = sic_rate_triple(e.hm, e.hn, res.beamformers.vectors[0], res.beamformers.vectors[1], config.noise);
    res.trace.push_back({it, res.objective, r.r_nm - r.r_mm, res.beamformers.total_power()});
  };

  Equivalent eq = equivalent_pair(channels, res.profile, res.weak, res.strong);
  try {
    res.beamformers = active(eq, &res.objective);
  } catch (const InfeasibleTargets& e) {
    throw InfeasibleTargets(std::string("alternating_design: infeasible at iteration 0: ") + e.what());
  }
  record(0, eq);

  PassiveSpec spec;
  spec.objective = power_mode ? PassiveObjective::MinPowerMargin : PassiveObjective::WeightedSumRate;
  spec.targets = config.targets;
  spec.weight_m = config.weight_m;
  spec.weight_n = config.weight_n;
  spec.noise = config.noise;

  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    if (m_el == 0) {
      res.converged = true;
      break;
    }
    spec.weak = res.weak;
    spec.strong = res.strong;
    const RisProfile next = passive_update(channels, res.beamformers, res.profile, spec);
    std::size_t weak = res.weak, strong = res.strong;
    if (config.reorder_each_iteration) order_from(next, weak, strong);
    const Equivalent e = equivalent_pair(channels, next, weak, strong);

    double obj = 0.0;
    BeamformerSet bf;
    bool have = false;
    try {
      bf = active(e, &obj);
      have = true;
    } catch (const InfeasibleTargets&) {
    }
    // Incumbent beamformers adapted to the new channels.
    if (!config.reorder_each_iteration) {
      if (power_mode) {
        if (auto inc = rescale(e, res.beamformers, config.targets, config.noise)) {
          const double p = inc->total_power();
          if (!have || p < obj) {
            bf = *inc;
            obj = p;
            have = true;
          }
        }
      } else {
        const double v = wsr_value(e, res.beamformers, config.weight_m, config.weight_n, config.noise);
        const bool sic = sic_condition(sic_rate_triple(e.hm, e.hn, res.beamformers.vectors[0],
                                                       res.beamformers.vectors[1], config.noise));
        if (sic && (!have || v > obj)) {
          bf = res.beamformers;
          obj = v;
          have = true;
        }
      }
    }
    if (!have) break;

    const double prev = res.objective;
    res.profile = next;
    res.weak = weak;
    res.strong = strong;
    res.beamformers = bf;
    res.objective = obj;
    eq = e;
    record(it, eq);
    const double change = power_mode ? prev - obj : obj - prev;
    if (std::abs(change) <= config.tolerance * std::max(std::abs(prev), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  const auto r = sic_rate_triple(eq.hm, eq.hn, res.beamformers.vectors[0], res.beamformers.vectors[1], config.noise);
  res.sic_ok = sic_condition(r);
  return res;
}

// Profile maximizing ||h_k(theta)||^2 by coordinate ascent from `from`.
RisProfile gain_start(const ChannelSet& channels, std::size_t k, const RisProfile& from) {
  const auto links = two_user_links(channels, k, 1 - k);
  const std::size_t nt = channels.antennas();
  LinkObjective obj;
  obj.value = [nt](std::span<const cd> s) {
    double g = 0.0;
    for (std::size_t i = 0; i < nt; ++i) g += std::norm(s[i]);
    return g;
  };
  if (nt == 1) obj.single_link = 0;
  return coordinate_ascent(links, obj, {from}).front();
}

}  // namespace

AlternatingResult alternating_design(const ChannelSet& channels, const AlternatingConfig& config) {
  channels.validate();
  if (channels.users() != 2) throw std::invalid_argument("alternating_design: two users required");
  if (channels.ris_count() > 1) throw std::invalid_argument("alternating_design: at most one RIS");
  if (!(config.noise > 0.0)) throw std::invalid_argument("alternating_design: noise must be > 0");
  const bool power_mode = config.mode == DesignMode::PowerMin;
  if (power_mode && (!(config.targets.m > 0.0) || !(config.targets.n > 0.0)))
    throw std::invalid_argument("alternating_design: SINR targets must be > 0");

  const std::size_t m_el = channels.ris_count() == 1 ? channels.elements(0) : 0;
  const RisProfile unit = RisProfile::unit(m_el, config.bits);
  std::vector<RisProfile> starts{unit};
  if (config.multi_start && m_el > 0)
    for (std::size_t k = 0; k < 2; ++k) {
      RisProfile p = gain_start(channels, k, unit);
      const bool seen = std::any_of(starts.begin(), starts.end(),
                                    [&](const RisProfile& q) { return q.coefficients == p.coefficients; });
      if (!seen) starts.push_back(std::move(p));
    }

  std::optional<AlternatingResult> best;
  std::string failure;
  for (const auto& st : starts) {
    try {
      auto r = run_alternating(channels, config, st);
      const bool better = !best || (power_mode ? r.objective < best->objective : r.objective > best->objective);
      if (better) best = std::move(r);
    } catch (const InfeasibleTargets& e) {
      if (failure.empty()) failure = e.what();
    }
  }
  if (!best) throw InfeasibleTargets(failure);
  return *best;
}

}  // namespace risnoma
