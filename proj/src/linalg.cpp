#include "pfspin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>

#include <Eigen/LU>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace pfspin {

namespace {

void apply_prec(const KrylovSpec& spec, const Vector& v, Vector& w) {
  if (spec.preconditioner.empty()) {
    w = v;
  } else {
    spec.preconditioner.apply(v, w);
  }
}

Vector true_residual(const LinearOperator& a, const Vector& b, const Vector& x) {
  Vector ax;
  a.apply(x, ax);
  return b - ax;
}

void check_dims(const LinearOperator& a, const Vector& b, Vector& x) {
  if (a.size() != b.size()) throw std::invalid_argument("krylov: operator and right-hand side differ in size");
  if (x.size() == 0) x = Vector::Zero(b.size());
  if (x.size() != b.size()) throw std::invalid_argument("krylov: initial guess has wrong size");
}

double target_for(const KrylovSpec& spec, const Vector& b) {
  if (spec.rel_tol < 0 || spec.abs_tol < 0) throw std::invalid_argument("krylov: negative tolerance");
  return std::max(spec.rel_tol * b.norm(), spec.abs_tol);
}

// Shared restart loop: every pass starts from the fresh residual and the
// result is only accepted once the fresh residual meets the target.
template <typename Pass>
KrylovResult drive(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec, Pass pass) {
  check_dims(a, b, x);
  KrylovResult res;
  res.target = target_for(spec, b);
  constexpr int kMaxPasses = 20;
  for (int p = 0; p < kMaxPasses; ++p) {
    Vector r = true_residual(a, b, x);
    res.residual_norm = r.norm();
    if (res.residual_norm <= res.target) {
      res.converged = true;
      res.breakdown = false;
      return res;
    }
    const Index budget = spec.max_iters - res.iterations;
    if (budget <= 0) break;
    const Index before = res.iterations;
    res.breakdown = false;
    pass(r, budget, res);
    if (res.iterations == before) break;  // no progress possible
  }
  Vector r = true_residual(a, b, x);
  res.residual_norm = r.norm();
  res.converged = res.residual_norm <= res.target;
  if (res.converged) res.breakdown = false;
  return res;
}

}  // namespace

std::string to_string(KrylovMethod m) {
  switch (m) {
    case KrylovMethod::CG: return "cg";
    case KrylovMethod::BiCGStab: return "bcgstab";
    case KrylovMethod::MINRES: return "minres";
    case KrylovMethod::GMRES: return "gmres";
  }
  return "?";
}

LinearOperator LinearOperator::from_matrix(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LinearOperator: matrix must be square");
  const SparseMatrix* m = &a;
  return {a.rows(), [m](const Vector& v, Vector& w) { w.noalias() = *m * v; }};
}

LinearOperator LinearOperator::identity(Index dim) {
  return {dim, [](const Vector& v, Vector& w) { w = v; }};
}

KrylovResult cg(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec) {
  return drive(a, b, x, spec, [&](Vector& r, Index budget, KrylovResult& res) {
    Vector z;
    Vector ap;
    apply_prec(spec, r, z);
    Vector p = z;
    double rz = r.dot(z);
    for (Index k = 0; k < budget; ++k) {
      a.apply(p, ap);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) {
        res.breakdown = true;
        return;
      }
      const double alpha = rz / pap;
      x.noalias() += alpha * p;
      r.noalias() -= alpha * ap;
      ++res.iterations;
      if (r.norm() <= res.target) return;
      apply_prec(spec, r, z);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
  });
}

KrylovResult bicgstab(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec) {
  return drive(a, b, x, spec, [&](Vector& r, Index budget, KrylovResult& res) {
    const Index n = b.size();
    const Vector r_hat = r;
    const double r_hat_norm = r_hat.norm();
    double rho = 1.0;
    double alpha = 1.0;
    double omega = 1.0;
    Vector v = Vector::Zero(n);
    Vector p = Vector::Zero(n);
    Vector p_hat;
    Vector s;
    Vector s_hat;
    Vector t;
    constexpr double tiny = 1e-30;
    for (Index k = 0; k < budget; ++k) {
      const double rho_new = r_hat.dot(r);
      if (std::abs(rho_new) <= tiny * r_hat_norm * r.norm() || rho_new == 0.0) {
        res.breakdown = true;
        return;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      p = r + beta * (p - omega * v);
      apply_prec(spec, p, p_hat);
      a.apply(p_hat, v);
      const double rv = r_hat.dot(v);
      if (rv == 0.0) {
        res.breakdown = true;
        return;
      }
      alpha = rho_new / rv;
      s = r - alpha * v;
      ++res.iterations;
      if (s.norm() <= res.target) {
        x.noalias() += alpha * p_hat;
        r = s;
        return;
      }
      apply_prec(spec, s, s_hat);
      a.apply(s_hat, t);
      const double tt = t.squaredNorm();
      if (tt == 0.0) {
        x.noalias() += alpha * p_hat;
        r = s;
        res.breakdown = true;
        return;
      }
      omega = t.dot(s) / tt;
      x.noalias() += alpha * p_hat + omega * s_hat;
      r = s - omega * t;
      rho = rho_new;
      if (r.norm() <= res.target) return;
      if (omega == 0.0) {
        res.breakdown = true;
        return;
      }
    }
  });
}

KrylovResult minres(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec) {
  const bool preconditioned = !spec.preconditioner.empty();
  return drive(a, b, x, spec, [&](Vector& r0, Index budget, KrylovResult& res) {
    const Index n = b.size();
    Vector r1 = r0;
    Vector y;
    apply_prec(spec, r1, y);
    double beta1 = r1.dot(y);
    if (!(beta1 > 0.0)) {
      res.breakdown = true;
      return;
    }
    beta1 = std::sqrt(beta1);
    double oldb = 0.0;
    double beta = beta1;
    double dbar = 0.0;
    double epsln = 0.0;
    double phibar = beta1;
    double cs = -1.0;
    double sn = 0.0;
    Vector w = Vector::Zero(n);
    Vector w1;
    Vector w2 = Vector::Zero(n);
    Vector r2 = r1;
    Vector v;
    for (Index k = 0; k < budget; ++k) {
      v = y / beta;
      a.apply(v, y);
      if (k > 0) y -= (beta / oldb) * r1;
      const double alfa = v.dot(y);
      y -= (alfa / beta) * r2;
      r1 = r2;
      r2 = y;
      apply_prec(spec, r2, y);
      oldb = beta;
      const double bb = r2.dot(y);
      if (bb < 0.0) {
        res.breakdown = true;  // preconditioner not SPD
        return;
      }
      beta = std::sqrt(bb);
      const double oldeps = epsln;
      const double delta = cs * dbar + sn * alfa;
      const double gbar = sn * dbar - cs * alfa;
      epsln = sn * beta;
      dbar = -cs * beta;
      const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
      cs = gbar / gamma;
      sn = beta / gamma;
      const double phi = cs * phibar;
      phibar = sn * phibar;
      w1 = w2;
      w2 = w;
      w = (v - oldeps * w1 - delta * w2) / gamma;
      x.noalias() += phi * w;
      ++res.iterations;
      const double rnorm = preconditioned ? true_residual(a, b, x).norm() : phibar;
      if (rnorm <= res.target) return;
      if (beta == 0.0) return;  // Krylov space exhausted
    }
  });
}

KrylovResult gmres(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec,
                   std::vector<double>* history) {
  if (spec.restart < 1) throw std::invalid_argument("gmres: restart must be at least 1");
  auto cycle = [&](Vector& r, Index budget, KrylovResult& res, bool keep_products) {
    const Index n = b.size();
    const Index m = std::min<Index>(spec.restart, budget);
    const double beta = r.norm();
    std::vector<Vector> basis;
    std::vector<Vector> z;
    std::vector<Vector> products;
    basis.reserve(m + 1);
    z.reserve(m);
    if (keep_products) products.reserve(m);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Vector g = Vector::Zero(m + 1);
    Vector cs = Vector::Zero(m);
    Vector sn = Vector::Zero(m);
    g(0) = beta;
    basis.push_back(r / beta);
    Index used = 0;
    Vector w;
    for (Index j = 0; j < m; ++j) {
      Vector zj;
      apply_prec(spec, basis[j], zj);
      a.apply(zj, w);
      if (keep_products) products.push_back(w);
      z.push_back(std::move(zj));
      for (int pass = 0; pass < 2; ++pass) {
        for (Index i = 0; i <= j; ++i) {
          const double hij = w.dot(basis[i]);
          h(i, j) += hij;
          w.noalias() -= hij * basis[i];
        }
      }
      h(j + 1, j) = w.norm();
      for (Index i = 0; i < j; ++i) {
        const double t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = t;
      }
      const double rho = std::hypot(h(j, j), h(j + 1, j));
      if (rho == 0.0) {
        res.breakdown = true;
        break;
      }
      cs(j) = h(j, j) / rho;
      sn(j) = h(j + 1, j) / rho;
      h(j, j) = rho;
      h(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      used = j + 1;
      ++res.iterations;
      const double est = std::abs(g(j + 1));
      if (history) history->push_back(est);
      if (est <= res.target) break;
      const double hn = w.norm();
      if (hn == 0.0) break;  // happy breakdown: exact solution in the space
      basis.push_back(w / hn);
    }
    if (used == 0) return;
    const Vector y =
        h.topLeftCorner(used, used).triangularView<Eigen::Upper>().solve(g.head(used));
    for (Index i = 0; i < used; ++i) x.noalias() += y(i) * z[i];
    if (keep_products) {
      for (Index i = 0; i < used; ++i) r.noalias() -= y(i) * products[i];
    }
    (void)n;
  };

  if (spec.fresh_residual_check) {
    return drive(a, b, x, spec, [&](Vector& r, Index budget, KrylovResult& res) { cycle(r, budget, res, false); });
  }

  // Products mode: the residual is tracked as r0 - sum y_i (A z_i) over the
  // stored operator outputs, never by re-applying the operator to x.
  check_dims(a, b, x);
  KrylovResult res;
  res.target = target_for(spec, b);
  Vector r = x.isZero(0.0) ? Vector(b) : true_residual(a, b, x);
  res.residual_norm = r.norm();
  while (res.residual_norm > res.target && res.iterations < spec.max_iters) {
    const Index before = res.iterations;
    res.breakdown = false;
    cycle(r, spec.max_iters - res.iterations, res, true);
    res.residual_norm = r.norm();
    if (res.iterations == before) break;
  }
  res.converged = res.residual_norm <= res.target;
  return res;
}

KrylovResult krylov_solve(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec) {
  switch (spec.method) {
    case KrylovMethod::CG: return cg(a, b, x, spec);
    case KrylovMethod::BiCGStab: return bicgstab(a, b, x, spec);
    case KrylovMethod::MINRES: return minres(a, b, x, spec);
    case KrylovMethod::GMRES: return gmres(a, b, x, spec);
  }
  throw std::invalid_argument("krylov_solve: unknown method");
}

struct DirectSolver::Impl {
  bool dense = true;
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu;
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> sparse_lu;
};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

void DirectSolver::compute(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("DirectSolver: matrix must be square");
  n_ = a.rows();
  impl_->dense = n_ < dense_threshold;
  if (impl_->dense) {
    const Eigen::MatrixXd m = Eigen::MatrixXd(a);
    impl_->dense_lu.compute(m);
    const auto diag = impl_->dense_lu.matrixLU().diagonal().cwiseAbs();
    const double scale = n_ > 0 ? m.cwiseAbs().maxCoeff() : 1.0;
    if (n_ > 0 && !(diag.minCoeff() > 1e-14 * scale)) throw SingularMatrixError("DirectSolver: matrix is singular");
  } else {
    const Eigen::SparseMatrix<double, Eigen::ColMajor, int> col(a);
    impl_->sparse_lu.analyzePattern(col);
    impl_->sparse_lu.factorize(col);
    if (impl_->sparse_lu.info() != Eigen::Success) {
      throw SingularMatrixError("DirectSolver: factorization failed: " + impl_->sparse_lu.lastErrorMessage());
    }
  }
}

Vector DirectSolver::solve(const Vector& b) const {
  if (b.size() != n_) throw std::invalid_argument("DirectSolver: right-hand side has wrong size");
  if (n_ == 0) return b;
  if (impl_->dense) return impl_->dense_lu.solve(b);
  Vector x = impl_->sparse_lu.solve(b);
  if (impl_->sparse_lu.info() != Eigen::Success) throw SingularMatrixError("DirectSolver: solve failed");
  return x;
}

Vector direct_solve(const SparseMatrix& a, const Vector& b) {
  DirectSolver s;
  s.compute(a);
  return s.solve(b);
}

namespace {

Vector inverse_diagonal(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("preconditioner: matrix must be square");
  Vector d = a.diagonal();
  for (Index i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) throw std::invalid_argument("jacobi_preconditioner: zero diagonal entry in row " + std::to_string(i));
    d[i] = 1.0 / d[i];
  }
  return d;
}

struct Level {
  SparseMatrix a;
  Vector inv_diag;
  SparseMatrix p;  // prolongation to this level from the next coarser one
};

struct Hierarchy {
  std::vector<Level> levels;
  Eigen::PartialPivLU<Eigen::MatrixXd> coarse_lu;
  bool coarse_direct = false;
  double omega = 2.0 / 3.0;
  int coarse_sweeps = 4;

  void smooth(const Level& l, const Vector& b, Vector& x) const {
    x.noalias() += omega * l.inv_diag.cwiseProduct(b - l.a * x);
  }

  Vector cycle(std::size_t k, const Vector& b) const {
    const Level& l = levels[k];
    Vector x = Vector::Zero(b.size());
    if (k + 1 == levels.size()) {
      if (coarse_direct) return coarse_lu.solve(b);
      for (int s = 0; s < (levels.size() == 1 ? 1 : coarse_sweeps); ++s) smooth(l, b, x);
      return x;
    }
    smooth(l, b, x);
    const Vector rc = levels[k + 1].p.transpose() * (b - l.a * x);
    x.noalias() += levels[k + 1].p * cycle(k + 1, rc);
    smooth(l, b, x);
    return x;
  }
};

// Greedy aggregation on the strength graph |a_ij| >= theta sqrt(|a_ii a_jj|).
// Rows without strong neighbours stay unaggregated (zero prolongation row);
// the smoother handles them.
std::vector<Index> aggregate(const SparseMatrix& a, Index& count) {
  const Index n = a.rows();
  constexpr double theta = 0.08;
  const Vector d = a.diagonal().cwiseAbs();
  std::vector<std::vector<Index>> strong(n);
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      const Index j = it.col();
      if (j != i && std::abs(it.value()) >= theta * std::sqrt(d[i] * d[j])) strong[i].push_back(j);
    }
  }
  std::vector<Index> agg(n, -1);
  count = 0;
  for (Index i = 0; i < n; ++i) {
    if (agg[i] >= 0 || strong[i].empty()) continue;
    if (std::any_of(strong[i].begin(), strong[i].end(), [&](Index j) { return agg[j] >= 0; })) continue;
    agg[i] = count;
    for (Index j : strong[i]) agg[j] = count;
    ++count;
  }
  std::vector<Index> pass1 = agg;
  for (Index i = 0; i < n; ++i) {
    if (agg[i] >= 0 || strong[i].empty()) continue;
    for (Index j : strong[i]) {
      if (pass1[j] >= 0) {
        agg[i] = pass1[j];
        break;
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (agg[i] >= 0 || strong[i].empty()) continue;
    agg[i] = count;
    for (Index j : strong[i]) {
      if (agg[j] < 0) agg[j] = count;
    }
    ++count;
  }
  return agg;
}

}  // namespace

LinearOperator jacobi_preconditioner(const SparseMatrix& a) {
  const Vector inv = inverse_diagonal(a);
  return {a.rows(), [inv](const Vector& v, Vector& w) { w = inv.cwiseProduct(v); }};
}

LinearOperator aggregation_preconditioner(const SparseMatrix& a, int levels) {
  if (levels < 1) throw std::invalid_argument("aggregation_preconditioner: levels must be at least 1");
  auto h = std::make_shared<Hierarchy>();
  h->levels.push_back({a, inverse_diagonal(a), {}});
  constexpr Index kCoarseSize = 200;
  constexpr Index kDenseLimit = 1000;
  while (static_cast<int>(h->levels.size()) < levels && h->levels.back().a.rows() > kCoarseSize) {
    const SparseMatrix& fine = h->levels.back().a;
    Index nc = 0;
    const auto agg = aggregate(fine, nc);
    if (nc == 0 || nc > 0.8 * fine.rows()) break;
    std::vector<Eigen::Triplet<double, int>> t;
    for (Index i = 0; i < fine.rows(); ++i) {
      if (agg[i] >= 0) t.emplace_back(static_cast<int>(i), static_cast<int>(agg[i]), 1.0);
    }
    SparseMatrix p(fine.rows(), nc);
    p.setFromTriplets(t.begin(), t.end());
    SparseMatrix coarse = SparseMatrix(p.transpose()) * fine * p;
    coarse.makeCompressed();
    Vector inv;
    try {
      inv = inverse_diagonal(coarse);
    } catch (const std::invalid_argument&) {
      break;
    }
    h->levels.push_back({std::move(coarse), std::move(inv), std::move(p)});
  }
  if (levels > 1 && h->levels.size() == 1 && a.rows() > kCoarseSize) {
    std::cerr << "warning: aggregation failed to coarsen; falling back to Jacobi\n";
    return jacobi_preconditioner(a);
  }
  if (h->levels.size() > 1 && h->levels.back().a.rows() <= kDenseLimit) {
    h->coarse_lu.compute(Eigen::MatrixXd(h->levels.back().a));
    h->coarse_direct = true;
  }
  return {a.rows(), [h](const Vector& v, Vector& w) { w = h->cycle(0, v); }};
}

LinearOperator make_preconditioner(PreconditionerKind kind, const SparseMatrix& a) {
  switch (kind) {
    case PreconditionerKind::None: return {};
    case PreconditionerKind::Jacobi: return jacobi_preconditioner(a);
    case PreconditionerKind::Aggregation: return aggregation_preconditioner(a);
  }
  return {};
}

void write_matrix_market(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Index r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) out << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pfspin
