#pragma once

#include <memory>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "pfspin/model.hpp"

namespace pfspin::test {

inline std::shared_ptr<const QuadMesh> unit_mesh(int n) {
  return std::make_shared<const QuadMesh>(build_rect_mesh(1.0, 1.0, n, n));
}

inline MaterialParams unit_material() { return MaterialParams::make(1.0, 1.0, 0.05, 0.25, 1e-2); }

/// Largest absolute entry of a sparse matrix.
inline double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

inline Vector random_vector(Index n, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace pfspin::test

namespace pfspin::test {

/// Symmetric strain at quadrature point q of element e.
inline Eigen::Matrix2d strain_at(const PhaseFieldModel& model, const Vector& U, Index e, int q) {
  const auto& el = model.mesh().elements[e];
  Eigen::Matrix<double, 2, 4> u;
  for (int a = 0; a < 4; ++a) u.col(a) = U.segment<2>(2 * el[a]);
  const Eigen::Matrix2d g = u * model.geometry().gradients[4 * e + q];
  return 0.5 * (g + g.transpose());
}

inline double value_at(const PhaseFieldModel& model, const Vector& C, Index e, int q) {
  const auto& el = model.mesh().elements[e];
  double v = 0.0;
  for (int a = 0; a < 4; ++a) v += model.geometry().values[4 * e + q][a] * C[el[a]];
  return v;
}

/// True when every quadrature point is away from the kinks of the split and
/// the penalty: eigenvalue gap, eigenvalues, trace and c - c_prev.
inline bool away_from_kinks(const PhaseFieldModel& model, const SystemState& s) {
  for (Index e = 0; e < model.mesh().num_elements(); ++e) {
    for (int q = 0; q < 4; ++q) {
      const Eigen::Matrix2d eps = strain_at(model, s.U, e, q);
      const auto split = spectral_split(eps);
      const double l1 = split.eigenvalues[0];
      const double l2 = split.eigenvalues[1];
      if (l2 - l1 < 1e-3 || std::abs(l1) < 1e-4 || std::abs(l2) < 1e-4 || std::abs(eps.trace()) < 1e-4) return false;
      if (std::abs(value_at(model, s.C, e, q) - value_at(model, s.C_prev, e, q)) < 1e-3) return false;
    }
  }
  return true;
}

/// Random state around the homogeneous displacement u = E x, with nodal
/// c in [0.05, 0.6] and c - c_prev of random sign. Resamples until the state
/// is away from all kinks.
inline SystemState admissible_state(const PhaseFieldModel& model, const Eigen::Matrix2d& E, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = model.mesh().num_nodes();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SystemState s = model.zero_state();
    for (Index i = 0; i < n; ++i) {
      const Point& p = model.mesh().nodes[i];
      s.U.segment<2>(2 * i) = E * p + 0.02 * E.norm() * Eigen::Vector2d(unit(rng) - 0.5, unit(rng) - 0.5);
      s.C[i] = 0.05 + 0.55 * unit(rng);
      const double d = 0.02 + 0.06 * unit(rng);
      s.C_prev[i] = s.C[i] + (unit(rng) < 0.5 ? d : -d);
    }
    if (away_from_kinks(model, s)) return s;
  }
  throw std::runtime_error("admissible_state: no sample away from the kinks");
}

/// Central differences of the energy with respect to every unknown.
inline Vector fd_gradient(const PhaseFieldModel& model, const SystemState& s, double h) {
  const Index nu = model.num_u();
  Vector g(nu + model.num_c());
  SystemState t = s;
  for (Index i = 0; i < g.size(); ++i) {
    double& x = i < nu ? t.U[i] : t.C[i - nu];
    const double x0 = x;
    x = x0 + h;
    const double fp = model.energy(t).total();
    x = x0 - h;
    const double fm = model.energy(t).total();
    x = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central differences of the stacked residual, dense.
inline Eigen::MatrixXd fd_jacobian(const PhaseFieldModel& model, const SystemState& s, double h) {
  const Index nu = model.num_u();
  const Index n = nu + model.num_c();
  Eigen::MatrixXd j(n, n);
  SystemState t = s;
  for (Index i = 0; i < n; ++i) {
    double& x = i < nu ? t.U[i] : t.C[i - nu];
    const double x0 = x;
    x = x0 + h;
    const Vector fp = model.residual(t);
    x = x0 - h;
    const Vector fm = model.residual(t);
    x = x0;
    j.col(i) = (fp - fm) / (2.0 * h);
  }
  return j;
}

}  // namespace pfspin::test

namespace pfspin::test {

/// Unit square of n x n elements, bottom edge fixed, top edge pulled up by
/// `stretch`. Large enough loads damage the material, so the fields couple.
struct Patch {
  std::shared_ptr<const QuadMesh> mesh;
  std::unique_ptr<PhaseFieldModel> model;
  SystemState state;
};

inline Patch stretched_patch(int n, double stretch, double g_c = 0.1, double l_s = 0.5) {
  Patch p;
  p.mesh = unit_mesh(n);
  p.model = std::make_unique<PhaseFieldModel>(p.mesh, MaterialParams::make(1.0, 1.0, g_c, l_s, 1e-2));
  DofMap& dofs = p.model->dofs();
  for (Index i : p.mesh->node_sets.at("bottom")) {
    dofs.constrain(dofs.u_dof(i, 0), 0.0);
    dofs.constrain(dofs.u_dof(i, 1), 0.0);
  }
  for (Index i : p.mesh->node_sets.at("top")) {
    dofs.constrain(dofs.u_dof(i, 0), 0.0);
    dofs.constrain(dofs.u_dof(i, 1), stretch);
  }
  p.state = p.model->zero_state();
  p.model->impose_constraints(p.state.U, p.state.C);
  return p;
}

}  // namespace pfspin::test

namespace pfspin::test {

inline SparseMatrix sparse_from(const Eigen::MatrixXd& d) {
  SparseMatrix a = d.sparseView();
  a.makeCompressed();
  return a;
}

inline SparseMatrix random_spd(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd b(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) b(i, j) = u(rng);
  }
  return sparse_from(b.transpose() * b + 0.5 * n * Eigen::MatrixXd::Identity(n, n));
}

inline SparseMatrix random_nonsymmetric(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<Index> col(0, n - 1);
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 6.0 + u(rng));
    for (int k = 0; k < 5; ++k) t.emplace_back(i, col(rng), u(rng));
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

/// Symmetric with eigenvalues of both signs, |lambda| in [1, 5].
inline SparseMatrix random_indefinite(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = u(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Vector ev = Vector::LinSpaced(n, 1.0, 5.0);
  for (Index i = 0; i < n; i += 2) ev[i] = -ev[i];
  return sparse_from(q * ev.asDiagonal() * q.transpose());
}

}  // namespace pfspin::test
