#pragma once

#include <cmath>
#include <memory>
#include <utility>

#include <Eigen/Core>

#include "pfspin/fem.hpp"
#include "pfspin/mesh.hpp"
#include "pfspin/types.hpp"

namespace pfspin {

/// gamma = g_c / l_s * (1 / tau_irr^2 - 1). Throws for tau_irr outside (0, 1)
/// or non-positive g_c / l_s.
double penalty_gamma(double g_c, double l_s, double tau_irr);

/// Isotropic linear-elastic material with AT-2 fracture parameters (kN, mm).
struct MaterialParams {
  double lambda = 0.0;
  double mu = 0.0;
  double g_c = 0.0;
  double l_s = 0.0;
  double tau_irr = 1e-2;
  double gamma = 0.0;
  static constexpr double c_omega = 2.0;

  /// Validates the inputs and derives gamma.
  static MaterialParams make(double lambda, double mu, double g_c, double l_s, double tau_irr);
  void validate() const;
};

template <typename Scalar>
using Tensor2 = Eigen::Matrix<Scalar, 2, 2>;

/// Spectral decomposition of a symmetric 2x2 strain into tensile and compressive parts.
template <typename Scalar>
struct StrainSplit {
  Tensor2<Scalar> plus;
  Tensor2<Scalar> minus;
  Scalar tr_plus;
  Scalar tr_minus;
  Eigen::Matrix<Scalar, 2, 1> eigenvalues;  // ascending
  Tensor2<Scalar> eigenvectors;             // columns, first nonzero component positive
};

template <typename Scalar>
Scalar ramp_plus(Scalar x) {
  return x > Scalar(0) ? x : Scalar(0);
}

template <typename Scalar>
Scalar ramp_minus(Scalar x) {
  return x < Scalar(0) ? x : Scalar(0);
}

template <typename Scalar>
StrainSplit<Scalar> spectral_split(const Tensor2<Scalar>& eps) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar a = eps(0, 0);
  const Scalar d = eps(1, 1);
  const Scalar b = Scalar(0.5) * (eps(0, 1) + eps(1, 0));
  const Scalar mean = Scalar(0.5) * (a + d);
  const Scalar half_gap = Scalar(0.5) * (a - d);
  const Scalar radius = sqrt(half_gap * half_gap + b * b);

  StrainSplit<Scalar> s;
  s.eigenvalues << mean - radius, mean + radius;
  Eigen::Matrix<Scalar, 2, 1> n1(1, 0);
  Eigen::Matrix<Scalar, 2, 1> n2(0, 1);
  if (radius > Scalar(0)) {
    const Scalar theta = Scalar(0.5) * atan2(Scalar(2) * b, a - d);
    n2 << cos(theta), sin(theta);
    n1 << -sin(theta), cos(theta);
  }
  for (auto* n : {&n1, &n2}) {
    if ((*n)(0) < Scalar(0) || ((*n)(0) == Scalar(0) && (*n)(1) < Scalar(0))) *n = -*n;
  }
  s.eigenvectors.col(0) = n1;
  s.eigenvectors.col(1) = n2;

  const Tensor2<Scalar> m1 = n1 * n1.transpose();
  const Tensor2<Scalar> m2 = n2 * n2.transpose();
  s.plus = ramp_plus(s.eigenvalues(0)) * m1 + ramp_plus(s.eigenvalues(1)) * m2;
  s.minus = ramp_minus(s.eigenvalues(0)) * m1 + ramp_minus(s.eigenvalues(1)) * m2;
  const Scalar tr = a + d;
  s.tr_plus = ramp_plus(tr);
  s.tr_minus = ramp_minus(tr);
  return s;
}

/// (psi_plus, psi_minus) = lambda/2 tr_pm^2 + mu eps_pm : eps_pm.
template <typename Scalar>
std::pair<Scalar, Scalar> energy_densities(const Tensor2<Scalar>& eps, double lambda, double mu) {
  const auto s = spectral_split(eps);
  const Scalar plus = Scalar(0.5 * lambda) * s.tr_plus * s.tr_plus + Scalar(mu) * s.plus.squaredNorm();
  const Scalar minus = Scalar(0.5 * lambda) * s.tr_minus * s.tr_minus + Scalar(mu) * s.minus.squaredNorm();
  return {plus, minus};
}

/// (sigma_plus, sigma_minus) = lambda tr_pm I + 2 mu eps_pm.
template <typename Scalar>
std::pair<Tensor2<Scalar>, Tensor2<Scalar>> stresses(const Tensor2<Scalar>& eps, double lambda, double mu) {
  const auto s = spectral_split(eps);
  const Tensor2<Scalar> id = Tensor2<Scalar>::Identity();
  return {Scalar(lambda) * s.tr_plus * id + Scalar(2 * mu) * s.plus,
          Scalar(lambda) * s.tr_minus * id + Scalar(2 * mu) * s.minus};
}

/// Split response at one point in Voigt form: strain (e_xx, e_yy, 2 e_xy),
/// stress (s_xx, s_yy, s_xy). The tangents satisfy d sigma = D d strain and
/// include the rotation of the eigenbasis.
struct ElasticResponse {
  double psi_plus = 0.0;
  double psi_minus = 0.0;
  Eigen::Vector3d sigma_plus = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_minus = Eigen::Vector3d::Zero();
  Eigen::Matrix3d d_plus = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d d_minus = Eigen::Matrix3d::Zero();
};

/// Eigenvalue gaps below this are treated as repeated.
inline constexpr double kRepeatedEigenvalueGap = 1e-8;

ElasticResponse elastic_response(const Eigen::Vector3d& strain, double lambda, double mu, bool with_tangent);

struct SystemState {
  Vector U;
  Vector C;
  Vector C_prev;
  double t = 0.0;
};

struct EnergyParts {
  double elastic = 0.0;
  double fracture = 0.0;
  double penalty = 0.0;
  double total() const { return elastic + fracture + penalty; }
};

/// The four blocks of the coupled Jacobian, each with Dirichlet rows and
/// columns eliminated. uc is the exact transpose of cu.
struct BlockJacobian {
  SparseMatrix uu;
  SparseMatrix uc;
  SparseMatrix cu;
  SparseMatrix cc;

  Index num_u() const { return uu.rows(); }
  Index num_c() const { return cc.rows(); }
  Index size() const { return num_u() + num_c(); }

  /// w = J v on stacked vectors.
  void apply(const Vector& v, Vector& w) const;
  SparseMatrix monolithic() const;
};

/// AT-2 phase-field fracture energy with spectral split and penalized
/// irreversibility, discretized with Q1 elements and 2x2 Gauss quadrature.
///
/// Residuals and Jacobians are the exact first and second derivatives of the
/// discrete energy. Rows belonging to constrained dofs carry zero residual and
/// identity Jacobian rows; callers embed the prescribed values in U and C.
class PhaseFieldModel {
 public:
  PhaseFieldModel(std::shared_ptr<const QuadMesh> mesh, const MaterialParams& material);

  const QuadMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const QuadMesh> mesh_ptr() const { return mesh_; }
  const MaterialParams& material() const { return material_; }
  const DofMap& dofs() const { return dofs_; }
  DofMap& dofs() { return dofs_; }
  const ElementGeometry& geometry() const { return geometry_; }

  Index num_u() const { return dofs_.num_u(); }
  Index num_c() const { return dofs_.num_c(); }

  SystemState zero_state() const;

  /// Writes the prescribed values of all constraints into U and C.
  void impose_constraints(Vector& U, Vector& C) const;

  EnergyParts energy(const Vector& U, const Vector& C, const Vector& C_prev) const;
  EnergyParts energy(const SystemState& s) const { return energy(s.U, s.C, s.C_prev); }

  Vector residual_u(const Vector& U, const Vector& C) const;
  Vector residual_c(const Vector& U, const Vector& C, const Vector& C_prev) const;
  /// Stacked [F_u; F_c].
  Vector residual(const Vector& U, const Vector& C, const Vector& C_prev) const;
  Vector residual(const SystemState& s) const { return residual(s.U, s.C, s.C_prev); }

  SparseMatrix jacobian_uu(const Vector& U, const Vector& C) const;
  SparseMatrix jacobian_cc(const Vector& U, const Vector& C, const Vector& C_prev) const;
  SparseMatrix jacobian_cu(const Vector& U, const Vector& C) const;
  BlockJacobian jacobian(const Vector& U, const Vector& C, const Vector& C_prev) const;
  BlockJacobian jacobian(const SystemState& s) const { return jacobian(s.U, s.C, s.C_prev); }

  /// Phase-field mass and stiffness matrices (unconstrained).
  SparseMatrix scalar_mass() const;
  SparseMatrix scalar_stiffness() const;

  /// Largest nodal decrease of the phase field relative to C_prev.
  static double irreversibility_violation(const Vector& C, const Vector& C_prev);

 private:
  struct PointData;
  void point_data(Index e, int q, const Vector& U, const Vector& C, const Vector* C_prev, PointData& out) const;

  std::shared_ptr<const QuadMesh> mesh_;
  MaterialParams material_;
  DofMap dofs_;
  ElementGeometry geometry_;
  MatrixAssembler uu_;
  MatrixAssembler cc_;
  MatrixAssembler cu_;
};

}  // namespace pfspin
