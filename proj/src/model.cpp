#include "pfspin/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pfspin {

double penalty_gamma(double g_c, double l_s, double tau_irr) {
  if (!(g_c > 0.0) || !(l_s > 0.0)) throw std::invalid_argument("penalty_gamma: g_c and l_s must be positive");
  if (!(tau_irr > 0.0) || !(tau_irr < 1.0)) {
    throw std::invalid_argument("penalty_gamma: tau_irr must lie in (0, 1) for a positive penalty");
  }
  return g_c / l_s * (1.0 / (tau_irr * tau_irr) - 1.0);
}

MaterialParams MaterialParams::make(double lambda, double mu, double g_c, double l_s, double tau_irr) {
  MaterialParams m;
  m.lambda = lambda;
  m.mu = mu;
  m.g_c = g_c;
  m.l_s = l_s;
  m.tau_irr = tau_irr;
  m.gamma = penalty_gamma(g_c, l_s, tau_irr);
  m.validate();
  return m;
}

void MaterialParams::validate() const {
  if (!(mu > 0.0)) throw std::invalid_argument("material: mu must be positive");
  if (!(lambda + mu > 0.0)) throw std::invalid_argument("material: lambda + 2 mu / d must be positive");
  if (!(g_c > 0.0) || !(l_s > 0.0)) throw std::invalid_argument("material: g_c and l_s must be positive");
  if (!(tau_irr > 0.0 && tau_irr < 1.0)) throw std::invalid_argument("material: tau_irr must lie in (0, 1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("material: gamma must be positive");
}

ElasticResponse elastic_response(const Eigen::Vector3d& strain, double lambda, double mu, bool with_tangent) {
  Tensor2<double> eps;
  eps << strain(0), 0.5 * strain(2), 0.5 * strain(2), strain(1);
  const auto s = spectral_split(eps);

  ElasticResponse r;
  r.psi_plus = 0.5 * lambda * s.tr_plus * s.tr_plus + mu * s.plus.squaredNorm();
  r.psi_minus = 0.5 * lambda * s.tr_minus * s.tr_minus + mu * s.minus.squaredNorm();
  r.sigma_plus << lambda * s.tr_plus + 2 * mu * s.plus(0, 0), lambda * s.tr_plus + 2 * mu * s.plus(1, 1),
      2 * mu * s.plus(0, 1);
  r.sigma_minus << lambda * s.tr_minus + 2 * mu * s.minus(0, 0), lambda * s.tr_minus + 2 * mu * s.minus(1, 1),
      2 * mu * s.minus(0, 1);
  if (!with_tangent) return r;

  // Ramp derivatives: H+(0) = 0 and H- = 1 - H+, so the two tangents always
  // sum to the unsplit elastic tangent.
  auto heaviside = [](double x) { return x > 0.0 ? 1.0 : 0.0; };
  const double e1 = s.eigenvalues(0);
  const double e2 = s.eigenvalues(1);
  const Eigen::Vector2d n1 = s.eigenvectors.col(0);
  const Eigen::Vector2d n2 = s.eigenvectors.col(1);
  const Eigen::Vector3d m1(n1.x() * n1.x(), n1.y() * n1.y(), n1.x() * n1.y());
  const Eigen::Vector3d m2(n2.x() * n2.x(), n2.y() * n2.y(), n2.x() * n2.y());
  const Eigen::Vector3d g(n1.x() * n2.x(), n1.y() * n2.y(), 0.5 * (n1.x() * n2.y() + n1.y() * n2.x()));

  const double h1 = heaviside(e1);
  const double h2 = heaviside(e2);
  double rot_plus;
  double rot_minus;
  if (e2 - e1 < kRepeatedEigenvalueGap) {
    rot_plus = h1;
    rot_minus = 1.0 - h1;
  } else {
    rot_plus = (ramp_plus(e2) - ramp_plus(e1)) / (e2 - e1);
    rot_minus = (ramp_minus(e2) - ramp_minus(e1)) / (e2 - e1);
  }
  const Eigen::Matrix3d mm1 = m1 * m1.transpose();
  const Eigen::Matrix3d mm2 = m2 * m2.transpose();
  const Eigen::Matrix3d gg = g * g.transpose();
  Eigen::Matrix3d ones = Eigen::Matrix3d::Zero();
  ones.topLeftCorner<2, 2>().setOnes();

  const double htr = heaviside(strain(0) + strain(1));
  r.d_plus = lambda * htr * ones + 2 * mu * (h1 * mm1 + h2 * mm2 + 2 * rot_plus * gg);
  r.d_minus = lambda * (1.0 - htr) * ones + 2 * mu * ((1.0 - h1) * mm1 + (1.0 - h2) * mm2 + 2 * rot_minus * gg);
  return r;
}

void BlockJacobian::apply(const Vector& v, Vector& w) const {
  const Index nu = num_u();
  const Index nc = num_c();
  w.resize(nu + nc);
  w.head(nu).noalias() = uu * v.head(nu);
  w.head(nu).noalias() += uc * v.tail(nc);
  w.tail(nc).noalias() = cu * v.head(nu);
  w.tail(nc).noalias() += cc * v.tail(nc);
}

SparseMatrix BlockJacobian::monolithic() const {
  const Index nu = num_u();
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(uu.nonZeros() + uc.nonZeros() + cu.nonZeros() + cc.nonZeros());
  auto add = [&t](const SparseMatrix& m, Index r0, Index c0) {
    for (Index r = 0; r < m.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
        t.emplace_back(static_cast<int>(r0 + r), static_cast<int>(c0 + it.col()), it.value());
      }
    }
  };
  add(uu, 0, 0);
  add(uc, 0, nu);
  add(cu, nu, 0);
  add(cc, nu, nu);
  SparseMatrix m(size(), size());
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

struct PhaseFieldModel::PointData {
  Eigen::Matrix<double, 3, 8> b;  // engineering strain-displacement
  Eigen::Vector4d n;
  Eigen::Matrix<double, 4, 2> grad;
  double jxw = 0.0;
  Eigen::Vector3d strain;
  double c = 0.0;
  Eigen::Vector2d grad_c;
  double c_prev = 0.0;
};

PhaseFieldModel::PhaseFieldModel(std::shared_ptr<const QuadMesh> mesh, const MaterialParams& material)
    : mesh_(std::move(mesh)), material_(material), dofs_(mesh_->num_nodes()) {
  material_.validate();
  geometry_ = ElementGeometry::build(*mesh_);
  uu_ = MatrixAssembler(*mesh_, dofs_, Field::Displacement, Field::Displacement);
  cc_ = MatrixAssembler(*mesh_, dofs_, Field::PhaseField, Field::PhaseField);
  cu_ = MatrixAssembler(*mesh_, dofs_, Field::PhaseField, Field::Displacement);
}

SystemState PhaseFieldModel::zero_state() const {
  SystemState s;
  s.U = Vector::Zero(num_u());
  s.C = Vector::Zero(num_c());
  s.C_prev = Vector::Zero(num_c());
  return s;
}

void PhaseFieldModel::impose_constraints(Vector& U, Vector& C) const {
  for (const auto& c : dofs_.constraints()) {
    if (c.dof < num_u()) {
      U[c.dof] = c.value;
    } else {
      C[c.dof - num_u()] = c.value;
    }
  }
}

void PhaseFieldModel::point_data(Index e, int q, const Vector& U, const Vector& C, const Vector* C_prev,
                                 PointData& p) const {
  const auto& nodes = mesh_->elements[e];
  const Index k = 4 * e + q;
  p.n = geometry_.values[k];
  p.grad = geometry_.gradients[k];
  p.jxw = geometry_.jxw[k];
  p.strain.setZero();
  p.c = 0.0;
  p.grad_c.setZero();
  p.c_prev = 0.0;
  for (int a = 0; a < 4; ++a) {
    const Index node = nodes[a];
    const double dx = p.grad(a, 0);
    const double dy = p.grad(a, 1);
    p.b.col(2 * a) << dx, 0.0, dy;
    p.b.col(2 * a + 1) << 0.0, dy, dx;
    const double ux = U[2 * node];
    const double uy = U[2 * node + 1];
    p.strain(0) += dx * ux;
    p.strain(1) += dy * uy;
    p.strain(2) += dy * ux + dx * uy;
    p.c += p.n(a) * C[node];
    p.grad_c += p.grad.row(a).transpose() * C[node];
    if (C_prev) p.c_prev += p.n(a) * (*C_prev)[node];
  }
}

EnergyParts PhaseFieldModel::energy(const Vector& U, const Vector& C, const Vector& C_prev) const {
  const auto& m = material_;
  EnergyParts out;
  PointData p;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, &C_prev, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, false);
      const double g = (1.0 - p.c) * (1.0 - p.c);
      const double viol = ramp_minus(p.c - p.c_prev);
      out.elastic += p.jxw * (g * r.psi_plus + r.psi_minus);
      out.fracture += p.jxw * 0.5 * m.g_c * (p.c * p.c / m.l_s + m.l_s * p.grad_c.squaredNorm());
      out.penalty += p.jxw * 0.5 * m.gamma * viol * viol;
    }
  }
  return out;
}

Vector PhaseFieldModel::residual_u(const Vector& U, const Vector& C) const {
  const auto& m = material_;
  Vector f = Vector::Zero(num_u());
  PointData p;
  Eigen::Matrix<double, 8, 1> local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, nullptr, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, false);
      const double g = (1.0 - p.c) * (1.0 - p.c);
      local.noalias() += p.jxw * p.b.transpose() * (g * r.sigma_plus + r.sigma_minus);
    }
    const auto& nodes = mesh_->elements[e];
    for (int a = 0; a < 4; ++a) {
      f[2 * nodes[a]] += local[2 * a];
      f[2 * nodes[a] + 1] += local[2 * a + 1];
    }
  }
  zero_masked(f, dofs_.field_mask(Field::Displacement));
  return f;
}

Vector PhaseFieldModel::residual_c(const Vector& U, const Vector& C, const Vector& C_prev) const {
  const auto& m = material_;
  Vector f = Vector::Zero(num_c());
  PointData p;
  Eigen::Vector4d local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, &C_prev, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, false);
      const double source = 2.0 * (p.c - 1.0) * r.psi_plus + m.g_c / m.l_s * p.c + m.gamma * ramp_minus(p.c - p.c_prev);
      local.noalias() += p.jxw * (source * p.n + m.g_c * m.l_s * p.grad * p.grad_c);
    }
    const auto& nodes = mesh_->elements[e];
    for (int a = 0; a < 4; ++a) f[nodes[a]] += local[a];
  }
  zero_masked(f, dofs_.field_mask(Field::PhaseField));
  return f;
}

Vector PhaseFieldModel::residual(const Vector& U, const Vector& C, const Vector& C_prev) const {
  Vector f(num_u() + num_c());
  f.head(num_u()) = residual_u(U, C);
  f.tail(num_c()) = residual_c(U, C, C_prev);
  return f;
}

SparseMatrix PhaseFieldModel::jacobian_uu(const Vector& U, const Vector& C) const {
  const auto& m = material_;
  SparseMatrix j = uu_.pattern();
  PointData p;
  Eigen::Matrix<double, 8, 8> local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, nullptr, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, true);
      const double g = (1.0 - p.c) * (1.0 - p.c);
      const Eigen::Matrix3d d = g * r.d_plus + r.d_minus;
      local.noalias() += p.jxw * p.b.transpose() * d * p.b;
    }
    local = 0.5 * (local + local.transpose()).eval();
    uu_.scatter(e, local, j);
  }
  const auto mask = dofs_.field_mask(Field::Displacement);
  constrain_rows_cols(j, mask, mask, true);
  return j;
}

SparseMatrix PhaseFieldModel::jacobian_cc(const Vector& U, const Vector& C, const Vector& C_prev) const {
  const auto& m = material_;
  SparseMatrix j = cc_.pattern();
  PointData p;
  Eigen::Matrix4d local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, &C_prev, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, false);
      const double active = (p.c - p.c_prev) < 0.0 ? 1.0 : 0.0;
      const double reaction = 2.0 * r.psi_plus + m.g_c / m.l_s + m.gamma * active;
      local.noalias() += p.jxw * (reaction * p.n * p.n.transpose() + m.g_c * m.l_s * p.grad * p.grad.transpose());
    }
    local = 0.5 * (local + local.transpose()).eval();
    cc_.scatter(e, local, j);
  }
  const auto mask = dofs_.field_mask(Field::PhaseField);
  constrain_rows_cols(j, mask, mask, true);
  return j;
}

SparseMatrix PhaseFieldModel::jacobian_cu(const Vector& U, const Vector& C) const {
  const auto& m = material_;
  SparseMatrix j = cu_.pattern();
  PointData p;
  Eigen::Matrix<double, 4, 8> local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      point_data(e, q, U, C, nullptr, p);
      const auto r = elastic_response(p.strain, m.lambda, m.mu, false);
      local.noalias() += p.jxw * 2.0 * (p.c - 1.0) * p.n * (p.b.transpose() * r.sigma_plus).transpose();
    }
    cu_.scatter(e, local, j);
  }
  constrain_rows_cols(j, dofs_.field_mask(Field::PhaseField), dofs_.field_mask(Field::Displacement), false);
  return j;
}

BlockJacobian PhaseFieldModel::jacobian(const Vector& U, const Vector& C, const Vector& C_prev) const {
  BlockJacobian j;
  j.uu = jacobian_uu(U, C);
  j.cc = jacobian_cc(U, C, C_prev);
  j.cu = jacobian_cu(U, C);
  j.uc = SparseMatrix(j.cu.transpose());
  return j;
}

SparseMatrix PhaseFieldModel::scalar_mass() const {
  SparseMatrix j = cc_.pattern();
  Eigen::Matrix4d local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      const Index k = 4 * e + q;
      local.noalias() += geometry_.jxw[k] * geometry_.values[k] * geometry_.values[k].transpose();
    }
    cc_.scatter(e, local, j);
  }
  return j;
}

SparseMatrix PhaseFieldModel::scalar_stiffness() const {
  SparseMatrix j = cc_.pattern();
  Eigen::Matrix4d local;
  for (Index e = 0; e < mesh_->num_elements(); ++e) {
    local.setZero();
    for (int q = 0; q < 4; ++q) {
      const Index k = 4 * e + q;
      local.noalias() += geometry_.jxw[k] * geometry_.gradients[k] * geometry_.gradients[k].transpose();
    }
    cc_.scatter(e, local, j);
  }
  return j;
}

double PhaseFieldModel::irreversibility_violation(const Vector& C, const Vector& C_prev) {
  return (C_prev - C).maxCoeff();
}

}  // namespace pfspin
