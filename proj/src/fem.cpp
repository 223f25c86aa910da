#include "pfspin/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace pfspin {

const Quadrature& gauss2x2() {
  static const Quadrature rule = [] {
    const double g = 1.0 / std::sqrt(3.0);
    Quadrature q;
    q.points = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
    q.weights = {1.0, 1.0, 1.0, 1.0};
    return q;
  }();
  return rule;
}

ElementGeometry ElementGeometry::build(const QuadMesh& mesh) {
  const auto& rule = gauss2x2();
  const Index ne = mesh.num_elements();
  ElementGeometry g;
  g.values.resize(4 * ne);
  g.gradients.resize(4 * ne);
  g.jxw.resize(4 * ne);
  for (Index e = 0; e < ne; ++e) {
    Eigen::Matrix<double, 4, 2> coords;
    for (int k = 0; k < 4; ++k) coords.row(k) = mesh.nodes[mesh.elements[e][k]].transpose();
    for (int q = 0; q < 4; ++q) {
      const auto s = shape_eval(rule.points[q].x(), rule.points[q].y());
      const Eigen::Matrix2d jac = coords.transpose() * s.gradients;  // d(x,y)/d(xi,eta)
      const double det = jac.determinant();
      if (det <= 0.0) throw std::invalid_argument("element with non-positive Jacobian");
      g.values[4 * e + q] = s.values;
      g.gradients[4 * e + q] = s.gradients * jac.inverse();
      g.jxw[4 * e + q] = rule.weights[q] * det;
    }
  }
  return g;
}

DofMap::DofMap(Index num_nodes) : num_nodes_(num_nodes), slot_(3 * num_nodes, -1), constrained_(3 * num_nodes, 0) {
  if (num_nodes < 0) throw std::invalid_argument("DofMap: negative node count");
}

std::vector<Index> DofMap::index_set(Field f) const {
  std::vector<Index> ids(field_size(f));
  for (Index i = 0; i < field_size(f); ++i) ids[i] = offset(f) + i;
  return ids;
}

void DofMap::constrain(Index dof, double value) {
  if (dof < 0 || dof >= size()) throw std::out_of_range("DofMap: constraint on nonexistent dof");
  if (slot_[dof] >= 0) {
    constraints_[slot_[dof]].value = value;
    return;
  }
  slot_[dof] = static_cast<Index>(constraints_.size());
  constraints_.push_back({dof, value});
  constrained_[dof] = 1;
}

void DofMap::clear_constraints() {
  constraints_.clear();
  std::fill(slot_.begin(), slot_.end(), -1);
  std::fill(constrained_.begin(), constrained_.end(), 0);
}

std::vector<char> DofMap::field_mask(Field f) const {
  const auto begin = constrained_.begin() + offset(f);
  return {begin, begin + field_size(f)};
}

void DofMap::element_dofs(const std::array<Index, 4>& element, Field f, std::vector<Index>& out) const {
  out.clear();
  if (f == Field::Displacement) {
    for (Index n : element) {
      out.push_back(2 * n);
      out.push_back(2 * n + 1);
    }
  } else {
    out.assign(element.begin(), element.end());
  }
}

MatrixAssembler::MatrixAssembler(const QuadMesh& mesh, const DofMap& dofs, Field row_field, Field col_field) {
  const Index nrows = dofs.field_size(row_field);
  const Index ncols = dofs.field_size(col_field);
  local_rows_ = row_field == Field::Displacement ? 8 : 4;
  local_cols_ = col_field == Field::Displacement ? 8 : 4;

  std::vector<Index> rdofs;
  std::vector<Index> cdofs;
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(mesh.elements.size() * local_rows_ * local_cols_);
  for (const auto& q : mesh.elements) {
    dofs.element_dofs(q, row_field, rdofs);
    dofs.element_dofs(q, col_field, cdofs);
    for (Index r : rdofs) {
      for (Index c : cdofs) triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), 0.0);
    }
  }
  pattern_.resize(nrows, ncols);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  positions_.resize(mesh.elements.size() * local_rows_ * local_cols_);
  std::size_t k = 0;
  for (const auto& q : mesh.elements) {
    dofs.element_dofs(q, row_field, rdofs);
    dofs.element_dofs(q, col_field, cdofs);
    for (Index r : rdofs) {
      for (Index c : cdofs) {
        const int* it = std::lower_bound(inner + outer[r], inner + outer[r + 1], static_cast<int>(c));
        positions_[k++] = static_cast<int>(it - inner);
      }
    }
  }
}

void MatrixAssembler::scatter(Index e, const Eigen::Ref<const Eigen::MatrixXd>& local, SparseMatrix& target) const {
  if (local.rows() != local_rows_ || local.cols() != local_cols_) {
    throw std::invalid_argument("MatrixAssembler: local matrix has wrong dimensions");
  }
  double* values = target.valuePtr();
  const int* pos = positions_.data() + e * local_rows_ * local_cols_;
  for (int i = 0; i < local_rows_; ++i) {
    for (int j = 0; j < local_cols_; ++j) values[*pos++] += local(i, j);
  }
}

SparseMatrix assemble_matrix(const QuadMesh& mesh, const DofMap& dofs, Field row_field, Field col_field,
                             const MatrixKernel& kernel) {
  const MatrixAssembler assembler(mesh, dofs, row_field, col_field);
  SparseMatrix out = assembler.pattern();
  Eigen::MatrixXd local;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    local.setZero(assembler.local_rows(), assembler.local_cols());
    kernel(e, local);
    assembler.scatter(e, local, out);
  }
  return out;
}

Vector assemble_vector(const QuadMesh& mesh, const DofMap& dofs, Field field, const VectorKernel& kernel) {
  Vector out = Vector::Zero(dofs.field_size(field));
  const int nloc = field == Field::Displacement ? 8 : 4;
  std::vector<Index> ids;
  Eigen::VectorXd local;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    local.setZero(nloc);
    kernel(e, local);
    if (local.size() != nloc) throw std::invalid_argument("assemble_vector: local vector has wrong dimensions");
    dofs.element_dofs(mesh.elements[e], field, ids);
    for (int i = 0; i < nloc; ++i) out[ids[i]] += local[i];
  }
  return out;
}

void constrain_rows_cols(SparseMatrix& matrix, std::span<const char> row_mask, std::span<const char> col_mask,
                         bool unit_diagonal) {
  if (static_cast<Index>(row_mask.size()) != matrix.rows() || static_cast<Index>(col_mask.size()) != matrix.cols()) {
    throw std::invalid_argument("constrain_rows_cols: mask size mismatch");
  }
  for (Index r = 0; r < matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      if (row_mask[r] || col_mask[it.col()]) it.valueRef() = (unit_diagonal && it.col() == r) ? 1.0 : 0.0;
    }
  }
}

void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const DofMap& dofs) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("apply_dirichlet: matrix must be square");
  if (matrix.rows() != dofs.size() || rhs.size() != dofs.size()) {
    throw std::invalid_argument("apply_dirichlet: system does not match the dof map");
  }
  if (dofs.constraints().empty()) return;
  Vector g = Vector::Zero(dofs.size());
  std::vector<char> mask(dofs.size(), 0);
  for (const auto& c : dofs.constraints()) {
    g[c.dof] = c.value;
    mask[c.dof] = 1;
  }
  rhs -= matrix * g;
  constrain_rows_cols(matrix, mask, mask, true);
  for (const auto& c : dofs.constraints()) rhs[c.dof] = c.value;
}

void zero_masked(Vector& v, std::span<const char> mask) {
  for (Index i = 0; i < v.size(); ++i) {
    if (mask[i]) v[i] = 0.0;
  }
}

}  // namespace pfspin
