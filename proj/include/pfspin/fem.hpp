#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pfspin/mesh.hpp"
#include "pfspin/types.hpp"

namespace pfspin {

/// Values and reference gradients of the four bilinear shape functions.
/// Local node k sits at (-1,-1), (1,-1), (1,1), (-1,1) for k = 0..3.
template <typename Scalar>
struct ShapeValues {
  Eigen::Matrix<Scalar, 4, 1> values;
  Eigen::Matrix<Scalar, 4, 2> gradients;
};

template <typename Scalar>
ShapeValues<Scalar> shape_eval(Scalar xi, Scalar eta) {
  ShapeValues<Scalar> s;
  const Scalar q(0.25);
  s.values << q * (1 - xi) * (1 - eta), q * (1 + xi) * (1 - eta), q * (1 + xi) * (1 + eta), q * (1 - xi) * (1 + eta);
  s.gradients << -q * (1 - eta), -q * (1 - xi),  //
      q * (1 - eta), -q * (1 + xi),              //
      q * (1 + eta), q * (1 + xi),               //
      -q * (1 + eta), q * (1 - xi);
  return s;
}

struct Quadrature {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

/// 2x2 Gauss rule on [-1,1]^2.
const Quadrature& gauss2x2();

/// Per-element, per-quadrature-point geometry: physical shape gradients and
/// the integration weight times |J|. Point q of element e is at index 4e+q.
struct ElementGeometry {
  std::vector<Eigen::Vector4d> values;
  std::vector<Eigen::Matrix<double, 4, 2>> gradients;
  std::vector<double> jxw;

  static ElementGeometry build(const QuadMesh& mesh);
};

enum class Field { Displacement, PhaseField };

struct Constraint {
  Index dof;
  double value;
};

/// Degrees of freedom for the coupled displacement / phase-field problem.
///
/// Global numbering puts all displacement dofs first (node-major, x then y),
/// then one phase-field dof per node. Field-local numbering is the global
/// index minus the field offset.
class DofMap {
 public:
  explicit DofMap(Index num_nodes);

  Index num_nodes() const { return num_nodes_; }
  Index num_u() const { return 2 * num_nodes_; }
  Index num_c() const { return num_nodes_; }
  Index size() const { return 3 * num_nodes_; }

  Index u_dof(Index node, int component) const { return 2 * node + component; }
  Index c_dof(Index node) const { return num_u() + node; }
  Index offset(Field f) const { return f == Field::Displacement ? 0 : num_u(); }
  Index field_size(Field f) const { return f == Field::Displacement ? num_u() : num_c(); }

  /// Field-split index sets (global numbering).
  std::vector<Index> index_set(Field f) const;

  /// Adds or overwrites the prescribed value of a global dof.
  void constrain(Index dof, double value);
  void clear_constraints();
  const std::vector<Constraint>& constraints() const { return constraints_; }
  bool is_constrained(Index dof) const { return constrained_[dof] != 0; }

  /// Constrained-flag per field-local dof.
  std::vector<char> field_mask(Field f) const;

  /// Element dofs in field-local numbering (8 for displacement, 4 for phase field).
  void element_dofs(const std::array<Index, 4>& element, Field f, std::vector<Index>& out) const;

 private:
  Index num_nodes_;
  std::vector<Constraint> constraints_;
  std::vector<Index> slot_;
  std::vector<char> constrained_;
};

/// Scatter plan for one matrix block: the sparsity pattern fixed by mesh
/// connectivity and, per element, the value-array position of every local entry.
class MatrixAssembler {
 public:
  MatrixAssembler() = default;
  MatrixAssembler(const QuadMesh& mesh, const DofMap& dofs, Field row_field, Field col_field);

  Index rows() const { return pattern_.rows(); }
  Index cols() const { return pattern_.cols(); }
  int local_rows() const { return local_rows_; }
  int local_cols() const { return local_cols_; }

  /// Zero matrix carrying the full pattern.
  const SparseMatrix& pattern() const { return pattern_; }

  /// Adds a local matrix of element e into `target` (which must share the pattern).
  void scatter(Index e, const Eigen::Ref<const Eigen::MatrixXd>& local, SparseMatrix& target) const;

 private:
  SparseMatrix pattern_;
  int local_rows_ = 0;
  int local_cols_ = 0;
  std::vector<int> positions_;
};

using MatrixKernel = std::function<void(Index element, Eigen::MatrixXd& local)>;
using VectorKernel = std::function<void(Index element, Eigen::VectorXd& local)>;

/// Generic element loop. The kernel receives a zeroed local matrix of the
/// block's local size and must not resize it.
SparseMatrix assemble_matrix(const QuadMesh& mesh, const DofMap& dofs, Field row_field, Field col_field,
                             const MatrixKernel& kernel);
Vector assemble_vector(const QuadMesh& mesh, const DofMap& dofs, Field field, const VectorKernel& kernel);

/// Symmetric elimination of the dofmap's constraints on a global system:
/// constrained rows and columns are zeroed, the diagonal set to one, and the
/// right-hand side adjusted so that constrained dofs solve to their values.
void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const DofMap& dofs);

/// Zeroes the masked rows and columns. With `unit_diagonal` (square blocks
/// sharing one mask) the masked diagonal entries are set to one.
void constrain_rows_cols(SparseMatrix& matrix, std::span<const char> row_mask, std::span<const char> col_mask,
                         bool unit_diagonal);

void zero_masked(Vector& v, std::span<const char> mask);

}  // namespace pfspin
