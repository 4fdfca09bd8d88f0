#pragma once

// Spatial discretization of the three model problems and the maps from
// physical coefficient fields to the operator timelines A(t), B(t), C(t), Q(t).

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hyperinv/error.hpp"

namespace hyperinv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

enum class ProblemKind { kWave1d, kElastic2d, kMaxwell1d };

ProblemKind parse_problem_kind(std::string_view name);
std::string_view to_string(ProblemKind kind);

/// Canonical field names of a problem, in a fixed order.
///   wave1d: a, b, q, rho   elastic2d: lambda, mu, rho   maxwell1d: eps, mu
const std::vector<std::string>& field_names(ProblemKind kind);

/// Uniform time grid 0 = t_0 < ... < t_N = T.
struct TimeGrid {
  double T = 1.0;
  int N = 1;

  double dt() const { return T / N; }
  double t(int n) const { return T * n / N; }
  int nodes() const { return N + 1; }
  bool operator==(const TimeGrid&) const = default;
};

/// Trapezoidal quadrature weights on the grid nodes.
Vec trapezoid_weights(const TimeGrid& grid);

struct GridSpec {
  int nx = 2;
  int ny = 0;  // only used in 2D
  double lx = 1.0;
  double ly = 1.0;
};

/// P1 finite element space with homogeneous Dirichlet DOFs removed.
///
/// Global DOFs are numbered node-major (node * components + c).  Element
/// matrices are stored densely in the same local order, and are unit
/// coefficient versions of the bilinear forms used by the operator maps.
struct Discretization {
  ProblemKind kind = ProblemKind::kWave1d;
  int dim = 1;
  int components = 1;
  GridSpec spec;
  std::vector<std::array<double, 2>> nodes;
  int nodes_per_element = 2;
  std::vector<std::array<int, 3>> elements;
  std::vector<int> dof_map;    // global dof -> free index, -1 on the boundary
  std::vector<int> free_dofs;  // free index -> global dof
  std::vector<bool> boundary_node;

  SpMat M;    // H inner product
  SpMat K_V;  // V inner product

  std::vector<double> element_measure;
  std::vector<Mat> elem_mass;       // (phi_a, phi_b), vector-valued for elastic
  std::vector<Mat> elem_stiffness;  // (grad phi_a, grad phi_b)
  std::vector<Mat> elem_strain;     // (eps(phi_a), eps(phi_b)), elastic only
  std::vector<Mat> elem_div;        // (div phi_a, div phi_b), elastic only

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_free() const { return static_cast<int>(free_dofs.size()); }
  int local_dofs() const { return nodes_per_element * components; }

  /// Free indices of the local DOFs of element e (-1 for constrained DOFs).
  std::vector<int> element_free_dofs(int e) const;

  /// Per-node measure (row sums of the scalar mass matrix including boundary nodes).
  Vec node_measure() const;

  /// Scatter a free-DOF vector onto all global DOFs (zeros on the boundary).
  Vec expand(const Vec& free_values) const;
};

Discretization build_grid(ProblemKind kind, const GridSpec& spec);

/// Scalar coefficient sampled on time nodes x spatial nodes.
struct ParameterField {
  TimeGrid grid;
  Mat values;  // (N+1) x num_nodes

  static ParameterField constant(const TimeGrid& grid, int num_nodes, double value);
  int num_spatial() const { return static_cast<int>(values.cols()); }
};

/// A parameter tuple of one problem.  Also used for directions h.
struct ParameterPoint {
  ProblemKind problem = ProblemKind::kWave1d;
  TimeGrid grid;
  std::map<std::string, ParameterField> fields;

  const ParameterField& field(const std::string& name) const;
  ParameterField& field(const std::string& name);

  static ParameterPoint constant(ProblemKind problem, const TimeGrid& grid, int num_nodes,
                                 const std::map<std::string, double>& values);
  ParameterPoint zeros_like() const;

  void add_scaled(const ParameterPoint& other, double s);
  ParameterPoint plus_scaled(const ParameterPoint& other, double s) const;
  double dot(const ParameterPoint& other) const;
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Pointwise lower/upper bounds describing the admissible set D(P).
struct AdmissibleBounds {
  double eps_hat = 1e-8;
  // wave1d
  double a0 = 0.1;
  double c0 = 0.1;
  // elastic2d
  double rho0 = 0.1;
  double alpha0 = 10.0;
  double elastic_mu_min = 0.0;
  // maxwell1d
  double mu0 = 0.1;
  double mu1 = 10.0;
  double eps0 = 0.1;
};

/// Throws kConstraintViolation naming the bound, field, time node and spatial node.
void check_admissible(const ParameterPoint& point, const AdmissibleBounds& bounds);

/// Pointwise projection onto the admissible box (with eps_hat slack).
void project_admissible(ParameterPoint& point, const AdmissibleBounds& bounds);

enum class Slot { kA, kB, kC, kQ };

/// Operator quadruple sampled on the time nodes, restricted to free DOFs.
struct OperatorTimeline {
  TimeGrid grid;
  int ndof = 0;
  std::vector<SpMat> A, B, C, Q;
  std::vector<SpMat> dA, dB, dC, dQ;
  bool has_B = false;
  bool has_Q = false;

  const std::vector<SpMat>& slot(Slot s) const;
  SpMat K(int n) const { return has_Q ? SpMat(A[n] + Q[n]) : A[n]; }
};

/// Central differences of operator samples in time, one-sided at both ends.
std::vector<SpMat> time_derivative(const std::vector<SpMat>& samples, double dt);

OperatorTimeline assemble_operators(const Discretization& disc, const ParameterPoint& point,
                                    const AdmissibleBounds& bounds = {});

/// Operator quadruple of the derivative of P at `point` in direction h.
OperatorTimeline assemble_direction(const Discretization& disc, const ParameterPoint& point,
                                    const ParameterPoint& h);

/// Transpose of assemble_direction restricted to one slot at one time node:
/// adds  weight * d/dh [ left^T Xbar_n(h) right ]  into `grad` (node-wise dual).
void accumulate_direction_adjoint(const Discretization& disc, const ParameterPoint& point,
                                  Slot slot, int n, double weight, const Vec& left,
                                  const Vec& right, ParameterPoint& grad);

struct CoercivityReport {
  std::vector<double> margin_A;
  std::vector<double> margin_C;
  double min_A = 0.0;
  double min_C = 0.0;
  bool interior = false;  // min_A > a0 + eps_hat and min_C > c0 + eps_hat
};

CoercivityReport check_coercivity(const OperatorTimeline& timeline, const Discretization& disc,
                                  double a0, double c0, double eps_hat = 1e-8);

/// Smallest generalized eigenvalue of the symmetric pencil (G, gram).
double generalized_min_eigenvalue(const SpMat& G, const SpMat& gram);

/// Discrete W^{k+1,inf} surrogate: max over difference orders 0..k+1 of the
/// max-abs of repeated central time differences.
double parameter_norm(const ParameterField& field, int k);

/// Repeated central difference in time of the rows of `values` (one-sided at the ends).
Mat time_difference(const Mat& values, double dt);

}  // namespace hyperinv
