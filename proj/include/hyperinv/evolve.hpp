#pragma once

// Time integration of (C u')' + B u' + (A+Q) u = f on the first-order form
// m = C u' with the implicit midpoint rule, and of the adjoint equation.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hyperinv/galerkin.hpp"

namespace hyperinv {

/// Load vectors <f(t_n), phi_i> on the free DOFs; rows are time nodes.
struct SourceTerm {
  Mat values;

  static SourceTerm zeros(const TimeGrid& grid, int ndof) {
    return SourceTerm{Mat::Zero(grid.nodes(), ndof)};
  }
};

/// Rows are time nodes, columns free DOFs.
struct Trajectory {
  TimeGrid grid;
  Mat u;
  Mat du;
  Mat ddu;             // empty unless has_ddu
  Mat half_velocity;   // N rows: (u_{n+1} - u_n) / dt
  bool has_ddu = false;
  std::string mode = "forward";

  int ndof() const { return static_cast<int>(u.cols()); }
  Vec u_at(int n) const { return u.row(n).transpose(); }
  Vec du_at(int n) const { return du.row(n).transpose(); }
};

/// Per-step midpoint matrices and their factorizations for one timeline.
/// Step n couples nodes n and n+1 with operators averaged at the half node:
///   S_n = C_h + dt/2 B_h + dt^2/4 K_h,  K = A + Q.
class MidpointCache {
 public:
  explicit MidpointCache(const OperatorTimeline& timeline);

  const TimeGrid& grid() const { return grid_; }
  int ndof() const { return ndof_; }
  int steps() const { return grid_.N; }

  const SpMat& C_half(int n) const { return C_half_[n]; }
  const SpMat& K_half(int n) const { return K_half_[n]; }

  Vec solve_step(int n, const Vec& rhs) const;
  Vec solve_step_transpose(int n, const Vec& rhs) const;
  /// Solve with C(t_n).
  Vec solve_mass(int n, const Vec& rhs) const;

 private:
  TimeGrid grid_;
  int ndof_ = 0;
  std::vector<SpMat> C_half_, K_half_;
  // LDLT when the step matrix is symmetric, LU otherwise; consecutive equal
  // matrices share one factorization.
  struct StepFactor {
    std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt;
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  };
  std::vector<std::shared_ptr<const StepFactor>> step_;
  std::vector<std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>>> mass_ldlt_;
};

struct MidpointResult {
  Mat u;     // N+1 rows
  Mat m;     // N+1 rows, m = C u'
  Mat vbar;  // N rows
};

/// Midpoint recursion with per-step source F (N rows) and momentum offset G
/// (N rows, may be empty):  S_n vbar = m_n - G_n + dt/2 F_n - dt/2 K_h u_n,
/// u_{n+1} = u_n + dt vbar,  m_{n+1} = 2 (C_h vbar + G_n) - m_n.
MidpointResult integrate_midpoint(const MidpointCache& cache, const Vec& u0, const Vec& m0,
                                  const Mat& half_source, const Mat& offset);

struct MidpointAdjoint {
  Mat source;  // N rows, adjoint of half_source
  Mat offset;  // N rows, adjoint of offset
};

/// Exact transpose of integrate_midpoint (zero initial data) for the linear
/// functional sum_n r_n . u_n.
MidpointAdjoint transpose_midpoint(const MidpointCache& cache, const Mat& r);

Trajectory solve_forward(const OperatorTimeline& timeline, const SourceTerm& f, const Vec& u0,
                         const Vec& u1);
Trajectory solve_forward(const OperatorTimeline& timeline, const MidpointCache& cache,
                         const SourceTerm& f, const Vec& u0, const Vec& u1);

/// Solves (Cw')' - B^T w' + (A + Q^T - (B^T)') w = v with w(T) = (Cw')(T) = 0.
Trajectory solve_backward(const OperatorTimeline& timeline, const SourceTerm& v);

/// Timeline of the adjoint equation after the substitution t -> T - t.
OperatorTimeline reversed_adjoint_timeline(const OperatorTimeline& timeline);

struct CompatibilityReport {
  bool pass = true;
  int k = 0;
  std::vector<std::string> failures;
  std::vector<double> traces;  // max-abs of f^{(j)}(0), j = 0..k-2
  std::optional<Vec> u2;       // k = 2 with a timeline
};

CompatibilityReport compatibility_check(const SourceTerm& f, const Vec& u0, const Vec& u1, int k,
                                        const TimeGrid& grid,
                                        const OperatorTimeline* timeline = nullptr);

struct EnergyReport {
  std::vector<double> energy;
  double lambda_hat = 0.0;      // max E / ||f||^2 (0 when f = 0)
  double max_rel_increase = 0;  // max_n (E_{n+1} - E_n) / E_n
  bool nonincreasing = true;
  bool conserved = true;        // every relative step change <= 1e-10
};

EnergyReport energy_monitor(const Trajectory& traj, const OperatorTimeline& timeline,
                            const SourceTerm* f = nullptr);

/// Discrete Y^(k) norm, k in {0, 1}.
double y_norm(const Trajectory& traj, const Discretization& disc, int k);

}  // namespace hyperinv
