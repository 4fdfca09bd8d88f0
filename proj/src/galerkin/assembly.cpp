#include <algorithm>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hyperinv/galerkin.hpp"

namespace hyperinv {

namespace {

// One coefficient-weighted bilinear form contributing to an operator slot.
struct CoefficientForm {
  Slot slot;
  const char* field;
  bool reciprocal;  // coefficient enters as 1/p
  double factor;
  const std::vector<Mat>* element_matrices;

  double value(double p) const { return reciprocal ? 1.0 / p : p; }
  double derivative(double p) const { return reciprocal ? -1.0 / (p * p) : 1.0; }
};

std::vector<CoefficientForm> coefficient_forms(const Discretization& d) {
  switch (d.kind) {
    case ProblemKind::kWave1d:
      return {{Slot::kA, "a", false, 1.0, &d.elem_stiffness},
              {Slot::kB, "b", false, 1.0, &d.elem_mass},
              {Slot::kC, "rho", false, 1.0, &d.elem_mass},
              {Slot::kQ, "q", false, 1.0, &d.elem_mass}};
    case ProblemKind::kElastic2d:
      return {{Slot::kA, "lambda", false, 1.0, &d.elem_div},
              {Slot::kA, "mu", false, 2.0, &d.elem_strain},
              {Slot::kC, "rho", false, 1.0, &d.elem_mass}};
    case ProblemKind::kMaxwell1d:
      return {{Slot::kA, "mu", true, 1.0, &d.elem_stiffness},
              {Slot::kC, "eps", false, 1.0, &d.elem_mass}};
  }
  return {};
}

// Fixed sparsity pattern of all element matrices with a scatter map from
// (element, local a, local b) to the value array of the compressed matrix.
class PatternAssembler {
 public:
  explicit PatternAssembler(const Discretization& disc) : disc_(disc) {
    const int nl = disc.local_dofs();
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < disc.num_elements(); ++e) {
      const auto dofs = disc.element_free_dofs(e);
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b)
          if (dofs[a] >= 0 && dofs[b] >= 0) trip.emplace_back(dofs[a], dofs[b], 1.0);
    }
    pattern_.resize(disc.num_free(), disc.num_free());
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();
    scatter_.assign(static_cast<size_t>(disc.num_elements()) * nl * nl, -1);
    for (int e = 0; e < disc.num_elements(); ++e) {
      const auto dofs = disc.element_free_dofs(e);
      for (int a = 0; a < nl; ++a) {
        for (int b = 0; b < nl; ++b) {
          if (dofs[a] < 0 || dofs[b] < 0) continue;
          const int col = dofs[b];
          const int* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col];
          const int* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col + 1];
          const int* it = std::lower_bound(begin, end, dofs[a]);
          scatter_[(static_cast<size_t>(e) * nl + a) * nl + b] =
              static_cast<int>(it - pattern_.innerIndexPtr());
        }
      }
    }
  }

  // Assemble sum_forms sum_e coef(form, e) * E_e over the forms of `slot`.
  template <typename CoefFn>
  SpMat assemble(const std::vector<CoefficientForm>& forms, Slot slot, CoefFn&& coef) const {
    SpMat out = pattern_;
    std::fill(out.valuePtr(), out.valuePtr() + out.nonZeros(), 0.0);
    const int nl = disc_.local_dofs();
    bool any = false;
    for (const auto& form : forms) {
      if (form.slot != slot) continue;
      any = true;
      for (int e = 0; e < disc_.num_elements(); ++e) {
        const double c = coef(form, e);
        if (c == 0.0) continue;
        const Mat& E = (*form.element_matrices)[e];
        for (int a = 0; a < nl; ++a) {
          for (int b = 0; b < nl; ++b) {
            const int idx = scatter_[(static_cast<size_t>(e) * nl + a) * nl + b];
            if (idx >= 0) out.valuePtr()[idx] += c * E(a, b);
          }
        }
      }
    }
    if (!any) return SpMat(disc_.num_free(), disc_.num_free());
    return out;
  }

 private:
  const Discretization& disc_;
  SpMat pattern_;
  std::vector<int> scatter_;
};

bool slot_present(const std::vector<CoefficientForm>& forms, Slot slot) {
  return std::any_of(forms.begin(), forms.end(), [slot](const auto& f) { return f.slot == slot; });
}

void check_layout(const Discretization& disc, const ParameterPoint& point, const char* what) {
  if (point.problem != disc.kind) {
    throw Error(ErrorCode::kDirectionShape, std::string(what) + ": problem kind mismatch");
  }
  for (const auto& name : field_names(point.problem)) {
    const auto& f = point.field(name);
    if (f.values.rows() != point.grid.nodes() || f.values.cols() != disc.num_nodes()) {
      std::ostringstream os;
      os << what << ": field '" << name << "' has shape " << f.values.rows() << "x"
         << f.values.cols() << ", expected " << point.grid.nodes() << "x" << disc.num_nodes();
      throw Error(ErrorCode::kDirectionShape, os.str());
    }
  }
}

void fill_derivatives(OperatorTimeline& tl) {
  const double dt = tl.grid.dt();
  tl.dA = time_derivative(tl.A, dt);
  tl.dB = time_derivative(tl.B, dt);
  tl.dC = time_derivative(tl.C, dt);
  tl.dQ = time_derivative(tl.Q, dt);
}

}  // namespace

const std::vector<SpMat>& OperatorTimeline::slot(Slot s) const {
  switch (s) {
    case Slot::kA: return A;
    case Slot::kB: return B;
    case Slot::kC: return C;
    case Slot::kQ: return Q;
  }
  return A;
}

std::vector<SpMat> time_derivative(const std::vector<SpMat>& samples, double dt) {
  const int nodes = static_cast<int>(samples.size());
  std::vector<SpMat> out(nodes);
  if (nodes < 2) {
    for (int n = 0; n < nodes; ++n) out[n] = SpMat(samples[n].rows(), samples[n].cols());
    return out;
  }
  for (int n = 0; n < nodes; ++n) {
    if (n == 0) {
      out[n] = (samples[1] - samples[0]) / dt;
    } else if (n == nodes - 1) {
      out[n] = (samples[n] - samples[n - 1]) / dt;
    } else {
      out[n] = (samples[n + 1] - samples[n - 1]) / (2.0 * dt);
    }
  }
  return out;
}

OperatorTimeline assemble_operators(const Discretization& disc, const ParameterPoint& point,
                                    const AdmissibleBounds& bounds) {
  check_layout(disc, point, "assemble_operators");
  check_admissible(point, bounds);
  const auto forms = coefficient_forms(disc);
  const PatternAssembler assembler(disc);
  const int nn = disc.nodes_per_element;

  OperatorTimeline tl;
  tl.grid = point.grid;
  tl.ndof = disc.num_free();
  tl.has_B = slot_present(forms, Slot::kB);
  tl.has_Q = slot_present(forms, Slot::kQ);
  for (int n = 0; n < point.grid.nodes(); ++n) {
    auto coef = [&](const CoefficientForm& form, int e) {
      const auto& v = point.field(form.field).values;
      double sum = 0.0;
      for (int a = 0; a < nn; ++a) sum += form.value(v(n, disc.elements[e][a]));
      return form.factor * sum / nn;
    };
    tl.A.push_back(assembler.assemble(forms, Slot::kA, coef));
    tl.B.push_back(assembler.assemble(forms, Slot::kB, coef));
    tl.C.push_back(assembler.assemble(forms, Slot::kC, coef));
    tl.Q.push_back(assembler.assemble(forms, Slot::kQ, coef));
  }
  fill_derivatives(tl);
  return tl;
}

OperatorTimeline assemble_direction(const Discretization& disc, const ParameterPoint& point,
                                    const ParameterPoint& h) {
  check_layout(disc, point, "assemble_direction(point)");
  if (!(h.grid == point.grid)) {
    throw Error(ErrorCode::kDirectionShape, "direction time grid differs from the point's");
  }
  check_layout(disc, h, "assemble_direction(h)");
  const auto forms = coefficient_forms(disc);
  const PatternAssembler assembler(disc);
  const int nn = disc.nodes_per_element;

  OperatorTimeline tl;
  tl.grid = point.grid;
  tl.ndof = disc.num_free();
  tl.has_B = slot_present(forms, Slot::kB);
  tl.has_Q = slot_present(forms, Slot::kQ);
  for (int n = 0; n < point.grid.nodes(); ++n) {
    auto coef = [&](const CoefficientForm& form, int e) {
      const auto& p = point.field(form.field).values;
      const auto& dp = h.field(form.field).values;
      double sum = 0.0;
      for (int a = 0; a < nn; ++a) {
        const int i = disc.elements[e][a];
        sum += form.derivative(p(n, i)) * dp(n, i);
      }
      return form.factor * sum / nn;
    };
    tl.A.push_back(assembler.assemble(forms, Slot::kA, coef));
    tl.B.push_back(assembler.assemble(forms, Slot::kB, coef));
    tl.C.push_back(assembler.assemble(forms, Slot::kC, coef));
    tl.Q.push_back(assembler.assemble(forms, Slot::kQ, coef));
  }
  fill_derivatives(tl);
  return tl;
}

void accumulate_direction_adjoint(const Discretization& disc, const ParameterPoint& point,
                                  Slot slot, int n, double weight, const Vec& left,
                                  const Vec& right, ParameterPoint& grad) {
  const int nn = disc.nodes_per_element;
  const int nl = disc.local_dofs();
  Vec le(nl), re(nl);
  for (const auto& form : coefficient_forms(disc)) {
    if (form.slot != slot) continue;
    const auto& p = point.field(form.field).values;
    auto& g = grad.field(form.field).values;
    for (int e = 0; e < disc.num_elements(); ++e) {
      const auto dofs = disc.element_free_dofs(e);
      bool any = false;
      for (int a = 0; a < nl; ++a) {
        le(a) = dofs[a] >= 0 ? left(dofs[a]) : 0.0;
        re(a) = dofs[a] >= 0 ? right(dofs[a]) : 0.0;
        any = any || dofs[a] >= 0;
      }
      if (!any) continue;
      const double val = weight * form.factor * le.dot((*form.element_matrices)[e] * re) / nn;
      if (val == 0.0) continue;
      for (int a = 0; a < nn; ++a) {
        const int i = disc.elements[e][a];
        g(n, i) += val * form.derivative(p(n, i));
      }
    }
  }
}

double generalized_min_eigenvalue(const SpMat& G, const SpMat& gram) {
  const Mat g = Mat(G);
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::kSymmetryViolation, "operator sample is not symmetric");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(g, Mat(gram), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kSpectral, "generalized eigensolver failed");
  }
  return es.eigenvalues().minCoeff();
}

CoercivityReport check_coercivity(const OperatorTimeline& timeline, const Discretization& disc,
                                  double a0, double c0, double eps_hat) {
  CoercivityReport rep;
  for (int n = 0; n < timeline.grid.nodes(); ++n) {
    rep.margin_A.push_back(generalized_min_eigenvalue(timeline.A[n], disc.K_V));
    rep.margin_C.push_back(generalized_min_eigenvalue(timeline.C[n], disc.M));
  }
  rep.min_A = *std::min_element(rep.margin_A.begin(), rep.margin_A.end());
  rep.min_C = *std::min_element(rep.margin_C.begin(), rep.margin_C.end());
  rep.interior = rep.min_A > a0 + eps_hat && rep.min_C > c0 + eps_hat;
  return rep;
}

Mat time_difference(const Mat& values, double dt) {
  const int nodes = static_cast<int>(values.rows());
  Mat out(values.rows(), values.cols());
  for (int n = 0; n < nodes; ++n) {
    if (n == 0) {
      out.row(n) = (values.row(1) - values.row(0)) / dt;
    } else if (n == nodes - 1) {
      out.row(n) = (values.row(n) - values.row(n - 1)) / dt;
    } else {
      out.row(n) = (values.row(n + 1) - values.row(n - 1)) / (2.0 * dt);
    }
  }
  return out;
}

double parameter_norm(const ParameterField& field, int k) {
  if (k < 0 || k + 1 > field.grid.N) {
    throw Error(ErrorCode::kResolution, "parameter_norm needs k+1 <= N (k=" + std::to_string(k) +
                                            ", N=" + std::to_string(field.grid.N) + ")");
  }
  Mat d = field.values;
  double best = d.cwiseAbs().maxCoeff();
  for (int order = 1; order <= k + 1; ++order) {
    d = time_difference(d, field.grid.dt());
    best = std::max(best, d.cwiseAbs().maxCoeff());
  }
  return best;
}

}  // namespace hyperinv
