#include <algorithm>
#include <string>

#include "hyperinv/galerkin.hpp"

namespace hyperinv {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidMesh: return "invalid-mesh";
    case ErrorCode::kConstraintViolation: return "constraint-violation";
    case ErrorCode::kDirectionShape: return "direction-shape";
    case ErrorCode::kSymmetryViolation: return "symmetry-violation";
    case ErrorCode::kResolution: return "resolution";
    case ErrorCode::kSolverFailure: return "solver-failure";
    case ErrorCode::kInsufficientRegularity: return "insufficient-regularity";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kObservationSpec: return "observation-spec";
    case ErrorCode::kSpecMismatch: return "spec-mismatch";
    case ErrorCode::kUnsupportedObservation: return "unsupported-observation";
    case ErrorCode::kRequiresForwardSolve: return "requires-forward-solve";
    case ErrorCode::kDegenerateTest: return "degenerate-test";
    case ErrorCode::kSpectral: return "spectral";
    case ErrorCode::kSlack: return "slack";
    case ErrorCode::kTooLarge: return "too-large";
    case ErrorCode::kStepSize: return "step-size";
    case ErrorCode::kCgBreakdown: return "cg-breakdown";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "wave1d") return ProblemKind::kWave1d;
  if (name == "elastic2d") return ProblemKind::kElastic2d;
  if (name == "maxwell1d") return ProblemKind::kMaxwell1d;
  throw Error(ErrorCode::kConfig, "unknown problem kind '" + std::string(name) + "'");
}

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kWave1d: return "wave1d";
    case ProblemKind::kElastic2d: return "elastic2d";
    case ProblemKind::kMaxwell1d: return "maxwell1d";
  }
  return "unknown";
}

Vec trapezoid_weights(const TimeGrid& grid) {
  Vec w = Vec::Constant(grid.nodes(), grid.dt());
  w(0) *= 0.5;
  w(grid.N) *= 0.5;
  return w;
}

std::vector<int> Discretization::element_free_dofs(int e) const {
  std::vector<int> out;
  out.reserve(local_dofs());
  for (int a = 0; a < nodes_per_element; ++a) {
    for (int c = 0; c < components; ++c) {
      out.push_back(dof_map[elements[e][a] * components + c]);
    }
  }
  return out;
}

Vec Discretization::node_measure() const {
  Vec m = Vec::Zero(num_nodes());
  for (int e = 0; e < num_elements(); ++e) {
    for (int a = 0; a < nodes_per_element; ++a) {
      m(elements[e][a]) += element_measure[e] / nodes_per_element;
    }
  }
  return m;
}

Vec Discretization::expand(const Vec& free_values) const {
  Vec out = Vec::Zero(num_nodes() * components);
  for (int i = 0; i < num_free(); ++i) out(free_dofs[i]) = free_values(i);
  return out;
}

namespace {

SpMat assemble_global(const Discretization& disc, const std::vector<Mat>& local) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(disc.num_elements() * disc.local_dofs() * disc.local_dofs());
  for (int e = 0; e < disc.num_elements(); ++e) {
    const auto dofs = disc.element_free_dofs(e);
    for (int a = 0; a < disc.local_dofs(); ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < disc.local_dofs(); ++b) {
        if (dofs[b] < 0) continue;
        trip.emplace_back(dofs[a], dofs[b], local[e](a, b));
      }
    }
  }
  SpMat out(disc.num_free(), disc.num_free());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

void finish_dofs(Discretization& disc) {
  const int total = disc.num_nodes() * disc.components;
  disc.dof_map.assign(total, -1);
  disc.free_dofs.clear();
  for (int node = 0; node < disc.num_nodes(); ++node) {
    if (disc.boundary_node[node]) continue;
    for (int c = 0; c < disc.components; ++c) {
      const int g = node * disc.components + c;
      disc.dof_map[g] = static_cast<int>(disc.free_dofs.size());
      disc.free_dofs.push_back(g);
    }
  }
}

Discretization build_interval(ProblemKind kind, const GridSpec& spec) {
  Discretization disc;
  disc.kind = kind;
  disc.dim = 1;
  disc.components = 1;
  disc.spec = spec;
  disc.nodes_per_element = 2;
  const int n = spec.nx;
  const double h = spec.lx / n;
  for (int i = 0; i <= n; ++i) {
    disc.nodes.push_back({spec.lx * i / n, 0.0});
    disc.boundary_node.push_back(i == 0 || i == n);
  }
  Mat mass(2, 2), stiff(2, 2);
  mass << 2.0, 1.0, 1.0, 2.0;
  mass *= h / 6.0;
  stiff << 1.0, -1.0, -1.0, 1.0;
  stiff /= h;
  for (int i = 0; i < n; ++i) {
    disc.elements.push_back({i, i + 1, -1});
    disc.element_measure.push_back(h);
    disc.elem_mass.push_back(mass);
    disc.elem_stiffness.push_back(stiff);
  }
  finish_dofs(disc);
  disc.M = assemble_global(disc, disc.elem_mass);
  disc.K_V = assemble_global(disc, disc.elem_stiffness);
  return disc;
}

Discretization build_triangles(ProblemKind kind, const GridSpec& spec) {
  Discretization disc;
  disc.kind = kind;
  disc.dim = 2;
  disc.components = 2;
  disc.spec = spec;
  disc.nodes_per_element = 3;
  const int nx = spec.nx, ny = spec.ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      disc.nodes.push_back({spec.lx * i / nx, spec.ly * j / ny});
      disc.boundary_node.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      disc.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      disc.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }

  for (const auto& tri : disc.elements) {
    const auto& p0 = disc.nodes[tri[0]];
    const auto& p1 = disc.nodes[tri[1]];
    const auto& p2 = disc.nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double area = 0.5 * std::abs(det);
    // gradients of the barycentric coordinates
    Eigen::Matrix<double, 3, 2> grad;
    grad << p1[1] - p2[1], p2[0] - p1[0],
            p2[1] - p0[1], p0[0] - p2[0],
            p0[1] - p1[1], p1[0] - p0[0];
    grad /= det;

    Mat mass = Mat::Zero(6, 6), stiff = Mat::Zero(6, 6);
    Mat strain = Mat::Zero(6, 6), div = Mat::Zero(6, 6);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double m_ab = area / 12.0 * (a == b ? 2.0 : 1.0);
        const double g_ab = area * grad.row(a).dot(grad.row(b));
        for (int c = 0; c < 2; ++c) {
          for (int d = 0; d < 2; ++d) {
            const int ia = 2 * a + c, ib = 2 * b + d;
            if (c == d) {
              mass(ia, ib) = m_ab;
              stiff(ia, ib) = g_ab;
            }
            strain(ia, ib) = area * 0.5 * ((c == d ? grad.row(a).dot(grad.row(b)) : 0.0) +
                                           grad(a, d) * grad(b, c));
            div(ia, ib) = area * grad(a, c) * grad(b, d);
          }
        }
      }
    }
    disc.element_measure.push_back(area);
    disc.elem_mass.push_back(mass);
    disc.elem_stiffness.push_back(stiff);
    disc.elem_strain.push_back(strain);
    disc.elem_div.push_back(div);
  }
  finish_dofs(disc);
  disc.M = assemble_global(disc, disc.elem_mass);
  // full H1 inner product for the vector-valued space
  disc.K_V = SpMat(assemble_global(disc, disc.elem_stiffness) + disc.M);
  return disc;
}

}  // namespace

Discretization build_grid(ProblemKind kind, const GridSpec& spec) {
  if (spec.lx <= 0.0 || (kind == ProblemKind::kElastic2d && spec.ly <= 0.0)) {
    throw Error(ErrorCode::kInvalidMesh, "domain extent must be positive");
  }
  if (kind == ProblemKind::kElastic2d) {
    if (spec.nx < 2 || spec.ny < 2) {
      throw Error(ErrorCode::kInvalidMesh, "need at least 2x2 cells, got " +
                                               std::to_string(spec.nx) + "x" +
                                               std::to_string(spec.ny));
    }
    return build_triangles(kind, spec);
  }
  if (spec.nx < 2) {
    throw Error(ErrorCode::kInvalidMesh,
                "need at least 2 elements, got " + std::to_string(spec.nx));
  }
  return build_interval(kind, spec);
}

}  // namespace hyperinv
