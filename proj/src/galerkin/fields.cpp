#include <algorithm>
#include <limits>
#include <utility>
#include <sstream>

#include "hyperinv/galerkin.hpp"

namespace hyperinv {

const std::vector<std::string>& field_names(ProblemKind kind) {
  static const std::vector<std::string> wave{"a", "b", "q", "rho"};
  static const std::vector<std::string> elastic{"lambda", "mu", "rho"};
  static const std::vector<std::string> maxwell{"eps", "mu"};
  switch (kind) {
    case ProblemKind::kWave1d: return wave;
    case ProblemKind::kElastic2d: return elastic;
    case ProblemKind::kMaxwell1d: return maxwell;
  }
  return wave;
}

ParameterField ParameterField::constant(const TimeGrid& grid, int num_nodes, double value) {
  return ParameterField{grid, Mat::Constant(grid.nodes(), num_nodes, value)};
}

const ParameterField& ParameterPoint::field(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) {
    throw Error(ErrorCode::kDirectionShape,
                "field '" + name + "' missing for " + std::string(to_string(problem)));
  }
  return it->second;
}

ParameterField& ParameterPoint::field(const std::string& name) {
  return const_cast<ParameterField&>(std::as_const(*this).field(name));
}

ParameterPoint ParameterPoint::constant(ProblemKind problem, const TimeGrid& grid, int num_nodes,
                                        const std::map<std::string, double>& values) {
  ParameterPoint p;
  p.problem = problem;
  p.grid = grid;
  for (const auto& name : field_names(problem)) {
    auto it = values.find(name);
    const double v = it == values.end() ? 0.0 : it->second;
    p.fields.emplace(name, ParameterField::constant(grid, num_nodes, v));
  }
  return p;
}

ParameterPoint ParameterPoint::zeros_like() const {
  ParameterPoint z = *this;
  for (auto& [name, f] : z.fields) f.values.setZero();
  return z;
}

void ParameterPoint::add_scaled(const ParameterPoint& other, double s) {
  for (auto& [name, f] : fields) {
    const auto& o = other.field(name);
    if (o.values.rows() != f.values.rows() || o.values.cols() != f.values.cols()) {
      throw Error(ErrorCode::kDirectionShape, "shape mismatch in field '" + name + "'");
    }
    f.values += s * o.values;
  }
}

ParameterPoint ParameterPoint::plus_scaled(const ParameterPoint& other, double s) const {
  ParameterPoint out = *this;
  out.add_scaled(other, s);
  return out;
}

double ParameterPoint::dot(const ParameterPoint& other) const {
  double sum = 0.0;
  for (const auto& [name, f] : fields) {
    const auto& o = other.field(name);
    if (o.values.rows() != f.values.rows() || o.values.cols() != f.values.cols()) {
      throw Error(ErrorCode::kDirectionShape, "shape mismatch in field '" + name + "'");
    }
    sum += f.values.cwiseProduct(o.values).sum();
  }
  return sum;
}

namespace {

[[noreturn]] void violation(const std::string& bound, const std::string& field, int n, int i,
                            double value) {
  std::ostringstream os;
  os << "bound " << bound << " violated by field '" << field << "' at time node " << n
     << ", spatial node " << i << " (value " << value << ")";
  throw Error(ErrorCode::kConstraintViolation, os.str());
}

void require_finite(const ParameterPoint& point) {
  for (const auto& [name, f] : point.fields) {
    for (int n = 0; n < f.values.rows(); ++n) {
      for (int i = 0; i < f.values.cols(); ++i) {
        if (!std::isfinite(f.values(n, i))) violation("finite", name, n, i, f.values(n, i));
      }
    }
  }
}

}  // namespace

void check_admissible(const ParameterPoint& point, const AdmissibleBounds& b) {
  require_finite(point);
  const double e = b.eps_hat;
  auto lower = [&](const std::string& name, double lo, const char* label) {
    const auto& v = point.field(name).values;
    for (int n = 0; n < v.rows(); ++n)
      for (int i = 0; i < v.cols(); ++i)
        if (!(v(n, i) >= lo + e)) violation(label, name, n, i, v(n, i));
  };
  auto upper = [&](const std::string& name, double hi, const char* label) {
    const auto& v = point.field(name).values;
    for (int n = 0; n < v.rows(); ++n)
      for (int i = 0; i < v.cols(); ++i)
        if (!(v(n, i) <= hi - e)) violation(label, name, n, i, v(n, i));
  };
  switch (point.problem) {
    case ProblemKind::kWave1d:
      lower("a", b.a0, "a >= a0 + eps");
      lower("rho", b.c0, "rho >= c0 + eps");
      break;
    case ProblemKind::kElastic2d: {
      lower("rho", b.rho0, "rho >= rho0 + eps");
      upper("mu", b.alpha0, "mu <= alpha0 - eps");
      lower("mu", b.elastic_mu_min, "mu >= mu_min + eps");
      const auto& lam = point.field("lambda").values;
      const auto& mu = point.field("mu").values;
      for (int n = 0; n < lam.rows(); ++n) {
        for (int i = 0; i < lam.cols(); ++i) {
          const double s = 2.0 * mu(n, i) + 3.0 * lam(n, i);
          if (!(s >= 1.0 / b.alpha0 + e)) violation("2mu+3lambda >= 1/alpha0 + eps", "lambda", n, i, s);
          if (!(s <= b.alpha0 - e)) violation("2mu+3lambda <= alpha0 - eps", "lambda", n, i, s);
        }
      }
      break;
    }
    case ProblemKind::kMaxwell1d:
      lower("mu", b.mu0, "mu >= mu0 + eps");
      upper("mu", b.mu1, "mu <= mu1 - eps");
      lower("eps", b.eps0, "eps >= eps0 + eps");
      break;
  }
}

void project_admissible(ParameterPoint& point, const AdmissibleBounds& b) {
  // twice the slack so that the projected point passes the strict check
  const double e = 2.0 * b.eps_hat;
  auto clamp_field = [](Mat& v, double lo, double hi) {
    v = v.cwiseMax(lo).cwiseMin(hi);
  };
  const double inf = std::numeric_limits<double>::infinity();
  switch (point.problem) {
    case ProblemKind::kWave1d:
      clamp_field(point.field("a").values, b.a0 + e, inf);
      clamp_field(point.field("rho").values, b.c0 + e, inf);
      break;
    case ProblemKind::kElastic2d: {
      clamp_field(point.field("rho").values, b.rho0 + e, inf);
      auto& mu = point.field("mu").values;
      auto& lam = point.field("lambda").values;
      clamp_field(mu, b.elastic_mu_min + e, b.alpha0 - e);
      for (int n = 0; n < lam.rows(); ++n) {
        for (int i = 0; i < lam.cols(); ++i) {
          const double lo = (1.0 / b.alpha0 + e - 2.0 * mu(n, i)) / 3.0;
          const double hi = (b.alpha0 - e - 2.0 * mu(n, i)) / 3.0;
          lam(n, i) = std::clamp(lam(n, i), lo, hi);
        }
      }
      break;
    }
    case ProblemKind::kMaxwell1d:
      clamp_field(point.field("mu").values, b.mu0 + e, b.mu1 - e);
      clamp_field(point.field("eps").values, b.eps0 + e, inf);
      break;
  }
}

}  // namespace hyperinv
