#include "bpi/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bpi/errors.hpp"
#include "bpi/quadrature.hpp"

namespace bpi {

namespace {

constexpr double kInnerTol = 1e-9;
constexpr double kOuterTol = 1e-8;
constexpr double kZeroStep = 1e-6;  // one-sided step for f(r)/r at r = 0

}  // namespace

InteractionFunction InteractionFunction::logistic(double theta, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(theta) || !std::isfinite(gamma))
    throw std::invalid_argument("logistic interaction needs finite theta and gamma >= 0");
  InteractionFunction f;
  f.kind_ = InteractionKind::Logistic;
  f.theta_ = theta;
  f.gamma_ = gamma;
  f.beta_ = std::max(theta, 0.0);
  return f;
}

InteractionFunction InteractionFunction::linear(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("linear interaction needs finite theta");
  InteractionFunction f;
  f.kind_ = InteractionKind::Linear;
  f.theta_ = theta;
  f.beta_ = std::max(theta, 0.0);
  return f;
}

InteractionFunction InteractionFunction::custom(double step, std::vector<double> values, double beta) {
  if (!(step > 0.0)) throw std::invalid_argument("custom interaction needs a positive grid step");
  if (values.size() < 2) throw std::invalid_argument("custom interaction needs at least two table values");
  if (values.front() != 0.0) throw std::invalid_argument("custom interaction must satisfy f(0) = 0");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("custom interaction table has non-finite values");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  InteractionFunction f;
  f.kind_ = InteractionKind::Custom;
  f.mode_ = DerivativeMode::CentralDifference;
  f.h_ = step;
  f.table_step_ = step;
  f.table_ = std::move(values);
  f.beta_ = beta;
  return f;
}

InteractionFunction InteractionFunction::from_csv(const std::filesystem::path& path, double beta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction table " + path.string());
  std::vector<double> zs;
  std::vector<double> fs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double z = 0.0;
    double v = 0.0;
    if (!(row >> z >> v)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::runtime_error("malformed row in interaction table: " + line);
    }
    first = false;
    zs.push_back(z);
    fs.push_back(v);
  }
  if (zs.size() < 2) throw std::runtime_error("interaction table needs at least two rows");
  if (zs.front() != 0.0) throw std::runtime_error("interaction table must start at z = 0");
  const double step = zs[1] - zs[0];
  for (std::size_t i = 1; i < zs.size(); ++i) {
    if (std::fabs((zs[i] - zs[i - 1]) - step) > 1e-9 * step)
      throw std::runtime_error("interaction table grid is not uniform");
  }
  return custom(step, std::move(fs), beta);
}

InteractionFunction InteractionFunction::with_beta(double beta) const {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  InteractionFunction f = *this;
  f.beta_ = beta;
  return f;
}

InteractionFunction InteractionFunction::with_derivative(DerivativeMode mode, double h) const {
  if (mode == DerivativeMode::CentralDifference && !(h > 0.0))
    throw std::invalid_argument("central difference step must be positive");
  if (mode == DerivativeMode::Analytic && kind_ == InteractionKind::Custom)
    throw std::invalid_argument("custom tables have no analytic derivative");
  InteractionFunction f = *this;
  f.mode_ = mode;
  if (mode == DerivativeMode::CentralDifference) f.h_ = h;
  return f;
}

double InteractionFunction::domain_max() const {
  if (kind_ == InteractionKind::Custom) return table_step_ * static_cast<double>(table_.size() - 1);
  return std::numeric_limits<double>::infinity();
}

double InteractionFunction::operator()(double z) const {
  if (!(z >= 0.0)) throw std::domain_error("interaction evaluated at negative argument");
  switch (kind_) {
    case InteractionKind::Logistic:
      return theta_ * z - gamma_ * z * z;
    case InteractionKind::Linear:
      return theta_ * z;
    case InteractionKind::Custom: {
      if (z == 0.0) return 0.0;
      const double pos = z / table_step_;
      const auto last = table_.size() - 1;
      if (pos > static_cast<double>(last) * (1.0 + 1e-12))
        throw std::domain_error("interaction evaluated beyond its tabulated range");
      auto i = static_cast<std::size_t>(pos);
      if (i >= last) return table_[last];
      const double w = pos - static_cast<double>(i);
      return w == 0.0 ? table_[i] : table_[i] + w * (table_[i + 1] - table_[i]);
    }
  }
  return 0.0;
}

double InteractionFunction::derivative(double z) const {
  if (!(z >= 0.0)) throw std::domain_error("interaction derivative at negative argument");
  switch (mode_) {
    case DerivativeMode::None:
      throw DerivativeUnavailable("interaction has no derivative mode");
    case DerivativeMode::Analytic:
      return kind_ == InteractionKind::Logistic ? theta_ - 2.0 * gamma_ * z : theta_;
    case DerivativeMode::CentralDifference: {
      const double hi = domain_max();
      if (z < h_) return ((*this)(z + h_) - (*this)(z)) / h_;
      if (z + h_ > hi) return ((*this)(z) - (*this)(z - h_)) / h_;
      return ((*this)(z + h_) - (*this)(z - h_)) / (2.0 * h_);
    }
  }
  return 0.0;
}

std::string InteractionFunction::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case InteractionKind::Logistic:
      os << "logistic(theta=" << theta_ << ", gamma=" << gamma_ << ")";
      break;
    case InteractionKind::Linear:
      os << "linear(theta=" << theta_ << ")";
      break;
    case InteractionKind::Custom:
      os << "custom(step=" << table_step_ << ", points=" << table_.size() << ")";
      break;
  }
  return os.str();
}

HypothesisReport validate_hypotheses(const InteractionFunction& f, double grid_max, double grid_step) {
  HypothesisReport report;
  if (!(grid_max > 0.0) || !(grid_step > 0.0)) return report;
  const double top = std::min(grid_max, f.domain_max());
  const auto n = static_cast<std::size_t>(std::floor(top / grid_step * (1.0 + 1e-12))) + 1;
  std::vector<double> z(n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = static_cast<double>(i) * grid_step;
    v[i] = f(z[i]);
  }
  const double beta = f.beta();
  bool ok = v[0] == 0.0;
  double witness = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double y = z[j] - z[i];
      const double inc = v[j] - v[i];
      witness = std::max(witness, inc / y);
      const double tol = 1e-12 * std::max({1.0, std::fabs(v[j]) + std::fabs(v[i]), beta * y});
      if (inc > beta * y + tol) ok = false;
    }
  }
  report.a = ok;
  report.beta_witness = witness;

  if (f.has_derivative()) {
    bool b_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = f.derivative(z[i]);
      if (d > beta + 1e-12 * std::max(1.0, std::fabs(beta))) b_ok = false;
    }
    report.b = b_ok;
  }
  return report;
}

namespace {

double ratio(const InteractionFunction& f, double r) {
  if (r <= 0.0) return f(kZeroStep) / kZeroStep;
  return f(r) / r;
}

// Panels of unit width from 1 toward z; the running inner integral
// I(u) = int_1^u f(r)/r dr is carried across panel boundaries.
std::vector<double> panel_edges(double z) {
  std::vector<double> edges{1.0};
  if (z >= 1.0) {
    for (double e = 2.0; e < z; e += 1.0) edges.push_back(e);
  }
  if (z != 1.0) edges.push_back(z);
  return edges;
}

struct ScaleIntegral {
  double value = 0.0;    // int_1^z exp(-I(u)/2) du
  double log_density = 0.0;  // -I(z)/2
};

// Returns non-finite values instead of throwing on overflow.
ScaleIntegral integrate_scale(const InteractionFunction& f, double z, double outer_tol) {
  const auto edges = panel_edges(z);
  const double panel_tol = outer_tol / static_cast<double>(std::max<std::size_t>(1, edges.size() - 1));
  ScaleIntegral out;
  double inner_at_start = 0.0;
  auto rf = [&f](double r) { return ratio(f, r); };
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double u0 = edges[k];
    const double u1 = edges[k + 1];
    const double base = inner_at_start;
    auto density = [&](double u) {
      const double inner = base + adaptive_simpson(rf, u0, u, kInnerTol);
      return std::exp(-0.5 * inner);
    };
    out.value += adaptive_simpson(density, u0, u1, panel_tol);
    inner_at_start = base + adaptive_simpson(rf, u0, u1, kInnerTol);
  }
  out.log_density = -0.5 * inner_at_start;
  return out;
}

}  // namespace

double scale_function(const InteractionFunction& f, double z) {
  if (!(z >= 0.0)) throw std::domain_error("scale function needs z >= 0");
  if (z == 1.0) return 0.0;
  const auto s = integrate_scale(f, z, kOuterTol);
  if (!std::isfinite(s.value)) throw QuadratureError("scale function overflowed");
  return s.value;
}

double hitting_probability(const InteractionFunction& f, double x, double a, double b) {
  if (!(0.0 <= a && a < x && x < b)) throw std::domain_error("hitting probability needs 0 <= a < x < b");
  const double sa = scale_function(f, a);
  const double sx = scale_function(f, x);
  const double sb = scale_function(f, b);
  return std::clamp((sb - sx) / (sb - sa), 0.0, 1.0);
}

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical:
      return "Subcritical";
    case Criticality::Supercritical:
      return "Supercritical";
    case Criticality::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

ScaleReport classify(const InteractionFunction& f, double tail_limit, double tolerance) {
  ScaleReport report;
  report.quadrature_tolerance = tolerance;
  const double upper = std::min(std::max(tail_limit, 10.0), f.domain_max());
  report.upper_limit_used = upper;
  if (upper <= 2.0) {
    report.rule = "domain too short";
    return report;
  }

  // Pointwise tests on a grid over [1, upper]: find the smallest z0 beyond
  // which the condition holds at every grid point, and accept it only when
  // the certified tail covers at least the upper half of the range.
  constexpr std::size_t kGrid = 20000;
  constexpr double kDelta = 1e-3;
  double sub_from = upper;
  double super_from = upper;
  bool sub_tail = true;
  bool super_tail = true;
  for (std::size_t i = kGrid + 1; i-- > 0;) {
    const double z = 1.0 + (upper - 1.0) * static_cast<double>(i) / static_cast<double>(kGrid);
    const double v = f(z);
    if (sub_tail && v <= 2.0)
      sub_from = z;
    else
      sub_tail = false;
    if (super_tail && v >= 2.0 + kDelta)
      super_from = z;
    else
      super_tail = false;
  }
  const double half = 0.5 * upper;

  if (sub_from <= half) {
    report.classification = Criticality::Subcritical;
    report.lambda_infinite = true;
    report.lambda_estimate = std::numeric_limits<double>::infinity();
    report.rule = "f(z) <= 2 for z >= " + std::to_string(sub_from);
    return report;
  }
  ScaleIntegral partial;
  bool quadrature_ok = true;
  try {
    partial = integrate_scale(f, upper, tolerance);
  } catch (const QuadratureError&) {
    quadrature_ok = false;
  }

  if (super_from <= half && quadrature_ok && std::isfinite(partial.value)) {
    report.classification = Criticality::Supercritical;
    report.lambda_estimate = partial.value;
    report.rule = "f(z) >= 2 + delta for z >= " + std::to_string(super_from);
    return report;
  }
  if (!quadrature_ok) {
    report.rule = "quadrature failed";
    return report;
  }

  // Numerical divergence test on the partial integral.
  report.lambda_estimate = partial.value;
  const double at_top = partial.log_density;
  double at_half = 0.0;
  double tail = 0.0;
  try {
    const auto h = integrate_scale(f, half, tolerance);
    at_half = h.log_density;
    tail = partial.value - h.value;
  } catch (const QuadratureError&) {
    report.rule = "quadrature failed";
    return report;
  }
  if ((!std::isfinite(partial.value) || partial.value > 1e9) && at_top > at_half) {
    report.classification = Criticality::Subcritical;
    report.lambda_infinite = true;
    report.lambda_estimate = std::numeric_limits<double>::infinity();
    report.rule = "partial integral diverges";
  } else if (std::isfinite(partial.value) && at_top <= at_half &&
             tail < tolerance * std::max(1.0, partial.value)) {
    report.classification = Criticality::Supercritical;
    report.rule = "tail integral converged";
  } else {
    report.rule = "no decisive test";
  }
  return report;
}

}  // namespace bpi
