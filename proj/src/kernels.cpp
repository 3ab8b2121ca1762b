#include "gpseg/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace gpseg {

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "matern52") return KernelFamily::matern52;
  if (name == "exp" || name == "exponential") return KernelFamily::exponential;
  throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::matern52: return "matern52";
    case KernelFamily::exponential: return "exp";
  }
  throw std::invalid_argument("unknown kernel family");
}

double kernel_eval(const KernelSpec& spec, double d) {
  if (!(spec.range > 0.0)) throw std::domain_error("kernel range must be positive");
  if (!(d >= 0.0)) throw std::domain_error("kernel distance must be nonnegative");
  const double r = d / spec.range;
  switch (spec.family) {
    case KernelFamily::matern52: {
      const double s = std::sqrt(5.0) * r;
      return (1.0 + s + 5.0 * r * r / 3.0) * std::exp(-s);
    }
    case KernelFamily::exponential:
      return std::exp(-r);
  }
  throw std::invalid_argument("unknown kernel family");
}

AxisGrid AxisGrid::integer_lattice(int n) {
  if (n < 1) throw std::invalid_argument("lattice axis needs at least one point");
  AxisGrid g;
  g.coords = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  if (n == 1) g.coords(0) = 1.0;
  return g;
}

Eigen::MatrixXd correlation_matrix(const KernelSpec& spec, const AxisGrid& grid) {
  const int n = grid.size();
  if (n < 1) throw std::invalid_argument("empty grid");
  for (int i = 1; i < n; ++i)
    if (!(grid.coords(i) > grid.coords(i - 1)))
      throw std::invalid_argument("grid coordinates must be strictly increasing");
  Eigen::MatrixXd R(n, n);
  for (int j = 0; j < n; ++j) {
    R(j, j) = 1.0;
    for (int i = j + 1; i < n; ++i) {
      const double v = kernel_eval(spec, grid.coords(i) - grid.coords(j));
      R(i, j) = v;
      R(j, i) = v;
    }
  }
  return R;
}

}  // namespace gpseg
