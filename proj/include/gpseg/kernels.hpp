#pragma once

#include <Eigen/Dense>
#include <string>

namespace gpseg {

enum class KernelFamily { matern52, exponential };

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

// Stationary isotropic correlation kernel with unit variance and range gamma.
struct KernelSpec {
  KernelFamily family = KernelFamily::matern52;
  double range = 1.0;
};

// Correlation at distance d >= 0. Throws std::domain_error for d < 0 or
// range <= 0.
double kernel_eval(const KernelSpec& spec, double d);

// One axis of the lattice: strictly increasing coordinates.
struct AxisGrid {
  Eigen::VectorXd coords;

  static AxisGrid integer_lattice(int n);
  int size() const { return static_cast<int>(coords.size()); }
};

// Dense correlation matrix over the grid; symmetric with unit diagonal.
Eigen::MatrixXd correlation_matrix(const KernelSpec& spec, const AxisGrid& grid);

}  // namespace gpseg
