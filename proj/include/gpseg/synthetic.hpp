#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "gpseg/fast_gp.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

struct BraninParams {
  double a = 1.0;
  double b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
  double c = 5.0 / std::numbers::pi;
  double r = 6.0;
  double s = 10.0;
  double t = 1.0 / (8.0 * std::numbers::pi);
};

double branin_value(double x1, double x2, const BraninParams& params = {});

// Branin surface sampled on a uniform n1 x n2 grid over [-5,10] x [0,15];
// rows follow the first argument.
GrayImage branin_field(int n1, int n2, const BraninParams& params = {});

struct DiffusionConfig {
  double diffusivity = 1.0;
  int nx = 200;  // spatial points on [0, x_max]
  int nt = 200;  // saved time points on [0, t_max]
  double x_max = 1.0;
  double t_max = 0.2;
  double boundary_value = 1.0;  // held at x = 0
};

// Explicit finite-difference solution of u_t = D u_xx with u(x,0)=0,
// u(0,t)=boundary_value, zero flux at x=x_max. Column j holds the profile at
// the j-th saved time; sub-steps keep D*dt/dx^2 <= 0.5.
GrayImage diffusion_field(const DiffusionConfig& config = {});

// field + iid N(0, sigma0^2), reproducible for a fixed seed.
GrayImage add_noise(const GrayImage& field, double sigma0, std::uint64_t seed);

enum class CellShape { disc, blob };

struct PhantomConfig {
  int rows = 256;
  int cols = 256;
  int count = 12;
  CellShape shape = CellShape::disc;
  std::uint64_t seed = 1;
  bool allow_overlap = false;
  double radius_min = 8.0;
  double radius_max = 14.0;
  double background = 0.1;
  double peak_min = 0.7;
  double peak_max = 1.0;
  double margin = 3.0;  // clearance between objects and to the border
};

struct Phantom {
  GrayImage image;   // clean, noise-free
  LabelMask truth;   // exact object labels 1..count
  std::vector<double> center_r, center_c, radius, peak;
};

// Bright cells on a dim background with exact ground truth. Overlapping
// supports are resolved to the nearer center (ties to the lower label).
// Throws std::runtime_error when placement fails after 10^4 attempts.
Phantom phantom_cells(const PhantomConfig& config);

// Exact draw from the separable lattice model (signal + nugget noise),
// for simulation studies.
GrayImage sample_gp(int n1, int n2, const GpParams& params, std::uint64_t seed);

}  // namespace gpseg
