#pragma once

#include <array>
#include <optional>
#include <vector>

#include "igpmc/numerics.hpp"

namespace igpmc::groundwater {

using numerics::Matrix;
using numerics::Vector;

/// Cell-centred rectangular grid. Fixed heads act on the left (x = 0) and
/// right (x = nx * dx) faces; top and bottom are no-flow. Cell (i, j) has
/// linear index i + nx * j and centre ((i + 1/2) dx, (j + 1/2) dy).
struct FlowGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 1.0;
  double dy = 1.0;
  double head_left = 0.0;
  double head_right = 0.0;
  Vector log_k;            // natural log of hydraulic conductivity per cell
  double storage = 1e-4;   // specific storage, transient runs only

  [[nodiscard]] std::size_t cells() const { return nx * ny; }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const { return i + nx * j; }
  [[nodiscard]] double length_x() const { return static_cast<double>(nx) * dx; }
  [[nodiscard]] double length_y() const { return static_cast<double>(ny) * dy; }
  void validate() const;
};

/// Grid with uniform log-conductivity.
FlowGrid uniform_grid(std::size_t nx, std::size_t ny, double lx, double ly, double head_left,
                      double head_right, double log_k = 0.0);

/// Heads varying linearly between the two fixed-head faces.
Vector linear_head_profile(const FlowGrid& grid);

/// Steady-state heads. Throws SolverDiverged if the residual check fails.
Vector solve_steady_flow(const FlowGrid& grid);

/// Backward-Euler heads after each of n_steps steps of size dt. Starts from
/// `initial` when given, else from the steady solution.
std::vector<Vector> solve_transient_flow(const FlowGrid& grid, double dt, std::size_t n_steps,
                                         const std::optional<Vector>& initial = std::nullopt);

/// Four cells and weights for bilinear interpolation between cell centres;
/// points outside the centre hull are clamped to it.
struct Stencil {
  std::array<std::size_t, 4> cell{};
  std::array<double, 4> weight{};
};
Stencil bilinear_stencil(const FlowGrid& grid, double x, double y);
double interpolate(const FlowGrid& grid, const Vector& field, double x, double y);

/// Darcy fluxes on cell faces: qx has (nx + 1) x ny entries indexed
/// i + (nx + 1) j, qy has nx x (ny + 1) entries indexed i + nx j.
struct FaceFlux {
  Vector qx;
  Vector qy;
};
FaceFlux darcy_flux(const FlowGrid& grid, const Vector& head);

/// Point source whose strength is strengths[k] on [t_start + k, t_start + k + 1).
struct SourceSpec {
  double x = 0.0;
  double y = 0.0;
  std::vector<double> strengths;
  double t_start = 1.0;
  double interval = 1.0;

  [[nodiscard]] double rate(double t) const;
  /// Times at which the rate changes.
  [[nodiscard]] std::vector<double> breakpoints() const;
};

struct TransportOptions {
  double porosity = 0.25;
  double alpha_l = 0.3;  // longitudinal dispersivity [L]
  double alpha_t = 0.03; // transverse dispersivity [L]
  std::vector<double> output_times;
  double safety = 0.9;
  std::size_t max_substeps = 1000000;
  std::optional<Vector> initial;  // initial concentration; zero when absent
};

struct TransportResult {
  std::vector<double> times;
  std::vector<Vector> concentration;  // one field per output time
  std::vector<double> mass_in_domain;
  std::vector<double> mass_out;       // cumulative mass leaving through the fixed-head faces
  std::vector<double> mass_injected;  // cumulative source mass
  std::size_t substeps = 0;
};

/// Explicit finite-volume transport: first-order upwind advection plus
/// dispersion with the diagonal of the velocity-dependent tensor. Substeps
/// honour the positivity limit; exceeding max_substeps throws CflViolation.
TransportResult solve_transport(const FlowGrid& grid, const Vector& head, const SourceSpec& src,
                                const TransportOptions& options);

/// Truncated Karhunen-Loeve expansion of the separable exponential covariance
/// sigma_y2 exp(-|dx| / lambda_x - |dy| / lambda_y) on the cell centres.
/// Eigenfunctions are orthonormal under sum_c f_a(c) f_b(c) dA.
struct KlField {
  double sigma_y2 = 1.0;
  double lambda_x = 1.0;
  double lambda_y = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 1.0;
  double dy = 1.0;
  Vector eigenvalues;      // descending
  Matrix eigenfunctions;   // cells x n_terms
  Vector mean;             // mean log-conductivity per cell

  [[nodiscard]] std::size_t n_terms() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

enum class KlMethod { kSeparable, kDense };

KlField kl_decompose(double sigma_y2, double lambda_x, double lambda_y, std::size_t nx, std::size_t ny,
                     double dx, double dy, std::size_t n_terms, KlMethod method = KlMethod::kSeparable,
                     double mean_log_k = 0.0);

/// Covariance matrix over cell centres (cells x cells).
Matrix kl_covariance(double sigma_y2, double lambda_x, double lambda_y, std::size_t nx,
                     std::size_t ny, double dx, double dy);

/// Y = mean + sum_i xi_i sqrt(lambda_i) f_i.
Vector kl_realize(const KlField& field, const Vector& xi);

}  // namespace igpmc::groundwater
