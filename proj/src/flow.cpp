#include "igpmc/groundwater.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace igpmc::groundwater {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Conductance matrix (positive definite form) and the fixed-head load.
struct System {
  SparseMatrix a;
  Vector b;
};

System assemble(const FlowGrid& g) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.cells());
  const Vector k = g.log_k.array().exp();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n));
  Vector diag = Vector::Zero(n);
  Vector b = Vector::Zero(n);
  const double tx = g.dy / g.dx;
  const double ty = g.dx / g.dy;

  auto link = [&](Eigen::Index p, Eigen::Index q, double t) {
    diag[p] += t;
    diag[q] += t;
    trip.emplace_back(p, q, -t);
    trip.emplace_back(q, p, -t);
  };
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const auto p = static_cast<Eigen::Index>(g.index(i, j));
      if (i + 1 < g.nx) {
        const auto q = static_cast<Eigen::Index>(g.index(i + 1, j));
        link(p, q, harmonic(k[p], k[q]) * tx);
      }
      if (j + 1 < g.ny) {
        const auto q = static_cast<Eigen::Index>(g.index(i, j + 1));
        link(p, q, harmonic(k[p], k[q]) * ty);
      }
    }
    // Half-cell conductance to the fixed-head faces.
    const auto left = static_cast<Eigen::Index>(g.index(0, j));
    const auto right = static_cast<Eigen::Index>(g.index(g.nx - 1, j));
    diag[left] += 2.0 * k[left] * tx;
    b[left] += 2.0 * k[left] * tx * g.head_left;
    diag[right] += 2.0 * k[right] * tx;
    b[right] += 2.0 * k[right] * tx * g.head_right;
  }
  for (Eigen::Index p = 0; p < n; ++p) trip.emplace_back(p, p, diag[p]);
  System s{SparseMatrix(n, n), std::move(b)};
  s.a.setFromTriplets(trip.begin(), trip.end());
  return s;
}

class Solver {
 public:
  explicit Solver(const SparseMatrix& a) : a_(a) {
    ldlt_.compute(a_);
    if (ldlt_.info() != Eigen::Success) {
      throw Error(ErrorCode::kSolverDiverged, "flow matrix factorization failed");
    }
  }

  Vector solve(const Vector& rhs) const {
    Vector x = ldlt_.solve(rhs);
    const double scale = std::max(rhs.norm(), 1e-300);
    if (ldlt_.info() != Eigen::Success || !x.allFinite() || (a_ * x - rhs).norm() > 1e-10 * scale) {
      throw Error(ErrorCode::kSolverDiverged, "flow solve residual above tolerance");
    }
    return x;
  }

 private:
  SparseMatrix a_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

}  // namespace

void FlowGrid::validate() const {
  if (nx < 3 || ny < 3) throw Error(ErrorCode::kInvalidConfig, "grid needs at least 3 x 3 cells");
  if (!(dx > 0.0) || !(dy > 0.0)) throw Error(ErrorCode::kInvalidConfig, "cell sizes must be positive");
  if (!std::isfinite(head_left) || !std::isfinite(head_right)) {
    throw Error(ErrorCode::kInvalidConfig, "fixed heads must be finite");
  }
  if (log_k.size() != static_cast<Eigen::Index>(cells())) {
    throw Error(ErrorCode::kDimensionMismatch, "log_k length must equal the cell count");
  }
  if (!log_k.allFinite()) throw Error(ErrorCode::kInvalidConfig, "log_k must be finite");
  if (!(storage > 0.0)) throw Error(ErrorCode::kInvalidConfig, "storage must be positive");
}

FlowGrid uniform_grid(std::size_t nx, std::size_t ny, double lx, double ly, double head_left,
                      double head_right, double log_k) {
  FlowGrid g;
  g.nx = nx;
  g.ny = ny;
  g.dx = lx / static_cast<double>(nx);
  g.dy = ly / static_cast<double>(ny);
  g.head_left = head_left;
  g.head_right = head_right;
  g.log_k = Vector::Constant(static_cast<Eigen::Index>(nx * ny), log_k);
  return g;
}

Vector linear_head_profile(const FlowGrid& g) {
  Vector h(static_cast<Eigen::Index>(g.cells()));
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(g.nx);
      h[static_cast<Eigen::Index>(g.index(i, j))] = g.head_left + s * (g.head_right - g.head_left);
    }
  }
  return h;
}

Vector solve_steady_flow(const FlowGrid& grid) {
  grid.validate();
  const System s = assemble(grid);
  return Solver(s.a).solve(s.b);
}

std::vector<Vector> solve_transient_flow(const FlowGrid& grid, double dt, std::size_t n_steps,
                                         const std::optional<Vector>& initial) {
  grid.validate();
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidConfig, "dt must be positive");
  const System s = assemble(grid);
  Vector h = initial ? *initial : Solver(s.a).solve(s.b);
  if (h.size() != static_cast<Eigen::Index>(grid.cells())) {
    throw Error(ErrorCode::kDimensionMismatch, "initial heads length must equal the cell count");
  }
  const double capacity = grid.storage * grid.dx * grid.dy / dt;
  SparseMatrix a = s.a;
  for (Eigen::Index p = 0; p < a.rows(); ++p) a.coeffRef(p, p) += capacity;
  const Solver solver(a);

  std::vector<Vector> out;
  out.reserve(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    h = solver.solve(s.b + capacity * h);
    out.push_back(h);
  }
  return out;
}

Stencil bilinear_stencil(const FlowGrid& g, double x, double y) {
  auto axis = [](double pos, double h, std::size_t n, std::size_t& i0, double& f) {
    const double u = pos / h - 0.5;
    const double top = static_cast<double>(n - 1);
    const double c = std::clamp(u, 0.0, top);
    i0 = std::min(static_cast<std::size_t>(std::floor(c)), n - 2);
    f = c - static_cast<double>(i0);
  };
  std::size_t i0 = 0, j0 = 0;
  double fx = 0.0, fy = 0.0;
  axis(x, g.dx, g.nx, i0, fx);
  axis(y, g.dy, g.ny, j0, fy);
  Stencil s;
  s.cell = {g.index(i0, j0), g.index(i0 + 1, j0), g.index(i0, j0 + 1), g.index(i0 + 1, j0 + 1)};
  s.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  return s;
}

double interpolate(const FlowGrid& g, const Vector& field, double x, double y) {
  const Stencil s = bilinear_stencil(g, x, y);
  double v = 0.0;
  for (int c = 0; c < 4; ++c) v += s.weight[c] * field[static_cast<Eigen::Index>(s.cell[c])];
  return v;
}

FaceFlux darcy_flux(const FlowGrid& g, const Vector& head) {
  const Vector k = g.log_k.array().exp();
  FaceFlux f;
  f.qx = Vector::Zero(static_cast<Eigen::Index>((g.nx + 1) * g.ny));
  f.qy = Vector::Zero(static_cast<Eigen::Index>(g.nx * (g.ny + 1)));
  for (std::size_t j = 0; j < g.ny; ++j) {
    const auto row = static_cast<Eigen::Index>((g.nx + 1) * j);
    const auto l = static_cast<Eigen::Index>(g.index(0, j));
    const auto r = static_cast<Eigen::Index>(g.index(g.nx - 1, j));
    f.qx[row] = -2.0 * k[l] * (head[l] - g.head_left) / g.dx;
    f.qx[row + static_cast<Eigen::Index>(g.nx)] = -2.0 * k[r] * (g.head_right - head[r]) / g.dx;
    for (std::size_t i = 1; i < g.nx; ++i) {
      const auto p = static_cast<Eigen::Index>(g.index(i - 1, j));
      const auto q = static_cast<Eigen::Index>(g.index(i, j));
      f.qx[row + static_cast<Eigen::Index>(i)] = -harmonic(k[p], k[q]) * (head[q] - head[p]) / g.dx;
    }
  }
  for (std::size_t j = 1; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const auto p = static_cast<Eigen::Index>(g.index(i, j - 1));
      const auto q = static_cast<Eigen::Index>(g.index(i, j));
      f.qy[static_cast<Eigen::Index>(i + g.nx * j)] = -harmonic(k[p], k[q]) * (head[q] - head[p]) / g.dy;
    }
  }
  return f;
}

}  // namespace igpmc::groundwater
