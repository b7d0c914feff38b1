#include <algorithm>
#include <cmath>

#include "igpmc/groundwater.hpp"

namespace igpmc::groundwater {

double SourceSpec::rate(double t) const {
  if (t < t_start) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor((t - t_start) / interval));
  return k < strengths.size() ? strengths[k] : 0.0;
}

std::vector<double> SourceSpec::breakpoints() const {
  std::vector<double> out;
  for (std::size_t k = 0; k <= strengths.size(); ++k) {
    out.push_back(t_start + static_cast<double>(k) * interval);
  }
  return out;
}

namespace {

// A face between two cells (or a cell and a fixed-head boundary, b == npos).
struct Face {
  std::size_t a = 0;
  std::size_t b = 0;
  double q_area = 0.0;   // volumetric water flux a -> b
  double disp = 0.0;     // dispersive conductance theta * D * area / spacing
};

constexpr std::size_t kBoundary = static_cast<std::size_t>(-1);

std::vector<Face> build_faces(const FlowGrid& g, const FaceFlux& f, const TransportOptions& o) {
  const double th = o.porosity;
  // Cell-centred seepage velocities for the transverse components.
  Vector vx(static_cast<Eigen::Index>(g.cells()));
  Vector vy(static_cast<Eigen::Index>(g.cells()));
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const auto c = static_cast<Eigen::Index>(g.index(i, j));
      vx[c] = 0.5 * (f.qx[static_cast<Eigen::Index>(i + (g.nx + 1) * j)] +
                     f.qx[static_cast<Eigen::Index>(i + 1 + (g.nx + 1) * j)]) / th;
      vy[c] = 0.5 * (f.qy[static_cast<Eigen::Index>(i + g.nx * j)] +
                     f.qy[static_cast<Eigen::Index>(i + g.nx * (j + 1))]) / th;
    }
  }
  auto coeff = [&](double along, double across) {
    const double speed = std::hypot(along, across);
    if (speed == 0.0) return 0.0;
    return (o.alpha_l * along * along + o.alpha_t * across * across) / speed;
  };

  std::vector<Face> faces;
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double q_left = f.qx[static_cast<Eigen::Index>((g.nx + 1) * j)];
    const double q_right = f.qx[static_cast<Eigen::Index>(g.nx + (g.nx + 1) * j)];
    faces.push_back({g.index(0, j), kBoundary, -q_left * g.dy, 0.0});
    faces.push_back({g.index(g.nx - 1, j), kBoundary, q_right * g.dy, 0.0});
    for (std::size_t i = 1; i < g.nx; ++i) {
      const std::size_t a = g.index(i - 1, j);
      const std::size_t b = g.index(i, j);
      const double q = f.qx[static_cast<Eigen::Index>(i + (g.nx + 1) * j)];
      const double v_across = 0.5 * (vy[static_cast<Eigen::Index>(a)] + vy[static_cast<Eigen::Index>(b)]);
      faces.push_back({a, b, q * g.dy, th * coeff(q / th, v_across) * g.dy / g.dx});
    }
  }
  for (std::size_t j = 1; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t a = g.index(i, j - 1);
      const std::size_t b = g.index(i, j);
      const double q = f.qy[static_cast<Eigen::Index>(i + g.nx * j)];
      const double v_across = 0.5 * (vx[static_cast<Eigen::Index>(a)] + vx[static_cast<Eigen::Index>(b)]);
      faces.push_back({a, b, q * g.dx, th * coeff(q / th, v_across) * g.dx / g.dy});
    }
  }
  return faces;
}

}  // namespace

TransportResult solve_transport(const FlowGrid& grid, const Vector& head, const SourceSpec& src,
                                const TransportOptions& o) {
  grid.validate();
  if (head.size() != static_cast<Eigen::Index>(grid.cells())) {
    throw Error(ErrorCode::kDimensionMismatch, "head length must equal the cell count");
  }
  if (!(o.porosity > 0.0 && o.porosity <= 1.0) || o.alpha_l < 0.0 || o.alpha_t < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "porosity must lie in (0, 1] and dispersivities be >= 0");
  }
  for (double s : src.strengths) {
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "source strengths must be non-negative");
  }
  if (!std::is_sorted(o.output_times.begin(), o.output_times.end()) ||
      (!o.output_times.empty() && o.output_times.front() < 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "output times must be non-negative and sorted");
  }

  const std::vector<Face> faces = build_faces(grid, darcy_flux(grid, head), o);
  const auto n = static_cast<Eigen::Index>(grid.cells());
  const double volume = o.porosity * grid.dx * grid.dy;  // water volume per cell

  // Positivity limit: dt * (outflow + dispersive conductance) <= volume for every cell.
  Vector drain = Vector::Zero(n);
  for (const Face& f : faces) {
    drain[static_cast<Eigen::Index>(f.a)] += std::max(f.q_area, 0.0) + f.disp;
    if (f.b != kBoundary) drain[static_cast<Eigen::Index>(f.b)] += std::max(-f.q_area, 0.0) + f.disp;
  }
  const double max_drain = drain.maxCoeff();
  const double dt_max = max_drain > 0.0 ? o.safety * volume / max_drain
                                        : std::numeric_limits<double>::infinity();

  const Stencil inject = bilinear_stencil(grid, src.x, src.y);

  Vector mass = o.initial ? Vector(*o.initial * volume) : Vector(Vector::Zero(n));
  if (mass.size() != n) throw Error(ErrorCode::kDimensionMismatch, "initial concentration length");

  std::vector<double> events(o.output_times);
  for (double t : src.breakpoints()) {
    if (!o.output_times.empty() && t > 0.0 && t < o.output_times.back()) events.push_back(t);
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  TransportResult out;
  double t = 0.0;
  double out_mass = 0.0;
  double injected = 0.0;
  std::size_t next_output = 0;
  Vector flux(n);
  auto record = [&] {
    while (next_output < o.output_times.size() && o.output_times[next_output] <= t) {
      out.times.push_back(o.output_times[next_output]);
      out.concentration.push_back(mass / volume);
      out.mass_in_domain.push_back(mass.sum());
      out.mass_out.push_back(out_mass);
      out.mass_injected.push_back(injected);
      ++next_output;
    }
  };
  record();

  for (double t_event : events) {
    const double span = t_event - t;
    if (span <= 0.0) continue;
    const double steps_needed = std::ceil(span / dt_max);
    if (steps_needed > static_cast<double>(o.max_substeps - out.substeps)) {
      throw Error(ErrorCode::kCflViolation, "transport needs more substeps than allowed");
    }
    const auto n_sub = std::max<std::size_t>(1, static_cast<std::size_t>(steps_needed));
    const double h = span / static_cast<double>(n_sub);
    const double rate = src.rate(t + 0.5 * span);

    for (std::size_t s = 0; s < n_sub; ++s) {
      flux.setZero();
      for (const Face& f : faces) {
        const double ca = mass[static_cast<Eigen::Index>(f.a)] / volume;
        if (f.b == kBoundary) {
          // Inflow through a fixed-head face carries clean water.
          if (f.q_area > 0.0) {
            const double m = f.q_area * ca;
            flux[static_cast<Eigen::Index>(f.a)] -= m;
            out_mass += h * m;
          }
          continue;
        }
        const double cb = mass[static_cast<Eigen::Index>(f.b)] / volume;
        const double adv = f.q_area * (f.q_area > 0.0 ? ca : cb);
        const double m = adv - f.disp * (cb - ca);
        flux[static_cast<Eigen::Index>(f.a)] -= m;
        flux[static_cast<Eigen::Index>(f.b)] += m;
      }
      if (rate > 0.0) {
        for (int c = 0; c < 4; ++c) flux[static_cast<Eigen::Index>(inject.cell[c])] += rate * inject.weight[c];
        injected += h * rate;
      }
      mass += h * flux;
      mass = mass.cwiseMax(0.0);
    }
    out.substeps += n_sub;
    t = t_event;
    record();
  }
  return out;
}

}  // namespace igpmc::groundwater
