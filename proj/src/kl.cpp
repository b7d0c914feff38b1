#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "igpmc/groundwater.hpp"

namespace igpmc::groundwater {

namespace {

Matrix exp_covariance_1d(std::size_t n, double h, double lambda) {
  Matrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double lag = std::abs(static_cast<double>(a) - static_cast<double>(b)) * h;
      c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::exp(-lag / lambda);
    }
  }
  return c;
}

void check_args(double sigma_y2, double lambda_x, double lambda_y, std::size_t nx, std::size_t ny,
                double dx, double dy, std::size_t n_terms) {
  if (!(sigma_y2 > 0.0) || !(lambda_x > 0.0) || !(lambda_y > 0.0) || !(dx > 0.0) || !(dy > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "variance, correlation lengths and spacings must be positive");
  }
  if (nx == 0 || ny == 0) throw Error(ErrorCode::kInvalidConfig, "grid must be non-empty");
  if (n_terms < 1 || n_terms > nx * ny) {
    throw Error(ErrorCode::kInvalidConfig, "n_terms must lie in [1, cell count]");
  }
}

}  // namespace

Matrix kl_covariance(double sigma_y2, double lambda_x, double lambda_y, std::size_t nx,
                     std::size_t ny, double dx, double dy) {
  const Matrix cx = exp_covariance_1d(nx, dx, lambda_x);
  const Matrix cy = exp_covariance_1d(ny, dy, lambda_y);
  const auto n = static_cast<Eigen::Index>(nx * ny);
  Matrix c(n, n);
  for (std::size_t j1 = 0; j1 < ny; ++j1) {
    for (std::size_t i1 = 0; i1 < nx; ++i1) {
      const auto p = static_cast<Eigen::Index>(i1 + nx * j1);
      for (std::size_t j2 = 0; j2 < ny; ++j2) {
        for (std::size_t i2 = 0; i2 < nx; ++i2) {
          const auto q = static_cast<Eigen::Index>(i2 + nx * j2);
          c(p, q) = sigma_y2 * cx(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2)) *
                    cy(static_cast<Eigen::Index>(j1), static_cast<Eigen::Index>(j2));
        }
      }
    }
  }
  return c;
}

KlField kl_decompose(double sigma_y2, double lambda_x, double lambda_y, std::size_t nx, std::size_t ny,
                     double dx, double dy, std::size_t n_terms, KlMethod method, double mean_log_k) {
  check_args(sigma_y2, lambda_x, lambda_y, nx, ny, dx, dy, n_terms);
  KlField f{sigma_y2, lambda_x, lambda_y, nx, ny, dx, dy, {}, {}, {}};
  const auto cells = static_cast<Eigen::Index>(nx * ny);
  const auto terms = static_cast<Eigen::Index>(n_terms);
  const double area = dx * dy;
  f.mean = Vector::Constant(cells, mean_log_k);
  f.eigenvalues.resize(terms);
  f.eigenfunctions.resize(cells, terms);

  if (method == KlMethod::kDense) {
    const Matrix a = area * kl_covariance(sigma_y2, lambda_x, lambda_y, nx, ny, dx, dy);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    // Eigen returns ascending order.
    for (Eigen::Index t = 0; t < terms; ++t) {
      const Eigen::Index src = cells - 1 - t;
      f.eigenvalues[t] = std::max(es.eigenvalues()[src], 0.0);
      f.eigenfunctions.col(t) = es.eigenvectors().col(src) / std::sqrt(area);
    }
    return f;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> ex(dx * exp_covariance_1d(nx, dx, lambda_x));
  Eigen::SelfAdjointEigenSolver<Matrix> ey(dy * exp_covariance_1d(ny, dy, lambda_y));
  struct Pair {
    double value;
    Eigen::Index a;
    Eigen::Index b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(cells));
  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(nx); ++a) {
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(ny); ++b) {
      pairs.push_back({sigma_y2 * std::max(ex.eigenvalues()[a], 0.0) * std::max(ey.eigenvalues()[b], 0.0), a, b});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) { return l.value > r.value; });
  for (Eigen::Index t = 0; t < terms; ++t) {
    const Pair& p = pairs[static_cast<std::size_t>(t)];
    f.eigenvalues[t] = p.value;
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        f.eigenfunctions(static_cast<Eigen::Index>(i + nx * j), t) =
            ex.eigenvectors()(static_cast<Eigen::Index>(i), p.a) *
            ey.eigenvectors()(static_cast<Eigen::Index>(j), p.b) / std::sqrt(area);
      }
    }
  }
  return f;
}

Vector kl_realize(const KlField& field, const Vector& xi) {
  if (xi.size() != field.eigenvalues.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "xi length must equal the number of KL terms");
  }
  return field.mean + field.eigenfunctions * (xi.array() * field.eigenvalues.array().sqrt()).matrix();
}

}  // namespace igpmc::groundwater
