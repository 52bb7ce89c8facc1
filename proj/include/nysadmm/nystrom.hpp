#pragma once

#include <nysadmm/linops.hpp>
#include <nysadmm/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace nysadmm {

/// Low-rank eigen-factorization H_nys = U diag(eigs) U^T of a psd operator.
template <typename Scalar>
struct NystromApproximation {
  Matrix<Scalar> u;     ///< d x s, orthonormal columns
  Vector<Scalar> eigs;  ///< nonincreasing, nonnegative
  Scalar shift_used = Scalar(0);

  // Set by the adaptive builder only.
  bool tolerance_met = true;
  bool reached_max_rank = false;

  Index dim() const { return u.rows(); }
  Index rank() const { return eigs.size(); }
  /// Smallest retained eigenvalue, lambda_s.
  Scalar last_eig() const { return eigs.size() ? eigs(eigs.size() - 1) : Scalar(0); }
};

struct SketchConfig {
  Index sketch_size = 50;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct AdaptiveConfig {
  Index initial_rank = 10;
  Index max_rank = 0;  ///< 0 picks min(d, 10 * initial_rank)
  Scalar rho = Scalar(1);
  Scalar tol = Scalar(10);  ///< threshold on (lambda_s + rho) / rho
  std::uint64_t seed = 0;
};

namespace detail {

/// Estimate of |Y|_2 from 10 power steps on Y^T Y.
template <typename Scalar>
Scalar spectral_norm_estimate(const Matrix<Scalar>& y) {
  if (y.cols() == 0) return Scalar(0);
  const Matrix<Scalar> gram = y.transpose() * y;
  Vector<Scalar> v = Vector<Scalar>::Constant(y.cols(), Scalar(1) / std::sqrt(Scalar(y.cols())));
  Scalar lambda = Scalar(0);
  for (int it = 0; it < 10; ++it) {
    Vector<Scalar> w = gram * v;
    const Scalar nrm = w.norm();
    if (nrm == Scalar(0)) return Scalar(0);
    v = w / nrm;
    lambda = nrm;
  }
  return std::sqrt(lambda);
}

template <typename Scalar>
Matrix<Scalar> thin_q(const Matrix<Scalar>& m) {
  Eigen::HouseholderQR<Matrix<Scalar>> qr(m);
  return qr.householderQ() * Matrix<Scalar>::Identity(m.rows(), m.cols());
}

/// Stabilized Nystrom factorization from an orthonormal test matrix and its
/// sketch Y = H Omega. The shift is shift_scale * eps(|Y|_2); one retry at 100x.
template <typename Scalar>
NystromApproximation<Scalar> nystrom_from_sketch(const Matrix<Scalar>& omega,
                                                 const Matrix<Scalar>& y, Scalar shift_scale) {
  Scalar nu = shift_scale * eps_of(spectral_norm_estimate(y));

  for (int attempt = 0; attempt < 2; ++attempt) {
    const Matrix<Scalar> y_nu = y + nu * omega;
    Matrix<Scalar> core = omega.transpose() * y_nu;
    core = Scalar(0.5) * (core + core.transpose()).eval();

    Eigen::LLT<Matrix<Scalar>> llt(core);
    if (llt.info() == Eigen::Success) {
      // B = Y_nu C^{-1} with core = C^T C, i.e. B^T = L^{-1} Y_nu^T.
      const Matrix<Scalar> b = llt.matrixL().solve(y_nu.transpose()).transpose();
      Eigen::BDCSVD<Matrix<Scalar>> svd(b, Eigen::ComputeThinU);

      NystromApproximation<Scalar> out;
      out.u = svd.matrixU();
      out.eigs = (svd.singularValues().array().square() - nu).max(Scalar(0)).matrix();
      out.shift_used = nu;
      return out;
    }
    nu *= Scalar(100);
  }
  throw RankDeficientSketch("Cholesky of the shifted Nystrom core failed after retry (shift " +
                            std::to_string(static_cast<double>(nu / Scalar(100))) + ")");
}

}  // namespace detail

/// Fixed-rank randomized Nystrom approximation with a Gaussian test matrix.
/// Uses exactly `sketch_size` operator applications; deterministic in `seed`.
template <typename Scalar>
NystromApproximation<Scalar> rand_nystrom_approx(const SymmetricPsdOperator<Scalar>& h,
                                                 const SketchConfig& cfg) {
  const Index d = h.dim();
  if (cfg.sketch_size < 1 || cfg.sketch_size > d)
    throw ValidationError("sketch size must lie in [1, " + std::to_string(d) + "], got " +
                          std::to_string(cfg.sketch_size));

  std::mt19937_64 rng(cfg.seed);
  const Matrix<Scalar> omega = detail::thin_q<Scalar>(gaussian_matrix<Scalar>(d, cfg.sketch_size, rng));
  const Matrix<Scalar> y = h.apply_block(omega);
  return detail::nystrom_from_sketch<Scalar>(omega, y, Scalar(1));
}

/// Adaptive Nystrom approximation: grows the sketch geometrically until
/// (lambda_s + rho) / rho <= tol. Each round only sketches the new columns; the
/// new block is orthogonalized against the existing test matrix so the combined
/// Omega stays orthonormal. When max_rank is reached without meeting the
/// tolerance, the max_rank approximation is returned with `reached_max_rank`.
template <typename Scalar>
NystromApproximation<Scalar> adaptive_nystrom_approx(const SymmetricPsdOperator<Scalar>& h,
                                                     const AdaptiveConfig<Scalar>& cfg) {
  const Index d = h.dim();
  const Index s_max = cfg.max_rank > 0 ? cfg.max_rank : std::min<Index>(d, 10 * cfg.initial_rank);
  if (cfg.initial_rank < 1 || cfg.initial_rank > s_max || s_max > d)
    throw ValidationError("adaptive Nystrom needs 1 <= initial_rank <= max_rank <= dim");
  if (!(cfg.rho > Scalar(0))) throw ValidationError("adaptive Nystrom needs rho > 0");
  if (!(cfg.tol > Scalar(1))) throw ValidationError("adaptive Nystrom needs tol > 1");

  std::mt19937_64 rng(cfg.seed);
  const Scalar shift_scale = std::sqrt(Scalar(d));
  Matrix<Scalar> omega(d, 0);
  Matrix<Scalar> y(d, 0);
  Index target = cfg.initial_rank;

  while (true) {
    const Index m = target - omega.cols();
    Matrix<Scalar> block = gaussian_matrix<Scalar>(d, m, rng);
    if (omega.cols() > 0) {
      // Two passes of block Gram-Schmidt.
      for (int pass = 0; pass < 2; ++pass) block -= omega * (omega.transpose() * block);
    }
    block = detail::thin_q<Scalar>(block);
    const Matrix<Scalar> y_block = h.apply_block(block);

    Matrix<Scalar> omega_next(d, target);
    omega_next << omega, block;
    Matrix<Scalar> y_next(d, target);
    y_next << y, y_block;
    omega.swap(omega_next);
    y.swap(y_next);

    NystromApproximation<Scalar> approx = detail::nystrom_from_sketch<Scalar>(omega, y, shift_scale);
    const Scalar cond = (approx.last_eig() + cfg.rho) / cfg.rho;
    if (cond <= cfg.tol) {
      approx.tolerance_met = true;
      return approx;
    }
    if (target == s_max) {
      approx.tolerance_met = false;
      approx.reached_max_rank = true;
      return approx;
    }
    target = std::min<Index>(2 * target, s_max);
  }
}

/// d_eff(rho) = sum_i lambda_i / (lambda_i + rho).
template <typename Scalar>
Scalar effective_dimension(const Vector<Scalar>& eigenvalues, Scalar rho) {
  if (!(rho > Scalar(0))) throw ValidationError("effective_dimension needs rho > 0");
  if ((eigenvalues.array() < Scalar(0)).any())
    throw ValidationError("effective_dimension needs nonnegative eigenvalues");
  return (eigenvalues.array() / (eigenvalues.array() + rho)).sum();
}

/// Sketch size sufficient for a preconditioned condition number <= 8 with
/// probability 1 - delta: ceil(8 (sqrt(d_eff) + sqrt(8 ln(16/delta)))^2).
inline Index theoretical_sketch_size(double deff, double delta) {
  if (!(deff >= 0.0)) throw ValidationError("theoretical_sketch_size needs deff >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("theoretical_sketch_size needs 0 < delta < 1");
  const double root = std::sqrt(deff) + std::sqrt(8.0 * std::log(16.0 / delta));
  return static_cast<Index>(std::ceil(8.0 * root * root));
}

}  // namespace nysadmm
