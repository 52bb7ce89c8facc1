#pragma once

#include <nysadmm/linops.hpp>
#include <nysadmm/nystrom.hpp>
#include <nysadmm/pcg.hpp>
#include <nysadmm/precond.hpp>

namespace nysadmm {

/// Dense psd matrix Q diag(lambda) Q^T with lambda decaying geometrically
/// from (condition - 1) * rho down to 1e-3 * rho, so that H + rho I has
/// condition number close to `condition`. Q is a seeded random orthogonal matrix.
template <typename Scalar>
Matrix<Scalar> synthetic_psd(Index dim, Scalar condition, Scalar rho, std::uint64_t seed) {
  if (dim < 2) throw ValidationError("synthetic_psd needs dim >= 2");
  if (!(condition > Scalar(1))) throw ValidationError("synthetic_psd needs condition > 1");
  std::mt19937_64 rng(seed);
  const Matrix<Scalar> q = detail::thin_q<Scalar>(gaussian_matrix<Scalar>(dim, dim, rng));
  const Scalar top = (condition - Scalar(1)) * rho;
  const Scalar bottom = Scalar(1e-3) * rho;
  const Scalar ratio = std::log(top / bottom) / Scalar(dim - 1);
  Vector<Scalar> lambda(dim);
  for (Index i = 0; i < dim; ++i) lambda(i) = top * std::exp(-ratio * Scalar(i));
  return q * lambda.asDiagonal() * q.transpose();
}

template <typename Scalar>
struct BenchReport {
  Index dim = 0;
  Index sketch_size = 0;
  Scalar empirical_condition_number = Scalar(1);
  PcgReport<Scalar> preconditioned;
  PcgReport<Scalar> plain;
};

/// Solves (H + rho I) x = 1 from x = 0 with Nystrom PCG and with plain CG.
template <typename Scalar>
BenchReport<Scalar> run_bench(const SymmetricPsdOperator<Scalar>& h, Scalar rho, Index sketch_size,
                              Scalar tol, Index max_iters, std::uint64_t seed) {
  const Index d = h.dim();
  BenchReport<Scalar> rep;
  rep.dim = d;
  rep.sketch_size = std::min(sketch_size, d);
  const auto approx = rand_nystrom_approx(h, SketchConfig{rep.sketch_size, seed});
  const auto p = build_preconditioner(approx, rho);
  rep.empirical_condition_number = empirical_condition_number(p);

  const Vector<Scalar> r = Vector<Scalar>::Ones(d);
  const Vector<Scalar> x0 = Vector<Scalar>::Zero(d);
  PcgConfig<Scalar> cfg;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  rep.preconditioned = nystrom_pcg(h, rho, r, x0, p, cfg);
  rep.plain = plain_cg(h, rho, r, x0, cfg);
  return rep;
}

}  // namespace nysadmm
