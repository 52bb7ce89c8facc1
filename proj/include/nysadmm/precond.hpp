#pragma once

#include <nysadmm/nystrom.hpp>
#include <nysadmm/types.hpp>

namespace nysadmm {

/// Nystrom preconditioner for H + rho I:
///   P     = U (eigs + rho I) U^T / (lambda_s + rho) + (I - U U^T)
///   P^-1  = (lambda_s + rho) U (eigs + rho I)^-1 U^T + (I - U U^T)
/// Stored in factored form, O(d s) memory.
template <typename Scalar>
struct NystromPreconditioner {
  Matrix<Scalar> u;
  Vector<Scalar> eigs;
  Scalar lam_s = Scalar(0);
  Scalar rho = Scalar(1);

  Index dim() const { return u.rows(); }
  Index rank() const { return eigs.size(); }
};

template <typename Scalar>
NystromPreconditioner<Scalar> build_preconditioner(const NystromApproximation<Scalar>& approx,
                                                   Scalar rho) {
  if (!(rho > Scalar(0))) throw ValidationError("preconditioner needs rho > 0");
  if (approx.rank() == 0 || approx.dim() == 0)
    throw ValidationError("preconditioner needs a nonempty Nystrom approximation");
  detail::check_dim("Nystrom eigenvalue count (columns of U)", approx.u.cols(), approx.eigs.size());

  NystromPreconditioner<Scalar> p;
  p.u = approx.u;
  p.eigs = approx.eigs;
  p.lam_s = approx.last_eig();
  p.rho = rho;
  return p;
}

template <typename Scalar>
Vector<Scalar> apply_inverse(const NystromPreconditioner<Scalar>& p, const Vector<Scalar>& v) {
  detail::check_dim("preconditioner input length", p.dim(), v.size());
  const Vector<Scalar> coeff = p.u.transpose() * v;
  const Vector<Scalar> scaled =
      ((p.lam_s + p.rho) / (p.eigs.array() + p.rho) - Scalar(1)) * coeff.array();
  return v + p.u * scaled;
}

/// The forward map P v, mostly for diagnostics and tests.
template <typename Scalar>
Vector<Scalar> apply_forward(const NystromPreconditioner<Scalar>& p, const Vector<Scalar>& v) {
  detail::check_dim("preconditioner input length", p.dim(), v.size());
  const Vector<Scalar> coeff = p.u.transpose() * v;
  const Vector<Scalar> scaled =
      ((p.eigs.array() + p.rho) / (p.lam_s + p.rho) - Scalar(1)) * coeff.array();
  return v + p.u * scaled;
}

/// (lambda_s + rho) / rho.
template <typename Scalar>
Scalar empirical_condition_number(const NystromPreconditioner<Scalar>& p) {
  return (p.lam_s + p.rho) / p.rho;
}

}  // namespace nysadmm
