#pragma once

#include <nysadmm/linops.hpp>
#include <nysadmm/precond.hpp>
#include <nysadmm/types.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <type_traits>

namespace nysadmm {

template <typename Scalar>
struct PcgConfig {
  Scalar tol = Scalar(1e-8);  ///< on the residual 2-norm
  Index max_iters = 500;
  std::optional<Index> theory_cap;

  Index effective_cap() const {
    return theory_cap ? std::min(max_iters, *theory_cap) : max_iters;
  }
};

template <typename Scalar>
struct PcgReport {
  Vector<Scalar> solution;
  Index iterations = 0;
  Scalar final_residual_norm = Scalar(0);  ///< recursively updated residual
  Scalar true_residual_norm = Scalar(0);   ///< recomputed from scratch at exit
  bool converged = false;
  bool hit_cap = false;
  Index matvecs = 0;
};

/// Called after every iteration with (iteration, current iterate).
template <typename Scalar>
using IterateObserver = std::function<void(Index, const Vector<Scalar>&)>;

/// Conjugate gradients on (H + rho I) x = r with an arbitrary SPD
/// preconditioner given as its inverse action.
template <typename Scalar, typename ApplyInverse>
PcgReport<Scalar> preconditioned_cg(const SymmetricPsdOperator<Scalar>& h, Scalar rho,
                                    const Vector<Scalar>& r, const Vector<Scalar>& x0,
                                    ApplyInverse&& precondition, const PcgConfig<Scalar>& cfg,
                                    const std::type_identity_t<IterateObserver<Scalar>>& observer = {}) {
  const Index d = h.dim();
  detail::check_dim("PCG right-hand side length", d, r.size());
  detail::check_dim("PCG initial guess length", d, x0.size());
  if (!(rho > Scalar(0))) throw ValidationError("PCG needs rho > 0");
  if (!(cfg.tol > Scalar(0))) throw ValidationError("PCG needs tol > 0");
  if (cfg.max_iters < 1) throw ValidationError("PCG needs max_iters >= 1");

  auto shifted = [&](const Vector<Scalar>& v) -> Vector<Scalar> { return h.apply(v) + rho * v; };

  PcgReport<Scalar> rep;
  Vector<Scalar> x = x0;
  Vector<Scalar> w = r - shifted(x);
  rep.matvecs = 1;
  if (!detail::all_finite(w)) throw NumericalBreakdown("non-finite initial residual in PCG", 0);

  Scalar wnorm = w.norm();
  const Index cap = cfg.effective_cap();
  Index t = 0;
  if (wnorm > cfg.tol) {
    Vector<Scalar> y = precondition(w);
    Vector<Scalar> p = y;
    Scalar wy = w.dot(y);
    while (t < cap) {
      const Vector<Scalar> v = shifted(p);
      ++rep.matvecs;
      const Scalar alpha = wy / p.dot(v);
      x += alpha * p;
      w -= alpha * v;
      ++t;
      if (!std::isfinite(alpha) || !detail::all_finite(x) || !detail::all_finite(w))
        throw NumericalBreakdown("non-finite value in PCG iterate", t);
      if (observer) observer(t, x);
      wnorm = w.norm();
      if (wnorm <= cfg.tol) break;
      y = precondition(w);
      const Scalar wy_next = w.dot(y);
      const Scalar beta = wy_next / wy;
      if (!std::isfinite(beta)) throw NumericalBreakdown("non-finite PCG step coefficient", t);
      p = y + beta * p;
      wy = wy_next;
    }
  }

  rep.iterations = t;
  rep.final_residual_norm = wnorm;
  rep.converged = wnorm <= cfg.tol;
  rep.hit_cap = !rep.converged && t >= cap;
  rep.true_residual_norm = (r - shifted(x)).norm();
  ++rep.matvecs;
  if (!std::isfinite(rep.true_residual_norm)) throw NumericalBreakdown("non-finite PCG true residual", t);
  // Guard against drift of the recursive residual.
  if (rep.converged && rep.true_residual_norm > Scalar(10) * cfg.tol) rep.converged = false;
  rep.solution = std::move(x);
  return rep;
}

/// Nystrom-preconditioned CG. The preconditioner must be built for the same rho.
template <typename Scalar>
PcgReport<Scalar> nystrom_pcg(const SymmetricPsdOperator<Scalar>& h, Scalar rho,
                              const Vector<Scalar>& r, const Vector<Scalar>& x0,
                              const NystromPreconditioner<Scalar>& p, const PcgConfig<Scalar>& cfg,
                              const std::type_identity_t<IterateObserver<Scalar>>& observer = {}) {
  detail::check_dim("preconditioner dimension", h.dim(), p.dim());
  if (std::abs(p.rho - rho) > Scalar(1e-12) * std::max(Scalar(1), std::abs(rho)))
    throw ValidationError("preconditioner was built for a different rho");
  return preconditioned_cg<Scalar>(
      h, rho, r, x0, [&p](const Vector<Scalar>& v) { return apply_inverse(p, v); }, cfg, observer);
}

/// Unpreconditioned CG, the baseline for iteration-count comparisons.
template <typename Scalar>
PcgReport<Scalar> plain_cg(const SymmetricPsdOperator<Scalar>& h, Scalar rho,
                           const Vector<Scalar>& r, const Vector<Scalar>& x0,
                           const PcgConfig<Scalar>& cfg,
                           const std::type_identity_t<IterateObserver<Scalar>>& observer = {}) {
  return preconditioned_cg<Scalar>(
      h, rho, r, x0, [](const Vector<Scalar>& v) { return v; }, cfg, observer);
}

}  // namespace nysadmm
