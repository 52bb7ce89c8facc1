#pragma once

#include <nysadmm/linops.hpp>
#include <nysadmm/nystrom.hpp>
#include <nysadmm/pcg.hpp>
#include <nysadmm/precond.hpp>
#include <nysadmm/types.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

namespace nysadmm {

enum class ScheduleKind { geometric_mean, power_decay };

/// How the subproblem tolerance eps^k evolves across ADMM iterations.
template <typename Scalar>
struct ToleranceSchedule {
  ScheduleKind kind = ScheduleKind::geometric_mean;
  Scalar beta = Scalar(2);  ///< power_decay exponent
};

enum class StoppingMode {
  residual,         ///< primal/dual residual test with eps_abs/eps_rel
  relative_change,  ///< |z^{k+1} - z^k|_inf / |z^k|_inf <= rel_change_tol
};

template <typename Scalar>
struct AdmmConfig {
  Scalar rho = Scalar(1);
  Scalar eps_abs = Scalar(1e-4);
  Scalar eps_rel = Scalar(1e-3);
  Index max_admm_iters = 500;
  Index sketch_size = 50;  ///< clamped to the problem dimension
  bool adaptive = false;
  Scalar adaptive_tol = Scalar(10);
  Index adaptive_max_rank = 0;  ///< 0 picks min(d, 10 * sketch_size)
  std::uint64_t seed = 0;
  /// Iterations between Hessian/preconditioner rebuilds; 0 never rebuilds.
  /// Unset defers to the problem's own recommendation.
  std::optional<Index> hessian_refresh_interval;
  ToleranceSchedule<Scalar> schedule;
  StoppingMode stopping = StoppingMode::residual;
  Scalar rel_change_tol = Scalar(1e-3);
  Index pcg_max_iters = 500;
  /// Cap PCG at 4 + ceil(2 ln(R / (eps^k rho))) iterations, R the running max |r^k|.
  bool use_theory_cap = false;

  void validate() const {
    if (!(rho > Scalar(0))) throw ValidationError("ADMM needs rho > 0");
    if (!(eps_abs > Scalar(0)) || !(eps_rel > Scalar(0)))
      throw ValidationError("ADMM needs positive eps_abs and eps_rel");
    if (max_admm_iters < 1) throw ValidationError("ADMM needs max_admm_iters >= 1");
    if (sketch_size < 1) throw ValidationError("ADMM needs sketch_size >= 1");
    if (adaptive && !(adaptive_tol > Scalar(1))) throw ValidationError("adaptive_tol must exceed 1");
    if (schedule.kind == ScheduleKind::power_decay && !(schedule.beta > Scalar(0)))
      throw ValidationError("power_decay schedule needs beta > 0");
    if (!(rel_change_tol > Scalar(0))) throw ValidationError("rel_change_tol must be positive");
    if (pcg_max_iters < 1) throw ValidationError("pcg_max_iters must be >= 1");
  }
};

/// Iterates (x, z, u) and per-iteration diagnostics.
template <typename Scalar>
struct AdmmState {
  Vector<Scalar> x, z, u;
  Index k = 0;
  std::vector<Scalar> primal_residual_history;
  std::vector<Scalar> dual_residual_history;
  std::vector<Scalar> subproblem_tol_history;
  std::vector<Index> pcg_iteration_counts;

  static AdmmState zeros(Index d) {
    AdmmState s;
    s.x = s.z = s.u = Vector<Scalar>::Zero(d);
    return s;
  }
};

/// (H + rho I) x = rhs for one ADMM x-update.
template <typename Scalar>
struct SubproblemSystem {
  SymmetricPsdOperator<Scalar> op;
  Scalar rho;
  Vector<Scalar> rhs;
};

/// The loss/regularizer triple reduced to what the driver needs.
template <typename Scalar>
struct ProblemSpec {
  Index dim = 0;
  /// A^T H_loss(A x) A + H_reg(x) at the linearization point x.
  std::function<SymmetricPsdOperator<Scalar>(const Vector<Scalar>&)> build_operator;
  /// r^k from (x, z, u, rho).
  std::function<Vector<Scalar>(const Vector<Scalar>&, const Vector<Scalar>&, const Vector<Scalar>&, Scalar)>
      build_rhs;
  /// argmin_z h(z) + rho/2 |v - z|^2, given v and rho.
  std::function<Vector<Scalar>(const Vector<Scalar>&, Scalar)> z_step;
  std::function<Scalar(const Vector<Scalar>&)> objective;
  std::function<Scalar(const Vector<Scalar>&)> kkt_metric;  ///< optional
  /// Rebuild interval used when AdmmConfig leaves it unset.
  Index hessian_refresh_interval = 0;
};

template <typename Scalar>
struct SolveReport {
  Vector<Scalar> solution;  ///< z at termination, feasible for h
  AdmmState<Scalar> state;
  Index iterations = 0;
  bool converged = false;
  Scalar primal_residual = Scalar(0);
  Scalar dual_residual = Scalar(0);
  Scalar objective = Scalar(0);
  std::optional<Scalar> kkt;
  Index total_matvecs = 0;
  Index sketch_matvecs = 0;
  Index sketch_size_used = 0;
  Index preconditioner_builds = 0;
  Scalar empirical_condition_number = Scalar(1);
  bool sketch_reached_max_rank = false;
  double wall_time_ms = 0.0;
};

/// What the driver exposes to an observer after each x-update.
template <typename Scalar>
struct IterationInfo {
  Index k;
  const SubproblemSystem<Scalar>& system;
  const Vector<Scalar>& warm_start;
  const PcgReport<Scalar>& pcg;
  Scalar subproblem_tol;
};

template <typename Scalar>
using AdmmObserver = std::function<void(const IterationInfo<Scalar>&)>;

/// PCG breakdown inside ADMM, tagged with the ADMM iteration.
class AdmmBreakdown : public NumericalBreakdown {
public:
  AdmmBreakdown(const NumericalBreakdown& inner, Index admm_iteration)
      : NumericalBreakdown(std::string("ADMM iteration ") + std::to_string(admm_iteration) + ": " +
                               inner.what(),
                           inner.iteration()),
        admm_iteration_(admm_iteration) {}

  Index admm_iteration() const { return admm_iteration_; }

private:
  Index admm_iteration_;
};

/// Primal residual |x - z| and dual residual |rho (z_prev - z)| of the
/// state's current iterates.
template <typename Scalar>
std::pair<Scalar, Scalar> residuals(const AdmmState<Scalar>& state, const Vector<Scalar>& z_prev,
                                    Scalar rho) {
  detail::check_dim("residuals: z length", state.x.size(), state.z.size());
  detail::check_dim("residuals: previous z length", state.z.size(), z_prev.size());
  return {(state.x - state.z).norm(), (rho * (z_prev - state.z)).norm()};
}

template <typename Scalar>
bool stopping_check(Scalar r_p, Scalar r_d, const AdmmState<Scalar>& state,
                    const AdmmConfig<Scalar>& cfg) {
  const Scalar primal_tol = cfg.eps_abs + cfg.eps_rel * std::max(state.x.norm(), state.z.norm());
  const Scalar dual_tol = cfg.eps_abs + cfg.eps_rel * (cfg.rho * state.u).norm();
  return r_p <= primal_tol && r_d <= dual_tol;
}

/// Tolerance for subproblem k >= 1. Geometric mean sqrt(r_p r_d) is clamped
/// to [1e-12, initial_tol]; power decay is rhs_norm / k^beta.
template <typename Scalar>
Scalar next_subproblem_tol(Scalar r_p, Scalar r_d, const ToleranceSchedule<Scalar>& schedule, Index k,
                           Scalar rhs_norm, Scalar initial_tol = std::numeric_limits<Scalar>::infinity()) {
  if (schedule.kind == ScheduleKind::geometric_mean) {
    if (r_p < Scalar(0) || r_d < Scalar(0)) throw ValidationError("residuals must be nonnegative");
    return std::clamp(std::sqrt(r_p * r_d), Scalar(1e-12), std::max(Scalar(1e-12), initial_tol));
  }
  if (k < 1) throw ValidationError("power_decay schedule is indexed from k = 1");
  return rhs_norm / std::pow(Scalar(k), schedule.beta);
}

/// 4 + ceil(2 ln(R / (eps_k rho))), at least 1.
template <typename Scalar>
Index theory_pcg_cap(Scalar r_bound, Scalar eps_k, Scalar rho) {
  if (!(r_bound > Scalar(0)) || !(eps_k > Scalar(0)) || !(rho > Scalar(0)))
    throw ValidationError("theory_pcg_cap needs positive arguments");
  const Scalar t = Scalar(4) + std::ceil(Scalar(2) * std::log(r_bound / (eps_k * rho)));
  return std::max<Index>(1, static_cast<Index>(t));
}

namespace detail {

template <typename Scalar>
SymmetricPsdOperator<Scalar> counted(SymmetricPsdOperator<Scalar> op, std::shared_ptr<Index> counter) {
  const Index d = op.dim();
  auto inner = std::make_shared<SymmetricPsdOperator<Scalar>>(std::move(op));
  return SymmetricPsdOperator<Scalar>(
      d,
      [inner, counter](const Vector<Scalar>& v) {
        ++*counter;
        return inner->apply(v);
      },
      [inner, counter](const Matrix<Scalar>& x) {
        *counter += x.cols();
        return inner->apply_block(x);
      });
}

}  // namespace detail

/// Inexact linearized ADMM with Nystrom-preconditioned CG subproblem solves.
///
/// The operator is built at the initial x and sketched once (fixed rank or
/// adaptively). If the refresh interval is positive the operator, sketch
/// and preconditioner are rebuilt from the current x every that many
/// iterations. Each iteration solves (H + rho I) x = r^k to residual tolerance
/// eps^k * rho, warm-started at the previous x, then takes the z- and
/// u-updates. Running out of iterations is reported, not thrown.
template <typename Scalar>
SolveReport<Scalar> solve(const ProblemSpec<Scalar>& problem, const AdmmConfig<Scalar>& cfg,
                          std::type_identity_t<std::optional<AdmmState<Scalar>>> initial = std::nullopt,
                          const std::type_identity_t<AdmmObserver<Scalar>>& observer = {}) {
  cfg.validate();
  if (!problem.build_operator || !problem.build_rhs || !problem.z_step || !problem.objective)
    throw ValidationError("problem spec is missing a required map");
  const Index d = problem.dim;
  if (d < 1) throw ValidationError("problem dimension must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  const Scalar rho = cfg.rho;

  AdmmState<Scalar> state = initial ? std::move(*initial) : AdmmState<Scalar>::zeros(d);
  detail::check_dim("initial x length", d, state.x.size());
  detail::check_dim("initial z length", d, state.z.size());
  detail::check_dim("initial u length", d, state.u.size());

  const Index refresh = cfg.hessian_refresh_interval.value_or(problem.hessian_refresh_interval);
  auto counter = std::make_shared<Index>(0);

  SolveReport<Scalar> rep;
  std::optional<SymmetricPsdOperator<Scalar>> op;
  std::optional<NystromPreconditioner<Scalar>> precond;

  auto rebuild = [&]() {
    op.emplace(detail::counted(problem.build_operator(state.x), counter));
    detail::check_dim("problem operator dimension", d, op->dim());
    const Index before = *counter;
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep.preconditioner_builds);
    NystromApproximation<Scalar> approx;
    if (cfg.adaptive) {
      AdaptiveConfig<Scalar> acfg;
      acfg.initial_rank = std::min(cfg.sketch_size, d);
      if (cfg.adaptive_max_rank > 0)
        acfg.max_rank = std::clamp(cfg.adaptive_max_rank, acfg.initial_rank, d);
      acfg.rho = rho;
      acfg.tol = cfg.adaptive_tol;
      acfg.seed = seed;
      approx = adaptive_nystrom_approx(*op, acfg);
    } else {
      approx = rand_nystrom_approx(*op, SketchConfig{std::min(cfg.sketch_size, d), seed});
    }
    rep.sketch_matvecs += *counter - before;
    rep.sketch_size_used = approx.rank();
    rep.sketch_reached_max_rank = approx.reached_max_rank;
    precond.emplace(build_preconditioner(approx, rho));
    rep.empirical_condition_number = empirical_condition_number(*precond);
    ++rep.preconditioner_builds;
  };

  rebuild();

  Scalar initial_tol = Scalar(0);
  Scalar rhs_bound = Scalar(0);
  Scalar r_p = Scalar(0), r_d = Scalar(0);
  const Index k0 = state.k;

  for (Index iter = 0; iter < cfg.max_admm_iters; ++iter) {
    const Index k = k0 + iter;
    if (refresh > 0 && iter > 0 && iter % refresh == 0) rebuild();

    SubproblemSystem<Scalar> system{*op, rho, problem.build_rhs(state.x, state.z, state.u, rho)};
    detail::check_dim("problem rhs length", d, system.rhs.size());
    const Scalar rhs_norm = system.rhs.norm();
    rhs_bound = std::max(rhs_bound, rhs_norm);

    Scalar eps_k;
    if (iter == 0) {
      initial_tol = Scalar(1e-2) * (Scalar(1) + rhs_norm);
      eps_k = initial_tol;
    } else {
      eps_k = next_subproblem_tol(r_p, r_d, cfg.schedule, iter, rhs_norm, initial_tol);
    }

    PcgConfig<Scalar> pcfg;
    pcfg.tol = eps_k * rho;
    pcfg.max_iters = cfg.pcg_max_iters;
    if (cfg.use_theory_cap && rhs_bound > Scalar(0)) pcfg.theory_cap = theory_pcg_cap(rhs_bound, eps_k, rho);

    PcgReport<Scalar> pcg;
    try {
      pcg = nystrom_pcg(*op, rho, system.rhs, state.x, *precond, pcfg);
    } catch (const NumericalBreakdown& e) {
      throw AdmmBreakdown(e, k);
    }
    if (observer) observer(IterationInfo<Scalar>{k, system, state.x, pcg, eps_k});

    const Vector<Scalar> z_prev = state.z;
    state.x = std::move(pcg.solution);
    state.z = problem.z_step(state.x + state.u, rho);
    state.u += state.x - state.z;
    state.k = k + 1;

    std::tie(r_p, r_d) = residuals(state, z_prev, rho);
    state.primal_residual_history.push_back(r_p);
    state.dual_residual_history.push_back(r_d);
    state.subproblem_tol_history.push_back(eps_k);
    state.pcg_iteration_counts.push_back(pcg.iterations);
    ++rep.iterations;

    bool done;
    if (cfg.stopping == StoppingMode::residual) {
      done = stopping_check(r_p, r_d, state, cfg);
    } else {
      const Scalar change = (state.z - z_prev).template lpNorm<Eigen::Infinity>();
      const Scalar base = z_prev.template lpNorm<Eigen::Infinity>();
      // From z = 0 the ratio is undefined; a z that stays at zero only counts
      // once x has caught up with it.
      if (base > Scalar(0))
        done = change / base <= cfg.rel_change_tol;
      else
        done = change == Scalar(0) && r_p <= cfg.eps_abs + cfg.eps_rel * state.x.norm();
    }
    if (done) {
      rep.converged = true;
      break;
    }
  }

  rep.primal_residual = r_p;
  rep.dual_residual = r_d;
  rep.solution = state.z;
  rep.objective = problem.objective(rep.solution);
  if (problem.kkt_metric) rep.kkt = problem.kkt_metric(rep.solution);
  rep.total_matvecs = *counter;
  rep.state = std::move(state);
  rep.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

}  // namespace nysadmm
