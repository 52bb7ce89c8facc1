#include <nysadmm/admm.hpp>
#include <nysadmm/problems.hpp>

#include "oracles.hpp"

#include <doctest.h>

#include <limits>

using namespace nysadmm;

namespace {

struct LassoInstance {
  MatrixXd a;
  VectorXd b;
  double gamma;
};

LassoInstance random_lasso(Index n, Index d, double gamma_frac, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LassoInstance inst{oracle::randn(n, d, rng), VectorXd(), 0.0};
  VectorXd truth = VectorXd::Zero(d);
  for (Index j = 0; j < d; j += 3) truth(j) = oracle::randn(1, rng)(0);
  inst.b = inst.a * truth + 0.1 * oracle::randn(n, rng);
  inst.gamma = gamma_frac * (inst.a.transpose() * inst.b).lpNorm<Eigen::Infinity>();
  return inst;
}

ProblemSpec<double> lasso_spec(const LassoInstance& inst) {
  return elastic_net_spec(ElasticNetProblem<double>{inst.a, inst.b, inst.gamma, 0.0});
}

}  // namespace

TEST_SUITE("admm") {
  TEST_CASE("residuals closed cases") {
    auto s = AdmmState<double>::zeros(2);
    CHECK(residuals(s, s.z, 1.0) == std::pair<double, double>{0.0, 0.0});
    s.x << 3, 4;
    const auto [rp, rd] = residuals(s, s.z, 1.0);
    CHECK(rp == 5.0);
    CHECK(rd == 0.0);
  }

  TEST_CASE("residuals match direct norms") {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 10; ++trial) {
      AdmmState<double> s;
      s.x = oracle::randn(7, rng);
      s.z = oracle::randn(7, rng);
      s.u = oracle::randn(7, rng);
      const VectorXd zp = oracle::randn(7, rng);
      const double rho = 0.1 + trial;
      const auto [rp, rd] = residuals(s, zp, rho);
      CHECK(rp == doctest::Approx((s.x - s.z).norm()).epsilon(1e-14));
      CHECK(rd == doctest::Approx(rho * (zp - s.z).norm()).epsilon(1e-14));
    }
    CHECK_THROWS_AS((void)residuals(AdmmState<double>::zeros(3), VectorXd(VectorXd::Zero(2)), 1.0), DimensionError);
  }

  TEST_CASE("stopping check") {
    AdmmConfig<double> cfg;
    auto s = AdmmState<double>::zeros(3);
    CHECK(stopping_check(0.0, 0.0, s, cfg));
    CHECK_FALSE(stopping_check(std::nextafter(cfg.eps_abs, 1.0), 0.0, s, cfg));
    CHECK(stopping_check(cfg.eps_abs, cfg.eps_abs, s, cfg));

    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> unif(0.0, 1e-2);
    for (int trial = 0; trial < 50; ++trial) {
      s.x = oracle::randn(3, rng);
      s.z = oracle::randn(3, rng);
      s.u = oracle::randn(3, rng);
      cfg.rho = 0.5 + unif(rng) * 100.0;
      const double rp = unif(rng), rd = unif(rng);
      const bool expect = rp <= cfg.eps_abs + cfg.eps_rel * std::max(s.x.norm(), s.z.norm()) &&
                          rd <= cfg.eps_abs + cfg.eps_rel * cfg.rho * s.u.norm();
      CHECK(stopping_check(rp, rd, s, cfg) == expect);
    }
  }

  TEST_CASE("subproblem tolerance schedules") {
    const ToleranceSchedule<double> geo{};
    CHECK(next_subproblem_tol(1e-2, 1e-4, geo, 3, 0.0) == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(next_subproblem_tol(0.0, 1e-4, geo, 3, 0.0) == 1e-12);
    CHECK(next_subproblem_tol(10.0, 10.0, geo, 3, 0.0, 0.5) == 0.5);
    const ToleranceSchedule<double> power{ScheduleKind::power_decay, 2.0};
    CHECK(next_subproblem_tol(1.0, 1.0, power, 4, 10.0) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK_THROWS_AS((void)next_subproblem_tol(-1.0, 1.0, geo, 1, 0.0), ValidationError);
  }

  TEST_CASE("theory PCG cap") {
    CHECK(theory_pcg_cap(2.0, 0.5, 4.0) == 4);
    CHECK(theory_pcg_cap(std::exp(1.0), 1.0, 1.0) == 6);
    CHECK(theory_pcg_cap(100.0, 1.0, 1.0) == 14);
    CHECK(theory_pcg_cap(1e-6, 1.0, 1.0) == 1);
    CHECK_THROWS_AS((void)theory_pcg_cap(0.0, 1.0, 1.0), ValidationError);
  }

  TEST_CASE("config validation") {
    AdmmConfig<double> cfg;
    cfg.rho = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.adaptive = true;
    cfg.adaptive_tol = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.schedule = {ScheduleKind::power_decay, 0.0};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.max_admm_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  TEST_CASE("zero-solution lasso converges to exactly zero") {
    auto inst = random_lasso(30, 12, 1.0, 52);
    inst.gamma *= 1.5;
    // z sits at zero from the first step; the dual still has to travel to
    // A^T b / rho, which takes a few hundred iterations at rho = 1.
    AdmmConfig<double> cfg;
    cfg.max_admm_iters = 5000;
    const auto rep = solve(lasso_spec(inst), cfg);
    CHECK(rep.converged);
    CHECK(rep.solution.lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(rep.kkt);
    CHECK(*rep.kkt == 0.0);
  }

  TEST_CASE("small lasso matches the proximal-gradient oracle") {
    const auto inst = random_lasso(40, 20, 0.1, 53);
    const VectorXd ref = oracle::lasso_prox_grad(inst.a, inst.b, inst.gamma);
    const double ref_obj = 0.5 * (inst.a * ref - inst.b).squaredNorm() + inst.gamma * ref.lpNorm<1>();
    CHECK(lasso_kkt<double>(ref, inst.a, inst.b, inst.gamma) <= 1e-8);

    AdmmConfig<double> cfg;
    cfg.eps_abs = 1e-9;
    cfg.eps_rel = 1e-9;
    cfg.max_admm_iters = 5000;
    cfg.sketch_size = 10;
    const auto rep = solve(lasso_spec(inst), cfg);
    CHECK(rep.converged);
    REQUIRE(rep.kkt);
    CHECK(*rep.kkt <= 1e-4);
    CHECK(std::abs(rep.objective - ref_obj) <= 1e-6 * std::abs(ref_obj));
  }

  TEST_CASE("default tolerances still give a small KKT residual") {
    const auto inst = random_lasso(40, 20, 0.1, 54);
    const auto rep = solve(lasso_spec(inst), AdmmConfig<double>{});
    CHECK(rep.converged);
    REQUIRE(rep.kkt);
    CHECK(*rep.kkt <= 1e-2);
    CHECK(rep.state.primal_residual_history.size() == std::size_t(rep.iterations));
    CHECK(rep.state.pcg_iteration_counts.size() == std::size_t(rep.iterations));
    CHECK(rep.state.k == rep.iterations);
  }

  TEST_CASE("power-decay schedule, theory cap and relative-change stopping all converge") {
    const auto inst = random_lasso(50, 25, 0.1, 55);
    const VectorXd ref = oracle::lasso_prox_grad(inst.a, inst.b, inst.gamma);
    SUBCASE("power decay") {
      AdmmConfig<double> cfg;
      cfg.schedule = {ScheduleKind::power_decay, 2.0};
      cfg.rho = 10.0;
      cfg.eps_abs = cfg.eps_rel = 1e-6;
      cfg.max_admm_iters = 10000;
      const auto rep = solve(lasso_spec(inst), cfg);
      CHECK(rep.converged);
      REQUIRE(rep.kkt);
      CHECK(*rep.kkt <= 1e-4);
    }
    SUBCASE("theory cap") {
      AdmmConfig<double> cfg;
      cfg.use_theory_cap = true;
      cfg.eps_abs = cfg.eps_rel = 1e-8;
      cfg.max_admm_iters = 5000;
      const auto rep = solve(lasso_spec(inst), cfg);
      CHECK(rep.converged);
      CHECK((rep.solution - ref).norm() <= 1e-5 * (1.0 + ref.norm()));
    }
    SUBCASE("relative change") {
      AdmmConfig<double> cfg;
      cfg.stopping = StoppingMode::relative_change;
      cfg.rel_change_tol = 1e-8;
      cfg.max_admm_iters = 5000;
      const auto rep = solve(lasso_spec(inst), cfg);
      CHECK(rep.converged);
      CHECK((rep.solution - ref).norm() <= 1e-4 * (1.0 + ref.norm()));
    }
  }

  TEST_CASE("fixed seed is deterministic") {
    const auto inst = random_lasso(40, 20, 0.1, 56);
    AdmmConfig<double> cfg;
    cfg.seed = 9;
    cfg.sketch_size = 5;
    const auto r1 = solve(lasso_spec(inst), cfg);
    const auto r2 = solve(lasso_spec(inst), cfg);
    CHECK(r1.iterations == r2.iterations);
    CHECK((r1.solution - r2.solution).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r1.state.pcg_iteration_counts == r2.state.pcg_iteration_counts);
  }

  TEST_CASE("dual update is u + x - z") {
    const auto inst = random_lasso(30, 15, 0.2, 57);
    const auto spec = lasso_spec(inst);
    AdmmConfig<double> cfg;
    cfg.max_admm_iters = 1;
    auto state = AdmmState<double>::zeros(15);
    for (int k = 0; k < 15; ++k) {
      const VectorXd u_prev = state.u;
      auto rep = solve(spec, cfg, state);
      state = std::move(rep.state);
      CHECK(state.k == k + 1);
      CHECK(state.u == VectorXd(u_prev + (state.x - state.z)));
    }
  }

  TEST_CASE("PCG output is within eps^k of the exact subproblem solution") {
    const auto inst = random_lasso(60, 50, 0.1, 58);
    const MatrixXd ata = inst.a.transpose() * inst.a;
    AdmmConfig<double> cfg;
    cfg.rho = 0.7;
    cfg.sketch_size = 8;
    cfg.eps_abs = cfg.eps_rel = 1e-7;
    cfg.max_admm_iters = 5000;
    int checked = 0;
    const auto rep = solve(lasso_spec(inst), cfg, std::nullopt, [&](const IterationInfo<double>& info) {
      const MatrixXd shifted = ata + info.system.rho * MatrixXd::Identity(50, 50);
      const VectorXd exact = shifted.ldlt().solve(info.system.rhs);
      CHECK((info.pcg.solution - exact).norm() <= info.subproblem_tol * (1.0 + 1e-6));
      ++checked;
    });
    CHECK(checked == rep.iterations);
    CHECK(rep.converged);
  }

  TEST_CASE("breakdown inside PCG carries the ADMM iteration") {
    const auto inst = random_lasso(20, 10, 0.1, 59);
    auto spec = lasso_spec(inst);
    auto poisoned = std::make_shared<bool>(false);
    const auto inner = spec.build_operator;
    spec.build_operator = [inner, poisoned](const VectorXd& x) {
      auto op = std::make_shared<SymmetricPsdOperator<double>>(inner(x));
      return SymmetricPsdOperator<double>(
          op->dim(),
          [op, poisoned](const VectorXd& v) {
            VectorXd out = op->apply(v);
            if (*poisoned) out(0) = std::numeric_limits<double>::infinity();
            return out;
          },
          [op](const MatrixXd& m) { return op->apply_block(m); });
    };
    AdmmConfig<double> cfg;
    cfg.eps_abs = cfg.eps_rel = 1e-12;
    try {
      (void)solve(spec, cfg, std::nullopt, [poisoned](const IterationInfo<double>&) { *poisoned = true; });
      FAIL("expected AdmmBreakdown");
    } catch (const AdmmBreakdown& e) {
      CHECK(e.admm_iteration() == 1);
      CHECK(e.iteration() == 0);
    }
  }

  TEST_CASE("iteration limit is reported, not thrown") {
    const auto inst = random_lasso(30, 15, 0.05, 60);
    AdmmConfig<double> cfg;
    cfg.max_admm_iters = 2;
    cfg.eps_abs = cfg.eps_rel = 1e-14;
    const auto rep = solve(lasso_spec(inst), cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 2);
  }

  TEST_CASE("sketch size is clamped and adaptive sketching works in the loop") {
    const auto inst = random_lasso(30, 8, 0.1, 61);
    AdmmConfig<double> cfg;
    cfg.sketch_size = 50;
    auto rep = solve(lasso_spec(inst), cfg);
    CHECK(rep.sketch_size_used == 8);
    CHECK(rep.sketch_matvecs == 8);
    CHECK(rep.converged);

    cfg.sketch_size = 2;
    cfg.adaptive = true;
    cfg.adaptive_tol = 5.0;
    rep = solve(lasso_spec(inst), cfg);
    CHECK(rep.converged);
    CHECK(rep.sketch_matvecs == rep.sketch_size_used);
    CHECK((rep.empirical_condition_number <= 5.0 || rep.sketch_reached_max_rank));
  }

  TEST_CASE("refresh interval rebuilds the preconditioner") {
    const auto inst = random_lasso(30, 10, 0.1, 62);
    AdmmConfig<double> cfg;
    cfg.hessian_refresh_interval = 3;
    cfg.sketch_size = 4;
    cfg.max_admm_iters = 10;
    cfg.eps_abs = cfg.eps_rel = 1e-14;
    const auto rep = solve(lasso_spec(inst), cfg);
    CHECK(rep.preconditioner_builds == 4);  // at 0, 3, 6, 9
    CHECK(rep.sketch_matvecs == 16);
  }

  TEST_CASE("initial state dimension is checked") {
    const auto inst = random_lasso(10, 5, 0.1, 63);
    CHECK_THROWS_AS((void)solve(lasso_spec(inst), AdmmConfig<double>{}, AdmmState<double>::zeros(4)),
                    DimensionError);
  }
}
