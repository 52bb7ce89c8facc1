#pragma once

#include <nysadmm/admm.hpp>
#include <nysadmm/linops.hpp>
#include <nysadmm/prox.hpp>
#include <nysadmm/types.hpp>

#include <memory>
#include <utility>

namespace nysadmm {

/// 1/2 |Ax - b|^2 + ridge/2 |x|^2 + l1 |x|_1. Pure lasso when ridge_weight = 0.
template <typename Scalar>
struct ElasticNetProblem {
  Matrix<Scalar> a;
  Vector<Scalar> b;
  Scalar l1_weight = Scalar(1);
  Scalar ridge_weight = Scalar(0);

  /// The single-parameter form 1/2 |Ax-b|^2 + (1-gamma)/2 |x|^2 + gamma |x|_1.
  static ElasticNetProblem from_mixing(Matrix<Scalar> a, Vector<Scalar> b, Scalar gamma) {
    if (!(gamma >= Scalar(0) && gamma <= Scalar(1)))
      throw ValidationError("elastic-net mixing parameter must lie in [0, 1]");
    return {std::move(a), std::move(b), gamma, Scalar(1) - gamma};
  }

  void validate() const {
    detail::check_dim("elastic net response length (rows of A)", a.rows(), b.size());
    if (!(l1_weight >= Scalar(0)) || !(ridge_weight >= Scalar(0)))
      throw ValidationError("elastic net weights must be nonnegative");
    if (!detail::all_finite(a) || !detail::all_finite(b))
      throw ValidationError("elastic net data must be finite");
  }
};

/// -sum_i (b_i (Ax)_i - log(1 + exp((Ax)_i))) + gamma |x|_1 with b_i in {0, 1}.
template <typename Scalar>
struct LogisticProblem {
  Matrix<Scalar> a;
  Vector<Scalar> b;
  Scalar gamma = Scalar(1);

  void validate() const {
    detail::check_dim("logistic label length (rows of A)", a.rows(), b.size());
    if (!(gamma >= Scalar(0))) throw ValidationError("logistic gamma must be nonnegative");
    for (Index i = 0; i < b.size(); ++i)
      if (b(i) != Scalar(0) && b(i) != Scalar(1))
        throw ValidationError("logistic label " + std::to_string(i) + " is not 0 or 1");
    if (!detail::all_finite(a)) throw ValidationError("logistic features must be finite");
  }
};

/// Dual SVM: min 1/2 x^T diag(b) K diag(b) x - 1^T x  s.t. b^T x = 0, 0 <= x <= C.
template <typename Scalar>
struct SvmProblem {
  Matrix<Scalar> k;
  Vector<Scalar> b;
  Scalar c = Scalar(1);

  void validate() const {
    detail::check_dim("SVM kernel columns", k.rows(), k.cols());
    BoxHyperplaneSet<Scalar>{b, c}.validate();
    detail::check_dim("SVM label length", k.rows(), b.size());
    const Scalar knorm = k.norm();
    if ((k - k.transpose()).norm() > Scalar(1e-10) * std::max(Scalar(1), knorm))
      throw ValidationError("SVM kernel matrix is not symmetric");
    std::mt19937_64 rng(0x5eed);
    for (int probe = 0; probe < 5; ++probe) {
      const Vector<Scalar> v = gaussian_matrix<Scalar>(k.rows(), 1, rng);
      if (v.dot(k * v) < Scalar(-1e-10) * v.squaredNorm() * std::max(Scalar(1), knorm))
        throw ValidationError("SVM kernel matrix is not positive semidefinite");
    }
  }
};

/// Relative KKT residual of a lasso point:
/// |x - prox_{gamma|.|_1}(x - A^T(Ax - b))| / (1 + |x| + |Ax - b|).
template <typename Scalar>
Scalar lasso_kkt(const Vector<Scalar>& x, const Matrix<Scalar>& a, const Vector<Scalar>& b, Scalar gamma) {
  detail::check_dim("lasso_kkt x length (cols of A)", a.cols(), x.size());
  detail::check_dim("lasso_kkt b length (rows of A)", a.rows(), b.size());
  const Vector<Scalar> resid = a * x - b;
  const Vector<Scalar> step = soft_threshold<Scalar>(x - a.transpose() * resid, gamma);
  return (x - step).norm() / (Scalar(1) + x.norm() + resid.norm());
}

/// Lower bound applied to the logistic IRLS weights.
template <typename Scalar>
inline constexpr Scalar logistic_weight_floor = Scalar(1e-12);

/// IRLS weights and working responses at the margins t = A x:
///   w_i = 1 / (2 + e^{-t_i} + e^{t_i}),  q_i = t_i + (b_i - sigmoid(t_i)) / w_i.
/// Evaluated through e^{-|t|} so nothing overflows; w is floored at 1e-12.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> logistic_weights(const Vector<Scalar>& t, const Vector<Scalar>& b) {
  detail::check_dim("logistic_weights label length", t.size(), b.size());
  const Index n = t.size();
  Vector<Scalar> w(n), q(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar e = std::exp(-std::abs(t(i)));
    // b - sigmoid(t) without cancellation: for t >= 0, 1 - sigmoid(t) = e / (1 + e).
    const Scalar resid = t(i) >= Scalar(0) ? (b(i) - Scalar(1)) + e / (Scalar(1) + e) : b(i) - e / (Scalar(1) + e);
    w(i) = std::max(e / ((Scalar(1) + e) * (Scalar(1) + e)), logistic_weight_floor<Scalar>);
    q(i) = t(i) + resid / w(i);
  }
  return {std::move(w), std::move(q)};
}

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar t) {
  return std::max(t, Scalar(0)) + std::log1p(std::exp(-std::abs(t)));
}

}  // namespace detail

template <typename Scalar>
Scalar logistic_objective(const Vector<Scalar>& x, const Matrix<Scalar>& a, const Vector<Scalar>& b,
                          Scalar gamma) {
  const Vector<Scalar> t = a * x;
  Scalar loss = Scalar(0);
  for (Index i = 0; i < t.size(); ++i) loss += detail::softplus(t(i)) - b(i) * t(i);
  return loss + gamma * x.template lpNorm<1>();
}

template <typename Scalar>
Scalar elastic_net_objective(const Vector<Scalar>& x, const ElasticNetProblem<Scalar>& p) {
  return Scalar(0.5) * (p.a * x - p.b).squaredNorm() + Scalar(0.5) * p.ridge_weight * x.squaredNorm() +
         p.l1_weight * x.template lpNorm<1>();
}

template <typename Scalar>
Scalar svm_dual_objective(const Vector<Scalar>& x, const Matrix<Scalar>& k, const Vector<Scalar>& b) {
  const Vector<Scalar> bx = b.cwiseProduct(x);
  return Scalar(0.5) * bx.dot(k * bx) - x.sum();
}

template <typename Scalar>
ProblemSpec<Scalar> elastic_net_spec(const ElasticNetProblem<Scalar>& p) {
  p.validate();
  auto data = std::make_shared<const ElasticNetProblem<Scalar>>(p);
  auto a = std::make_shared<const Matrix<Scalar>>(p.a);
  // For a quadratic loss the linearized rhs collapses to rho (z - u) + A^T b.
  auto atb = std::make_shared<const Vector<Scalar>>(p.a.transpose() * p.b);
  const Index d = p.a.cols();

  ProblemSpec<Scalar> spec;
  spec.dim = d;
  spec.build_operator = [a, data, d](const Vector<Scalar>&) {
    std::optional<Vector<Scalar>> hg;
    if (data->ridge_weight > Scalar(0)) hg = Vector<Scalar>::Constant(d, data->ridge_weight);
    return gram_operator<Scalar>(a, std::nullopt, std::move(hg));
  };
  spec.build_rhs = [atb](const Vector<Scalar>&, const Vector<Scalar>& z, const Vector<Scalar>& u, Scalar rho) {
    return Vector<Scalar>(rho * (z - u) + *atb);
  };
  spec.z_step = [data](const Vector<Scalar>& v, Scalar rho) {
    return soft_threshold<Scalar>(v, data->l1_weight / rho);
  };
  spec.objective = [data](const Vector<Scalar>& x) { return elastic_net_objective(x, *data); };
  if (p.ridge_weight == Scalar(0)) {
    spec.kkt_metric = [data](const Vector<Scalar>& x) {
      return lasso_kkt<Scalar>(x, data->a, data->b, data->l1_weight);
    };
  }
  spec.hessian_refresh_interval = 0;
  return spec;
}

template <typename Scalar>
ProblemSpec<Scalar> logistic_spec(const LogisticProblem<Scalar>& p) {
  p.validate();
  auto data = std::make_shared<const LogisticProblem<Scalar>>(p);
  auto a = std::make_shared<const Matrix<Scalar>>(p.a);

  ProblemSpec<Scalar> spec;
  spec.dim = p.a.cols();
  spec.build_operator = [a, data](const Vector<Scalar>& x) {
    auto [w, q] = logistic_weights<Scalar>((*a) * x, data->b);
    return gram_operator<Scalar>(a, std::move(w));
  };
  // (A^T diag(w) A + rho I) x = rho z - rho u + A^T diag(w) q
  spec.build_rhs = [a, data](const Vector<Scalar>& x, const Vector<Scalar>& z, const Vector<Scalar>& u,
                             Scalar rho) {
    auto [w, q] = logistic_weights<Scalar>((*a) * x, data->b);
    return Vector<Scalar>(rho * (z - u) + a->transpose() * w.cwiseProduct(q));
  };
  spec.z_step = [data](const Vector<Scalar>& v, Scalar rho) {
    return soft_threshold<Scalar>(v, data->gamma / rho);
  };
  spec.objective = [data](const Vector<Scalar>& x) {
    return logistic_objective<Scalar>(x, data->a, data->b, data->gamma);
  };
  spec.hessian_refresh_interval = 1;
  return spec;
}

template <typename Scalar>
ProblemSpec<Scalar> svm_spec(const SvmProblem<Scalar>& p) {
  p.validate();
  auto data = std::make_shared<const SvmProblem<Scalar>>(p);
  const SymmetricPsdOperator<Scalar> op = svm_operator<Scalar>(p.k, p.b);

  ProblemSpec<Scalar> spec;
  spec.dim = p.k.rows();
  spec.build_operator = [op](const Vector<Scalar>&) { return op; };
  // H x - grad l(x) - grad g(x) = +1 for the quadratic dual loss and g = -1^T x.
  spec.build_rhs = [](const Vector<Scalar>&, const Vector<Scalar>& z, const Vector<Scalar>& u, Scalar rho) {
    return Vector<Scalar>((rho * (z - u)).array() + Scalar(1));
  };
  spec.z_step = [data](const Vector<Scalar>& v, Scalar) {
    return project_box_hyperplane<Scalar>(v, BoxHyperplaneSet<Scalar>{data->b, data->c});
  };
  spec.objective = [data](const Vector<Scalar>& x) { return svm_dual_objective<Scalar>(x, data->k, data->b); };
  spec.hessian_refresh_interval = 0;
  return spec;
}

/// Intercept of the SVM decision function from a dual solution, averaged over
/// margin support vectors (0 < alpha < C). Falls back to all support vectors,
/// then to 0.
template <typename Scalar>
Scalar svm_bias(const Matrix<Scalar>& k, const Vector<Scalar>& b, const Vector<Scalar>& alpha, Scalar c) {
  const Vector<Scalar> f = k * b.cwiseProduct(alpha);
  const Scalar slack = Scalar(1e-8) * c;
  Scalar sum = Scalar(0);
  Index count = 0;
  for (Index i = 0; i < alpha.size(); ++i)
    if (alpha(i) > slack && alpha(i) < c - slack) {
      sum += b(i) - f(i);
      ++count;
    }
  if (count == 0)
    for (Index i = 0; i < alpha.size(); ++i)
      if (alpha(i) > slack) {
        sum += b(i) - f(i);
        ++count;
      }
  return count ? sum / Scalar(count) : Scalar(0);
}

}  // namespace nysadmm
