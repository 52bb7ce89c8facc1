#pragma once

#include <nysadmm/types.hpp>

#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>

namespace nysadmm {

/// Symmetric positive semidefinite linear map on R^dim, held as closures over
/// owned data. Copies share the captured data; the data itself is immutable.
///
/// `matvec` is the only required piece. `block` optionally applies the map to
/// all columns of a matrix at once (the Nystrom sketch uses it); when absent
/// the columns are pushed through `matvec` one by one.
template <typename Scalar>
class SymmetricPsdOperator {
public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  using MatvecFn = std::function<VectorType(const VectorType&)>;
  using BlockFn = std::function<MatrixType(const MatrixType&)>;

  SymmetricPsdOperator(Index dim, MatvecFn matvec, BlockFn block = {})
      : dim_(dim), matvec_(std::move(matvec)), block_(std::move(block)) {
    if (dim_ < 0) throw ValidationError("operator dimension must be nonnegative");
    if (!matvec_) throw ValidationError("operator requires a matvec");
  }

  Index dim() const { return dim_; }

  VectorType apply(const VectorType& v) const {
    detail::check_dim("operator input length", dim_, v.size());
    return matvec_(v);
  }

  MatrixType apply_block(const MatrixType& x) const {
    detail::check_dim("operator input rows", dim_, x.rows());
    if (block_) return block_(x);
    MatrixType out(dim_, x.cols());
    for (Index j = 0; j < x.cols(); ++j) out.col(j) = matvec_(x.col(j));
    return out;
  }

  VectorType operator*(const VectorType& v) const { return apply(v); }

private:
  Index dim_;
  MatvecFn matvec_;
  BlockFn block_;
};

/// The only kernel supported is the Gaussian (RBF) kernel.
enum class KernelKind { rbf };

template <typename Scalar>
struct KernelConfig {
  KernelKind kind = KernelKind::rbf;
  Scalar bandwidth = Scalar(1);

  void validate() const {
    if (!(bandwidth > Scalar(0)) || !std::isfinite(bandwidth))
      throw ValidationError("kernel bandwidth must be positive and finite");
  }
};

/// v -> A^T (w .* (A v)) + h .* v, the linearized subproblem matrix
/// A^T H_loss A + H_reg with diagonal loss and regularizer Hessians.
/// A^T A is never formed.
template <typename Scalar>
SymmetricPsdOperator<Scalar> gram_operator(std::shared_ptr<const Matrix<Scalar>> a,
                                           std::optional<Vector<Scalar>> weights = std::nullopt,
                                           std::optional<Vector<Scalar>> hg_diag = std::nullopt) {
  if (!a) throw ValidationError("gram_operator: null feature matrix");
  const Index n = a->rows();
  const Index d = a->cols();
  if (weights) {
    detail::check_dim("gram_operator weights length (rows of A)", n, weights->size());
    if ((weights->array() < Scalar(0)).any() || !detail::all_finite(*weights))
      throw ValidationError("gram_operator: weights must be finite and nonnegative");
  }
  if (hg_diag) {
    detail::check_dim("gram_operator hg_diag length (cols of A)", d, hg_diag->size());
    if ((hg_diag->array() < Scalar(0)).any() || !detail::all_finite(*hg_diag))
      throw ValidationError("gram_operator: hg_diag must be finite and nonnegative");
  }

  auto w = weights ? std::make_shared<const Vector<Scalar>>(std::move(*weights)) : nullptr;
  auto h = hg_diag ? std::make_shared<const Vector<Scalar>>(std::move(*hg_diag)) : nullptr;

  auto matvec = [a, w, h](const Vector<Scalar>& v) -> Vector<Scalar> {
    Vector<Scalar> av = (*a) * v;
    if (w) av.array() *= w->array();
    Vector<Scalar> out = a->transpose() * av;
    if (h) out.array() += h->array() * v.array();
    return out;
  };
  auto block = [a, w, h](const Matrix<Scalar>& x) -> Matrix<Scalar> {
    Matrix<Scalar> ax = (*a) * x;
    if (w) ax = w->asDiagonal() * ax;
    Matrix<Scalar> out = a->transpose() * ax;
    if (h) out += h->asDiagonal() * x;
    return out;
  };
  return SymmetricPsdOperator<Scalar>(d, std::move(matvec), std::move(block));
}

template <typename Scalar>
SymmetricPsdOperator<Scalar> gram_operator(const Matrix<Scalar>& a,
                                           std::optional<Vector<Scalar>> weights = std::nullopt,
                                           std::optional<Vector<Scalar>> hg_diag = std::nullopt) {
  return gram_operator<Scalar>(std::make_shared<const Matrix<Scalar>>(a), std::move(weights),
                               std::move(hg_diag));
}

/// n x n kernel matrix over the rows of A: exp(-|a_i - a_j|^2 / (2 bandwidth^2)).
template <typename Scalar>
Matrix<Scalar> kernel_matrix(const Matrix<Scalar>& a, const KernelConfig<Scalar>& cfg) {
  cfg.validate();
  const Index n = a.rows();
  const Vector<Scalar> sq = a.rowwise().squaredNorm();
  const Matrix<Scalar> g = a * a.transpose();
  const Scalar scale = Scalar(-1) / (Scalar(2) * cfg.bandwidth * cfg.bandwidth);

  Matrix<Scalar> k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = Scalar(1);
    for (Index i = j + 1; i < n; ++i) {
      const Scalar dist2 = std::max(Scalar(0), sq(i) + sq(j) - Scalar(2) * g(i, j));
      k(i, j) = k(j, i) = std::exp(scale * dist2);
    }
  }
  return k;
}

/// v -> b .* (K (b .* v)) for labels b in {-1, +1}: the SVM dual Hessian.
template <typename Scalar>
SymmetricPsdOperator<Scalar> svm_operator(const Matrix<Scalar>& k, const Vector<Scalar>& b) {
  detail::check_dim("svm_operator kernel columns", k.rows(), k.cols());
  detail::check_dim("svm_operator label length", k.rows(), b.size());
  for (Index i = 0; i < b.size(); ++i)
    if (b(i) != Scalar(1) && b(i) != Scalar(-1))
      throw ValidationError("svm_operator: label " + std::to_string(i) + " is not -1 or +1");

  auto kp = std::make_shared<const Matrix<Scalar>>(k);
  auto bp = std::make_shared<const Vector<Scalar>>(b);
  auto matvec = [kp, bp](const Vector<Scalar>& v) -> Vector<Scalar> {
    Vector<Scalar> bv = bp->cwiseProduct(v);
    return bp->cwiseProduct((*kp) * bv);
  };
  auto block = [kp, bp](const Matrix<Scalar>& x) -> Matrix<Scalar> {
    return bp->asDiagonal() * ((*kp) * (bp->asDiagonal() * x));
  };
  return SymmetricPsdOperator<Scalar>(k.rows(), std::move(matvec), std::move(block));
}

/// Random Fourier features for the RBF kernel, one phase-shifted cosine per
/// feature: Phi_ij = sqrt(2/D) cos(<w_j, a_i> + beta_j), w_j ~ N(0, I/bandwidth^2),
/// beta_j ~ U[0, 2 pi). Phi Phi^T approximates kernel_matrix(A) in expectation.
template <typename Scalar>
Matrix<Scalar> random_features(const Matrix<Scalar>& a, Index target_dim,
                               const KernelConfig<Scalar>& cfg, std::uint64_t seed) {
  cfg.validate();
  if (target_dim < 1) throw ValidationError("random_features: target_dim must be >= 1");

  std::mt19937_64 rng(seed);
  Matrix<Scalar> omega = gaussian_matrix<Scalar>(a.cols(), target_dim, rng) / cfg.bandwidth;
  std::uniform_real_distribution<Scalar> phase(Scalar(0), Scalar(2) * std::numbers::pi_v<Scalar>);
  Vector<Scalar> beta(target_dim);
  for (Index j = 0; j < target_dim; ++j) beta(j) = phase(rng);

  const Scalar scale = std::sqrt(Scalar(2) / Scalar(target_dim));
  Matrix<Scalar> proj = a * omega;
  proj.rowwise() += beta.transpose();
  return scale * proj.array().cos().matrix();
}

}  // namespace nysadmm
