#pragma once

#include <nysadmm/types.hpp>

#include <algorithm>
#include <vector>

namespace nysadmm {

/// sign(v) * max(|v| - tau, 0), the proximal map of tau * |.|_1.
template <typename Scalar>
Vector<Scalar> soft_threshold(const Vector<Scalar>& v, Scalar tau) {
  if (!(tau >= Scalar(0))) throw ValidationError("soft_threshold needs tau >= 0");
  return (v.array().sign() * (v.array().abs() - tau).max(Scalar(0))).matrix();
}

/// The SVM dual feasible set { z : b^T z = 0, 0 <= z <= C } with b in {-1,+1}^n.
template <typename Scalar>
struct BoxHyperplaneSet {
  Vector<Scalar> b;
  Scalar c = Scalar(1);

  void validate() const {
    if (!(c > Scalar(0))) throw ValidationError("box-hyperplane set needs C > 0");
    for (Index i = 0; i < b.size(); ++i)
      if (b(i) != Scalar(1) && b(i) != Scalar(-1))
        throw ValidationError("box-hyperplane label " + std::to_string(i) + " is not -1 or +1");
  }
};

/// Euclidean projection onto a BoxHyperplaneSet.
///
/// The minimizer is z(mu) = clip(v - mu b, 0, C) for the multiplier mu that
/// zeroes g(mu) = b^T z(mu). g is nonincreasing and piecewise linear; each
/// coordinate contributes slope -1 while mu lies in its interval
/// [b_i v_i - C, b_i v_i] (b_i = +1) or [b_i v_i, b_i v_i + C] (b_i = -1).
/// The breakpoints are swept in sorted order and the root interpolated on
/// the crossing segment; the leftmost root is taken on flat stretches.
template <typename Scalar>
Vector<Scalar> project_box_hyperplane(const Vector<Scalar>& v, const BoxHyperplaneSet<Scalar>& set) {
  set.validate();
  const Index n = v.size();
  detail::check_dim("projection label length", n, set.b.size());
  if (n == 0) return v;

  const Scalar c = set.c;
  const auto& b = set.b;
  auto z_at = [&](Scalar mu) -> Vector<Scalar> {
    return (v.array() - mu * b.array()).max(Scalar(0)).min(c).matrix();
  };

  struct Event {
    Scalar mu;
    int slope_change;  // -1 entering the interior, +1 leaving it
  };
  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    const Scalar bv = b(i) * v(i);
    const Scalar lo = b(i) > 0 ? bv - c : bv;
    events.push_back({lo, -1});
    events.push_back({lo + c, +1});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& x, const Event& y) { return x.mu < y.mu; });

  // Left of every breakpoint each b_i = +1 coordinate sits at C and each
  // b_i = -1 coordinate at 0.
  Scalar g = c * Scalar((b.array() > Scalar(0)).count());
  Scalar mu_star = events.front().mu;
  int slope = 0;
  bool found = g <= Scalar(0);
  for (std::size_t k = 0; k < events.size() && !found; ++k) {
    if (k > 0) {
      const Scalar width = events[k].mu - events[k - 1].mu;
      const Scalar g_next = g + Scalar(slope) * width;
      if (g_next <= Scalar(0)) {
        // slope < 0 here since g > 0 >= g_next.
        mu_star = events[k - 1].mu + g / Scalar(-slope);
        mu_star = std::min(mu_star, events[k].mu);
        found = true;
        break;
      }
      g = g_next;
    }
    slope += events[k].slope_change;
  }
  if (!found) mu_star = events.back().mu;

  Vector<Scalar> z = z_at(mu_star);

  // One Newton polish on the multiplier over the interior coordinates.
  const auto interior = (z.array() > Scalar(0)) && (z.array() < c);
  const Index n_int = interior.count();
  if (n_int > 0) {
    const Scalar resid = b.dot(z);
    if (resid != Scalar(0)) z = z_at(mu_star + resid / Scalar(n_int));
  }
  return z;
}

}  // namespace nysadmm
