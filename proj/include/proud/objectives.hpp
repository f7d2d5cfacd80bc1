#ifndef PROUD_OBJECTIVES_HPP_
#define PROUD_OBJECTIVES_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "proud/error.hpp"

namespace proud {

/// f(x) = mean over j in mask of (x_j - anchor_j)^2. Mask indices are 0-based.
struct AnchorObjective {
  Eigen::VectorXd anchor;
  std::vector<int> mask;

  double value(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      const double r = x[mask[k]] - anchor[static_cast<Eigen::Index>(k)];
      acc += r * r;
    }
    return acc / static_cast<double>(mask.size());
  }

  void gradient(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    const double c = 2.0 / static_cast<double>(mask.size());
    for (std::size_t k = 0; k < mask.size(); ++k) {
      out[mask[k]] = c * (x[mask[k]] - anchor[static_cast<Eigen::Index>(k)]);
    }
  }
};

/// User-registered differentiable objective.
struct CustomObjective {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> df;
};

using Objective = std::variant<AnchorObjective, CustomObjective>;

/// Front of two anchor objectives sharing a mask: {(k^2 D, (1-k)^2 D) : k in [0,1]},
/// D = |a - b|^2 / |mask|, with objective 1 anchored at a and objective 2 at b.
struct SegmentFront {
  double gap = 0.0;  // D

  Eigen::VectorXd point(double k) const {
    Eigen::VectorXd y(2);
    y << k * k * gap, (1.0 - k) * (1.0 - k) * gap;
    return y;
  }
};

/// Front of three anchor objectives sharing a mask: images of the anchor triangle.
/// Objective i is anchored at corner i; `gram` holds <a_i - a_0, a_j - a_0> / |mask|.
struct TriangleFront {
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();  // <a_i, a_j>/|mask| relative to a_0

  // F_i(b) for barycentric b: |sum_j b_j a_j - a_i|^2 / |mask|.
  Eigen::Vector3d point(const Eigen::Vector3d& b) const {
    Eigen::Vector3d y;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d c = b;
      c[i] -= 1.0;
      y[i] = c.dot(gram * c);
    }
    return y;
  }
};

using ParetoFront = std::variant<std::monostate, SegmentFront, TriangleFront>;

namespace detail {

// Real roots of a*k^3 + b*k^2 + c*k + d on [0,1], by bisection on monotone pieces.
inline std::vector<double> cubic_roots_unit(double a, double b, double c, double d) {
  auto p = [&](double k) { return ((a * k + b) * k + c) * k + d; };
  std::vector<double> cuts{0.0};
  // Critical points of the cubic: 3a k^2 + 2b k + c = 0.
  const double qa = 3.0 * a, qb = 2.0 * b, qc = c;
  if (qa != 0.0) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      const double q = -0.5 * (qb + std::copysign(s, qb));
      for (double r : {q / qa, q != 0.0 ? qc / q : 0.0}) {
        if (r > 0.0 && r < 1.0) cuts.push_back(r);
      }
    }
  } else if (qb != 0.0) {
    const double r = -qc / qb;
    if (r > 0.0 && r < 1.0) cuts.push_back(r);
  }
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = cuts[i + 1];
    double plo = p(lo), phi = p(hi);
    if (plo == 0.0) roots.push_back(lo);
    if (plo * phi >= 0.0) continue;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      const double pm = p(mid);
      if ((pm < 0.0) == (plo < 0.0)) {
        lo = mid;
        plo = pm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  if (p(1.0) == 0.0) roots.push_back(1.0);
  return roots;
}

inline double segment_front_distance(const SegmentFront& f, const Eigen::VectorXd& y) {
  const double D = f.gap;
  std::vector<double> cand{0.0, 1.0};
  if (D > 0.0) {
    // Stationarity of |F(k) - y|^2 in k.
    for (double r : cubic_roots_unit(2.0 * D, -3.0 * D, 3.0 * D - y[0] - y[1], y[1] - D)) cand.push_back(r);
  }
  double best = std::numeric_limits<double>::infinity();
  for (double k : cand) best = std::min(best, (f.point(k) - y).norm());
  return best;
}

inline double triangle_front_distance(const TriangleFront& f, const Eigen::VectorXd& y) {
  const Eigen::Vector3d target = y.head<3>();
  auto bary = [](double u, double v) { return Eigen::Vector3d(1.0 - u - v, u, v); };
  auto cost = [&](double u, double v) { return (f.point(bary(u, v)) - target).squaredNorm(); };

  // Minimum over the exact edge minima and an interior Levenberg-Marquardt refinement.
  constexpr int kGrid = 40;
  double bc = std::numeric_limits<double>::infinity();

  // Edges: along b = e_i + t (e_j - e_i) each F_k is quadratic in t, so the squared
  // distance is a quartic whose critical points are roots of a cubic.
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    Eigen::Vector3d dir = Eigen::Vector3d::Zero();
    dir[j] += 1.0;
    dir[i] -= 1.0;
    const double a2 = dir.dot(f.gram * dir);
    double c3 = 0.0, c2 = 0.0, c1 = 0.0, c0 = 0.0;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d base = Eigen::Vector3d::Zero();
      base[i] += 1.0;
      base[k] -= 1.0;
      const double a0 = base.dot(f.gram * base) - target[k];
      const double a1 = 2.0 * dir.dot(f.gram * base);
      // (a0 + a1 t + a2 t^2)(a1 + 2 a2 t)
      c3 += 2.0 * a2 * a2;
      c2 += 3.0 * a1 * a2;
      c1 += a1 * a1 + 2.0 * a0 * a2;
      c0 += a0 * a1;
    }
    std::vector<double> ts = cubic_roots_unit(c3, c2, c1, c0);
    ts.push_back(0.0);
    ts.push_back(1.0);
    for (double t : ts) {
      Eigen::Vector3d b = Eigen::Vector3d::Zero();
      b[i] = 1.0 - t;
      b[j] = t;
      bc = std::min(bc, (f.point(b) - target).squaredNorm());
    }
  }

  // Interior: Levenberg-Marquardt from the best grid point, accepting only steps
  // that stay inside the triangle.
  double iu = 0.0, iv = 0.0, ic = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kGrid; ++i) {
    for (int j = 1; i + j < kGrid; ++j) {
      const double u = static_cast<double>(i) / kGrid, v = static_cast<double>(j) / kGrid;
      const double c = cost(u, v);
      if (c < ic) {
        ic = c;
        iu = u;
        iv = v;
      }
    }
  }
  double mu = 1e-6;
  for (int it = 0; it < 100 && std::isfinite(ic); ++it) {
    const Eigen::Vector3d b = bary(iu, iv);
    const Eigen::Vector3d r = f.point(b) - target;
    // dF_i/db = 2 * gram * (b - e_i); chain through b = (1-u-v, u, v).
    Eigen::Matrix<double, 3, 2> J;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d c = b;
      c[i] -= 1.0;
      const Eigen::Vector3d g = 2.0 * (f.gram * c);
      J(i, 0) = g[1] - g[0];
      J(i, 1) = g[2] - g[0];
    }
    const Eigen::Matrix2d H = J.transpose() * J;
    const Eigen::Vector2d grad = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      const Eigen::Vector2d step = (H + mu * Eigen::Matrix2d::Identity()).ldlt().solve(-grad);
      const double nu = iu + step[0], nv = iv + step[1];
      if (nu < 0.0 || nv < 0.0 || nu + nv > 1.0) {
        mu *= 10.0;
        continue;
      }
      const double c = cost(nu, nv);
      if (c < ic) {
        const double dstep = std::abs(nu - iu) + std::abs(nv - iv);
        ic = c;
        iu = nu;
        iv = nv;
        mu = std::max(mu * 0.3, 1e-15);
        improved = dstep > 1e-15;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  bc = std::min(bc, ic);
  return std::sqrt(bc);
}

}  // namespace detail

/// Ordered objectives F = [f_1..f_m] over R^d, with an optional analytic front.
class ObjectiveSet {
 public:
  ObjectiveSet(int dim, std::vector<Objective> objectives, ParetoFront front = {})
      : dim_(dim), objectives_(std::move(objectives)), front_(front) {
    if (dim_ < 1) throw std::invalid_argument("objective dimension must be positive");
    if (objectives_.empty()) throw std::invalid_argument("objective set needs at least one objective");
    for (const auto& o : objectives_) {
      if (const auto* a = std::get_if<AnchorObjective>(&o)) {
        if (a->mask.empty()) throw std::invalid_argument("anchor mask must be nonempty");
        if (static_cast<std::size_t>(a->anchor.size()) != a->mask.size()) {
          throw DimensionError("anchor size must equal mask size");
        }
        std::vector<int> sorted = a->mask;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
          throw std::invalid_argument("anchor mask indices must be unique");
        }
        if (sorted.front() < 0 || sorted.back() >= dim_) throw std::out_of_range("anchor mask index out of range");
      } else {
        const auto& c = std::get<CustomObjective>(o);
        if (!c.f || !c.df) throw std::invalid_argument("custom objective needs value and gradient");
      }
    }
    if (std::holds_alternative<SegmentFront>(front_) && size() != 2) {
      throw std::invalid_argument("segment front needs exactly two objectives");
    }
    if (std::holds_alternative<TriangleFront>(front_) && size() != 3) {
      throw std::invalid_argument("triangle front needs exactly three objectives");
    }
  }

  int dim() const noexcept { return dim_; }
  int size() const noexcept { return static_cast<int>(objectives_.size()); }
  const std::vector<Objective>& objectives() const noexcept { return objectives_; }
  const ParetoFront& front() const noexcept { return front_; }
  bool has_front() const noexcept { return !std::holds_alternative<std::monostate>(front_); }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    detail::require_dim(x.size(), dim_, "objective eval");
    Eigen::VectorXd y(size());
    for (int i = 0; i < size(); ++i) {
      const auto& o = objectives_[static_cast<std::size_t>(i)];
      if (const auto* a = std::get_if<AnchorObjective>(&o)) {
        y[i] = a->value(x);
      } else {
        y[i] = std::get<CustomObjective>(o).f(x);
      }
    }
    return y;
  }

  /// Gradients as the columns of a d x m matrix.
  Eigen::MatrixXd grad(const Eigen::VectorXd& x) const {
    detail::require_dim(x.size(), dim_, "objective grad");
    Eigen::MatrixXd G(dim_, size());
    for (int i = 0; i < size(); ++i) {
      const auto& o = objectives_[static_cast<std::size_t>(i)];
      if (const auto* a = std::get_if<AnchorObjective>(&o)) {
        a->gradient(x, G.col(i));
      } else {
        Eigen::VectorXd g = std::get<CustomObjective>(o).df(x);
        detail::require_dim(g.size(), dim_, "custom objective gradient");
        G.col(i) = g;
      }
    }
    return G;
  }

  /// Euclidean distance in objective space from y to the analytic front.
  double front_distance(const Eigen::VectorXd& y) const {
    detail::require_dim(y.size(), size(), "front_distance");
    if (const auto* s = std::get_if<SegmentFront>(&front_)) return detail::segment_front_distance(*s, y);
    if (const auto* t = std::get_if<TriangleFront>(&front_)) return detail::triangle_front_distance(*t, y);
    throw std::logic_error("objective set has no analytic front");
  }

  /// Deterministic discretization of the front. Segment: n points uniform in the
  /// front parameter. Triangle: the barycentric lattice with at least n points.
  std::vector<Eigen::VectorXd> front_samples(int n) const {
    if (n < 1) throw std::invalid_argument("front sample count must be positive");
    std::vector<Eigen::VectorXd> out;
    if (const auto* s = std::get_if<SegmentFront>(&front_)) {
      out.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        out.push_back(s->point(n == 1 ? 0.5 : static_cast<double>(i) / (n - 1)));
      }
      return out;
    }
    if (const auto* t = std::get_if<TriangleFront>(&front_)) {
      int k = 0;
      while ((k + 1) * (k + 2) / 2 < n) ++k;
      out.reserve(static_cast<std::size_t>((k + 1) * (k + 2) / 2));
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; i + j <= k; ++j) {
          const double u = k == 0 ? 1.0 / 3.0 : static_cast<double>(i) / k;
          const double v = k == 0 ? 1.0 / 3.0 : static_cast<double>(j) / k;
          out.push_back(t->point(Eigen::Vector3d(1.0 - u - v, u, v)));
        }
      }
      return out;
    }
    throw std::logic_error("objective set has no analytic front");
  }

 private:
  int dim_;
  std::vector<Objective> objectives_;
  ParetoFront front_;
};

inline std::vector<int> full_mask(int d) {
  std::vector<int> m(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) m[static_cast<std::size_t>(j)] = j;
  return m;
}

/// Two anchors sharing a mask, with the segment front attached.
inline ObjectiveSet two_anchor_set(int d, const Eigen::VectorXd& a, const Eigen::VectorXd& b, std::vector<int> mask) {
  const double gap = (a - b).squaredNorm() / static_cast<double>(mask.size());
  return ObjectiveSet(d, {AnchorObjective{a, mask}, AnchorObjective{b, mask}}, SegmentFront{gap});
}

/// Three anchors sharing a mask, with the triangle front attached.
inline ObjectiveSet three_anchor_set(int d, const std::array<Eigen::VectorXd, 3>& anchors, std::vector<int> mask) {
  TriangleFront tri;
  const double n = static_cast<double>(mask.size());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      tri.gram(i, j) = (anchors[static_cast<std::size_t>(i)] - anchors[0]).dot(anchors[static_cast<std::size_t>(j)] - anchors[0]) / n;
    }
  }
  return ObjectiveSet(d,
                      {AnchorObjective{anchors[0], mask}, AnchorObjective{anchors[1], mask},
                       AnchorObjective{anchors[2], mask}},
                      tri);
}

/// f1 anchored at all-ones, f2 at all-0.5, over every coordinate.
inline ObjectiveSet two_anchor_benchmark(int d) {
  return two_anchor_set(d, Eigen::VectorXd::Ones(d), Eigen::VectorXd::Constant(d, 0.5), full_mask(d));
}

/// Anchors black (0), red (0.5 on channel 0) and yellow (0.5 on channels 0, 1),
/// with channels repeating every three coordinates.
inline ObjectiveSet three_anchor_benchmark(int d) {
  Eigen::VectorXd black = Eigen::VectorXd::Zero(d), red = black, yellow = black;
  for (int j = 0; j < d; ++j) {
    if (j % 3 == 0) red[j] = yellow[j] = 0.5;
    if (j % 3 == 1) yellow[j] = 0.5;
  }
  return three_anchor_set(d, {black, red, yellow}, full_mask(d));
}

}  // namespace proud

#endif  // PROUD_OBJECTIVES_HPP_
