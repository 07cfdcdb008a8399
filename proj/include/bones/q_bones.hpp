#pragma once

#include <bones/errors.hpp>
#include <bones/families.hpp>
#include <bones/st_bones.hpp>
#include <bones/symbolic.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bones {

struct QPoint {
  double v = 0, w = 0;
  friend bool operator==(const QPoint&, const QPoint&) = default;
};

enum class QVertexKind { primary, secondary, boundary };

inline const char* to_string(QVertexKind k) {
  switch (k) {
    case QVertexKind::primary: return "primary";
    case QVertexKind::secondary: return "secondary";
    default: return "boundary";
  }
}

struct QVertex {
  QPoint p;
  double s = 0;  // polyline position: segment index plus fraction
  QVertexKind kind = QVertexKind::boundary;
  std::optional<JointOrderData> joint;
};

struct TraceMeta {
  double step_init = 1e-3;
  double step_min = 0;
  std::size_t accepted = 0, rejected = 0;
  double max_residual = 0;
};

struct QBone {
  Side side = Side::left;
  OrderData od;
  std::vector<QPoint> polyline;
  std::vector<QVertex> vertices;
  TraceMeta meta;
};

struct QTraceOptions {
  double step_init = 1e-3;
  double step_min = 1e-8;
  double tol_corr = 1e-11;
  std::size_t max_steps = 2000000;
};

namespace detail {

// gamma_1 after k lane steps, with partials.
inline Jet q_gamma1(double v, double w, std::size_t k) { return q_jet(v, w, 0.5, 1, k); }
inline Jet q_gamma2(double v, double w, std::size_t k) { return q_jet(v, w, 0.5, 2, k); }

inline std::vector<double> q_points(double v, double w, int lane, std::size_t k) {
  QPair p{v, w};
  std::vector<double> out;
  double x = 0.5;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(x);
    x = p.map(lane, x);
    lane = other_lane(lane);
  }
  return out;
}

// Period exactly 2n with the given order-data.
inline bool q_cycle_ok(double v, double w, int lane, const OrderData& od, double tol) {
  std::size_t n = std::size_t(od.n());
  auto pts = q_points(v, w, lane, 2 * n);
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    if (std::abs(pts[2 * d] - 0.5) <= 10 * tol) return false;
  }
  try {
    return order_data_of_cycle(pts, lane) == od;
  } catch (const domain_error&) {
    return false;
  }
}

// Root of G(v, 1) = gamma_1 after 2n steps minus 1/2, bracketed by [a, b].
inline double q_boundary_root(std::size_t steps, double a, double b) {
  auto g = [&](double v) { return q_gamma1(v, 1.0, steps).x - 0.5; };
  double ga = g(a), gb = g(b);
  if (ga == 0) return a;
  if (gb == 0) return b;
  if ((ga > 0) == (gb > 0)) throw numeric_error("boundary root not bracketed");
  double x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    Jet j = q_gamma1(x, 1.0, steps);
    double gx = j.x - 0.5;
    if (gx == 0) return x;
    if ((gx > 0) == (ga > 0)) {
      a = x;
      ga = gx;
    } else {
      b = x;
    }
    double nx = j.dv != 0 ? x - gx / j.dv : 0.5 * (a + b);
    if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
    if (std::abs(nx - x) < 1e-16 || b - a < 1e-16) return nx;
    x = nx;
  }
  return x;
}

inline std::pair<double, double> q_left_endpoints(const OrderData& od, std::size_t samples, double tol) {
  std::size_t steps = std::size_t(2 * od.n());
  std::vector<double> roots;
  double prev_v = 0.0, prev_g = q_gamma1(0.0, 1.0, steps).x - 0.5;
  for (std::size_t i = 1; i <= samples; ++i) {
    double v = double(i) / double(samples);
    double g = q_gamma1(v, 1.0, steps).x - 0.5;
    if ((prev_g > 0) != (g > 0) || g == 0) {
      double r = q_boundary_root(steps, prev_v, v);
      if (q_cycle_ok(r, 1.0, 1, od, tol)) {
        if (roots.empty() || std::abs(roots.back() - r) > 1e-12) roots.push_back(r);
      }
    }
    prev_v = v;
    prev_g = g;
  }
  if (roots.size() != 2)
    throw numeric_error("found " + std::to_string(roots.size()) + " boundary endpoints for " + od.str());
  return {roots[0], roots[1]};
}

inline std::size_t default_samples(const OrderData& od) { return od.n() <= 4 ? (1u << 14) : (1u << 17); }

inline std::size_t gamma2_position(const OrderData& od) {
  return find_critical(order_data_to_bicritical_itinerary(od), 2);
}

// Newton on {gamma_1 at step q is 1/2, gamma_2 after 2n-q steps is 1/2}.
inline QPoint q_primary_newton(const OrderData& od, QPoint p) {
  std::size_t q = gamma2_position(od), len = std::size_t(2 * od.n());
  for (int it = 0; it < 60; ++it) {
    Jet a = q_gamma1(p.v, p.w, q), b = q_gamma2(p.v, p.w, len - q);
    double f1 = a.x - 0.5, f2 = b.x - 0.5;
    double det = a.dv * b.dw - a.dw * b.dv;
    if (det == 0) throw numeric_error("singular primary system for " + od.str());
    double dv = -(f1 * b.dw - a.dw * f2) / det;
    double dw = -(a.dv * f2 - f1 * b.dv) / det;
    p.v += dv;
    p.w += dw;
    if (std::hypot(dv, dw) < 1e-15) break;
  }
  Jet a = q_gamma1(p.v, p.w, q), b = q_gamma2(p.v, p.w, len - q);
  if (std::abs(a.x - 0.5) > 1e-12 || std::abs(b.x - 0.5) > 1e-12)
    throw numeric_error("primary Newton did not converge for " + od.str());
  return p;
}

inline QBone q_trace_left(const OrderData& od, const QTraceOptions& o) {
  std::size_t len = std::size_t(2 * od.n());
  auto [e1, e2] = q_left_endpoints(od, default_samples(od), o.tol_corr);
  QBone bone;
  bone.side = Side::left;
  bone.od = od;
  bone.meta.step_init = o.step_init;
  bone.meta.step_min = o.step_init;
  auto grad = [&](QPoint p) { return q_gamma1(p.v, p.w, len); };
  auto tangent = [&](const Jet& j, std::array<double, 2> prev) {
    double tv = -j.dw, tw = j.dv, nrm = std::hypot(tv, tw);
    if (nrm == 0) throw numeric_error("singular Jacobian while tracing " + od.str());
    tv /= nrm;
    tw /= nrm;
    if (tv * prev[0] + tw * prev[1] < 0) {
      tv = -tv;
      tw = -tw;
    }
    return std::array<double, 2>{tv, tw};
  };
  QPoint x{e1, 1.0};
  bone.polyline.push_back(x);
  std::array<double, 2> t = tangent(grad(x), {0.0, -1.0});
  double h = o.step_init;
  int streak = 0;
  bool closed = false;
  for (std::size_t step = 0; step < o.max_steps; ++step) {
    QPoint y{x.v + h * t[0], x.w + h * t[1]};
    bool ok = false;
    double res = 0;
    for (int it = 0; it < 12; ++it) {
      Jet j = grad(y);
      double g = j.x - 0.5;
      double r2 = t[0] * (y.v - x.v) + t[1] * (y.w - x.w) - h;
      double det = j.dv * t[1] - j.dw * t[0];
      if (det == 0 || !std::isfinite(det)) break;
      double dv = -(g * t[1] - j.dw * r2) / det;
      double dw = -(j.dv * r2 - g * t[0]) / det;
      y.v += dv;
      y.w += dw;
      res = std::abs(grad(y).x - 0.5);
      if (res < o.tol_corr && std::hypot(dv, dw) < 1e-10) {
        ok = true;
        break;
      }
    }
    std::array<double, 2> nt{};
    if (ok && y.w <= 1.0) {
      nt = tangent(grad(y), t);
      ok = nt[0] * t[0] + nt[1] * t[1] > 0.95 && q_cycle_ok(y.v, y.w, 1, od, o.tol_corr);
    }
    if (ok && y.w > 1.0) {
      // crossed the top edge; the curve ends at the other boundary root
      if (std::abs(y.v - e2) > 10 * h + 1e-6)
        throw numeric_error("trace of " + od.str() + " reached w = 1 away from its second endpoint");
      bone.polyline.push_back({e2, 1.0});
      bone.meta.accepted++;
      closed = true;
      break;
    }
    if (!ok) {
      bone.meta.rejected++;
      h *= 0.5;
      streak = 0;
      bone.meta.step_min = std::min(bone.meta.step_min, h);
      if (h < o.step_min) throw numeric_error("step underflow while tracing " + od.str());
      continue;
    }
    if (y.v < 0 || y.v > 1 || y.w < 0) throw numeric_error("trace of " + od.str() + " left the parameter square");
    bone.meta.accepted++;
    bone.meta.max_residual = std::max(bone.meta.max_residual, res);
    bone.polyline.push_back(y);
    x = y;
    t = nt;
    if (++streak >= 5) {
      h = std::min(2 * h, o.step_init);
      streak = 0;
    }
  }
  if (!closed) throw numeric_error("trace of " + od.str() + " did not return to w = 1");

  bone.vertices.push_back({bone.polyline.front(), 0.0, QVertexKind::boundary, std::nullopt});
  // primary vertex: gamma_1's visit to lane 2 nearest gamma_2 crosses 1/2
  std::size_t q = gamma2_position(od);
  auto side_of = [&](const QPoint& p) { return q_gamma1(p.v, p.w, q).x > 0.5; };
  int found = 0;
  for (std::size_t i = 0; i + 1 < bone.polyline.size(); ++i) {
    if (side_of(bone.polyline[i]) == side_of(bone.polyline[i + 1])) continue;
    const QPoint &a = bone.polyline[i], &b = bone.polyline[i + 1];
    QPoint pv = q_primary_newton(od, {0.5 * (a.v + b.v), 0.5 * (a.w + b.w)});
    double seg = std::hypot(b.v - a.v, b.w - a.w);
    double frac = seg > 0 ? std::clamp(std::hypot(pv.v - a.v, pv.w - a.w) / seg, 0.0, 1.0) : 0.0;
    bone.vertices.push_back({pv, double(i) + frac, QVertexKind::primary, std::nullopt});
    ++found;
  }
  if (found != 1) throw numeric_error("expected one primary vertex on " + od.str() + ", found " + std::to_string(found));
  bone.vertices.push_back(
      {bone.polyline.back(), double(bone.polyline.size() - 1), QVertexKind::boundary, std::nullopt});
  return bone;
}

inline QBone mirror(const QBone& b, const OrderData& od) {
  QBone r = b;
  r.side = b.side == Side::left ? Side::right : Side::left;
  r.od = od;
  for (auto& p : r.polyline) std::swap(p.v, p.w);
  for (auto& v : r.vertices) {
    std::swap(v.p.v, v.p.w);
    if (v.joint) v.joint = JointOrderData{v.joint->tau, v.joint->sigma};
  }
  return r;
}

}  // namespace detail

// Endpoints on the top edge (left bones) or right edge (right bones).
inline std::pair<double, double> q_boundary_endpoints(const OrderData& od, Side side = Side::left) {
  if (!check_admissible(od)) throw domain_error("inadmissible order-data " + od.str());
  const OrderData& o = side == Side::left ? od : od.swapped();
  return detail::q_left_endpoints(o, detail::default_samples(o), 1e-11);
}

inline QBone q_trace_bone(const OrderData& od, Side side, const QTraceOptions& opt = {}) {
  if (!check_admissible(od)) throw domain_error("inadmissible order-data " + od.str());
  if (side == Side::left) return detail::q_trace_left(od, opt);
  return detail::mirror(detail::q_trace_left(od.swapped(), opt), od);
}

inline QPoint q_primary_intersection(const OrderData& od, const QTraceOptions& opt = {}) {
  QBone b = q_trace_bone(od, Side::left, opt);
  for (const auto& v : b.vertices)
    if (v.kind == QVertexKind::primary) {
      auto pc = detect_periodic_critical_q(QPair{v.p.v, v.p.w}, 1, std::size_t(2 * od.n()), 1e-9);
      if (!pc || pc->od != od) throw numeric_error("primary vertex fails the order-data check for " + od.str());
      return v.p;
    }
  throw numeric_error("no primary vertex for " + od.str());
}

// Residual of the defining equation of a bone at (v, w).
inline Jet q_bone_equation(const QBone& b, double v, double w) {
  std::size_t len = std::size_t(2 * b.od.n());
  return b.side == Side::left ? detail::q_gamma1(v, w, len) : detail::q_gamma2(v, w, len);
}

// ------------------------------------------------------------ crossings

namespace detail {

inline std::optional<QPoint> segment_cross(const QPoint& a, const QPoint& b, const QPoint& c, const QPoint& d) {
  double rx = b.v - a.v, ry = b.w - a.w, sx = d.v - c.v, sy = d.w - c.w;
  double den = rx * sy - ry * sx;
  if (den == 0) return std::nullopt;
  double t = ((c.v - a.v) * sy - (c.w - a.w) * sx) / den;
  double u = ((c.v - a.v) * ry - (c.w - a.w) * rx) / den;
  if (t < 0 || t > 1 || u < 0 || u > 1) return std::nullopt;
  return QPoint{a.v + t * rx, a.w + t * ry};
}

struct SegHit {
  std::size_t i, j;
  QPoint p;
};

// All crossings between two polylines; bucketed on a uniform grid.
inline std::vector<SegHit> polyline_crossings(const std::vector<QPoint>& A, const std::vector<QPoint>& B,
                                              bool same = false) {
  const int G = 128;
  auto cell = [&](double x) { return std::clamp(int(x * G), 0, G - 1); };
  std::vector<std::vector<std::size_t>> bucket(std::size_t(G * G));
  for (std::size_t j = 0; j + 1 < B.size(); ++j) {
    int x0 = cell(std::min(B[j].v, B[j + 1].v)), x1 = cell(std::max(B[j].v, B[j + 1].v));
    int y0 = cell(std::min(B[j].w, B[j + 1].w)), y1 = cell(std::max(B[j].w, B[j + 1].w));
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y) bucket[std::size_t(x * G + y)].push_back(j);
  }
  std::vector<SegHit> out;
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i + 1 < A.size(); ++i) {
    int x0 = cell(std::min(A[i].v, A[i + 1].v)), x1 = cell(std::max(A[i].v, A[i + 1].v));
    int y0 = cell(std::min(A[i].w, A[i + 1].w)), y1 = cell(std::max(A[i].w, A[i + 1].w));
    cand.clear();
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y)
        for (auto j : bucket[std::size_t(x * G + y)]) cand.push_back(j);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (auto j : cand) {
      if (same && (j + 1 >= i && j <= i + 1)) continue;
      if (auto p = segment_cross(A[i], A[i + 1], B[j], B[j + 1])) out.push_back({i, j, *p});
    }
  }
  return out;
}

}  // namespace detail

struct QCrossing {
  QPoint p;
  bool primary = false;
  std::optional<JointOrderData> joint;
  double s_left = 0, s_right = 0;  // positions along the two polylines
};

// A polyline that does not meet itself.
inline bool q_polyline_simple(const std::vector<QPoint>& poly) {
  return detail::polyline_crossings(poly, poly, true).empty();
}

// Crossings of a left and a right bone, polished on the joint system.
inline std::vector<QCrossing> q_bone_crossings(const QBone& left, const QBone& right) {
  if (left.side != Side::left || right.side != Side::right) throw domain_error("expected a left and a right bone");
  auto hits = detail::polyline_crossings(left.polyline, right.polyline);
  std::vector<QCrossing> out;
  std::size_t nl = std::size_t(2 * left.od.n()), nr = std::size_t(2 * right.od.n());
  for (std::size_t k = 0; k < hits.size(); ++k) {
    QPoint p = hits[k].p;
    for (int it = 0; it < 60; ++it) {
      Jet a = detail::q_gamma1(p.v, p.w, nl), b = detail::q_gamma2(p.v, p.w, nr);
      double f1 = a.x - 0.5, f2 = b.x - 0.5;
      double det = a.dv * b.dw - a.dw * b.dv;
      if (det == 0) throw numeric_error("singular joint system");
      double dv = -(f1 * b.dw - a.dw * f2) / det, dw = -(a.dv * f2 - f1 * b.dv) / det;
      p.v += dv;
      p.w += dw;
      if (std::hypot(dv, dw) < 1e-15) break;
    }
    Jet a = detail::q_gamma1(p.v, p.w, nl), b = detail::q_gamma2(p.v, p.w, nr);
    if (std::abs(a.x - 0.5) > 1e-10 || std::abs(b.x - 0.5) > 1e-10 ||
        std::hypot(p.v - hits[k].p.v, p.w - hits[k].p.w) > 1e-2)
      throw numeric_error("crossing failed the joint-system polish");
    if (!detail::q_cycle_ok(p.v, p.w, 1, left.od, 1e-11) || !detail::q_cycle_ok(p.v, p.w, 2, right.od, 1e-11))
      throw numeric_error("crossing has the wrong order-data");
    QCrossing c;
    c.p = p;
    auto o1 = detail::q_points(p.v, p.w, 1, nl), o2 = detail::q_points(p.v, p.w, 2, nr);
    for (std::size_t i = 1; i < o1.size(); i += 2)
      if (std::abs(o1[i] - 0.5) < 1e-7) c.primary = true;
    if (!c.primary) {
      auto [s, t] = permutations_from_cycles(std::vector<std::vector<double>>{o1, o2}, {1, 2},
                                             [](double x, double y) { return x < y; });
      c.joint = JointOrderData{s, t};
    }
    auto frac = [](const std::vector<QPoint>& poly, std::size_t i, const QPoint& x) {
      const QPoint &a0 = poly[i], &a1 = poly[i + 1];
      double seg = std::hypot(a1.v - a0.v, a1.w - a0.w);
      return double(i) + (seg > 0 ? std::clamp(std::hypot(x.v - a0.v, x.w - a0.w) / seg, 0.0, 1.0) : 0.0);
    };
    c.s_left = frac(left.polyline, hits[k].i, p);
    c.s_right = frac(right.polyline, hits[k].j, p);
    // a crossing through a polyline vertex is seeded twice
    bool dup = false;
    for (const auto& o : out)
      if (std::hypot(o.p.v - p.v, o.p.w - p.w) < 1e-9) dup = true;
    if (!dup) out.push_back(c);
  }
  return out;
}

// Secondary crossings only, with their joint order-data.
inline std::vector<std::pair<QPoint, JointOrderData>> q_secondary_intersections(const QBone& left,
                                                                               const QBone& right) {
  std::vector<std::pair<QPoint, JointOrderData>> out;
  for (const auto& c : q_bone_crossings(left, right))
    if (!c.primary) out.emplace_back(c.p, *c.joint);
  return out;
}

// Angle in [0, pi/2] between the two bones' tangents at a crossing.
inline double transversality_check(const QBone& a, const QBone& b, const QPoint& x) {
  if (a.side == b.side && a.od == b.od) throw domain_error("a bone cannot be checked against itself");
  Jet ja = q_bone_equation(a, x.v, x.w), jb = q_bone_equation(b, x.v, x.w);
  if (std::abs(ja.x - 0.5) > 1e-8 || std::abs(jb.x - 0.5) > 1e-8) throw domain_error("point is not on both bones");
  double na = std::hypot(ja.dv, ja.dw), nb = std::hypot(jb.dv, jb.dw);
  if (na == 0 || nb == 0) throw numeric_error("singular Jacobian at crossing");
  double c = std::abs(ja.dv * jb.dv + ja.dw * jb.dw) / (na * nb);
  return std::acos(std::min(1.0, c));
}

}  // namespace bones
