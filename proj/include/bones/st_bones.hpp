#pragma once

#include <bones/dyadic.hpp>
#include <bones/errors.hpp>
#include <bones/families.hpp>
#include <bones/symbolic.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bones {

enum class Side { left, right };

inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

enum class VertexKind { primary, secondary, capture };

inline const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::primary: return "primary";
    case VertexKind::secondary: return "secondary";
    default: return "capture";
  }
}

// A distinguished parameter (or a run of parameters sharing one critical
// itinerary, which stunted maps produce when an orbit crosses a plateau).
struct Distinguished {
  Rational v_lo, w_lo, v_hi, w_hi;
  VertexKind kind = VertexKind::capture;
  std::optional<JointOrderData> joint;
  Itinerary itinerary2;  // itinerary of the other critical point
  std::size_t hit = 0;   // iterate at which it first reaches a plateau center

  bool is_point() const { return v_lo == v_hi && w_lo == w_hi; }
  ParamPoint param() const {
    return {(v_lo + v_hi).half().to_double(), (w_lo + w_hi).half().to_double(), Family::ST};
  }
};

// Left bone:  {v1,v2} x [w0,1]  U  (v1,v2) x {w0}.
// Right bone: [v0,1] x {v1,v2}  U  {v0} x (v1,v2); here v1, v2 are w-values.
struct StBone {
  Side side = Side::left;
  OrderData od;
  Dyadic v0, w0, v1, v2;
  std::vector<Distinguished> distinguished;
};

namespace detail {

template <class T>
T inverse_branch(Kind k, const T& y) {
  if (k == Kind::L) return y.half();
  if (k == Kind::R) return T(1) - y.half();
  throw domain_error("cannot invert through a plateau center");
}

// Value at position `to` of an orbit that sits at 1/2 at position `from`,
// pulled back through the slope branches named by the itinerary.
inline Dyadic back_substitute(const Itinerary& it, std::size_t from, std::size_t to) {
  Dyadic y = Dyadic(1, 1);
  for (std::size_t pos = from; pos-- > to;) y = inverse_branch(it.at(pos).kind, y);
  return y;
}

inline std::size_t find_critical(const Itinerary& it, int lane, std::size_t from = 0) {
  for (std::size_t i = from; i < it.period.size() + it.preperiod.size(); ++i)
    if (it.at(i).lane == lane && it.at(i).kind == Kind::C) return i;
  throw domain_error("critical symbol not found");
}

}  // namespace detail

// The unique stunted pair with a bicritical orbit of this order-data.
inline std::pair<Dyadic, Dyadic> st_bicritical_params(const OrderData& od) {
  Itinerary it = order_data_to_bicritical_itinerary(od);
  std::size_t len = it.period.size();
  std::size_t q = detail::find_critical(it, 2);
  Dyadic v0 = q == 1 ? Dyadic(1, 1) : detail::back_substitute(it, q, 1);
  Dyadic w0 = q + 1 == len ? Dyadic(1, 1) : detail::back_substitute(it, len, q + 1);
  if (v0 < Dyadic(0) || Dyadic(1) < v0 || w0 < Dyadic(0) || Dyadic(1) < w0)
    throw domain_error("back-substitution left the unit interval for " + od.str());
  StPair<Dyadic> p{v0, w0};
  auto orb = st_orbit(p, Dyadic(1, 1), 4 * len + 4, 1);
  if (orb.status != OrbitStatus::periodic || orb.period != len || !(orb.itinerary == it) ||
      !(order_data_of_cycle(orb.points, 1) == od))
    throw domain_error("forward simulation does not reproduce " + od.str());
  return {v0, w0};
}

namespace detail {

// Does gamma_1 have a periodic orbit with order-data od at (v, w)?
template <class T>
bool st_gamma_periodic_with(const StPair<T>& p, int which, const OrderData& od) {
  auto r = detect_periodic_critical_st(p, which, std::size_t(2 * od.n()));
  return r && r->period == std::size_t(2 * od.n()) && r->od == od;
}

inline StBone st_bone_left(const OrderData& od) {
  auto [v0, w0] = st_bicritical_params(od);
  Itinerary it = order_data_to_bicritical_itinerary(od);
  std::size_t q = find_critical(it, 2);
  // position q as an affine function a + b v of the lane-1 parameter
  Dyadic a(0), b(1);
  StPair<Dyadic> p0{v0, w0};
  Dyadic x = v0;
  for (std::size_t pos = 1; pos < q; ++pos) {
    int lane = pos % 2 == 1 ? 2 : 1;
    if (p0.plateau(lane, x)) throw domain_error("bicritical orbit meets a plateau off center");
    if (x < Dyadic(1, 1)) {
      a = a.scaled(1);
      b = b.scaled(1);
    } else {
      a = Dyadic(2) - a.scaled(1);
      b = -b.scaled(1);
    }
    x = p0.map(lane, x);
  }
  Dyadic e1 = w0.half(), e2 = Dyadic(1) - w0.half();
  Dyadic t1 = divide_exact(e1 - a, b), t2 = divide_exact(e2 - a, b);
  StBone bone;
  bone.side = Side::left;
  bone.od = od;
  bone.v0 = v0;
  bone.w0 = w0;
  bone.v1 = std::min(t1, t2);
  bone.v2 = std::max(t1, t2);
  if (!(bone.v1 < v0 && v0 < bone.v2)) throw domain_error("bone ordering v1 < v0 < v2 fails for " + od.str());
  // The branch pattern of the other orbit points must be the same at both
  // ends of each half; affine constraints then hold throughout.
  Dyadic mid = (bone.v1 + bone.v2).half();
  for (const Dyadic& v : {bone.v1, bone.v2, (bone.v1 + v0).half(), (v0 + bone.v2).half()}) {
    for (const Dyadic& w : {w0, (w0 + Dyadic(1)).half(), Dyadic(1)}) {
      if (!(v == bone.v1 || v == bone.v2) && !(w == w0)) continue;
      if (!st_gamma_periodic_with(StPair<Dyadic>{v, w}, 1, od))
        throw domain_error("bone shape check failed for " + od.str() + " at v=" + v.str() + " w=" + w.str());
    }
  }
  (void)mid;
  return bone;
}

}  // namespace detail

inline StBone st_bone(const OrderData& od, Side side) {
  if (!check_admissible(od)) throw domain_error("inadmissible order-data " + od.str());
  if (side == Side::left) return detail::st_bone_left(od);
  StBone m = detail::st_bone_left(od.swapped());
  StBone r;
  r.side = Side::right;
  r.od = od;
  r.v0 = m.w0;
  r.w0 = m.v0;
  r.v1 = m.v1;
  r.v2 = m.v2;
  return r;
}

// ------------------------------------------------------------ geometry

struct StSegment {
  Dyadic x0, y0, x1, y1;  // axis-parallel, (x0,y0) <= (x1,y1)
  bool vertical() const { return x0 == x1; }
};

inline std::vector<StSegment> st_segments(const StBone& b) {
  Dyadic one(1);
  if (b.side == Side::left)
    return {{b.v1, b.w0, b.v1, one}, {b.v1, b.w0, b.v2, b.w0}, {b.v2, b.w0, b.v2, one}};
  return {{b.v0, b.v1, one, b.v1}, {b.v0, b.v1, b.v0, b.v2}, {b.v0, b.v2, one, b.v2}};
}

// Ordered path along the bone from one boundary endpoint to the other.
inline std::vector<std::pair<Dyadic, Dyadic>> st_path(const StBone& b) {
  Dyadic one(1);
  if (b.side == Side::left) return {{b.v1, one}, {b.v1, b.w0}, {b.v2, b.w0}, {b.v2, one}};
  return {{one, b.v1}, {b.v0, b.v1}, {b.v0, b.v2}, {one, b.v2}};
}

inline bool st_on_bone(const StBone& b, const Dyadic& v, const Dyadic& w) {
  for (const auto& s : st_segments(b))
    if (s.x0 <= v && v <= s.x1 && s.y0 <= w && w <= s.y1) return true;
  return false;
}

inline std::vector<std::pair<Dyadic, Dyadic>> st_segment_intersections(const std::vector<StSegment>& A,
                                                                       const std::vector<StSegment>& B) {
  std::vector<std::pair<Dyadic, Dyadic>> pts;
  for (const auto& a : A) {
    for (const auto& b : B) {
      Dyadic lox = std::max(a.x0, b.x0), hix = std::min(a.x1, b.x1);
      Dyadic loy = std::max(a.y0, b.y0), hiy = std::min(a.y1, b.y1);
      if (hix < lox || hiy < loy) continue;
      if (lox < hix || loy < hiy) throw domain_error("bone segments overlap along a line");
      pts.emplace_back(lox, loy);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

struct StCrossing {
  Dyadic v, w;
  VertexKind kind = VertexKind::secondary;
  std::optional<JointOrderData> joint;
};

template <class T>
JointOrderData joint_order_data_st(const StPair<T>& p, std::size_t max_period) {
  auto o1 = st_orbit(p, T(1).half(), max_period + 2, 1);
  auto o2 = st_orbit(p, T(1).half(), max_period + 2, 2);
  if (o1.status != OrbitStatus::periodic || o2.status != OrbitStatus::periodic)
    throw domain_error("critical orbits are not both periodic");
  auto [s, t] = permutations_from_cycles(std::vector<std::vector<T>>{o1.points, o2.points}, {1, 2},
                                         [](const T& a, const T& b) { return a < b; });
  return {s, t};
}

inline std::vector<StCrossing> st_bone_crossings(const StBone& left, const StBone& right) {
  if (left.side != Side::left || right.side != Side::right) throw domain_error("expected a left and a right bone");
  std::vector<StCrossing> out;
  for (const auto& [v, w] : st_segment_intersections(st_segments(left), st_segments(right))) {
    StPair<Dyadic> p{v, w};
    if (!detail::st_gamma_periodic_with(p, 1, left.od) || !detail::st_gamma_periodic_with(p, 2, right.od))
      throw domain_error("crossing at v=" + v.str() + " w=" + w.str() + " is not a double periodic point");
    auto o1 = st_orbit(p, Dyadic(1, 1), std::size_t(2 * left.od.n()), 1);
    bool shared = std::find(o1.points.begin(), o1.points.end(), Dyadic(1, 1)) != o1.points.end() &&
                  [&] {
                    for (std::size_t k = 1; k < o1.points.size(); k += 2)
                      if (o1.points[k] == Dyadic(1, 1)) return true;
                    return false;
                  }();
    StCrossing c{v, w, shared ? VertexKind::primary : VertexKind::secondary, std::nullopt};
    if (!shared) c.joint = joint_order_data_st(p, std::size_t(2 * (left.od.n() + right.od.n())));
    out.push_back(c);
  }
  return out;
}

// Unique stunted pair whose critical orbits are disjoint and periodic with
// this joint order-data.
inline std::pair<Dyadic, Dyadic> st_secondary_intersection(const JointOrderData& j) {
  JointSplit sp = split_joint(j);
  int total = int(j.sigma.size());
  int g1 = int(std::find(j.sigma.begin(), j.sigma.end(), total) - j.sigma.begin()) + 1;
  int g2 = int(std::find(j.tau.begin(), j.tau.end(), total) - j.tau.begin()) + 1;
  auto kind = [](int r, int c) { return r < c ? Kind::L : (r == c ? Kind::C : Kind::R); };
  auto cycle_itinerary = [&](int start, int lane0) {
    Itinerary it;
    int idx = start, lane = lane0;
    do {
      it.period.push_back({lane, kind(idx, lane == 1 ? g1 : g2)});
      idx = lane == 1 ? j.sigma[std::size_t(idx - 1)] : j.tau[std::size_t(idx - 1)];
      lane = other_lane(lane);
    } while (!(idx == start && lane == lane0));
    return it;
  };
  Itinerary i1 = cycle_itinerary(g1, 1), i2 = cycle_itinerary(g2, 2);
  Dyadic v = detail::back_substitute(i1, i1.period.size(), 1);
  Dyadic w = detail::back_substitute(i2, i2.period.size(), 1);
  StPair<Dyadic> p{v, w};
  JointOrderData got = joint_order_data_st(p, std::size_t(2 * total));
  if (!(got == j)) throw domain_error("joint order-data " + j.str() + " is infeasible (got " + got.str() + ")");
  (void)sp;
  return {v, w};
}

// ------------------------------------------- piecewise-affine segment walk

namespace detail {

struct Affine {
  Rational a, b;  // a + b t
  Rational at(const Rational& t) const { return a + b * t; }
  friend bool operator==(const Affine&, const Affine&) = default;
};

struct WalkSpec {
  int varying_lane = 2;  // this lane's parameter equals t
  Rational fixed;        // the other lane's parameter
  int start_lane = 2;    // critical point followed
  std::size_t depth = 2;
};

inline Affine lane_param(const WalkSpec& s, int lane) {
  return lane == s.varying_lane ? Affine{Rational(0), Rational(1)} : Affine{s.fixed, Rational(0)};
}

// Root of f(t) = g(t) strictly inside (lo, hi), if any.
inline std::optional<Rational> crossing(const Affine& f, const Affine& g, const Rational& lo, const Rational& hi) {
  Rational db = f.b - g.b;
  if (db == Rational(0)) return std::nullopt;
  Rational t = (g.a - f.a) / db;
  if (lo < t && t < hi) return t;
  return std::nullopt;
}

enum class Branch { left, plateau, right };

struct Piece {
  Rational lo, hi;
  std::vector<Affine> x;  // x[k] on (lo, hi)
};

// Splits (lo, hi) until every orbit point keeps its branch; returns pieces
// in increasing order.
inline void walk(const WalkSpec& s, const Rational& lo, const Rational& hi, std::vector<Piece>& out) {
  std::vector<std::pair<Rational, Rational>> stack{{lo, hi}};
  std::vector<Piece> done;
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    Rational mid = (a + b).half();
    Piece pc{a, b, {}};
    Affine x{Rational(1, 2), Rational(0)};
    int lane = s.start_lane;
    bool split = false;
    for (std::size_t k = 0; k <= s.depth; ++k) {
      pc.x.push_back(x);
      if (k == s.depth) break;
      Affine P = lane_param(s, lane);
      Affine e1{P.a.half(), P.b.half()};
      Affine e2{Rational(1) - P.a.half(), -P.b.half()};
      std::optional<Rational> r = crossing(x, e1, a, b);
      if (!r) r = crossing(x, e2, a, b);
      if (r) {
        stack.push_back({*r, b});
        stack.push_back({a, *r});
        split = true;
        break;
      }
      Rational xm = x.at(mid);
      if (xm <= e1.at(mid)) x = Affine{x.a + x.a, x.b + x.b};
      else if (xm < e2.at(mid)) x = P;
      else x = Affine{Rational(2) - (x.a + x.a), -(x.b + x.b)};
      lane = other_lane(lane);
    }
    if (!split) done.push_back(std::move(pc));
  }
  std::sort(done.begin(), done.end(), [](const Piece& p, const Piece& q) { return p.lo < q.lo; });
  for (auto& p : done) out.push_back(std::move(p));
}

inline StPair<Rational> walk_pair(const WalkSpec& s, const Rational& t) {
  return s.varying_lane == 1 ? StPair<Rational>{t, s.fixed} : StPair<Rational>{s.fixed, t};
}

// First iterate k in [1, depth] at which the followed orbit sits at 1/2.
inline std::optional<std::size_t> first_hit(const WalkSpec& s, const Rational& t) {
  auto p = walk_pair(s, t);
  Rational x = Rational(1, 2);
  int lane = s.start_lane;
  for (std::size_t k = 1; k <= s.depth; ++k) {
    x = p.map(lane, x);
    lane = other_lane(lane);
    if (x == Rational(1, 2)) return k;
  }
  return std::nullopt;
}

struct HitRun {
  Rational lo, hi;
  std::size_t hit;
};

// All parameters in [lo, hi] where the orbit reaches a plateau center within
// `depth` iterates, grouped into maximal runs sharing the same first hit and
// itinerary.
inline std::vector<HitRun> hit_runs(const WalkSpec& s, const Rational& lo, const Rational& hi) {
  std::vector<Piece> pieces;
  walk(s, lo, hi, pieces);
  std::vector<Rational> cand{lo, hi};
  std::vector<std::pair<Rational, Rational>> spans;  // open spans with constant hit
  for (const auto& pc : pieces) {
    cand.push_back(pc.lo);
    std::vector<Rational> cuts;
    bool whole = false;
    for (std::size_t k = 1; k < pc.x.size(); ++k) {
      const Affine& x = pc.x[k];
      if (x.b == Rational(0)) {
        if (x.a == Rational(1, 2)) whole = true;
        continue;
      }
      Rational t = (Rational(1, 2) - x.a) / x.b;
      if (pc.lo < t && t < pc.hi) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (const auto& c : cuts) cand.push_back(c);
    if (whole) {
      Rational prev = pc.lo;
      for (const auto& c : cuts) {
        spans.push_back({prev, c});
        prev = c;
      }
      spans.push_back({prev, pc.hi});
    }
  }
  struct Item {
    Rational lo, hi, rep;
    std::size_t hit;
  };
  std::vector<Item> items;
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (const auto& t : cand)
    if (auto h = first_hit(s, t)) items.push_back({t, t, t, *h});
  for (const auto& [a, b] : spans) {
    Rational m = (a + b).half();
    if (auto h = first_hit(s, m)) items.push_back({a, b, m, *h});
  }
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
  });
  // merge touching runs with identical hit and identical itinerary
  auto itin = [&](const Rational& t, std::size_t h) {
    auto p = walk_pair(s, t);
    return st_critical_itinerary(p, s.start_lane, h + 1);
  };
  std::vector<HitRun> runs;
  std::vector<Rational> reps;
  for (const auto& it : items) {
    if (!runs.empty()) {
      auto& r = runs.back();
      bool touch = !(r.hi < it.lo);
      if (touch && r.hit == it.hit && itin(reps.back(), r.hit) == itin(it.rep, it.hit)) {
        r.hi = std::max(r.hi, it.hi);
        continue;
      }
    }
    runs.push_back({it.lo, it.hi, it.hit});
    reps.push_back(it.rep);
  }
  return runs;
}

inline Itinerary swap_lanes(const Itinerary& it) {
  Itinerary r = it;
  for (auto& s : r.preperiod) s.lane = other_lane(s.lane);
  for (auto& s : r.period) s.lane = other_lane(s.lane);
  return r;
}

// Distinguished points on the vertical segments of a left bone.
inline std::vector<Distinguished> left_distinguished(const StBone& b, int m) {
  std::vector<Distinguished> out;
  std::size_t max_period = std::size_t(2 * b.od.n() + 4 * m + 8);
  for (const Dyadic& vx : {b.v1, b.v2}) {
    WalkSpec s{2, Rational(vx), 2, std::size_t(2 * m)};
    for (const auto& run : hit_runs(s, Rational(b.w0), Rational(1))) {
      if (run.hi == Rational(b.w0)) continue;  // corner, part of the horizontal run
      Distinguished d;
      d.v_lo = d.v_hi = Rational(vx);
      d.w_lo = run.lo;
      d.w_hi = run.hi;
      d.hit = run.hit;
      Rational rep = (run.lo + run.hi).half();
      StPair<Rational> p{Rational(vx), rep};
      auto orb = st_orbit(p, Rational(1, 2), 4 * max_period, 2);
      d.itinerary2 = orb.itinerary;
      bool hits_self = run.hit % 2 == 0;
      if (hits_self) {
        if (!d.is_point()) throw domain_error("periodic second critical point over a parameter interval");
        d.kind = VertexKind::secondary;
        d.joint = joint_order_data_st(p, 4 * max_period);
      } else {
        d.kind = VertexKind::capture;
      }
      out.push_back(std::move(d));
    }
  }
  // horizontal segment: one run of capture points, plus the primary vertex
  {
    Distinguished h;
    h.v_lo = Rational(b.v1);
    h.v_hi = Rational(b.v2);
    h.w_lo = h.w_hi = Rational(b.w0);
    h.kind = VertexKind::capture;
    StPair<Rational> p{(Rational(b.v1) + Rational(b.v0)).half(), Rational(b.w0)};
    h.itinerary2 = st_orbit(p, Rational(1, 2), 4 * max_period, 2).itinerary;
    h.hit = std::size_t(2 * b.od.n()) - detail::find_critical(order_data_to_bicritical_itinerary(b.od), 2);
    out.push_back(std::move(h));
    Distinguished pr;
    pr.v_lo = pr.v_hi = Rational(b.v0);
    pr.w_lo = pr.w_hi = Rational(b.w0);
    pr.kind = VertexKind::primary;
    pr.hit = h.hit;
    pr.itinerary2 = st_orbit(StPair<Rational>{Rational(b.v0), Rational(b.w0)}, Rational(1, 2), 4 * max_period, 2)
                        .itinerary;
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace detail

// Distinguished points of depth m: the second critical point (gamma_2 for a
// left bone, gamma_1 for a right bone) reaches a plateau center within 2m
// iterates.  The horizontal (left) or vertical (right) capture run and the
// primary vertex are appended at the end.
inline std::vector<Distinguished> st_distinguished_points(const StBone& b, int m) {
  if (m < 1) throw domain_error("depth must be positive");
  if (b.side == Side::left) return detail::left_distinguished(b, m);
  StBone l = st_bone(b.od.swapped(), Side::left);
  auto ds = detail::left_distinguished(l, m);
  for (auto& d : ds) {
    std::swap(d.v_lo, d.w_lo);
    std::swap(d.v_hi, d.w_hi);
    d.itinerary2 = detail::swap_lanes(d.itinerary2);
    if (d.joint) d.joint = JointOrderData{d.joint->tau, d.joint->sigma};
  }
  return ds;
}

// Along each vertical half of a left bone (horizontal half of a right bone),
// the itinerary of the second critical point must increase strictly with
// the distance from the primary level.
inline bool st_distinguished_monotone(const StBone& b, const std::vector<Distinguished>& ds) {
  for (int half = 0; half < 2; ++half) {
    std::vector<const Distinguished*> seg;
    for (const auto& d : ds) {
      bool on = b.side == Side::left ? (d.v_lo == d.v_hi && d.v_lo == Rational(half ? b.v2 : b.v1) &&
                                        !(d.w_lo == d.w_hi && d.w_lo == Rational(b.w0) && d.kind == VertexKind::primary))
                                     : (d.w_lo == d.w_hi && d.w_lo == Rational(half ? b.v2 : b.v1));
      if (on && d.kind != VertexKind::primary) seg.push_back(&d);
    }
    std::sort(seg.begin(), seg.end(), [&](const Distinguished* x, const Distinguished* y) {
      return b.side == Side::left ? x->w_lo < y->w_lo : x->v_lo < y->v_lo;
    });
    for (std::size_t i = 1; i < seg.size(); ++i)
      if (compare_itineraries(seg[i - 1]->itinerary2, seg[i]->itinerary2) != Ordering::LT) return false;
  }
  return true;
}

}  // namespace bones
