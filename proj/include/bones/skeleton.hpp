#pragma once

#include <bones/entropy.hpp>
#include <bones/errors.hpp>
#include <bones/parallel.hpp>
#include <bones/q_bones.hpp>
#include <bones/st_bones.hpp>
#include <bones/symbolic.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace bones {

enum class CellKind { corner, endpoint, primary, secondary };

inline const char* to_string(CellKind k) {
  switch (k) {
    case CellKind::corner: return "corner";
    case CellKind::endpoint: return "endpoint";
    case CellKind::primary: return "primary";
    default: return "secondary";
  }
}

struct SkVertex {
  QPoint p;
  CellKind kind = CellKind::corner;
  std::string label;
  std::string exact;  // "v w" as dyadics, ST only
};

struct SkEdge {
  std::size_t a = 0, b = 0;
  int bone = -1;  // -1 for boundary fragments
  std::vector<QPoint> path;
  std::optional<double> angle_a, angle_b;  // leaving a / leaving b, when known exactly
};

struct SkFace {
  std::vector<std::size_t> edges;
  std::vector<std::size_t> neighbours;
  double area = 0;  // signed, positive for bounded faces
  bool outer = false;
};

struct SkBone {
  Side side = Side::left;
  OrderData od;
  std::vector<QPoint> path;
  std::vector<std::size_t> vertices;  // in order from the end with the smaller boundary coordinate
};

struct SkeletonComplex {
  Family family = Family::ST;
  int n = 0;
  std::vector<SkBone> bones;
  std::vector<SkVertex> cells0;
  std::vector<SkEdge> cells1;
  std::vector<SkFace> cells2;

  long euler() const { return long(cells0.size()) - long(cells1.size()) + long(cells2.size()); }
  std::size_t count(CellKind k) const {
    return std::size_t(std::count_if(cells0.begin(), cells0.end(), [&](const SkVertex& v) { return v.kind == k; }));
  }
  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t i = 0; i < cells0.size(); ++i)
      if (cells0[i].label == label) return i;
    return std::nullopt;
  }
};

namespace detail {

inline std::string bone_key(Side s, const OrderData& od) { return std::string(to_string(s)) + ":" + od.str(); }

struct Marked {
  double s;  // polyline position
  std::size_t vertex;
  std::optional<double> angle;  // tangent direction of increasing s
};

// Position of p on a polyline as segment index plus fraction.
inline double locate(const std::vector<QPoint>& poly, const QPoint& p) {
  double best = 1e300, pos = 0;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const QPoint &a = poly[i], &b = poly[i + 1];
    double dx = b.v - a.v, dy = b.w - a.w, l2 = dx * dx + dy * dy;
    double t = l2 > 0 ? std::clamp(((p.v - a.v) * dx + (p.w - a.w) * dy) / l2, 0.0, 1.0) : 0.0;
    double d = std::hypot(a.v + t * dx - p.v, a.w + t * dy - p.w);
    if (d < best) {
      best = d;
      pos = double(i) + t;
    }
  }
  return pos;
}

// Sub-path strictly between positions s0 < s1, with exact endpoints.
inline std::vector<QPoint> sub_path(const std::vector<QPoint>& poly, double s0, const QPoint& p0, double s1,
                                    const QPoint& p1) {
  std::vector<QPoint> out{p0};
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (double(i) > s0 && double(i) < s1) out.push_back(poly[i]);
  out.push_back(p1);
  return out;
}

// Perimeter coordinate running counterclockwise from (0,0).
inline double perimeter(const QPoint& p) {
  const double e = 1e-12;
  if (p.w <= e) return p.v;
  if (p.v >= 1 - e) return 1 + p.w;
  if (p.w >= 1 - e) return 3 - p.v;
  return 4 - p.w;
}

inline double direction(const std::vector<QPoint>& path, bool from_front) {
  const QPoint& o = from_front ? path.front() : path.back();
  for (std::size_t k = 1; k < path.size(); ++k) {
    const QPoint& q = from_front ? path[k] : path[path.size() - 1 - k];
    if (std::hypot(q.v - o.v, q.w - o.w) > 1e-7 || k + 1 == path.size()) return std::atan2(q.w - o.w, q.v - o.v);
  }
  throw numeric_error("degenerate edge");
}

inline void extract_faces(SkeletonComplex& sk) {
  std::size_t E = sk.cells1.size(), V = sk.cells0.size();
  // half-edge 2e runs a -> b, 2e+1 runs b -> a
  std::vector<std::vector<std::pair<double, std::size_t>>> around(V);
  for (std::size_t e = 0; e < E; ++e) {
    const auto& ed = sk.cells1[e];
    around[ed.a].push_back({ed.angle_a.value_or(direction(ed.path, true)), 2 * e});
    around[ed.b].push_back({ed.angle_b.value_or(direction(ed.path, false)), 2 * e + 1});
  }
  std::vector<std::size_t> slot(2 * E);
  for (auto& lst : around) {
    std::sort(lst.begin(), lst.end());
    for (std::size_t k = 0; k < lst.size(); ++k) slot[lst[k].second] = k;
  }
  auto target = [&](std::size_t h) { return h % 2 == 0 ? sk.cells1[h / 2].b : sk.cells1[h / 2].a; };
  auto next = [&](std::size_t h) {
    std::size_t t = h ^ 1u, v = target(h);
    const auto& lst = around[v];
    std::size_t k = slot[t];
    return lst[(k + lst.size() - 1) % lst.size()].second;  // clockwise neighbour of the twin
  };
  std::vector<long> face_of(2 * E, -1);
  sk.cells2.clear();
  for (std::size_t h0 = 0; h0 < 2 * E; ++h0) {
    if (face_of[h0] >= 0) continue;
    SkFace f;
    std::size_t h = h0;
    std::size_t guard = 0;
    do {
      face_of[h] = long(sk.cells2.size());
      f.edges.push_back(h / 2);
      const auto& path = sk.cells1[h / 2].path;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const QPoint &a = path[k], &b = path[k + 1];
        double cr = a.v * b.w - b.v * a.w;
        f.area += (h % 2 == 0 ? cr : -cr) / 2;
      }
      h = next(h);
      if (++guard > 4 * E + 4) throw numeric_error("face walk did not close");
    } while (h != h0);
    sk.cells2.push_back(std::move(f));
  }
  std::size_t outer = 0;
  for (std::size_t i = 1; i < sk.cells2.size(); ++i)
    if (sk.cells2[i].area < sk.cells2[outer].area) outer = i;
  sk.cells2[outer].outer = true;
  for (std::size_t e = 0; e < E; ++e) {
    auto a = std::size_t(face_of[2 * e]), b = std::size_t(face_of[2 * e + 1]);
    if (a == b) continue;
    sk.cells2[a].neighbours.push_back(b);
    sk.cells2[b].neighbours.push_back(a);
  }
  for (auto& f : sk.cells2) {
    std::sort(f.neighbours.begin(), f.neighbours.end());
    f.neighbours.erase(std::unique(f.neighbours.begin(), f.neighbours.end()), f.neighbours.end());
    std::sort(f.edges.begin(), f.edges.end());
    f.edges.erase(std::unique(f.edges.begin(), f.edges.end()), f.edges.end());
  }
}

struct Builder {
  SkeletonComplex sk;
  std::vector<std::vector<Marked>> marks;  // per bone
  std::vector<Marked> boundary;            // perimeter positions

  std::size_t add_vertex(QPoint p, CellKind k, std::string label, std::string exact = {}) {
    sk.cells0.push_back({p, k, std::move(label), std::move(exact)});
    return sk.cells0.size() - 1;
  }

  void add_bone(Side side, const OrderData& od, std::vector<QPoint> path, const std::string& e0 = {},
                const std::string& e1 = {}) {
    std::size_t b = sk.bones.size();
    sk.bones.push_back({side, od, std::move(path), {}});
    marks.emplace_back();
    const auto& P = sk.bones[b].path;
    for (int end = 0; end < 2; ++end) {
      QPoint p = end == 0 ? P.front() : P.back();
      std::size_t v = add_vertex(p, CellKind::endpoint, "endpoint:" + bone_key(side, od) + ":" + std::to_string(end),
                                 end == 0 ? e0 : e1);
      marks[b].push_back({end == 0 ? 0.0 : double(P.size() - 1), v});
      boundary.push_back({perimeter(p), v});
    }
  }

  void finish() {
    for (auto [p, name] : std::array<std::pair<QPoint, const char*>, 4>{
             {{{0, 0}, "corner:0,0"}, {{1, 0}, "corner:1,0"}, {{1, 1}, "corner:1,1"}, {{0, 1}, "corner:0,1"}}}) {
      std::size_t v = add_vertex(p, CellKind::corner, name, std::string(name).substr(7));
      boundary.push_back({perimeter(p), v});
    }
    for (std::size_t b = 0; b < sk.bones.size(); ++b) {
      auto& m = marks[b];
      std::sort(m.begin(), m.end(), [](const Marked& x, const Marked& y) { return x.s < y.s; });
      auto& bone = sk.bones[b];
      for (std::size_t i = 0; i < m.size(); ++i) bone.vertices.push_back(m[i].vertex);
      for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        if (m[i].vertex == m[i + 1].vertex) continue;
        SkEdge e{m[i].vertex, m[i + 1].vertex, int(b),
                 sub_path(bone.path, m[i].s, sk.cells0[m[i].vertex].p, m[i + 1].s, sk.cells0[m[i + 1].vertex].p),
                 m[i].angle, std::nullopt};
        if (m[i + 1].angle) e.angle_b = std::remainder(*m[i + 1].angle + M_PI, 2 * M_PI);
        sk.cells1.push_back(std::move(e));
      }
    }
    std::sort(boundary.begin(), boundary.end(), [](const Marked& x, const Marked& y) { return x.s < y.s; });
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      const Marked &x = boundary[i], &y = boundary[(i + 1) % boundary.size()];
      sk.cells1.push_back({x.vertex, y.vertex, -1, {sk.cells0[x.vertex].p, sk.cells0[y.vertex].p}, {}, {}});
    }
    extract_faces(sk);
  }
};

inline std::string dyadic_pair(const Dyadic& v, const Dyadic& w) { return v.str() + " " + w.str(); }

// Position of an exact point along an ST path, as segment index plus fraction.
inline double st_locate(const std::vector<std::pair<Dyadic, Dyadic>>& path, const Dyadic& v, const Dyadic& w) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto [a0, b0] = path[i];
    auto [a1, b1] = path[i + 1];
    bool on = (a0 == a1 && v == a0 && std::min(b0, b1) <= w && w <= std::max(b0, b1)) ||
              (b0 == b1 && w == b0 && std::min(a0, a1) <= v && v <= std::max(a0, a1));
    if (!on) continue;
    double len = to_double(a0 == a1 ? b1 - b0 : a1 - a0);
    double d = to_double(a0 == a1 ? w - b0 : v - a0);
    return double(i) + d / len;
  }
  throw domain_error("point is not on the bone");
}

// Tangent of a traced bone at p from the gradient of its defining equation,
// pointed along the polyline.
inline double q_tangent_angle(const QBone& b, double s, const QPoint& p) {
  Jet j = q_bone_equation(b, p.v, p.w);
  double tv = -j.dw, tw = j.dv;
  auto i = std::min(std::size_t(s), b.polyline.size() - 2);
  const QPoint &a = b.polyline[i], &c = b.polyline[i + 1];
  if (tv * (c.v - a.v) + tw * (c.w - a.w) < 0) {
    tv = -tv;
    tw = -tw;
  }
  return std::atan2(tw, tv);
}

}  // namespace detail

inline SkeletonComplex build_st_skeleton(int n) {
  if (n < 1 || n > 5) throw domain_error("ST skeletons are built for 1 <= n <= 5");
  detail::Builder B;
  B.sk.family = Family::ST;
  B.sk.n = n;
  std::vector<StBone> st;
  for (int k = 1; k <= n; ++k)
    for (const auto& od : admissible_order_data(k))
      for (Side s : {Side::left, Side::right}) st.push_back(st_bone(od, s));
  std::vector<std::vector<std::pair<Dyadic, Dyadic>>> paths;
  for (const auto& b : st) {
    auto path = st_path(b);
    std::vector<QPoint> poly;
    for (auto& [v, w] : path) poly.push_back({to_double(v), to_double(w)});
    B.add_bone(b.side, b.od, poly, detail::dyadic_pair(path.front().first, path.front().second),
               detail::dyadic_pair(path.back().first, path.back().second));
    paths.push_back(path);
  }
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i].side != Side::left) continue;
    for (std::size_t j = 0; j < st.size(); ++j) {
      if (st[j].side != Side::right) continue;
      for (const auto& c : st_bone_crossings(st[i], st[j])) {
        bool prim = c.kind == VertexKind::primary;
        std::string label = prim ? "primary:" + st[i].od.str() : "secondary:" + c.joint->str();
        std::size_t v = B.add_vertex({to_double(c.v), to_double(c.w)}, prim ? CellKind::primary : CellKind::secondary,
                                     label, detail::dyadic_pair(c.v, c.w));
        B.marks[i].push_back({detail::st_locate(paths[i], c.v, c.w), v});
        B.marks[j].push_back({detail::st_locate(paths[j], c.v, c.w), v});
      }
    }
  }
  B.finish();
  return B.sk;
}

inline SkeletonComplex build_q_skeleton(int n, const QTraceOptions& opt = {}, unsigned workers = default_workers()) {
  if (n < 1 || n > 4) throw domain_error("Q skeletons are built for 1 <= n <= 4");
  std::vector<std::pair<OrderData, Side>> jobs;
  for (int k = 1; k <= n; ++k)
    for (const auto& od : admissible_order_data(k))
      for (Side s : {Side::left, Side::right}) jobs.push_back({od, s});
  std::vector<QBone> q(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) { q[i] = q_trace_bone(jobs[i].first, jobs[i].second, opt); });
  detail::Builder B;
  B.sk.family = Family::Q;
  B.sk.n = n;
  for (const auto& b : q) B.add_bone(b.side, b.od, b.polyline);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].side != Side::left) continue;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (q[j].side != Side::right) continue;
      for (const auto& c : q_bone_crossings(q[i], q[j])) {
        std::string label = c.primary ? "primary:" + q[i].od.str() : "secondary:" + c.joint->str();
        std::size_t v = B.add_vertex(c.p, c.primary ? CellKind::primary : CellKind::secondary, label);
        B.marks[i].push_back({c.s_left, v, detail::q_tangent_angle(q[i], c.s_left, c.p)});
        B.marks[j].push_back({c.s_right, v, detail::q_tangent_angle(q[j], c.s_right, c.p)});
      }
    }
  }
  B.finish();
  return B.sk;
}

inline SkeletonComplex build_skeleton(Family fam, int n) {
  return fam == Family::ST ? build_st_skeleton(n) : build_q_skeleton(n);
}

// Bounded faces counted independently of the half-edge walk.  ST uses an
// exact compressed grid; Q a uniform raster of side `res`, where components
// under `min_pixels` (slivers cut off near shallow crossings) are ignored.
inline std::size_t raster_face_count(const SkeletonComplex& sk, int res = 2048, std::size_t min_pixels = 16) {
  std::vector<double> xs{0, 1}, ys{0, 1};
  bool exact = sk.family == Family::ST;
  if (exact) {
    for (const auto& e : sk.cells1)
      for (const auto& p : e.path) {
        xs.push_back(p.v);
        ys.push_back(p.w);
      }
  } else {
    for (int i = 1; i < res; ++i) {
      xs.push_back(double(i) / res);
      ys.push_back(double(i) / res);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::size_t nx = xs.size() - 1, ny = ys.size() - 1;
  std::vector<std::uint8_t> wall(nx * ny, 0);        // raster: blocked pixel
  std::vector<std::uint8_t> right(nx * ny, 0), up(nx * ny, 0);  // exact: blocked crossings
  auto ix = [&](double x) { return std::size_t(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()); };
  auto iy = [&](double y) { return std::size_t(std::lower_bound(ys.begin(), ys.end(), y) - ys.begin()); };
  for (const auto& e : sk.cells1) {
    for (std::size_t k = 0; k + 1 < e.path.size(); ++k) {
      QPoint a = e.path[k], b = e.path[k + 1];
      if (exact) {
        if (a.v == b.v) {  // vertical wall between columns i-1 and i
          std::size_t i = ix(a.v), j0 = iy(std::min(a.w, b.w)), j1 = iy(std::max(a.w, b.w));
          if (i == 0 || i >= nx) continue;
          for (std::size_t j = j0; j < j1; ++j) right[j * nx + i - 1] = 1;
        } else {
          std::size_t j = iy(a.w), i0 = ix(std::min(a.v, b.v)), i1 = ix(std::max(a.v, b.v));
          if (j == 0 || j >= ny) continue;
          for (std::size_t i = i0; i < i1; ++i) up[(j - 1) * nx + i] = 1;
        }
      } else {
        double len = std::hypot(b.v - a.v, b.w - a.w) * res;
        int steps = std::max(1, int(std::ceil(len * 4)));
        for (int s = 0; s <= steps; ++s) {
          double t = double(s) / steps;
          double x = a.v + t * (b.v - a.v), y = a.w + t * (b.w - a.w);
          auto i = std::min<std::size_t>(nx - 1, std::size_t(std::max(0.0, x * res)));
          auto j = std::min<std::size_t>(ny - 1, std::size_t(std::max(0.0, y * res)));
          wall[j * nx + i] = 1;
        }
      }
    }
  }
  std::vector<int> comp(nx * ny, -1);
  std::size_t faces = 0;
  for (std::size_t s = 0; s < nx * ny; ++s) {
    if (comp[s] >= 0 || wall[s]) continue;
    std::queue<std::size_t> qu;
    qu.push(s);
    comp[s] = int(faces);
    std::size_t size = 0;
    while (!qu.empty()) {
      std::size_t c = qu.front();
      qu.pop();
      ++size;
      std::size_t i = c % nx, j = c / nx;
      auto visit = [&](std::size_t d) {
        if (comp[d] < 0 && !wall[d]) {
          comp[d] = int(faces);
          qu.push(d);
        }
      };
      if (i + 1 < nx && !right[c]) visit(c + 1);
      if (i > 0 && !right[c - 1]) visit(c - 1);
      if (j + 1 < ny && !up[c]) visit(c + nx);
      if (j > 0 && !up[c - nx]) visit(c - nx);
    }
    if (exact || size >= min_pixels) ++faces;
  }
  return faces;
}

// ------------------------------------------------------- correspondence

struct Correspondence {
  bool ok = false;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // vertex ids in a, b
  std::string counterexample;
};

inline Correspondence vertex_correspondence(const SkeletonComplex& a, const SkeletonComplex& b) {
  if (a.n != b.n) throw domain_error("skeletons have different n");
  if (a.family == b.family) throw domain_error("skeletons come from the same family");
  Correspondence r;
  std::map<std::string, std::size_t> in_b;
  for (std::size_t i = 0; i < b.cells0.size(); ++i)
    if (!in_b.emplace(b.cells0[i].label, i).second) {
      r.counterexample = "label repeated in " + std::string(to_string(b.family)) + ": " + b.cells0[i].label;
      return r;
    }
  std::map<std::string, std::size_t> in_a;
  for (std::size_t i = 0; i < a.cells0.size(); ++i) {
    const auto& lab = a.cells0[i].label;
    if (!in_a.emplace(lab, i).second) {
      r.counterexample = "label repeated in " + std::string(to_string(a.family)) + ": " + lab;
      return r;
    }
    auto it = in_b.find(lab);
    if (it == in_b.end()) {
      r.counterexample = "no match in " + std::string(to_string(b.family)) + " for " + lab;
      return r;
    }
    r.pairs.push_back({i, it->second});
  }
  for (const auto& v : b.cells0)
    if (!in_a.count(v.label)) {
      r.counterexample = "no match in " + std::string(to_string(a.family)) + " for " + v.label;
      return r;
    }
  std::map<std::string, const SkBone*> bones_b;
  for (const auto& bb : b.bones) bones_b[detail::bone_key(bb.side, bb.od)] = &bb;
  for (const auto& ba : a.bones) {
    auto it = bones_b.find(detail::bone_key(ba.side, ba.od));
    if (it == bones_b.end()) {
      r.counterexample = "no bone " + detail::bone_key(ba.side, ba.od);
      return r;
    }
    const SkBone& bb = *it->second;
    std::vector<std::string> la, lb;
    for (auto v : ba.vertices) la.push_back(a.cells0[v].label);
    for (auto v : bb.vertices) lb.push_back(b.cells0[v].label);
    if (la != lb) {
      r.counterexample = "vertex order differs along " + detail::bone_key(ba.side, ba.od);
      return r;
    }
  }
  r.ok = true;
  return r;
}

// ------------------------------------------------------------ isentropes

struct Isentrope {
  double h0 = 0;
  int res = 0;                      // grid nodes per side; cells are (res-1)^2
  std::vector<std::uint8_t> cells;  // row-major over cells, 1 when bracketing
  std::size_t cell_count = 0;
  int components = 0;
  std::vector<int> component_of;  // -1 outside
  std::vector<std::vector<QPoint>> polylines;

  bool has(int i, int j) const { return cells[std::size_t(j) * std::size_t(res - 1) + std::size_t(i)] != 0; }
  // cell containing (v, w)
  std::pair<int, int> cell_at(double v, double w) const {
    int m = res - 1;
    return {std::clamp(int(v * m), 0, m - 1), std::clamp(int(w * m), 0, m - 1)};
  }
};

namespace detail {

inline int label_components(const std::vector<std::uint8_t>& mask, int m, std::vector<int>& comp) {
  comp.assign(mask.size(), -1);
  int count = 0;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = count;
    while (!stack.empty()) {
      std::size_t c = stack.back();
      stack.pop_back();
      int i = int(c % std::size_t(m)), j = int(c / std::size_t(m));
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= m || b >= m) continue;
          std::size_t d = std::size_t(b) * std::size_t(m) + std::size_t(a);
          if (mask[d] && comp[d] < 0) {
            comp[d] = count;
            stack.push_back(d);
          }
        }
    }
    ++count;
  }
  return count;
}

// Marching squares on the node values; segments are chained into polylines.
inline std::vector<std::vector<QPoint>> contour(const EntropyGrid& g, double h0) {
  int R = g.res;
  // edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*R+i), vertical (i,j)-(i,j+1) -> 2*(j*R+i)+1
  auto hid = [&](int i, int j) { return 2 * (std::size_t(j) * std::size_t(R) + std::size_t(i)); };
  auto vid = [&](int i, int j) { return 2 * (std::size_t(j) * std::size_t(R) + std::size_t(i)) + 1; };
  auto above = [&](int i, int j) { return g.h(i, j) >= h0; };
  auto point = [&](std::size_t id) {
    std::size_t base = id / 2;
    int i = int(base % std::size_t(R)), j = int(base / std::size_t(R));
    int i2 = id % 2 == 0 ? i + 1 : i, j2 = id % 2 == 0 ? j : j + 1;
    double a = g.h(i, j), b = g.h(i2, j2);
    double t = a == b ? 0.5 : std::clamp((h0 - a) / (b - a), 0.0, 1.0);
    return QPoint{g.coord(i) + t * (g.coord(i2) - g.coord(i)), g.coord(j) + t * (g.coord(j2) - g.coord(j))};
  };
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  for (int j = 0; j + 1 < R; ++j)
    for (int i = 0; i + 1 < R; ++i) {
      bool c0 = above(i, j), c1 = above(i + 1, j), c2 = above(i + 1, j + 1), c3 = above(i, j + 1);
      std::vector<std::size_t> cut;
      if (c0 != c1) cut.push_back(hid(i, j));
      if (c1 != c2) cut.push_back(vid(i + 1, j));
      if (c2 != c3) cut.push_back(hid(i, j + 1));
      if (c3 != c0) cut.push_back(vid(i, j));
      if (cut.size() == 2) {
        segs.push_back({cut[0], cut[1]});
      } else if (cut.size() == 4) {
        double centre = 0.25 * (g.h(i, j) + g.h(i + 1, j) + g.h(i + 1, j + 1) + g.h(i, j + 1));
        if ((centre >= h0) == c0) {
          segs.push_back({cut[0], cut[1]});
          segs.push_back({cut[2], cut[3]});
        } else {
          segs.push_back({cut[0], cut[3]});
          segs.push_back({cut[1], cut[2]});
        }
      }
    }
  std::multimap<std::size_t, std::size_t> at;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    at.insert({segs[s].first, s});
    at.insert({segs[s].second, s});
  }
  std::vector<std::uint8_t> used(segs.size(), 0);
  auto other = [&](std::size_t s, std::size_t e) { return segs[s].first == e ? segs[s].second : segs[s].first; };
  auto step = [&](std::size_t e) -> std::optional<std::size_t> {
    auto [lo, hi] = at.equal_range(e);
    for (auto it = lo; it != hi; ++it)
      if (!used[it->second]) return it->second;
    return std::nullopt;
  };
  std::vector<std::vector<QPoint>> out;
  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = 1;
    std::vector<std::size_t> chain{segs[s0].first, segs[s0].second};
    for (int dir = 0; dir < 2; ++dir) {
      for (;;) {
        std::size_t e = chain.back();
        auto s = step(e);
        if (!s) break;
        used[*s] = 1;
        chain.push_back(other(*s, e));
      }
      std::reverse(chain.begin(), chain.end());
    }
    std::vector<QPoint> poly;
    for (auto e : chain) poly.push_back(point(e));
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace detail

// Cells whose padded corner range [min(h - err), max(h + err)] contains h0.
inline Isentrope isentrope_extract(const EntropyGrid& g, double h0) {
  if (!(h0 >= 0) || h0 > std::log(4.0) + 1e-12) throw domain_error("h0 must lie in [0, log 4]");
  if (g.res < 2) throw domain_error("grid too small");
  Isentrope iso;
  iso.h0 = h0;
  iso.res = g.res;
  int m = g.res - 1;
  iso.cells.assign(std::size_t(m) * std::size_t(m), 0);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      double lo = 1e300, hi = -1e300;
      for (auto [a, b] : {std::pair{i, j}, std::pair{i + 1, j}, std::pair{i, j + 1}, std::pair{i + 1, j + 1}}) {
        lo = std::min(lo, g.h(a, b) - g.err(a, b));
        hi = std::max(hi, g.h(a, b) + g.err(a, b));
      }
      if (lo <= h0 && h0 <= hi) {
        iso.cells[std::size_t(j) * std::size_t(m) + std::size_t(i)] = 1;
        ++iso.cell_count;
      }
    }
  iso.components = detail::label_components(iso.cells, m, iso.component_of);
  iso.polylines = detail::contour(g, h0);
  return iso;
}

struct Box {
  double v0 = 0, w0 = 0, v1 = 1, w1 = 1;
  bool contains_cell(double a0, double b0, double a1, double b1) const {
    return a0 >= v0 && b0 >= w0 && a1 <= v1 && b1 <= w1;
  }
};

struct RefinementLevel {
  int res = 0;
  std::size_t cells = 0;
  double max_variation = 0;   // largest corner spread of h over bracketing cells
  double mean_variation = 0;
  bool nested = true;  // inside the one-cell dilation of the previous level
};

struct RefinementReport {
  double h0 = 0;
  std::vector<RefinementLevel> levels;
  bool nested = true;
  bool strictly_decreasing = true;
  bool non_increasing = true;
};

inline RefinementReport refinement_audit(Family fam, double h0, const std::vector<int>& resolutions, int kmax = 12,
                                         std::optional<Box> box = std::nullopt,
                                         unsigned workers = default_workers()) {
  for (std::size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i] <= resolutions[i - 1]) throw domain_error("resolutions must increase");
  RefinementReport rep;
  rep.h0 = h0;
  Box bx = box.value_or(Box{});
  std::optional<Isentrope> prev;
  for (int R : resolutions) {
    EntropyGrid g = entropy_grid(fam, R, kmax, workers);
    Isentrope iso = isentrope_extract(g, h0);
    RefinementLevel lv;
    lv.res = R;
    int m = R - 1;
    double sum = 0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        if (!iso.has(i, j) || !bx.contains_cell(g.coord(i), g.coord(j), g.coord(i + 1), g.coord(j + 1))) continue;
        double lo = std::min({g.h(i, j), g.h(i + 1, j), g.h(i, j + 1), g.h(i + 1, j + 1)});
        double hi = std::max({g.h(i, j), g.h(i + 1, j), g.h(i, j + 1), g.h(i + 1, j + 1)});
        lv.max_variation = std::max(lv.max_variation, hi - lo);
        sum += hi - lo;
        ++lv.cells;
        if (prev) {
          // any earlier cell within one cell of this one's centre
          double cv = 0.5 * (g.coord(i) + g.coord(i + 1)), cw = 0.5 * (g.coord(j) + g.coord(j + 1));
          auto [pi, pj] = prev->cell_at(cv, cw);
          bool hit = false;
          int pm = prev->res - 1;
          for (int dj = -1; dj <= 1 && !hit; ++dj)
            for (int di = -1; di <= 1 && !hit; ++di) {
              int a = pi + di, b = pj + dj;
              if (a >= 0 && b >= 0 && a < pm && b < pm && prev->has(a, b)) hit = true;
            }
          if (!hit) lv.nested = false;
        }
      }
    lv.mean_variation = lv.cells ? sum / double(lv.cells) : 0.0;
    if (!rep.levels.empty()) {
      const auto& last = rep.levels.back();
      if (!(lv.max_variation < last.max_variation)) rep.strictly_decreasing = false;
      if (lv.max_variation > last.max_variation) rep.non_increasing = false;
    }
    rep.nested = rep.nested && lv.nested;
    rep.levels.push_back(lv);
    prev = std::move(iso);
  }
  return rep;
}

}  // namespace bones
