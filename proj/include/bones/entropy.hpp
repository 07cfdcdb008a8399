#pragma once

#include <bones/dyadic.hpp>
#include <bones/errors.hpp>
#include <bones/families.hpp>
#include <bones/parallel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

namespace bones {

// ------------------------------------------------------------ map models

template <class T>
struct Piece {
  T lo, hi;
  int sign;  // +1 increasing, 0 flat, -1 decreasing
};

// Stunted pair with exact arithmetic.
template <class T>
struct StModel {
  using value = T;
  T v, w;
  const T& a(int lane) const { return lane == 1 ? v : w; }
  T map(int lane, const T& x) const { return eval_stunted(a(lane), x); }
  int pieces(int lane, std::array<Piece<T>, 3>& out) const {
    const T& p = a(lane);
    T e1 = p.half(), e2 = T(1) - p.half();
    int n = 0;
    if (T(0) < p) out[n++] = {T(0), e1, +1};
    if (p < T(1)) out[n++] = {e1, e2, 0};
    if (T(0) < p) out[n++] = {e2, T(1), -1};
    return n;
  }
  T inverse(int lane, int sign, const T& y) const {
    (void)lane;
    return sign > 0 ? y.half() : T(1) - y.half();
  }
};

struct QModel {
  using value = double;
  double v, w;
  double a(int lane) const { return lane == 1 ? v : w; }
  double map(int lane, double x) const { return eval_logistic(a(lane), x); }
  int pieces(int lane, std::array<Piece<double>, 3>& out) const {
    if (a(lane) <= 0) {
      out[0] = {0.0, 1.0, 0};
      return 1;
    }
    out[0] = {0.0, 0.5, +1};
    out[1] = {0.5, 1.0, -1};
    return 2;
  }
  double inverse(int lane, int sign, double y) const {
    double s = std::sqrt(std::max(0.0, 1.0 - y / a(lane)));
    return sign > 0 ? 0.5 * (1.0 - s) : 0.5 * (1.0 + s);
  }
};

// ------------------------------------------------------------ lap counts

struct LapStructure {
  std::vector<double> breakpoints;  // interior lap boundaries, increasing
  std::vector<int> lap_signs;       // +1, -1 or 0 (flat), one per lap
};

namespace detail {

inline double halve(double x) { return 0.5 * x; }
inline Dyadic halve(const Dyadic& x) { return x.half(); }

inline std::size_t mix(std::size_t h, std::size_t x) { return h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

template <class T>
struct StateKey {
  T lo, hi;
  int lane, r;
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

template <class T>
struct StateHash {
  std::size_t operator()(const StateKey<T>& k) const {
    std::size_t h = std::hash<T>{}(k.lo);
    h = mix(h, std::hash<T>{}(k.hi));
    return mix(h, std::size_t(k.lane * 1000 + k.r));
  }
};

struct LapSummary {
  std::uint64_t count = 0;
  int first = 0, last = 0;
};

inline void append(LapSummary& acc, const LapSummary& part) {
  if (part.count == 0) return;
  if (acc.count == 0) {
    acc = part;
    return;
  }
  acc.count += part.count;
  if (acc.last == part.first) acc.count -= 1;  // adjacent laps of one kind join
  acc.last = part.last;
}

// Memoized lap structure of the alternating lane maps on an interval.
// States are (image interval, lane, steps left); image endpoints come from
// the critical orbits, so the state count grows polynomially in k.
template <class M>
class LapEngine {
 public:
  using T = typename M::value;
  explicit LapEngine(M m) : m_(std::move(m)) {}

  const M& model() const { return m_; }

  LapSummary laps(const T& lo, const T& hi, int lane, int r) {
    if (r == 0) return {1, +1, +1};
    StateKey<T> key{lo, hi, lane, r};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::array<Piece<T>, 3> ps;
    int np = m_.pieces(lane, ps);
    LapSummary acc;
    for (int i = 0; i < np; ++i) {
      T a = std::max(lo, ps[i].lo), b = std::min(hi, ps[i].hi);
      if (!(a < b)) continue;
      LapSummary part;
      if (ps[i].sign == 0) {
        part = {1, 0, 0};
      } else {
        T fa = m_.map(lane, a), fb = m_.map(lane, b);
        if (ps[i].sign > 0) {
          part = laps(fa, fb, other_lane(lane), r - 1);
        } else {
          LapSummary s = laps(fb, fa, other_lane(lane), r - 1);
          part = {s.count, -s.last, -s.first};
        }
      }
      append(acc, part);
    }
    if (++states_ > budget_) throw budget_error("lap state budget exceeded");
    memo_.emplace(key, acc);
    return acc;
  }

  void set_budget(std::size_t b) { budget_ = b; }
  std::size_t states() const { return states_; }

 private:
  M m_;
  std::unordered_map<StateKey<T>, LapSummary, StateHash<T>> memo_;
  std::size_t states_ = 0, budget_ = 50000000;
};

// Endpoints of lap images of the k-th iterate: 0, 1 and the critical orbits
// as they pass through lane 1.
template <class M>
std::vector<typename M::value> image_endpoints(const M& m, int k) {
  using T = typename M::value;
  std::vector<T> V{T(0), T(1), halve(T(1))};
  // critical value of lane 1 sits in lane 2, that of lane 2 in lane 1
  for (int start = 1; start <= 2; ++start) {
    T x = m.map(start, halve(T(1)));
    int lane = other_lane(start);
    for (int s = 0; s <= 2 * k; ++s) {
      if (lane == 1) V.push_back(x);
      x = m.map(lane, x);
      lane = other_lane(lane);
    }
  }
  std::sort(V.begin(), V.end());
  V.erase(std::unique(V.begin(), V.end()), V.end());
  return V;
}

// Number of negative-type fixed points of the k-th iterate.  Domain
// cylinders are refined until they sit strictly inside a cell of the image
// endpoint set; there a decreasing lap crosses the diagonal exactly when its
// image covers the cell, which a memoized per-cell histogram answers.
template <class M>
class NegEngine {
 public:
  using T = typename M::value;
  NegEngine(M m, int k) : m_(std::move(m)), k_(k), V_(image_endpoints(m_, k)) { cells_ = V_.size() - 1; }

  std::uint64_t count() {
    chain_.clear();
    total_ = 0;
    nodes_ = 0;
    walk(T(0), T(1), T(0), T(1), 1, 2 * k_, +1);
    return total_;
  }

  void set_budget(std::size_t b) { budget_ = b; }
  std::size_t nodes() const { return nodes_; }

 private:
  using Hist = std::vector<std::uint64_t>;  // [cell][0: increasing, 1: decreasing]

  const Hist& hist(const T& lo, const T& hi, int lane, int r) {
    StateKey<T> key{lo, hi, lane, r};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Hist h(2 * cells_, 0);
    if (r == 0) {
      for (std::size_t c = 0; c < cells_; ++c)
        if (!(V_[c] < lo) && !(hi < V_[c + 1])) h[2 * c] = 1;
    } else {
      std::array<Piece<T>, 3> ps;
      int np = m_.pieces(lane, ps);
      for (int i = 0; i < np; ++i) {
        if (ps[i].sign == 0) continue;
        T a = std::max(lo, ps[i].lo), b = std::min(hi, ps[i].hi);
        if (!(a < b)) continue;
        T fa = m_.map(lane, a), fb = m_.map(lane, b);
        const Hist& s = ps[i].sign > 0 ? hist(fa, fb, other_lane(lane), r - 1) : hist(fb, fa, other_lane(lane), r - 1);
        for (std::size_t c = 0; c < cells_; ++c) {
          h[2 * c] += ps[i].sign > 0 ? s[2 * c] : s[2 * c + 1];
          h[2 * c + 1] += ps[i].sign > 0 ? s[2 * c + 1] : s[2 * c];
        }
      }
    }
    return memo_.emplace(key, std::move(h)).first->second;
  }

  T pull_back(T y) const {
    for (std::size_t j = chain_.size(); j-- > 0;) y = m_.inverse(chain_[j].first, chain_[j].second, y);
    return y;
  }

  // D = [x0, x1] maps onto Y = [y0, y1] with orientation o after
  // chain_.size() steps; r steps remain.
  void walk(const T& x0, const T& x1, const T& y0, const T& y1, int lane, int r, int o) {
    if (++nodes_ > budget_) throw budget_error("negative fixed point search exceeded its budget");
    auto ub = std::upper_bound(V_.begin(), V_.end(), x0);
    if (ub != V_.begin() && ub != V_.end() && *(ub - 1) < x0 && x1 < *ub) {
      std::size_t c = std::size_t(ub - V_.begin()) - 1;
      const Hist& h = hist(y0, y1, lane, r);
      total_ += o > 0 ? h[2 * c + 1] : h[2 * c];
      return;
    }
    if (r == 0) {
      if (o < 0 && x0 < y1 && y0 < x1) ++total_;
      return;
    }
    std::array<Piece<T>, 3> ps;
    int np = m_.pieces(lane, ps);
    for (int i = 0; i < np; ++i) {
      if (ps[i].sign == 0) continue;
      T a = std::max(y0, ps[i].lo), b = std::min(y1, ps[i].hi);
      if (!(a < b)) continue;
      // domain endpoints of the sub-cylinder
      T da = a == y0 ? (o > 0 ? x0 : x1) : pull_back(a);
      T db = b == y1 ? (o > 0 ? x1 : x0) : pull_back(b);
      T lo = o > 0 ? da : db, hi = o > 0 ? db : da;
      T fa = m_.map(lane, a), fb = m_.map(lane, b);
      chain_.push_back({lane, ps[i].sign});
      if (ps[i].sign > 0) walk(lo, hi, fa, fb, other_lane(lane), r - 1, o);
      else walk(lo, hi, fb, fa, other_lane(lane), r - 1, -o);
      chain_.pop_back();
    }
  }

  M m_;
  int k_;
  std::vector<T> V_;
  std::size_t cells_ = 0;
  std::unordered_map<StateKey<T>, Hist, StateHash<T>> memo_;
  std::vector<std::pair<int, int>> chain_;
  std::uint64_t total_ = 0;
  std::size_t nodes_ = 0, budget_ = 20000000;
};

// Explicit enumeration of all cylinders of the k-th iterate.
template <class M>
LapStructure explicit_laps(const M& m, int k, std::size_t budget) {
  using T = typename M::value;
  struct Lap {
    T x0, x1;
    int sign;
  };
  struct Child {
    T x0, x1, y0, y1;
    int sign;
  };
  std::vector<Lap> laps;
  std::vector<std::pair<int, int>> chain;
  auto pull_back = [&](T y) {
    for (std::size_t j = chain.size(); j-- > 0;) y = m.inverse(chain[j].first, chain[j].second, y);
    return y;
  };
  auto rec = [&](auto& self, const T& x0, const T& x1, const T& y0, const T& y1, int lane, int r, int o) -> void {
    if (r == 0) {
      laps.push_back({x0, x1, o});
      if (laps.size() > budget) throw budget_error("lap budget exceeded");
      return;
    }
    std::array<Piece<T>, 3> ps;
    int np = m.pieces(lane, ps);
    std::vector<Child> kids;
    for (int i = 0; i < np; ++i) {
      T a = std::max(y0, ps[i].lo), b = std::min(y1, ps[i].hi);
      if (!(a < b)) continue;
      T da = a == y0 ? (o > 0 ? x0 : x1) : pull_back(a);
      T db = b == y1 ? (o > 0 ? x1 : x0) : pull_back(b);
      kids.push_back({o > 0 ? da : db, o > 0 ? db : da, a, b, ps[i].sign});
    }
    if (o < 0) std::reverse(kids.begin(), kids.end());
    for (const auto& c : kids) {
      if (c.sign == 0) {
        laps.push_back({c.x0, c.x1, 0});
        continue;
      }
      T fa = m.map(lane, c.y0), fb = m.map(lane, c.y1);
      chain.push_back({lane, c.sign});
      if (c.sign > 0) self(self, c.x0, c.x1, fa, fb, other_lane(lane), r - 1, o);
      else self(self, c.x0, c.x1, fb, fa, other_lane(lane), r - 1, -o);
      chain.pop_back();
    }
  };
  rec(rec, T(0), T(1), T(0), T(1), 1, 2 * k, +1);
  LapStructure out;
  for (const auto& L : laps) {
    if (!out.lap_signs.empty() && out.lap_signs.back() == L.sign) continue;
    if (!out.lap_signs.empty()) out.breakpoints.push_back(to_double(L.x0));
    out.lap_signs.push_back(L.sign);
  }
  return out;
}

}  // namespace detail

struct EntropyBudget {
  std::size_t lap_states = 50000000;
  std::size_t neg_nodes = 20000000;
};

inline std::uint64_t lap_count(const ParamPoint& p, int k, const EntropyBudget& b = {}) {
  if (k < 1) throw domain_error("k must be positive");
  if (k > 31) throw budget_error("lap counts beyond k = 31 overflow");
  if (p.family == Family::ST) {
    detail::LapEngine<StModel<Dyadic>> e({Dyadic::from_double(p.v), Dyadic::from_double(p.w)});
    e.set_budget(b.lap_states);
    return e.laps(Dyadic(0), Dyadic(1), 1, 2 * k).count;
  }
  detail::LapEngine<QModel> e({p.v, p.w});
  e.set_budget(b.lap_states);
  return e.laps(0.0, 1.0, 1, 2 * k).count;
}

inline std::uint64_t neg_count(const ParamPoint& p, int k, const EntropyBudget& b = {}) {
  if (k < 1) throw domain_error("k must be positive");
  if (p.family == Family::ST) {
    detail::NegEngine<StModel<Dyadic>> e({Dyadic::from_double(p.v), Dyadic::from_double(p.w)}, k);
    e.set_budget(b.neg_nodes);
    return e.count();
  }
  detail::NegEngine<QModel> e({p.v, p.w}, k);
  e.set_budget(b.neg_nodes);
  return e.count();
}

// Breakpoints and signs of every lap, for small k.
inline LapStructure lap_structure(const ParamPoint& p, int k, std::size_t budget = 10000000) {
  if (k < 1) throw domain_error("k must be positive");
  if (p.family == Family::ST)
    return detail::explicit_laps(StModel<Dyadic>{Dyadic::from_double(p.v), Dyadic::from_double(p.w)}, k, budget);
  return detail::explicit_laps(QModel{p.v, p.w}, k, budget);
}

enum class Estimator { lap_growth, neg_growth };

inline const char* to_string(Estimator e) { return e == Estimator::lap_growth ? "lap_growth" : "neg_growth"; }

struct EntropyEstimate {
  double h = 0;      // primary: mean log lap ratio over the last three k
  double h_lap = 0;  // same as h
  double h_neg = 0;  // (1/k) log+ Neg at the largest k reached
  double err = 0;    // spread between the two
  int k = 0;         // largest k reached
};

namespace detail {

template <class M>
EntropyEstimate estimate_with(const M& m, int kmax, const EntropyBudget& b) {
  using T = typename M::value;
  LapEngine<M> lap(m);
  lap.set_budget(b.lap_states);
  std::vector<double> L;
  int k = 0;
  try {
    for (k = 1; k <= kmax; ++k) L.push_back(double(lap.laps(T(0), T(1), 1, 2 * k).count));
  } catch (const budget_error&) {
  }
  int kl = int(L.size());
  if (kl < 4) throw budget_error("too few lap counts for an estimate");
  EntropyEstimate e;
  double s = 0;
  for (int j = kl - 3; j < kl; ++j) s += std::log(L[std::size_t(j)] / L[std::size_t(j - 1)]);
  e.h_lap = e.h = std::max(0.0, s / 3.0);
  for (int kn = kl; kn >= 1; --kn) {
    try {
      NegEngine<M> ng(m, kn);
      ng.set_budget(b.neg_nodes);
      std::uint64_t neg = ng.count();
      e.h_neg = neg > 1 ? std::log(double(neg)) / kn : 0.0;
      e.k = kn;
      break;
    } catch (const budget_error&) {
    }
  }
  e.err = std::abs(e.h - e.h_neg);
  return e;
}

}  // namespace detail

inline EntropyEstimate entropy_estimate(const ParamPoint& p, int kmax, const EntropyBudget& b = {}) {
  if (kmax < 4) throw domain_error("kmax must be at least 4");
  if (p.family == Family::ST)
    return detail::estimate_with(StModel<Dyadic>{Dyadic::from_double(p.v), Dyadic::from_double(p.w)}, kmax, b);
  return detail::estimate_with(QModel{p.v, p.w}, kmax, b);
}

struct EntropyGrid {
  Family family = Family::Q;
  int res = 0;
  int kmax = 0;
  Estimator estimator = Estimator::lap_growth;
  std::vector<EntropyEstimate> cells;  // row-major, row j is w = j/(res-1)

  double coord(int i) const { return double(i) / double(res - 1); }
  const EntropyEstimate& at(int i, int j) const { return cells[std::size_t(j) * std::size_t(res) + std::size_t(i)]; }
  double h(int i, int j) const { return estimator == Estimator::lap_growth ? at(i, j).h : at(i, j).h_neg; }
  double err(int i, int j) const { return at(i, j).err; }
};

// Samples the lattice {i/(R-1)}^2, which includes the four corners.
inline EntropyGrid entropy_grid(Family fam, int res, int kmax, unsigned workers = default_workers(),
                                const EntropyBudget& b = {}, Estimator est = Estimator::lap_growth) {
  if (res < 2) throw domain_error("resolution must be at least 2");
  EntropyGrid g;
  g.family = fam;
  g.res = res;
  g.kmax = kmax;
  g.estimator = est;
  g.cells.resize(std::size_t(res) * std::size_t(res));
  parallel_for(g.cells.size(), workers, [&](std::size_t idx) {
    int i = int(idx % std::size_t(res)), j = int(idx / std::size_t(res));
    double v = g.coord(i), w = g.coord(j);
    if (fam == Family::ST) {
      // exact dyadic parameters so that ST results do not depend on rounding
      v = std::ldexp(std::round(std::ldexp(v, 20)), -20);
      w = std::ldexp(std::round(std::ldexp(w, 20)), -20);
    }
    g.cells[idx] = entropy_estimate({v, w, fam}, kmax, b);
  });
  return g;
}

// One row per sample: v, w, h, err, estimator.
inline std::string grid_csv(const EntropyGrid& g) {
  std::string out = "v,w,h,err,estimator\n";
  char buf[160];
  for (int j = 0; j < g.res; ++j)
    for (int i = 0; i < g.res; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s\n", g.coord(i), g.coord(j), g.h(i, j), g.err(i, j),
                    to_string(g.estimator));
      out += buf;
    }
  return out;
}

// Binary P5 heatmap, h scaled from [0, log 4] to 0..255; the top row is w = 1.
inline std::string grid_pgm(const EntropyGrid& g) {
  std::string out = "P5\n" + std::to_string(g.res) + " " + std::to_string(g.res) + "\n255\n";
  for (int j = g.res - 1; j >= 0; --j)
    for (int i = 0; i < g.res; ++i) {
      double t = std::clamp(g.h(i, j) / std::log(4.0), 0.0, 1.0);
      out += char(static_cast<unsigned char>(std::lround(255 * t)));
    }
  return out;
}

struct MonotonicityReport {
  std::size_t points = 0;
  std::size_t violations = 0;
  double max_drop = 0;  // largest h_i - h_{i+1} beyond the error bars
  std::vector<std::size_t> where;
  std::vector<double> h, err;
  bool ok() const { return violations == 0; }
};

inline MonotonicityReport entropy_monotonicity_audit(const std::vector<ParamPoint>& path, int kmax,
                                                     unsigned workers = default_workers(),
                                                     const EntropyBudget& b = {}) {
  MonotonicityReport r;
  r.points = path.size();
  std::vector<EntropyEstimate> es(path.size());
  parallel_for(path.size(), workers, [&](std::size_t i) { es[i] = entropy_estimate(path[i], kmax, b); });
  for (auto& e : es) {
    r.h.push_back(e.h);
    r.err.push_back(e.err);
  }
  for (std::size_t i = 0; i + 1 < es.size(); ++i) {
    double drop = es[i].h - es[i + 1].h - es[i].err - es[i + 1].err;
    if (drop > 0) {
      ++r.violations;
      r.where.push_back(i);
      r.max_drop = std::max(r.max_drop, drop);
    }
  }
  return r;
}

}  // namespace bones
