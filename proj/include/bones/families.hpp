#pragma once

#include <bones/dyadic.hpp>
#include <bones/errors.hpp>
#include <bones/symbolic.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bones {

enum class Family { ST, Q };

inline const char* to_string(Family f) { return f == Family::ST ? "st" : "q"; }

struct ParamPoint {
  double v = 0;
  double w = 0;
  Family family = Family::Q;
};

struct Tolerances {
  double sym = 1e-12;    // iterate this close to 1/2 reads as the critical symbol (Q)
  double orbit = 1e-10;  // periodicity detection (Q)
  double corr = 1e-11;   // continuation corrector
};

// ------------------------------------------------------------------ maps

inline double eval_logistic(double v, double x) { return 4.0 * v * x * (1.0 - x); }

template <class T>
T eval_stunted(const T& v, const T& x) {
  T hv = v.half();
  if (x <= hv) return x + x;
  if (x <= T(1) - hv) return v;
  return T(2) - (x + x);
}

template <class T>
bool in_plateau(const T& v, const T& x) {
  T hv = v.half();
  return hv <= x && x <= T(1) - hv;
}

// Stunted tent pair: st_v on lane 1, st_w on lane 2.  T is Dyadic or Rational.
template <class T>
struct StPair {
  T v, w;
  const T& param(int lane) const { return lane == 1 ? v : w; }
  T map(int lane, const T& x) const { return eval_stunted(param(lane), x); }
  Kind kind(const T& x) const {
    T h = T(1).half();
    return x < h ? Kind::L : (x == h ? Kind::C : Kind::R);
  }
  bool plateau(int lane, const T& x) const { return in_plateau(param(lane), x); }
};

struct QPair {
  double v, w;
  double sym_tol = 1e-12;
  double param(int lane) const { return lane == 1 ? v : w; }
  double map(int lane, double x) const { return eval_logistic(param(lane), x); }
  double deriv(int lane, double x) const { return 4.0 * param(lane) * (1.0 - 2.0 * x); }
  Kind kind(double x) const {
    if (std::abs(x - 0.5) < sym_tol) return Kind::C;
    return x < 0.5 ? Kind::L : Kind::R;
  }
};

inline int other_lane(int lane) { return lane == 1 ? 2 : 1; }

// ----------------------------------------------------------------- orbits

enum class OrbitStatus { periodic, eventually_periodic, truncated };

inline const char* to_string(OrbitStatus s) {
  switch (s) {
    case OrbitStatus::periodic: return "periodic";
    case OrbitStatus::eventually_periodic: return "eventually_periodic";
    default: return "truncated";
  }
}

template <class T>
struct OrbitRecord {
  std::vector<T> points;  // points[k] lies in lane start_lane + k (alternating)
  int start_lane = 1;
  Itinerary itinerary;
  OrbitStatus status = OrbitStatus::truncated;
  std::size_t preperiod = 0;
  std::size_t period = 0;  // in pair steps (even)

  int lane(std::size_t k) const { return (start_lane - 1 + int(k)) % 2 + 1; }
};

namespace detail {

template <class T>
void finish_itinerary(OrbitRecord<T>& rec, const std::vector<Symbol>& syms) {
  if (rec.status == OrbitStatus::truncated) {
    rec.itinerary.preperiod = syms;
    return;
  }
  rec.itinerary.preperiod.assign(syms.begin(), syms.begin() + std::ptrdiff_t(rec.preperiod));
  rec.itinerary.period.assign(syms.begin() + std::ptrdiff_t(rec.preperiod),
                              syms.begin() + std::ptrdiff_t(rec.preperiod + rec.period));
}

}  // namespace detail

// Exact orbit of the stunted pair with cycle detection by equality.
template <class T>
OrbitRecord<T> st_orbit(const StPair<T>& p, const T& x0, std::size_t max_steps, int start_lane) {
  OrbitRecord<T> rec;
  rec.start_lane = start_lane;
  std::map<std::pair<int, T>, std::size_t> seen;
  std::vector<Symbol> syms;
  T x = x0;
  for (std::size_t k = 0; k <= max_steps; ++k) {
    int lane = rec.lane(k);
    auto key = std::make_pair(lane, x);
    auto it = seen.find(key);
    if (it != seen.end()) {
      rec.preperiod = it->second;
      rec.period = k - it->second;
      rec.status = rec.preperiod == 0 ? OrbitStatus::periodic : OrbitStatus::eventually_periodic;
      break;
    }
    if (k == max_steps) break;
    seen.emplace(key, k);
    rec.points.push_back(x);
    syms.push_back({lane, p.kind(x)});
    x = p.map(lane, x);
  }
  detail::finish_itinerary(rec, syms);
  return rec;
}

// Floating orbit of the logistic pair; a cycle is declared once an iterate
// returns within tol of an earlier same-lane iterate.
inline OrbitRecord<double> q_orbit(const QPair& p, double x0, std::size_t max_steps, int start_lane,
                                   double tol = 1e-10, std::size_t max_period = 128) {
  OrbitRecord<double> rec;
  rec.start_lane = start_lane;
  std::vector<Symbol> syms;
  double x = x0;
  for (std::size_t k = 0; k <= max_steps; ++k) {
    rec.points.push_back(x);
    std::size_t found = 0;
    for (std::size_t per = 2; per <= std::min(k, max_period); per += 2) {
      if (std::abs(x - rec.points[k - per]) < tol) {
        found = per;
        break;
      }
    }
    if (found) {
      std::size_t start = k - found;
      while (start > 0 && std::abs(rec.points[start - 1] - rec.points[start - 1 + found]) < tol) --start;
      rec.points.pop_back();
      rec.points.resize(start + found);
      syms.resize(start + found);
      rec.preperiod = start;
      rec.period = found;
      rec.status = start == 0 ? OrbitStatus::periodic : OrbitStatus::eventually_periodic;
      break;
    }
    if (k == max_steps) {
      rec.points.pop_back();
      break;
    }
    int lane = rec.lane(k);
    syms.push_back({lane, p.kind(x)});
    x = p.map(lane, x);
  }
  detail::finish_itinerary(rec, syms);
  return rec;
}

// Family-dispatching orbit with values reported as doubles.  ST parameters
// and x0 are converted to dyadics exactly.
inline OrbitRecord<double> pair_orbit(const ParamPoint& p, double x0, std::size_t max_steps, int start_lane,
                                      const Tolerances& tol = {}) {
  if (p.family == Family::Q) return q_orbit(QPair{p.v, p.w, tol.sym}, x0, max_steps, start_lane, tol.orbit);
  StPair<Dyadic> sp{Dyadic::from_double(p.v), Dyadic::from_double(p.w)};
  auto r = st_orbit(sp, Dyadic::from_double(x0), max_steps, start_lane);
  OrbitRecord<double> out;
  out.start_lane = r.start_lane;
  out.itinerary = r.itinerary;
  out.status = r.status;
  out.preperiod = r.preperiod;
  out.period = r.period;
  for (const auto& x : r.points) out.points.push_back(x.to_double());
  return out;
}

// Finite itinerary of the critical point of `lane` under an exact stunted pair.
template <class T>
Itinerary st_critical_itinerary(const StPair<T>& p, int lane, std::size_t length) {
  Itinerary it;
  T x = T(1).half();
  int l = lane;
  for (std::size_t k = 0; k < length; ++k) {
    it.preperiod.push_back({l, p.kind(x)});
    x = p.map(l, x);
    l = other_lane(l);
  }
  return it;
}

// Tight iff no orbit point other than the plateau centers lands on a plateau.
template <class T>
bool is_tight_st(const Itinerary& seq, const StPair<T>& p) {
  if (seq.empty()) return true;
  Symbol s0 = seq.at(0);
  if (s0.kind != Kind::C) throw domain_error("kneading sequence must start at a critical point");
  std::size_t len = seq.periodic() ? seq.preperiod.size() + 2 * seq.period.size() : seq.preperiod.size();
  T x = T(1).half();
  int lane = s0.lane;
  for (std::size_t k = 0; k < len; ++k) {
    if (p.kind(x) != seq.at(k).kind) throw domain_error("sequence does not match the orbit at these parameters");
    if (k > 0 && p.plateau(lane, x) && x != T(1).half()) return false;
    x = p.map(lane, x);
    lane = other_lane(lane);
  }
  return true;
}

// ------------------------------------------------------ critical points (Q)

struct CriticalPoints {
  enum class Kind { real_triple, degenerate, complex_pair } kind;
  double c1 = 0.5, c2 = 0.5, c3 = 0.5;
};

inline CriticalPoints critical_points_q_composition(double v) {
  if (v == 0.5) return {CriticalPoints::Kind::degenerate, 0.5, 0.5, 0.5};
  if (v < 0.5) return {CriticalPoints::Kind::complex_pair, 0.5, 0.5, 0.5};
  double c1 = 0.5 * (1.0 - std::sqrt(1.0 - 0.5 / v));
  return {CriticalPoints::Kind::real_triple, c1, 0.5, 1.0 - c1};
}

// ------------------------------------------------------ jets along orbits (Q)

struct Jet {
  double x = 0, dv = 0, dw = 0, dx = 1;  // value and partials wrt v, w, starting point
};

// Applies `steps` alternating logistic maps starting in `lane`, carrying
// forward-mode derivatives.
inline Jet q_jet(double v, double w, double x0, int lane, std::size_t steps) {
  Jet j{x0, 0, 0, 1};
  for (std::size_t k = 0; k < steps; ++k) {
    double a = lane == 1 ? v : w;
    double g = 4.0 * j.x * (1.0 - j.x);
    double d = 4.0 * a * (1.0 - 2.0 * j.x);
    j.dv = d * j.dv + (lane == 1 ? g : 0.0);
    j.dw = d * j.dw + (lane == 2 ? g : 0.0);
    j.dx = d * j.dx;
    j.x = a * g;
    lane = other_lane(lane);
  }
  return j;
}

// ------------------------------------------------- periodic critical points

struct PeriodicCritical {
  std::size_t period = 0;  // pair steps
  OrderData od;
};

template <class T>
OrderData order_data_of_cycle(const std::vector<T>& cycle, int start_lane) {
  auto [s, t] = permutations_from_cycles(std::vector<std::vector<T>>{cycle}, {start_lane},
                                         [](const T& a, const T& b) { return a < b; });
  return {s, t};
}

// which = 1 for gamma_1, 2 for gamma_2.
template <class T>
std::optional<PeriodicCritical> detect_periodic_critical_st(const StPair<T>& p, int which, std::size_t max_period) {
  T c = T(1).half();
  T x = c;
  int lane = which;
  std::vector<T> pts;
  for (std::size_t k = 1; k <= max_period; ++k) {
    pts.push_back(x);
    x = p.map(lane, x);
    lane = other_lane(lane);
    if (k % 2 == 0 && x == c) return PeriodicCritical{k, order_data_of_cycle(pts, which)};
  }
  return std::nullopt;
}

// Candidate returns near 1/2 are polished by Newton on f^k(x) = x and
// accepted only if the periodic point found lies within tol of 1/2.
inline std::optional<PeriodicCritical> detect_periodic_critical_q(const QPair& p, int which, std::size_t max_period,
                                                                  double tol = 1e-10) {
  std::vector<double> pts;
  double x = 0.5;
  int lane = which;
  for (std::size_t k = 1; k <= max_period; ++k) {
    pts.push_back(x);
    x = p.map(lane, x);
    lane = other_lane(lane);
    if (k % 2 != 0 || std::abs(x - 0.5) > 1e-3) continue;
    double y = 0.5;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      Jet j = q_jet(p.v, p.w, y, which, k);
      double g = j.x - y, dg = j.dx - 1.0;
      if (dg == 0.0) break;
      double step = g / dg;
      y -= step;
      if (std::abs(step) < 1e-15) {
        ok = true;
        break;
      }
    }
    if (ok && std::abs(y - 0.5) < tol) {
      try {
        return PeriodicCritical{k, order_data_of_cycle(pts, which)};
      } catch (const domain_error&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

inline std::optional<PeriodicCritical> detect_periodic_critical(const ParamPoint& p, int which,
                                                                std::size_t max_period, double tol = 1e-10) {
  if (max_period % 2 != 0) throw domain_error("max_period must be even");
  if (p.family == Family::ST)
    return detect_periodic_critical_st(StPair<Dyadic>{Dyadic::from_double(p.v), Dyadic::from_double(p.w)}, which,
                                       max_period);
  return detect_periodic_critical_q(QPair{p.v, p.w}, which, max_period, tol);
}

// ---------------------------------------------------- hyperbolic type (Q)

enum class HyperbolicType { bitransitive, capture, disjoint_sinks, non_hyperbolic_or_undecided };

inline const char* to_string(HyperbolicType t) {
  switch (t) {
    case HyperbolicType::bitransitive: return "bitransitive";
    case HyperbolicType::capture: return "capture";
    case HyperbolicType::disjoint_sinks: return "disjoint_sinks";
    default: return "non_hyperbolic_or_undecided";
  }
}

struct AttractingCycle {
  std::vector<double> points;  // points[k] in lane start_lane + k
  int start_lane = 1;
  double multiplier = 0;
};

struct HyperbolicClass {
  HyperbolicType type = HyperbolicType::non_hyperbolic_or_undecided;
  bool degenerate = false;  // shared cycle is the boundary fixed point 0
  std::optional<AttractingCycle> cycle1, cycle2;
  bool immediate1 = false, immediate2 = false;  // critical point in a periodic basin component
};

namespace detail {

inline std::optional<AttractingCycle> find_attracting_cycle(const QPair& p, int lane0, std::size_t max_iter,
                                                            double tol, std::size_t max_period = 128) {
  std::vector<double> ring(max_period + 1, 0.0);
  double x = 0.5;
  int lane = lane0;
  for (std::size_t k = 0; k < max_iter; ++k) {
    ring[k % ring.size()] = x;
    for (std::size_t per = 2; per <= std::min(k, max_period); per += 2) {
      if (std::abs(x - ring[(k - per) % ring.size()]) >= 1e-12) continue;
      AttractingCycle c;
      c.start_lane = lane;
      double y = x, m = 1.0;
      int l = lane;
      for (std::size_t i = 0; i < per; ++i) {
        c.points.push_back(y);
        m *= p.deriv(l, y);
        y = p.map(l, y);
        l = other_lane(l);
      }
      c.multiplier = m;
      if (std::abs(y - x) < 1e-9 && std::abs(m) < 1.0 - tol) return c;
      break;
    }
    x = p.map(lane, x);
    lane = other_lane(lane);
  }
  return std::nullopt;
}

inline bool same_cycle(const AttractingCycle& a, const AttractingCycle& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    int la = (a.start_lane - 1 + int(i)) % 2 + 1;
    if (la != b.start_lane) continue;
    if (std::abs(a.points[i] - b.points[0]) < 1e-8) return true;
  }
  return false;
}

// Is the critical point of `lane` in the basin component of some cycle point?
inline bool in_periodic_component(const QPair& p, int lane, const AttractingCycle& c) {
  std::size_t per = c.points.size();
  for (std::size_t i = 0; i < per; ++i) {
    int li = (c.start_lane - 1 + int(i)) % 2 + 1;
    if (li != lane) continue;
    double z = c.points[i];
    bool all = true;
    for (int s = 0; s <= 32 && all; ++s) {
      double y = 0.5 + (z - 0.5) * s / 32.0;
      bool conv = false;
      for (int it = 0; it < 20000; ++it) {
        if (std::abs(y - z) < 1e-9) {
          conv = true;
          break;
        }
        int l = lane;
        for (std::size_t q = 0; q < per; ++q) {
          y = p.map(l, y);
          l = other_lane(l);
        }
      }
      all = conv;
    }
    if (all) return true;
  }
  return false;
}

}  // namespace detail

inline HyperbolicClass classify_hyperbolic(const ParamPoint& pp, std::size_t max_iter = 1000000, double tol = 1e-6) {
  if (pp.family != Family::Q) throw domain_error("classification is defined for the logistic family");
  QPair p{pp.v, pp.w};
  HyperbolicClass out;
  out.cycle1 = detail::find_attracting_cycle(p, 1, max_iter, tol);
  out.cycle2 = detail::find_attracting_cycle(p, 2, max_iter, tol);
  if (!out.cycle1 || !out.cycle2) return out;
  if (!detail::same_cycle(*out.cycle1, *out.cycle2)) {
    out.type = HyperbolicType::disjoint_sinks;
    out.immediate1 = out.immediate2 = true;
    return out;
  }
  out.immediate1 = detail::in_periodic_component(p, 1, *out.cycle1);
  out.immediate2 = detail::in_periodic_component(p, 2, *out.cycle1);
  bool at_zero = std::all_of(out.cycle1->points.begin(), out.cycle1->points.end(),
                             [](double z) { return std::abs(z) < 1e-9; });
  out.degenerate = at_zero;
  if (out.immediate1 && out.immediate2) out.type = HyperbolicType::bitransitive;
  else if (out.immediate1 || out.immediate2) out.type = HyperbolicType::capture;
  return out;
}

}  // namespace bones
