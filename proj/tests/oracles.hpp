#pragma once

// Independent reference computations used only by the tests.  Nothing here
// calls into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

// Stunted tent pair on the grid of multiples of 2^-K, all integer.
struct IntPair {
  int K;
  std::int64_t v, w;  // parameters in units of 2^-K
  std::int64_t one() const { return std::int64_t(1) << K; }
  std::int64_t half() const { return std::int64_t(1) << (K - 1); }
  std::int64_t step(int lane, std::int64_t x) const {
    std::int64_t a = lane == 1 ? v : w;
    if (2 * x <= a) return 2 * x;
    if (2 * x <= 2 * one() - a) return a;
    return 2 * one() - 2 * x;
  }
};

// Order-data of the critical orbit of `lane` when it returns to 1/2 within
// 2*max_n steps and hits nothing else at 1/2 on the way.
struct Cycle {
  int period = 0;
  std::vector<int> sigma, tau;
};

inline std::vector<int> ranks(const std::vector<std::int64_t>& xs) {
  std::vector<int> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[std::size_t(a)] < xs[std::size_t(b)]; });
  std::vector<int> r(xs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[std::size_t(idx[i])] = int(i) + 1;
  return r;
}

inline std::optional<Cycle> critical_cycle(const IntPair& p, int lane, int max_n) {
  std::vector<std::int64_t> pts{p.half()};
  std::int64_t x = p.half();
  int l = lane;
  for (int k = 1; k <= 2 * max_n; ++k) {
    x = p.step(l, x);
    l = 3 - l;
    if (x == p.half() && k % 2 == 0) break;
    if (k == 2 * max_n) return std::nullopt;
    pts.push_back(x);
  }
  int n = int(pts.size()) / 2;
  std::vector<std::int64_t> a, b;  // same-lane subsequences
  for (std::size_t i = 0; i < pts.size(); ++i) (i % 2 == 0 ? a : b).push_back(pts[i]);
  auto ra = ranks(a), rb = ranks(b);
  for (std::size_t i = 1; i < a.size(); ++i)
    if (a[i] == a[i - 1]) return std::nullopt;
  Cycle c;
  c.period = 2 * n;
  std::vector<int> s(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    s[std::size_t(ra[std::size_t(i)] - 1)] = rb[std::size_t(i)];
    t[std::size_t(rb[std::size_t(i)] - 1)] = ra[std::size_t((i + 1) % n)];
  }
  // lane 1 first when lane == 1, otherwise a holds lane-2 points
  if (lane == 1) {
    c.sigma = s;
    c.tau = t;
  } else {
    c.sigma = t;
    c.tau = s;
  }
  return c;
}

// Every pair of permutations, filtered by the two conditions written out
// directly: the one-line word rises then falls, and the composite has a
// single cycle.
inline bool rises_then_falls(const std::vector<int>& p) {
  std::size_t peak = std::size_t(std::max_element(p.begin(), p.end()) - p.begin());
  for (std::size_t i = 0; i < peak; ++i)
    if (p[i] > p[i + 1]) return false;
  for (std::size_t i = peak; i + 1 < p.size(); ++i)
    if (p[i] < p[i + 1]) return false;
  return true;
}

inline bool single_cycle(const std::vector<int>& s, const std::vector<int>& t) {
  int n = int(s.size());
  int x = 0, len = 0;
  do {
    x = t[std::size_t(s[std::size_t(x)] - 1)] - 1;
    ++len;
  } while (x != 0 && len <= n);
  return len == n;
}

// Number of laps of a map sampled on a fine grid (flat runs count as laps).
template <class R>
R logistic(R a, R x) {
  return 4 * a * x * (1 - x);
}

template <class R>
R stunted(R a, R x) {
  if (2 * x <= a) return 2 * x;
  if (2 * x <= 2 - a) return a;
  return 2 - 2 * x;
}

// x = sin^2(pi t / 2); spreads samples toward 0 and 1 where logistic laps pile up
inline double from_angle(double t) {
  double s = std::sin(M_PI * t / 2);
  return s * s;
}

// Negative-type fixed points of the k-fold composition for k = 1..kmax.
// Scan g(x) - x for + to - sign changes between neighbouring samples and keep
// those where g itself went down across the same pair of samples.  Long
// double resolves the nearly flat laps around superattracting cycles.
template <class Map>
std::vector<long> scan_negative_fixed_points(Map map, long double v, long double w, int kmax, int samples) {
  std::vector<long> out(static_cast<std::size_t>(kmax), 0);
  std::vector<long double> prev(static_cast<std::size_t>(kmax), 0.0L);  // g(x_prev) at each k
  long double xprev = 0;
  for (int i = 1; i <= samples; ++i) {
    long double s = std::sin(3.14159265358979323846264338327950288L * ((i - 0.5L) / samples) / 2);
    long double x = s * s;
    if (i == samples) x = 1.0L;
    long double y = x;
    for (int k = 1; k <= kmax; ++k) {
      y = map(w, map(v, y));
      long double& gp = prev[std::size_t(k - 1)];
      if (gp - xprev > 0 && y - x <= 0 && y < gp) ++out[std::size_t(k - 1)];
      gp = y;
    }
    xprev = x;
  }
  return out;
}

// Laps of the k-fold composition counted from runs of the sign of successive
// differences (flat runs are their own laps).
template <class Map>
long sampled_laps(Map map, double v, double w, int k, int samples) {
  auto g = [&](double x) {
    for (int i = 0; i < k; ++i) x = map(w, map(v, x));
    return x;
  };
  long laps = 0;
  int last = 2;
  double gp = g(0.0);
  for (int i = 1; i <= samples; ++i) {
    double gx = g(from_angle(double(i) / samples));
    int s = gx > gp ? 1 : (gx < gp ? -1 : 0);
    if (s != last) ++laps;
    last = s;
    gp = gx;
  }
  return laps;
}

// Exact lap count of an integer stunted pair: the grid 2^-K must resolve the laps.
inline long int_laps(const IntPair& p, int k) {
  auto g = [&](std::int64_t x) {
    for (int i = 0; i < k; ++i) x = p.step(2, p.step(1, x));
    return x;
  };
  long laps = 0;
  int last = 2;
  std::int64_t gp = g(0);
  for (std::int64_t x = 1; x <= p.one(); ++x) {
    std::int64_t gx = g(x);
    int s = gx > gp ? 1 : (gx < gp ? -1 : 0);
    if (s != last) ++laps;
    last = s;
    gp = gx;
  }
  return laps;
}

}  // namespace oracle
