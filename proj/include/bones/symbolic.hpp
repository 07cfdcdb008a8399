#pragma once

#include <bones/errors.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bones {

enum class Kind : std::uint8_t { L = 0, C = 1, R = 2 };

struct Symbol {
  int lane = 1;
  Kind kind = Kind::L;
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

inline char kind_char(Kind k) { return k == Kind::L ? 'L' : (k == Kind::C ? 'G' : 'R'); }

inline std::string to_string(const Symbol& s) {
  return std::string(1, kind_char(s.kind)) + char('0' + s.lane);
}

inline Symbol parse_symbol(std::string_view tok) {
  if (tok.size() != 2) throw domain_error("bad symbol: " + std::string(tok));
  Symbol s;
  switch (tok[0]) {
    case 'L': s.kind = Kind::L; break;
    case 'G':
    case 'C': s.kind = Kind::C; break;
    case 'R': s.kind = Kind::R; break;
    default: throw domain_error("bad symbol: " + std::string(tok));
  }
  if (tok[1] != '1' && tok[1] != '2') throw domain_error("bad lane: " + std::string(tok));
  s.lane = tok[1] - '0';
  return s;
}

enum class Ordering { LT, EQ, GT, Incomparable };

inline const char* to_string(Ordering o) {
  switch (o) {
    case Ordering::LT: return "LT";
    case Ordering::EQ: return "EQ";
    case Ordering::GT: return "GT";
    default: return "INCOMPARABLE";
  }
}

inline Ordering flip(Ordering o) {
  if (o == Ordering::LT) return Ordering::GT;
  if (o == Ordering::GT) return Ordering::LT;
  return o;
}

// Symbol sequence with an optional eventual period.  An empty period means
// the itinerary is only a finite prefix.
struct Itinerary {
  std::vector<Symbol> preperiod;
  std::vector<Symbol> period;

  bool periodic() const { return !period.empty(); }

  std::size_t length() const {
    return periodic() ? std::numeric_limits<std::size_t>::max() : preperiod.size();
  }

  bool empty() const { return preperiod.empty() && period.empty(); }

  Symbol at(std::size_t i) const {
    if (i < preperiod.size()) return preperiod[i];
    if (period.empty()) throw domain_error("itinerary index past finite prefix");
    return period[(i - preperiod.size()) % period.size()];
  }

  Itinerary shifted(std::size_t k) const {
    Itinerary r;
    if (k <= preperiod.size()) {
      r.preperiod.assign(preperiod.begin() + std::ptrdiff_t(k), preperiod.end());
      r.period = period;
      return r;
    }
    if (period.empty()) return r;
    std::size_t off = (k - preperiod.size()) % period.size();
    r.period.reserve(period.size());
    for (std::size_t i = 0; i < period.size(); ++i) r.period.push_back(period[(off + i) % period.size()]);
    return r;
  }

  Itinerary truncated(std::size_t n) const {
    Itinerary r;
    std::size_t len = std::min(n, length());
    r.preperiod.reserve(len);
    for (std::size_t i = 0; i < len; ++i) r.preperiod.push_back(at(i));
    return r;
  }

  void validate() const {
    std::size_t len = preperiod.size() + period.size();
    Symbol prev{};
    for (std::size_t i = 0; i < len; ++i) {
      Symbol s = at(i);
      if (i > 0 && s.lane == prev.lane) throw domain_error("itinerary lanes do not alternate");
      prev = s;
    }
    if (!period.empty() && period.size() % 2 != 0) throw domain_error("itinerary period must be even");
  }

  std::string str() const {
    std::string out;
    auto put = [&](const Symbol& s) {
      if (!out.empty()) out += ' ';
      out += to_string(s);
    };
    for (const auto& s : preperiod) put(s);
    if (!period.empty()) {
      out += out.empty() ? "|" : " |";
      for (const auto& s : period) put(s);
    }
    return out;
  }

  static Itinerary parse(std::string_view text) {
    Itinerary it;
    bool in_period = false;
    std::istringstream is{std::string(text)};
    std::string tok;
    while (is >> tok) {
      if (tok == "|") {
        if (in_period) throw domain_error("itinerary has two period markers");
        in_period = true;
        continue;
      }
      (in_period ? it.period : it.preperiod).push_back(parse_symbol(tok));
    }
    if (in_period && it.period.empty()) throw domain_error("empty period after marker");
    it.validate();
    return it;
  }

  friend bool operator==(const Itinerary&, const Itinerary&) = default;
};

// Twisted order: L < C < R at the first difference, reversed after an odd
// number of R symbols.  Finite itineraries compare on their common length.
inline Ordering compare_itineraries(const Itinerary& a, const Itinerary& b) {
  if (a.empty() || b.empty()) return Ordering::EQ;
  if (a.at(0).lane != b.at(0).lane) throw domain_error("itineraries start in different lanes");
  std::size_t n;
  if (a.periodic() && b.periodic()) {
    n = std::max(a.preperiod.size(), b.preperiod.size()) + std::lcm(a.period.size(), b.period.size());
  } else {
    n = std::min(a.length(), b.length());
  }
  int rcount = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Symbol x = a.at(i), y = b.at(i);
    if (x.kind != y.kind) {
      Ordering o = x.kind < y.kind ? Ordering::LT : Ordering::GT;
      return rcount % 2 ? flip(o) : o;
    }
    if (x.kind == Kind::R) ++rcount;
  }
  return Ordering::EQ;
}

// ---------------------------------------------------------------- order-data

using Perm = std::vector<int>;  // one-line notation, values 1..n

inline bool is_permutation(const Perm& p) {
  std::vector<char> seen(p.size() + 1, 0);
  for (int x : p) {
    if (x < 1 || x > int(p.size()) || seen[std::size_t(x)]) return false;
    seen[std::size_t(x)] = 1;
  }
  return true;
}

inline std::string perm_str(const Perm& p) {
  std::string s = "[";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
  return s + "]";
}

inline Perm parse_perm(std::string_view s) {
  Perm p;
  std::string digits;
  bool bracketed = s.find('[') != std::string_view::npos || s.find(',') != std::string_view::npos;
  if (bracketed) {
    for (char c : s) {
      if (c >= '0' && c <= '9') {
        digits += c;
      } else if (!digits.empty()) {
        p.push_back(std::stoi(digits));
        digits.clear();
      }
    }
    if (!digits.empty()) p.push_back(std::stoi(digits));
  } else {
    for (char c : s)
      if (c >= '0' && c <= '9') p.push_back(c - '0');
  }
  if (!is_permutation(p)) throw domain_error("not a permutation: " + std::string(s));
  return p;
}

struct OrderData {
  Perm sigma;
  Perm tau;

  int n() const { return int(sigma.size()); }
  std::string str() const { return "s=" + perm_str(sigma) + ";t=" + perm_str(tau); }

  // "s=[2,1];t=[1,2]" or the compact pair form "((21),(12))".
  static OrderData parse(std::string_view text) {
    std::string t(text);
    OrderData od;
    auto sp = t.find("s=");
    auto tp = t.find("t=");
    if (sp != std::string::npos && tp != std::string::npos) {
      od.sigma = parse_perm(t.substr(sp + 2, t.find(';', sp) - sp - 2));
      od.tau = parse_perm(t.substr(tp + 2));
    } else {
      auto open = t.find('(', 1);
      auto comma = t.find(',', open);
      if (open == std::string::npos || comma == std::string::npos) throw domain_error("bad order-data: " + t);
      od.sigma = parse_perm(t.substr(open, comma - open));
      od.tau = parse_perm(t.substr(comma + 1));
    }
    if (od.sigma.size() != od.tau.size()) throw domain_error("order-data sizes differ");
    return od;
  }

  OrderData swapped() const { return {tau, sigma}; }

  friend bool operator==(const OrderData&, const OrderData&) = default;
  friend auto operator<=>(const OrderData&, const OrderData&) = default;
};

namespace detail {

inline bool increasing_then_decreasing(const Perm& p) {
  bool descending = false;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (p[i + 1] < p[i]) descending = true;
    else if (descending) return false;
  }
  return true;
}

// Cycles of i -> tau[sigma[i]] on lane-1 indices (0-based).
inline std::vector<std::vector<int>> lane1_cycles(const Perm& sigma, const Perm& tau) {
  std::size_t n = sigma.size();
  std::vector<char> seen(n, 0);
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<int> cyc;
    std::size_t i = s;
    while (!seen[i]) {
      seen[i] = 1;
      cyc.push_back(int(i));
      i = std::size_t(tau[std::size_t(sigma[i] - 1)] - 1);
    }
    out.push_back(std::move(cyc));
  }
  return out;
}

}  // namespace detail

inline bool check_admissible(const OrderData& od) {
  if (od.sigma.empty() || od.sigma.size() != od.tau.size()) return false;
  if (!is_permutation(od.sigma) || !is_permutation(od.tau)) return false;
  if (!detail::increasing_then_decreasing(od.sigma) || !detail::increasing_then_decreasing(od.tau)) return false;
  return detail::lane1_cycles(od.sigma, od.tau).size() == 1;
}

inline std::vector<OrderData> admissible_order_data(int n) {
  if (n < 1) throw domain_error("n must be positive");
  std::vector<OrderData> out;
  Perm s(static_cast<std::size_t>(n));
  std::iota(s.begin(), s.end(), 1);
  do {
    if (!detail::increasing_then_decreasing(s)) continue;
    Perm t(static_cast<std::size_t>(n));
    std::iota(t.begin(), t.end(), 1);
    do {
      OrderData od{s, t};
      if (check_admissible(od)) out.push_back(od);
    } while (std::next_permutation(t.begin(), t.end()));
  } while (std::next_permutation(s.begin(), s.end()));
  return out;
}

inline Itinerary order_data_to_bicritical_itinerary(const OrderData& od) {
  if (!check_admissible(od)) throw domain_error("inadmissible order-data " + od.str());
  int n = od.n();
  int g1 = int(std::find(od.sigma.begin(), od.sigma.end(), n) - od.sigma.begin()) + 1;
  int g2 = int(std::find(od.tau.begin(), od.tau.end(), n) - od.tau.begin()) + 1;
  auto kind = [](int rank, int crit) { return rank < crit ? Kind::L : (rank == crit ? Kind::C : Kind::R); };
  Itinerary it;
  int x = g1;
  for (int k = 0; k < n; ++k) {
    it.period.push_back({1, kind(x, g1)});
    int y = od.sigma[std::size_t(x - 1)];
    it.period.push_back({2, kind(y, g2)});
    x = od.tau[std::size_t(y - 1)];
  }
  return it;
}

// Ranks the points of one or more periodic orbits per lane and reads off
// (sigma, tau).  cycles[c][k] lies in lane start_lane[c] + k (alternating) and
// maps to cycles[c][k+1 mod len].
template <class T, class Less>
std::pair<Perm, Perm> permutations_from_cycles(const std::vector<std::vector<T>>& cycles,
                                               const std::vector<int>& start_lane, Less less) {
  struct Node {
    std::size_t c, k;
  };
  std::vector<Node> lane[2];
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    if (cycles[c].size() % 2 != 0) throw domain_error("cycle length must be even");
    for (std::size_t k = 0; k < cycles[c].size(); ++k) {
      int l = (start_lane[c] - 1 + int(k)) % 2;
      lane[l].push_back({c, k});
    }
  }
  if (lane[0].size() != lane[1].size()) throw domain_error("unbalanced lanes");
  std::vector<std::vector<int>> rank(cycles.size());
  for (std::size_t c = 0; c < cycles.size(); ++c) rank[c].assign(cycles[c].size(), 0);
  for (auto& L : lane) {
    std::sort(L.begin(), L.end(), [&](const Node& a, const Node& b) { return less(cycles[a.c][a.k], cycles[b.c][b.k]); });
    for (std::size_t i = 0; i < L.size(); ++i) {
      if (i > 0 && !less(cycles[L[i - 1].c][L[i - 1].k], cycles[L[i].c][L[i].k]))
        throw domain_error("orbit points coincide; ranks are ambiguous");
      rank[L[i].c][L[i].k] = int(i) + 1;
    }
  }
  std::size_t m = lane[0].size();
  Perm sigma(m), tau(m);
  for (int l = 0; l < 2; ++l) {
    for (const auto& nd : lane[l]) {
      std::size_t nk = (nd.k + 1) % cycles[nd.c].size();
      int from = rank[nd.c][nd.k], to = rank[nd.c][nk];
      (l == 0 ? sigma : tau)[std::size_t(from - 1)] = to;
    }
  }
  return {sigma, tau};
}

inline OrderData itinerary_to_order_data(const Itinerary& it) {
  it.validate();
  if (!it.periodic() || !it.preperiod.empty()) throw domain_error("itinerary is not purely periodic");
  std::size_t len = it.period.size();
  int c1 = 0, c2 = 0;
  for (const auto& s : it.period)
    if (s.kind == Kind::C) (s.lane == 1 ? c1 : c2)++;
  if (c1 != 1 || c2 != 1) throw domain_error("itinerary is not bicritical");
  std::vector<Itinerary> shifts;
  for (std::size_t t = 0; t < len; ++t) shifts.push_back(it.shifted(t));
  std::vector<std::vector<std::size_t>> cyc{{}};
  for (std::size_t t = 0; t < len; ++t) cyc[0].push_back(t);
  auto less = [&](std::size_t a, std::size_t b) { return compare_itineraries(shifts[a], shifts[b]) == Ordering::LT; };
  auto [s, t] = permutations_from_cycles(cyc, {it.period[0].lane}, less);
  OrderData od{s, t};
  if (!check_admissible(od)) throw domain_error("itinerary yields inadmissible order-data " + od.str());
  return od;
}

// ---------------------------------------------------------- joint order-data

struct JointOrderData {
  Perm sigma;
  Perm tau;

  std::string str() const { return "s=" + perm_str(sigma) + ";t=" + perm_str(tau); }
  static JointOrderData parse(std::string_view text) {
    OrderData od = OrderData::parse(text);
    return {od.sigma, od.tau};
  }
  friend bool operator==(const JointOrderData&, const JointOrderData&) = default;
  friend auto operator<=>(const JointOrderData&, const JointOrderData&) = default;
};

struct JointSplit {
  std::vector<int> block1;  // lane-1 indices (0-based) of gamma_1's cycle
  std::vector<int> block2;  // lane-1 indices of the other cycle
  OrderData od1;            // gamma_1's orbit, relabeled
  OrderData od2;            // gamma_2's orbit, relabeled
};

// Splits joint order-data into the two cycles and validates each block.
inline JointSplit split_joint(const JointOrderData& j) {
  if (j.sigma.size() != j.tau.size() || !is_permutation(j.sigma) || !is_permutation(j.tau))
    throw domain_error("joint order-data is not a pair of permutations");
  auto cycles = detail::lane1_cycles(j.sigma, j.tau);
  if (cycles.size() != 2) throw domain_error("joint order-data must have exactly two cycles");
  int total = int(j.sigma.size());
  int g1 = int(std::find(j.sigma.begin(), j.sigma.end(), total) - j.sigma.begin());
  int g2y = int(std::find(j.tau.begin(), j.tau.end(), total) - j.tau.begin());
  JointSplit out;
  bool first_has_g1 = std::find(cycles[0].begin(), cycles[0].end(), g1) != cycles[0].end();
  out.block1 = first_has_g1 ? cycles[0] : cycles[1];
  out.block2 = first_has_g1 ? cycles[1] : cycles[0];
  // lane-2 members of each block
  auto lane2_of = [&](const std::vector<int>& b) {
    std::vector<int> ys;
    for (int i : b) ys.push_back(j.sigma[std::size_t(i)] - 1);
    std::sort(ys.begin(), ys.end());
    return ys;
  };
  auto relabel = [&](std::vector<int> xs) {
    std::sort(xs.begin(), xs.end());
    auto ys = lane2_of(xs);
    auto rx = [&](int i) { return int(std::lower_bound(xs.begin(), xs.end(), i) - xs.begin()) + 1; };
    auto ry = [&](int i) { return int(std::lower_bound(ys.begin(), ys.end(), i) - ys.begin()) + 1; };
    OrderData od;
    for (int i : xs) od.sigma.push_back(ry(j.sigma[std::size_t(i)] - 1));
    for (int y : ys) od.tau.push_back(rx(j.tau[std::size_t(y)] - 1));
    return od;
  };
  auto y2 = lane2_of(out.block2);
  if (!std::binary_search(y2.begin(), y2.end(), g2y))
    throw domain_error("both critical points lie on one cycle");
  out.od1 = relabel(out.block1);
  out.od2 = relabel(out.block2);
  if (!check_admissible(out.od1) || !check_admissible(out.od2))
    throw domain_error("a block of the joint order-data is inadmissible");
  return out;
}

// --------------------------------------------------------------- kneading

// 3-modal alphabet of f = h2 o h1, laps of shape (+,-,+,-).
enum class K3 : std::uint8_t { H0 = 0, c1, H1, c2, H2, c3, H3 };

inline const char* to_string(K3 k) {
  static const char* names[] = {"H0", "c1", "H1", "c2", "H2", "c3", "H3"};
  return names[int(k)];
}

struct KSeq {
  std::vector<K3> preperiod;
  std::vector<K3> period;

  K3 at(std::size_t i) const {
    if (i < preperiod.size()) return preperiod[i];
    if (period.empty()) throw domain_error("kneading index past finite prefix");
    return period[(i - preperiod.size()) % period.size()];
  }
  std::size_t length() const {
    return period.empty() ? preperiod.size() : std::numeric_limits<std::size_t>::max();
  }
  std::string str() const {
    std::string out;
    for (auto k : preperiod) out += std::string(out.empty() ? "" : " ") + to_string(k);
    if (!period.empty()) {
      out += out.empty() ? "|" : " |";
      for (auto k : period) out += std::string(" ") + to_string(k);
    }
    return out;
  }
  friend bool operator==(const KSeq&, const KSeq&) = default;
};

enum class ModalityContext { three_modal, unimodal };

struct KneadingData {
  ModalityContext context = ModalityContext::three_modal;
  std::optional<KSeq> k1;  // absent in the unimodal context
  KSeq k2;
  std::optional<KSeq> k3;
  friend bool operator==(const KneadingData&, const KneadingData&) = default;
};

namespace detail {

inline K3 transcribe(Symbol a, Symbol b) {
  if (a.kind == Kind::C) return K3::c2;
  if (a.kind == Kind::L) return b.kind == Kind::L ? K3::H0 : (b.kind == Kind::C ? K3::c1 : K3::H1);
  return b.kind == Kind::R ? K3::H2 : (b.kind == Kind::C ? K3::c3 : K3::H3);
}

// Pair itinerary starting in lane 1 -> itinerary of the composition.
inline KSeq transcribe(const Itinerary& it) {
  KSeq k;
  if (it.empty()) return k;
  if (it.at(0).lane != 1) throw domain_error("composition itinerary must start in lane 1");
  if (!it.periodic()) {
    std::size_t len = it.preperiod.size();
    for (std::size_t i = 0; i + 1 < len; i += 2) k.preperiod.push_back(transcribe(it.at(i), it.at(i + 1)));
    if (len % 2 == 1 && it.at(len - 1).kind == Kind::C) k.preperiod.push_back(K3::c2);
    return k;
  }
  std::size_t pre = it.preperiod.size() + it.preperiod.size() % 2;
  for (std::size_t i = 0; i < pre; i += 2) k.preperiod.push_back(transcribe(it.at(i), it.at(i + 1)));
  for (std::size_t i = 0; i < it.period.size(); i += 2)
    k.period.push_back(transcribe(it.at(pre + i), it.at(pre + i + 1)));
  return k;
}

inline Ordering compare_kseq(const KSeq& a, const KSeq& b) {
  std::size_t n;
  if (!a.period.empty() && !b.period.empty())
    n = std::max(a.preperiod.size(), b.preperiod.size()) + std::lcm(a.period.size(), b.period.size());
  else
    n = std::min(a.length(), b.length());
  int flips = 0;
  for (std::size_t i = 0; i < n; ++i) {
    K3 x = a.at(i), y = b.at(i);
    if (x != y) {
      Ordering o = x < y ? Ordering::LT : Ordering::GT;
      return flips % 2 ? flip(o) : o;
    }
    if (x == K3::H1 || x == K3::H3) ++flips;
  }
  return Ordering::EQ;
}

}  // namespace detail

// it1 = itinerary of gamma_1 (lane 1 first), it2 = itinerary of gamma_2 (lane 2 first).
inline KneadingData kneading_from_pair_itineraries(const Itinerary& it1, const Itinerary& it2, ModalityContext ctx) {
  if (!it1.empty() && (it1.at(0).lane != 1 || it1.at(0).kind != Kind::C))
    throw domain_error("first itinerary must start at gamma_1");
  if (!it2.empty() && (it2.at(0).lane != 2 || it2.at(0).kind != Kind::C))
    throw domain_error("second itinerary must start at gamma_2");
  KneadingData k;
  k.context = ctx;
  k.k2 = detail::transcribe(it1.shifted(2));
  if (ctx == ModalityContext::three_modal) {
    KSeq outer = detail::transcribe(it2.shifted(1));
    k.k1 = outer;
    k.k3 = outer;
  }
  return k;
}

// Componentwise order.  The outer folding points are local maxima of the
// composition and compare directly; in the 3-modal case the middle one is a
// local minimum and its sequence compares reversed.
inline Ordering compare_kneading(const KneadingData& a, const KneadingData& b) {
  if (a.context != b.context) throw domain_error("kneading data of different modality");
  std::vector<Ordering> parts;
  bool three = a.context == ModalityContext::three_modal;
  Ordering mid = detail::compare_kseq(a.k2, b.k2);
  parts.push_back(three ? flip(mid) : mid);
  if (three) {
    parts.push_back(detail::compare_kseq(*a.k1, *b.k1));
    parts.push_back(detail::compare_kseq(*a.k3, *b.k3));
  }
  bool lt = false, gt = false;
  for (auto o : parts) {
    if (o == Ordering::LT) lt = true;
    if (o == Ordering::GT) gt = true;
  }
  if (lt && gt) return Ordering::Incomparable;
  if (lt) return Ordering::LT;
  if (gt) return Ordering::GT;
  return Ordering::EQ;
}

}  // namespace bones
