#include <bones/q_bones.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace bones;

namespace {

std::vector<OrderData> all_up_to(int n) {
  std::vector<OrderData> out;
  for (int k = 1; k <= n; ++k)
    for (auto& od : admissible_order_data(k)) out.push_back(od);
  return out;
}

// w on the period-2 bone, from q_w(q_v(1/2)) = 1/2 solved by hand.
double period_two_w(double v) { return 1.0 / (8.0 * v * (1.0 - v)); }

}  // namespace

TEST(Endpoints, PeriodTwoClosedForm) {
  auto [a, b] = q_boundary_endpoints({{1}, {1}});
  EXPECT_NEAR(a, (2 - std::sqrt(2.0)) / 4, 1e-12);
  EXPECT_NEAR(b, (2 + std::sqrt(2.0)) / 4, 1e-12);
  auto [c, d] = q_boundary_endpoints({{1}, {1}}, Side::right);
  EXPECT_DOUBLE_EQ(a, c);
  EXPECT_DOUBLE_EQ(b, d);
}

// Independent scan: count sign changes of the return map at w = 1 with a
// plain sample-and-bisect, then keep those whose orbit ranks match.
TEST(Endpoints, PeriodFourAgainstPlainScan) {
  for (const auto& od : admissible_order_data(2)) {
    auto [a, b] = q_boundary_endpoints(od);
    std::vector<double> roots;
    auto ret = [](double v) {
      double x = 0.5;
      for (int k = 0; k < 4; ++k) x = 4 * (k % 2 == 0 ? v : 1.0) * x * (1 - x);
      return x - 0.5;
    };
    const int N = 10000;
    for (int i = 0; i < N; ++i) {
      double lo = double(i) / N, hi = double(i + 1) / N;
      if ((ret(lo) > 0) == (ret(hi) > 0)) continue;
      for (int it = 0; it < 80; ++it) {
        double m = 0.5 * (lo + hi);
        ((ret(m) > 0) == (ret(lo) > 0) ? lo : hi) = m;
      }
      roots.push_back(lo);
    }
    int matched = 0;
    for (double r : roots)
      if (std::abs(r - a) < 1e-10 || std::abs(r - b) < 1e-10) ++matched;
    EXPECT_EQ(matched, 2) << od.str();
    EXPECT_LT(a, b);
  }
  auto p = q_boundary_endpoints(admissible_order_data(2)[0]);
  auto q = q_boundary_endpoints(admissible_order_data(2)[1]);
  EXPECT_NE(p.first, q.first);
}

TEST(Trace, PeriodTwoMatchesClosedForm) {
  auto b = q_trace_bone({{1}, {1}}, Side::left);
  double dev = 0;
  for (const auto& p : b.polyline) dev = std::max(dev, std::abs(p.w - period_two_w(p.v)));
  EXPECT_LT(dev, 1e-8);
  EXPECT_NEAR(b.polyline.front().v, (2 - std::sqrt(2.0)) / 4, 1e-9);
  EXPECT_NEAR(b.polyline.back().v, (2 + std::sqrt(2.0)) / 4, 1e-9);
  EXPECT_EQ(b.polyline.front().w, 1.0);
  EXPECT_EQ(b.polyline.back().w, 1.0);
  auto pv = q_primary_intersection({{1}, {1}});
  EXPECT_NEAR(pv.v, 0.5, 1e-9);
  EXPECT_NEAR(pv.w, 0.5, 1e-9);
}

TEST(Trace, EveryPointOnBoneUpToPeriodEight) {
  for (const auto& od : all_up_to(4)) {
    auto b = q_trace_bone(od, Side::left);
    auto [e1, e2] = q_boundary_endpoints(od);
    EXPECT_DOUBLE_EQ(b.polyline.front().v, e1);
    EXPECT_DOUBLE_EQ(b.polyline.back().v, e2);
    std::size_t n = std::size_t(2 * od.n());
    for (const auto& p : b.polyline) {
      QPair q{p.v, p.w};
      double x = 0.5;
      int lane = 1;
      for (std::size_t k = 0; k < n; ++k) {
        x = q.map(lane, x);
        lane = other_lane(lane);
      }
      ASSERT_LT(std::abs(x - 0.5), 1e-11) << od.str();
      ASSERT_GT(p.v * p.w, 1.0 / 16);
    }
    EXPECT_TRUE(q_polyline_simple(b.polyline)) << od.str();
  }
}

TEST(Primary, PeriodSixVerifiedBySimulation) {
  std::set<std::pair<double, double>> pts;
  for (const auto& od : admissible_order_data(3)) {
    auto p = q_primary_intersection(od);
    QPair q{p.v, p.w};
    std::vector<double> orbit;
    double x = 0.5;
    int lane = 1;
    for (int k = 0; k < 6; ++k) {
      orbit.push_back(x);
      x = q.map(lane, x);
      lane = other_lane(lane);
    }
    EXPECT_NEAR(x, 0.5, 1e-10);
    auto it = order_data_to_bicritical_itinerary(od);
    std::size_t g2 = 0;
    for (std::size_t k = 0; k < 6; ++k)
      if (it.period[k].lane == 2 && it.period[k].kind == Kind::C) g2 = k;
    EXPECT_NEAR(orbit[g2], 0.5, 1e-10);
    EXPECT_TRUE(pts.insert({p.v, p.w}).second);
    auto r = q_trace_bone(od, Side::right);
    auto cs = q_bone_crossings(q_trace_bone(od, Side::left), r);
    int primaries = 0;
    for (auto& c : cs)
      if (c.primary) {
        ++primaries;
        EXPECT_NEAR(c.p.v, p.v, 1e-9);
        EXPECT_NEAR(c.p.w, p.w, 1e-9);
      }
    EXPECT_EQ(primaries, 1);
  }
}

TEST(Crossings, FourBoneAgainstTwoBone) {
  OrderData four{{1, 2}, {2, 1}};
  auto L = q_trace_bone(four, Side::left);
  auto sec = q_secondary_intersections(L, q_trace_bone({{1}, {1}}, Side::right));
  std::set<JointOrderData> got;
  for (auto& [p, j] : sec) got.insert(j);
  EXPECT_EQ(got, (std::set<JointOrderData>{JointOrderData::parse("((231),(321))"),
                                             JointOrderData::parse("((132),(231))")}));
  auto same = q_bone_crossings(L, q_trace_bone(four, Side::right));
  ASSERT_EQ(same.size(), 2u);
  int sc = 0;
  for (auto& c : same)
    if (!c.primary) {
      ++sc;
      EXPECT_EQ(*c.joint, JointOrderData::parse("((1243),(3421))"));
    }
  EXPECT_EQ(sc, 1);
}

TEST(Crossings, CountsTransversalAndLeftBonesDisjoint) {
  auto ods = all_up_to(3);
  std::vector<QBone> L, R;
  for (auto& od : ods) {
    L.push_back(q_trace_bone(od, Side::left));
    R.push_back(q_trace_bone(od, Side::right));
  }
  for (std::size_t i = 0; i < ods.size(); ++i)
    for (std::size_t j = 0; j < ods.size(); ++j) {
      auto cs = q_bone_crossings(L[i], R[j]);
      EXPECT_TRUE(cs.size() == 0 || cs.size() == 2 || cs.size() == 4) << ods[i].str() << " x " << ods[j].str();
      for (auto& c : cs) EXPECT_GT(transversality_check(L[i], R[j], c.p), 1e-3);
    }
  auto four = all_up_to(4);
  std::vector<QBone> L4;
  for (auto& od : four) L4.push_back(q_trace_bone(od, Side::left));
  for (std::size_t i = 0; i < L4.size(); ++i)
    for (std::size_t j = i + 1; j < L4.size(); ++j)
      EXPECT_TRUE(detail::polyline_crossings(L4[i].polyline, L4[j].polyline).empty());
  EXPECT_THROW(transversality_check(L[0], L[0], {0.5, 0.5}), domain_error);
}

TEST(Transversality, PeriodTwoPrimary) {
  auto L = q_trace_bone({{1}, {1}}, Side::left), R = q_trace_bone({{1}, {1}}, Side::right);
  // finite-difference tangents of the two closed-form curves at (1/2, 1/2)
  double h = 1e-6;
  double sl = (period_two_w(0.5 + h) - period_two_w(0.5 - h)) / (2 * h);
  double ang_l = std::atan(sl), ang_r = std::atan2(1.0, 0.0 + sl);
  double expect = std::abs(ang_r - ang_l);
  EXPECT_GT(transversality_check(L, R, {0.5, 0.5}), 0.1);
  EXPECT_NEAR(transversality_check(L, R, {0.5, 0.5}), std::min(expect, M_PI - expect), 1e-6);
}

TEST(Arcs, SecondItineraryMonotoneOnHalfArcs) {
  for (const auto& od : all_up_to(3)) {
    auto b = q_trace_bone(od, Side::left);
    double sp = 0;
    for (auto& v : b.vertices)
      if (v.kind == QVertexKind::primary) sp = v.s;
    const std::size_t m = 5;
    // symbols by sign; the prefix stops where an iterate is too close to
    // 1/2 for its side to be resolved in double precision
    auto itin = [&](const QPoint& p) {
      QPair q{p.v, p.w};
      Itinerary it;
      it.preperiod.push_back({2, Kind::C});
      double x = q.map(2, 0.5);
      int lane = 1;
      for (std::size_t k = 1; k < 2 * m; ++k) {
        if (std::abs(x - 0.5) < 1e-9) break;
        it.preperiod.push_back({lane, x < 0.5 ? Kind::L : Kind::R});
        x = q.map(lane, x);
        lane = other_lane(lane);
      }
      return it;
    };
    for (int dir : {-1, 1}) {
      Itinerary prev;
      bool first = true;
      std::size_t i0 = dir > 0 ? std::size_t(std::ceil(sp)) : std::size_t(std::floor(sp));
      for (std::size_t i = i0; i < b.polyline.size(); i = dir > 0 ? i + 1 : i - 1) {
        auto it = itin(b.polyline[i]);
        if (!first) {
          auto o = compare_itineraries(prev, it);
          ASSERT_NE(o, Ordering::GT) << od.str() << " at " << i;
        }
        prev = it;
        first = false;
        if (i == 0) break;
      }
    }
  }
}
