#include <bones/st_bones.hpp>

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "oracles.hpp"

using namespace bones;

namespace {

std::int64_t on_grid(const Dyadic& d, int K) {
  EXPECT_LE(d.exp(), K);
  return std::int64_t(d.num()) << (K - d.exp());
}

std::vector<OrderData> all_up_to(int n) {
  std::vector<OrderData> out;
  for (int k = 1; k <= n; ++k)
    for (auto& od : admissible_order_data(k)) out.push_back(od);
  return out;
}

OrderData as_od(const oracle::Cycle& c) { return {c.sigma, c.tau}; }

}  // namespace

TEST(Bicritical, PeriodTwoIsCenter) {
  auto [v, w] = st_bicritical_params({{1}, {1}});
  EXPECT_EQ(v, Dyadic(1, 1));
  EXPECT_EQ(w, Dyadic(1, 1));
}

TEST(Bicritical, IntegerReplayUpToPeriodTen) {
  std::set<std::pair<Dyadic, Dyadic>> seen;
  for (const auto& od : all_up_to(5)) {
    auto [v, w] = st_bicritical_params(od);
    oracle::IntPair p{16, on_grid(v, 16), on_grid(w, 16)};
    auto c = oracle::critical_cycle(p, 1, od.n());
    ASSERT_TRUE(c) << od.str();
    EXPECT_EQ(c->period, 2 * od.n());
    EXPECT_EQ(as_od(*c), od);
    auto it = st_critical_itinerary(StPair<Dyadic>{v, w}, 1, std::size_t(2 * od.n()));
    EXPECT_EQ(it.preperiod, order_data_to_bicritical_itinerary(od).period);
    EXPECT_TRUE(is_tight_st(order_data_to_bicritical_itinerary(od), StPair<Dyadic>{v, w}));
    EXPECT_TRUE(seen.insert({v, w}).second);
  }
}

// Every bicritical cycle found on a dyadic grid is one of the admissible
// order-data, and every admissible order-data is found.
TEST(Bicritical, GridSearchFindsExactlyTheAdmissibleData) {
  const int K = 10;
  std::set<OrderData> found;
  std::int64_t N = std::int64_t(1) << K;
  for (std::int64_t v = 0; v <= N; ++v)
    for (std::int64_t w = 0; w <= N; ++w) {
      oracle::IntPair p{K, v, w};
      auto c = oracle::critical_cycle(p, 1, 5);
      if (!c) continue;
      // bicritical: gamma_2 is on the cycle
      std::int64_t x = p.half();
      bool bic = false;
      for (int k = 1; k < c->period; k += 2) {
        x = p.step(k % 2 == 1 ? 1 : 2, x);
        if (k % 2 == 1 && x == p.half()) bic = true;
        x = p.step(2, x);
      }
      if (bic) found.insert(as_od(*c));
    }
  auto lib = all_up_to(5);
  EXPECT_EQ(found, std::set<OrderData>(lib.begin(), lib.end()));
}

TEST(Bone, PeriodTwoExact) {
  auto b = st_bone({{1}, {1}}, Side::left);
  EXPECT_EQ(b.v1, Dyadic(1, 2));
  EXPECT_EQ(b.v0, Dyadic(1, 1));
  EXPECT_EQ(b.v2, Dyadic(3, 2));
  EXPECT_EQ(b.w0, Dyadic(1, 1));
  auto r = st_bone({{1}, {1}}, Side::right);
  EXPECT_EQ(r.v0, Dyadic(1, 1));
  EXPECT_EQ(r.v1, Dyadic(1, 2));
  EXPECT_EQ(r.v2, Dyadic(3, 2));
}

// Grid points where gamma_1 (gamma_2) has the bone's order-data are exactly
// the grid points of the left (right) bone.
TEST(Bone, GridMembershipUpToPeriodEight) {
  const int K = 8;
  std::int64_t N = std::int64_t(1) << K;
  std::map<OrderData, std::set<std::pair<std::int64_t, std::int64_t>>> left, right;
  for (std::int64_t v = 0; v <= N; ++v)
    for (std::int64_t w = 0; w <= N; ++w) {
      oracle::IntPair p{K, v, w};
      if (auto c = oracle::critical_cycle(p, 1, 4)) left[as_od(*c)].insert({v, w});
      if (auto c = oracle::critical_cycle(p, 2, 4)) right[as_od(*c)].insert({v, w});
    }
  for (const auto& od : all_up_to(4)) {
    for (Side s : {Side::left, Side::right}) {
      auto b = st_bone(od, s);
      EXPECT_TRUE(b.v1 < (s == Side::left ? b.v0 : b.w0));
      EXPECT_TRUE((s == Side::left ? b.v0 : b.w0) < b.v2);
      std::set<std::pair<std::int64_t, std::int64_t>> expect;
      for (std::int64_t v = 0; v <= N; ++v)
        for (std::int64_t w = 0; w <= N; ++w)
          if (st_on_bone(b, Dyadic(v, K), Dyadic(w, K))) expect.insert({v, w});
      EXPECT_EQ((s == Side::left ? left : right)[od], expect) << od.str() << " " << to_string(s);
    }
  }
}

TEST(Bone, EndpointsShareBoundaryItinerary) {
  for (const auto& od : all_up_to(3)) {
    auto b = st_bone(od, Side::left);
    for (const Dyadic& v : {b.v1, b.v2}) {
      auto o = st_orbit(StPair<Dyadic>{v, Dyadic(1)}, Dyadic(1, 1), 100, 2);
      EXPECT_EQ(o.itinerary.str(), "G2 R1 | L2 L1") << od.str();
    }
  }
}

TEST(Bone, SameSideBonesAreDisjoint) {
  auto ods = all_up_to(4);
  for (std::size_t i = 0; i < ods.size(); ++i)
    for (std::size_t j = i + 1; j < ods.size(); ++j)
      for (Side s : {Side::left, Side::right}) {
        auto a = st_bone(ods[i], s), b = st_bone(ods[j], s);
        EXPECT_TRUE(st_segment_intersections(st_segments(a), st_segments(b)).empty());
      }
}

TEST(Crossings, CountsAndKinds) {
  auto ods = all_up_to(4);
  for (const auto& a : ods)
    for (const auto& b : ods) {
      auto cs = st_bone_crossings(st_bone(a, Side::left), st_bone(b, Side::right));
      EXPECT_TRUE(cs.size() == 0 || cs.size() == 2 || cs.size() == 4) << a.str() << " x " << b.str();
      int primaries = 0;
      for (const auto& c : cs) primaries += c.kind == VertexKind::primary;
      EXPECT_EQ(primaries, a == b ? 1 : 0);
    }
}

TEST(Crossings, FourBoneAgainstTwoBone) {
  OrderData four{{1, 2}, {2, 1}};
  auto cs = st_bone_crossings(st_bone(four, Side::left), st_bone({{1}, {1}}, Side::right));
  ASSERT_EQ(cs.size(), 2u);
  std::set<JointOrderData> got;
  for (auto& c : cs) got.insert(*c.joint);
  EXPECT_EQ(got, (std::set<JointOrderData>{JointOrderData::parse("((231),(321))"),
                                             JointOrderData::parse("((132),(231))")}));
  auto same = st_bone_crossings(st_bone(four, Side::left), st_bone(four, Side::right));
  ASSERT_EQ(same.size(), 2u);
  for (auto& c : same)
    if (c.kind == VertexKind::secondary) {
      EXPECT_EQ(*c.joint, JointOrderData::parse("((1243),(3421))"));
    }
}

TEST(Secondary, SolvedByBackSubstitution) {
  auto a = st_secondary_intersection(JointOrderData::parse("((231),(321))"));
  EXPECT_EQ(a, std::make_pair(Dyadic(13, 4), Dyadic(3, 2)));
  auto b = st_secondary_intersection(JointOrderData::parse("((132),(231))"));
  EXPECT_EQ(b, std::make_pair(Dyadic(15, 4), Dyadic(3, 2)));
  auto c = st_secondary_intersection(JointOrderData::parse("((1243),(3421))"));
  EXPECT_EQ(c, std::make_pair(Dyadic(15, 4), Dyadic(9, 4)));
  OrderData four{{1, 2}, {2, 1}};
  EXPECT_TRUE(st_on_bone(st_bone(four, Side::left), a.first, a.second));
  EXPECT_TRUE(st_on_bone(st_bone({{1}, {1}}, Side::right), a.first, a.second));
  EXPECT_THROW(st_secondary_intersection(JointOrderData::parse("((12),(21))")), domain_error);
}

// Within two iterates the only collisions are the bicritical one and the
// disjoint period-2 pair at (3/4, 3/4), where the right 2-bone crosses.
TEST(Distinguished, PeriodTwoDepthOne) {
  auto b = st_bone({{1}, {1}}, Side::left);
  auto ds = st_distinguished_points(b, 1);
  int primaries = 0;
  std::vector<const Distinguished*> vertical;
  for (auto& d : ds) {
    primaries += d.kind == VertexKind::primary;
    if (!(d.w_lo == d.w_hi && d.w_lo == Rational(b.w0))) vertical.push_back(&d);
  }
  EXPECT_EQ(primaries, 1);
  ASSERT_EQ(vertical.size(), 1u);
  EXPECT_EQ(vertical[0]->kind, VertexKind::secondary);
  EXPECT_EQ(vertical[0]->v_lo, Rational(3, 4));
  EXPECT_EQ(vertical[0]->w_lo, Rational(3, 4));
  EXPECT_EQ(*vertical[0]->joint, JointOrderData::parse("s=[2,1];t=[2,1]"));
}

TEST(Distinguished, PeriodTwoDepthTwoMeetsFourBones) {
  auto b = st_bone({{1}, {1}}, Side::left);
  auto ds = st_distinguished_points(b, 2);
  std::set<std::pair<Rational, Rational>> secondaries;
  for (auto& d : ds)
    if (d.kind == VertexKind::secondary) secondaries.insert({d.v_lo, d.w_lo});
  EXPECT_EQ(secondaries.count({Rational(3, 4), Rational(13, 16)}), 1u);
  EXPECT_EQ(secondaries.count({Rational(3, 4), Rational(15, 16)}), 1u);
  EXPECT_EQ(secondaries.count({Rational(3, 4), Rational(3, 4)}), 1u);
  for (auto& d : ds) {
    if (d.w_lo == Rational(b.w0) && d.w_hi == Rational(b.w0) && d.v_lo != d.v_hi) {
      EXPECT_EQ(d.kind, VertexKind::capture);
      EXPECT_EQ(d.v_lo, Rational(b.v1));
      EXPECT_EQ(d.v_hi, Rational(b.v2));
    }
  }
  EXPECT_TRUE(st_distinguished_monotone(b, ds));
}

TEST(Distinguished, MonotoneAlongEveryBone) {
  for (const auto& od : all_up_to(3))
    for (Side s : {Side::left, Side::right})
      for (int m = 1; m <= 3; ++m) {
        auto b = st_bone(od, s);
        auto ds = st_distinguished_points(b, m);
        EXPECT_TRUE(st_distinguished_monotone(b, ds)) << od.str() << " m=" << m;
        // each secondary agrees with the back-substitution solver
        for (auto& d : ds)
          if (d.kind == VertexKind::secondary) {
            auto p = st_secondary_intersection(*d.joint);
            EXPECT_EQ(Rational(p.first), d.v_lo);
            EXPECT_EQ(Rational(p.second), d.w_lo);
          }
      }
}
