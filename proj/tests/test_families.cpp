#include <bones/families.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bones;

TEST(Eval, LogisticAndStunted) {
  EXPECT_DOUBLE_EQ(eval_logistic(1.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(eval_logistic(0.3, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_logistic(0.5, 0.5), 0.5);
  EXPECT_EQ(eval_stunted(Dyadic(1, 1), Dyadic(1, 1)), Dyadic(1, 1));
  EXPECT_EQ(eval_stunted(Dyadic(1), Dyadic(1, 2)), Dyadic(1, 1));
  EXPECT_EQ(eval_stunted(Dyadic(3, 2), Dyadic(7, 3)), Dyadic(1, 2));
  // plateau edges map to the plateau height
  EXPECT_EQ(eval_stunted(Dyadic(1, 1), Dyadic(1, 2)), Dyadic(1, 1));
  EXPECT_EQ(eval_stunted(Dyadic(1, 1), Dyadic(3, 2)), Dyadic(1, 1));
}

TEST(Orbit, PeriodTwoInBothFamilies) {
  auto st = pair_orbit({0.5, 0.5, Family::ST}, 0.5, 50, 1);
  EXPECT_EQ(st.status, OrbitStatus::periodic);
  EXPECT_EQ(st.period, 2u);
  EXPECT_EQ(st.itinerary.str(), "| G1 G2");
  auto q = pair_orbit({0.5, 0.5, Family::Q}, 0.5, 50, 1);
  EXPECT_EQ(q.status, OrbitStatus::periodic);
  EXPECT_EQ(q.period, 2u);
}

TEST(Orbit, SmallProductGoesToZero) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 20; ++i) {
    double v = u(rng), w = u(rng) / (16.5 * v);
    if (w > 1) continue;
    auto r = pair_orbit({v, w, Family::Q}, u(rng), 20000, 1);
    EXPECT_EQ(r.status, OrbitStatus::eventually_periodic);
    EXPECT_NEAR(r.points.back(), 0.0, 1e-8);
  }
}

TEST(Orbit, StuntedReplayIsBitIdentical) {
  StPair<Dyadic> p{Dyadic(45, 6), Dyadic(53, 6)};
  auto a = st_orbit(p, Dyadic(1, 1), 200, 1), b = st_orbit(p, Dyadic(1, 1), 200, 1);
  EXPECT_EQ(a.points, b.points);
  for (std::size_t k = 0; k + 1 < a.points.size(); ++k)
    EXPECT_EQ(p.map(a.lane(k), a.points[k]), a.points[k + 1]);
}

TEST(CriticalPoints, Composition) {
  auto c = critical_points_q_composition(1.0);
  EXPECT_EQ(c.kind, CriticalPoints::Kind::real_triple);
  double c1 = (1 - std::sqrt(0.5)) / 2;
  EXPECT_NEAR(c.c1, c1, 1e-15);
  EXPECT_NEAR(c.c3, 1 - c1, 1e-15);
  for (double v : {0.55, 0.7, 0.9, 1.0}) {
    auto d = critical_points_q_composition(v);
    EXPECT_NEAR(eval_logistic(v, d.c1), 0.5, 1e-14);
    EXPECT_NEAR(eval_logistic(v, d.c3), 0.5, 1e-14);
  }
  EXPECT_EQ(critical_points_q_composition(0.5).kind, CriticalPoints::Kind::degenerate);
  EXPECT_EQ(critical_points_q_composition(0.25).kind, CriticalPoints::Kind::complex_pair);
}

TEST(PeriodicCritical, Detection) {
  auto a = detect_periodic_critical({0.5, 0.5, Family::ST}, 1, 10);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->period, 2u);
  EXPECT_EQ(a->od, (OrderData{{1}, {1}}));
  double v = 0.6, w = 1 / (8 * v * (1 - v));
  auto b = detect_periodic_critical({v, w, Family::Q}, 1, 12);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->period, 2u);
  EXPECT_FALSE(detect_periodic_critical({0.3, 0.4, Family::Q}, 1, 40));
  EXPECT_THROW(detect_periodic_critical({0.3, 0.4, Family::Q}, 1, 7), domain_error);
}

TEST(Tightness, PlateauLandings) {
  StPair<Dyadic> p{Dyadic(1, 1), Dyadic(1, 1)};
  EXPECT_TRUE(is_tight_st(Itinerary::parse("| G1 G2"), p));
  // v off 1/2 puts gamma_1's first image inside the lane-2 plateau, off center
  StPair<Dyadic> q{Dyadic(1, 1) + Dyadic(1, 10), Dyadic(1, 1)};
  EXPECT_FALSE(is_tight_st(st_critical_itinerary(q, 1, 6), q));
  StPair<Dyadic> full{Dyadic(1), Dyadic(1)};
  EXPECT_TRUE(is_tight_st(Itinerary::parse("G1 R2 L1 L2"), full));
}

TEST(Hyperbolic, Trichotomy) {
  auto a = classify_hyperbolic({0.5, 0.5, Family::Q});
  EXPECT_EQ(a.type, HyperbolicType::bitransitive);
  auto b = classify_hyperbolic({0.1, 0.1, Family::Q});
  EXPECT_EQ(b.type, HyperbolicType::bitransitive);
  EXPECT_TRUE(b.degenerate);
}
