#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "searchplan/detection.hpp"

using namespace searchplan;

namespace {

const TimeSec kT0 = parse_iso8601("2009-06-02T12:00:00Z");
const GeoPoint kOrigin{3.0, -30.5};

LateralRangeTable fixture_table() { return load_lateral_range_table(std::string(SEARCHPLAN_DATA_DIR) + "/lateral_range.csv"); }

LateralRangeTable flat_table(double p, double range_m) {
  LateralRangeCurve c;
  c.breakpoints = {{0.0, p}, {range_m, p}};
  return LateralRangeTable({c});
}

GeoPoint at(double x, double y) { return LocalFrame(kOrigin).unproject({x, y}); }

SortieLeg east_leg(double x0, double x1, double y, TimeSec start, TimeSec end) {
  SortieLeg leg;
  leg.from = at(x0, y);
  leg.to = at(x1, y);
  leg.start = start;
  leg.end = end;
  leg.speed_kts = 150;
  leg.altitude_ft = 500;
  leg.visibility = "good";
  return leg;
}

// Brute-force probability of hearing at least one of two beacons.
double enumerate_beacons(double p_det, double p_surv, bool dependent) {
  double total = 0.0;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      double ps;
      if (dependent) ps = s1 != s2 ? 0.0 : (s1 ? p_surv : 1 - p_surv);
      else ps = (s1 ? p_surv : 1 - p_surv) * (s2 ? p_surv : 1 - p_surv);
      for (int d1 = 0; d1 < 2; ++d1) {
        for (int d2 = 0; d2 < 2; ++d2) {
          if ((d1 && !s1) || (d2 && !s2)) continue;
          // co-located beacons: one shared detection opportunity
          if (dependent && d1 != d2) continue;
          if (dependent) {
            if (d1) total += ps * p_det;
            continue;
          }
          const double pd1 = s1 ? (d1 ? p_det : 1 - p_det) : 1.0;
          const double pd2 = s2 ? (d2 ? p_det : 1 - p_det) : 1.0;
          if (d1 || d2) total += ps * pd1 * pd2;
        }
      }
    }
  }
  return total;
}

}  // namespace

TEST(LateralRange, FixtureLookup) {
  const LateralRangeTable t = fixture_table();
  ASSERT_EQ(t.curves().size(), 3u);
  const auto& good = t.lookup(500, 150, "good", "3");
  EXPECT_DOUBLE_EQ(good.probability(0.0), 0.78);
  EXPECT_DOUBLE_EQ(good.probability(250.0), 0.74);
  EXPECT_DOUBLE_EQ(good.probability(1500.0), 0.45);
  EXPECT_DOUBLE_EQ(good.probability(5000.0), 0.0);
  EXPECT_DOUBLE_EQ(t.lookup(500, 150, "poor", "3").probability(0.0), 0.55);
  EXPECT_DOUBLE_EQ(t.lookup(1500, 150, "poor", "3").probability(0.0), 0.60);
  EXPECT_THROW(t.lookup(500, 150, "fog", "3"), std::invalid_argument);
}

TEST(LateralRange, RejectsIncreasingProbability) {
  std::stringstream in(
      "altitude_lo_ft,altitude_hi_ft,speed_lo_kts,speed_hi_kts,visibility,sea_state,range_m,p_detect\n"
      "0,inf,0,inf,*,*,0,0.5\n"
      "0,inf,0,inf,*,*,100,0.6\n");
  EXPECT_THROW(load_lateral_range_table(in), std::invalid_argument);
}

TEST(ClosestApproach, StationaryIsPointSegmentDistance) {
  const SortieLeg leg = east_leg(-5000, 5000, 0, kT0, kT0 + 3600);
  const LocalFrame f(kOrigin);
  EXPECT_NEAR(closest_approach_m(at(1200, 800), leg, f), 800.0, 1e-6);
  EXPECT_NEAR(closest_approach_m(at(8000, 4000), leg, f), 5000.0, 1e-6);  // beyond the leg end
  EXPECT_NEAR(closest_approach_m(at(0, 0), leg, f), 0.0, 1e-9);
}

TEST(ClosestApproach, MovingParticleMatchesRelativeMotionOracle) {
  // platform: x = -5000 + 10 t, y = 0 over t in [0, 1000] s
  // particle: x = 2000 + 0.5 t, y = -3000 + 2 t (straight drift)
  const SortieLeg leg = east_leg(-5000, 5000, 0, kT0, kT0 + 1000);
  Path path;
  for (int k = 0; k <= 4; ++k) {
    const double t = 250.0 * k;
    path.times.push_back(kT0 + static_cast<TimeSec>(t));
    path.positions.push_back(at(2000 + 0.5 * t, -3000 + 2 * t));
  }
  // relative r(t) = (7000 - 9.5 t, -3000 + 2 t); minimize |r|^2
  const double tstar = (7000 * 9.5 + 3000 * 2) / (9.5 * 9.5 + 4);
  const double oracle = std::hypot(7000 - 9.5 * tstar, -3000 + 2 * tstar);
  EXPECT_NEAR(closest_approach_m(path, leg, LocalFrame(kOrigin)), oracle, 1e-3);
}

TEST(ClosestApproach, PathMustCoverLeg) {
  const SortieLeg leg = east_leg(-5000, 5000, 0, kT0, kT0 + 1000);
  const Path short_path{{kT0 + 10, kT0 + 1000}, {kOrigin, kOrigin}};
  EXPECT_THROW(closest_approach_m(short_path, leg, LocalFrame(kOrigin)), std::domain_error);
}

TEST(LegFailure, TableOracle) {
  const LateralRangeTable t = fixture_table();
  const LocalFrame f(kOrigin);
  const SortieLeg leg = east_leg(-5000, 5000, 0, kT0, kT0 + 3600);
  const Path on_track{{kT0, kT0 + 3600}, {kOrigin, kOrigin}};
  EXPECT_NEAR(leg_failure(on_track, leg, t, f), 0.22, 1e-12);
  const Path far{{kT0, kT0 + 3600}, {at(0, 6000), at(0, 6000)}};
  EXPECT_EQ(leg_failure(far, leg, t, f), 1.0);
}

TEST(SurfaceSearch, ProductOverLegs) {
  const LocalFrame f(kOrigin);
  const Path still{{kT0, kT0 + 7200}, {kOrigin, kOrigin}};
  SurfaceSearch none;
  EXPECT_EQ(surface_search_failure(still, none, f), 1.0);

  SurfaceSearch two;
  two.tables["aircraft"] = flat_table(0.5, 10000);
  two.legs = {east_leg(-5000, 5000, 100, kT0, kT0 + 600), east_leg(5000, -5000, -100, kT0 + 600, kT0 + 1200)};
  EXPECT_DOUBLE_EQ(surface_search_failure(still, two, f), 0.25);

  SurfaceSearch three;
  three.tables["aircraft"] = fixture_table();
  three.tables["ship"] = load_lateral_range_table(std::string(SEARCHPLAN_DATA_DIR) + "/lateral_range_ship.csv");
  three.legs = {east_leg(-5000, 5000, 250, kT0, kT0 + 600), east_leg(-5000, 5000, -1500, kT0 + 600, kT0 + 1200),
                east_leg(-5000, 5000, 1000, kT0 + 1200, kT0 + 7200)};
  three.legs[2].platform = "ship";
  three.legs[2].speed_kts = 12;
  // per-leg oracle: 1 - p(250) on the aircraft curve, 1 - p(1500), ship 1 - p(1000)
  const double oracle = (1 - 0.74) * (1 - 0.45) * (1 - 0.60);
  EXPECT_NEAR(surface_search_failure(still, three, f), oracle, 1e-9);
  three.legs[1].platform = "boat";
  EXPECT_THROW(surface_search_failure(still, three, f), std::invalid_argument);
}

TEST(Beacon, DefaultsMatchEnumeration) {
  const BeaconDetection d = beacon_system_detection();
  EXPECT_NEAR(d.independent, 0.9216, 1e-12);
  EXPECT_NEAR(d.dependent, 0.72, 1e-12);
  EXPECT_NEAR(d.weighted, 0.7704, 1e-12);
  EXPECT_NEAR(d.independent, enumerate_beacons(0.9, 0.8, false), 1e-12);
  EXPECT_NEAR(d.dependent, enumerate_beacons(0.9, 0.8, true), 1e-12);
  EXPECT_NEAR(std::round(d.independent * 100) / 100, 0.92, 1e-12);
  EXPECT_NEAR(std::round(d.weighted * 100) / 100, 0.77, 1e-12);
}

TEST(Beacon, EnumerationOverGrid) {
  for (double p = 0.0; p <= 1.0; p += 0.125)
    for (double s = 0.0; s <= 1.0; s += 0.125) {
      const auto d = beacon_system_detection(p, s, 0.4);
      EXPECT_NEAR(d.independent, enumerate_beacons(p, s, false), 1e-12);
      EXPECT_NEAR(d.dependent, enumerate_beacons(p, s, true), 1e-12);
    }
}

TEST(Beacon, MonotoneAndLimit) {
  double last = -1;
  for (double p = 0; p <= 1.0; p += 0.05) {
    const double v = beacon_system_detection(p, 0.8, 0.25).weighted;
    EXPECT_GE(v, last - 1e-15);
    last = v;
  }
  last = -1;
  for (double s = 0; s <= 1.0; s += 0.05) {
    const double v = beacon_system_detection(0.9, s, 0.25).weighted;
    EXPECT_GE(v, last - 1e-15);
    last = v;
  }
  EXPECT_NEAR(beacon_system_detection(0.7, 1.0, 1.0).weighted, 1 - 0.3 * 0.3, 1e-15);
  EXPECT_THROW(beacon_system_detection(1.2), std::invalid_argument);
}

TEST(Acoustic, CookieCutter) {
  AcousticSearch s;
  s.tracklines = {{at(-20000, 0), at(20000, 0)}};
  EXPECT_NEAR(acoustic_failure(at(0, 1000), s), 0.23, 1e-3);
  EXPECT_NEAR(acoustic_failure(at(0, 1000), s), 1 - 0.7704, 1e-12);
  EXPECT_EQ(acoustic_failure(at(0, 5000), s), 1.0);
  // a second pass in range does not multiply again
  s.tracklines.push_back({at(-20000, 500), at(20000, 500)});
  EXPECT_NEAR(acoustic_failure(at(0, 1000), s), 1 - 0.7704, 1e-12);
}

TEST(Acoustic, ClosedBoundary) {
  AcousticSearch s;
  s.tracklines = {{at(-20000, 0), at(20000, 0)}};
  const GeoPoint p = at(0, 1730);
  const TracklineGeometry g(s, LocalFrame(p));
  s.lateral_range_m = g.min_distance_m(p);
  EXPECT_NEAR(s.lateral_range_m, 1730.0, 1e-6);
  EXPECT_NEAR(acoustic_failure(p, s, g), 1 - 0.7704, 1e-12);
  s.lateral_range_m = std::nextafter(s.lateral_range_m, 0.0);
  EXPECT_EQ(acoustic_failure(p, s, g), 1.0);
}

TEST(Acoustic, SensorCapAndVertexOrderInvariance) {
  AcousticSearch s;
  s.sensor_detection = 0.99;
  EXPECT_DOUBLE_EQ(s.sensor_probability(), 0.9);
  EXPECT_NEAR(s.any_beacon_survives(), 0.25 * 0.96 + 0.75 * 0.8, 1e-15);
  s.tracklines = {{at(-20000, 0), at(0, 3000), at(20000, 0)}};
  AcousticSearch r = s;
  r.tracklines = {{at(20000, 0), at(0, 3000), at(-20000, 0)}};
  for (double y = -3000; y <= 6000; y += 250) EXPECT_EQ(acoustic_failure(at(100, y), s), acoustic_failure(at(100, y), r));
}

TEST(Sweep, InsideOutsideBoundary) {
  SweepRegion region{{GeoPolygon::rectangle(2.9, 3.0, -30.6, -30.5)}, 0.9};
  EXPECT_NEAR(sweep_failure({2.95, -30.55}, region), 0.1, 1e-15);
  EXPECT_EQ(sweep_failure({3.05, -30.55}, region), 1.0);
  EXPECT_NEAR(sweep_failure({3.0, -30.55}, region), 0.1, 1e-15);
  EXPECT_NEAR(sweep_failure({2.9, -30.6}, region), 0.1, 1e-15);
  SweepRegion reversed{{GeoPolygon({{3.0, -30.6}, {3.0, -30.5}, {2.9, -30.5}, {2.9, -30.6}})}, 0.9};
  for (double lat = 2.85; lat <= 3.05; lat += 0.01)
    EXPECT_EQ(sweep_failure({lat, -30.55}, region), sweep_failure({lat, -30.55}, reversed));
  SweepRegion empty;
  EXPECT_THROW(sweep_failure({0, 0}, empty), std::invalid_argument);
}
