#include "support.hpp"

#include "tdpauc/data.hpp"
#include "tdpauc/error.hpp"
#include "tdpauc/simulate.hpp"

#include <doctest.h>

#include <sstream>

using namespace tdpauc;

TEST_SUITE("data") {

TEST_CASE("four-row file gives counts and censoring rate") {
  std::istringstream in("time,status,marker\n1.5,1,0.3\n2.0,0,1.1\n0.7,1,-0.2\n3.1,1,0.3\n");
  const Cohort c = parse_cohort(in, {});
  CHECK(c.size() == 4);
  CHECK(c.event_count() == 3);
  CHECK(c.censoring_rate() == doctest::Approx(0.25));
  CHECK(c.marker_tie_count() == 1);
  // file order is kept
  CHECK(c.times()[0] == 1.5);
  CHECK(c.times()[3] == 3.1);
}

TEST_CASE("negative time names the row") {
  std::istringstream in("time,status,marker\n1,1,0\n-2,1,1\n");
  try {
    parse_cohort(in, {});
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("missing column and non-numeric cells are reported") {
  std::istringstream missing("time,status,score\n1,1,0\n");
  try {
    parse_cohort(missing, {});
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("'marker'") != std::string::npos);
  }
  std::istringstream bad("time,status,marker\n1,1,0\n2,1,abc\n");
  try {
    parse_cohort(bad, {});
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
}

TEST_CASE("no events or a single record is degenerate") {
  std::istringstream none("time,status,marker\n1,0,0\n2,0,1\n");
  CHECK_THROWS_AS(parse_cohort(none, {}), DegenerateError);
  std::istringstream one("time,status,marker\n1,1,0\n");
  CHECK_THROWS_AS(parse_cohort(one, {}), DegenerateError);
}

TEST_CASE("column mapping, quoting and a byte-order mark") {
  std::istringstream in("\xEF\xBB\xBF\"id\",\"X\",\"d\",\"y\",\"arm\"\n1,\"2.5\",1,0.1,0\n2,3,0,0.2,1\n"
                        "3,4,1,0.3,0\n4,5,1,0.4,1\n");
  ColumnMap map;
  map.time = "X";
  map.status = "d";
  map.marker = "y";
  map.group = "arm";
  const Cohort c = parse_cohort(in, map);
  CHECK(c.size() == 4);
  CHECK(c.times()[0] == 2.5);
  CHECK(c[1].group.value() == 1);
  const auto parts = split_by_group(c);
  REQUIRE(parts.size() == 2);
  CHECK(parts.at(0).times()[1] == 4.0);
  CHECK(parts.at(1).event_count() == 1);
}

TEST_CASE("write then parse round-trips every field exactly") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Cohort c = testing::random_cohort(rng, 50, 0.3);
    std::ostringstream out;
    write_cohort_csv(c, out);
    std::istringstream in(out.str());
    const Cohort back = parse_cohort(in, {});
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(back.times()[i] == c.times()[i]);
      CHECK(back.markers()[i] == c.markers()[i]);
      CHECK(back.statuses()[i] == c.statuses()[i]);
    }
  }
}

TEST_CASE("summary statistics equal direct recounts") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Cohort c = testing::random_cohort(rng, 30, 0.4, 1);
    std::size_t events = 0;
    for (const auto& r : c.records()) events += r.status == 1 ? 1 : 0;
    std::size_t ties = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (c.markers()[j] == c.markers()[i]) {
          ++ties;
          break;
        }
      }
    }
    const CohortSummary s = summarize(c);
    CHECK(s.n == c.size());
    CHECK(s.events == events);
    CHECK(s.marker_ties == ties);
    CHECK(s.censoring_rate == doctest::Approx(1.0 - double(events) / double(c.size())));
  }
}

TEST_CASE("default grid uses event times between time quantiles") {
  std::vector<SurvivalRecord> rec;
  for (int k = 1; k <= 5; ++k) rec.push_back({double(k), 1, double(k), std::nullopt});
  const Cohort c(rec);
  const TimeGrid g = default_grid(c, 0.2, 0.8);
  REQUIRE(!g.empty());
  for (double t : g.points()) CHECK((t == 2.0 || t == 3.0 || t == 4.0));
  CHECK_THROWS_AS(default_grid(c, 0.4, 0.4), ParameterError);
  CHECK_THROWS_AS(default_grid(c, 0.0, 0.5), ParameterError);
}

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid({1.0, 1.0}), ParameterError);
  CHECK_THROWS_AS(TimeGrid({0.0, 1.0}), ParameterError);
  const TimeGrid g({1.0, 2.0, 3.0});
  CHECK(g.index_of(2.0) == 1);
  CHECK_THROWS_AS(g.index_of(2.5), ParameterError);
  CHECK(g.restricted(1.5, 3.0).size() == 2);
  std::vector<SurvivalRecord> rec{{1.0, 1, 0.0, {}}, {2.0, 1, 1.0, {}}};
  CHECK_THROWS_AS(check_grid(Cohort(rec), TimeGrid({2.5})), DegenerateError);
}

TEST_CASE("generated cohort at 30 percent target has matching censoring") {
  SimDesign d;
  d.n = 500;
  d.censor_rate = 0.3;
  d.censor_scale = calibrate_censoring_scale(0.3, d.marker_slope, d.log_sd);
  d.seed = 21;
  const Cohort c = generate_cohort(d, 0);
  CHECK(std::abs(c.censoring_rate() - 0.30) <= 0.05);
}

TEST_CASE("default grid over the middle quantiles straddles the median of T") {
  SimDesign d;
  d.n = 500;
  d.seed = 22;
  const Cohort c = generate_cohort(d, 0);
  const TimeGrid g = default_grid(c, 0.4, 0.6);
  CHECK(g[0] < 10.0);
  CHECK(g[g.size() - 1] > 10.0);
}

}
