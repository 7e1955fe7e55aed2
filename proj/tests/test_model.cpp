#include <catch2/catch_amalgamated.hpp>

#include "wmmf/model.hpp"

using namespace wmmf;

namespace {

NetworkTopology single_link() { return NetworkTopology::make({{1.0}}, {1.0}, {1.0}); }

}  // namespace

TEST_CASE("validate_topology accepts the minimal instance") {
  auto t = single_link();
  REQUIRE(validate_topology(t).empty());
  ValidatedTopology v(t);
  REQUIRE(v.num_links() == 1);
  // idempotent: re-validating a validated topology changes nothing
  REQUIRE(validate_topology(v.get()).empty());
}

TEST_CASE("validate_topology reports disconnected routes") {
  auto t = NetworkTopology::make({{0.0}}, {1.0}, {1.0});
  auto vs = validate_topology(t);
  REQUIRE(vs.size() == 1);
  REQUIRE(vs[0].kind == TopologyViolationKind::disconnected_route);
  REQUIRE(vs[0].route == 0);
  REQUIRE_THROWS_AS(ValidatedTopology(t), InvalidTopology);
}

TEST_CASE("validate_topology reports zero capacity and weight") {
  auto t = NetworkTopology::make({{1.0}}, {0.0}, {1.0});
  auto vs = validate_topology(t);
  REQUIRE(vs.size() == 1);
  REQUIRE(vs[0].kind == TopologyViolationKind::zero_capacity);
  REQUIRE(vs[0].link == 0);

  auto t2 = NetworkTopology::make({{1.0}}, {1.0}, {0.0});
  auto vs2 = validate_topology(t2);
  REQUIRE(vs2.size() == 1);
  REQUIRE(vs2[0].kind == TopologyViolationKind::zero_weight);
}

TEST_CASE("validate_topology reports negative incidence") {
  auto t = NetworkTopology::make({{-0.5}}, {1.0}, {1.0});
  auto vs = validate_topology(t);
  REQUIRE_FALSE(vs.empty());
  REQUIRE(vs[0].kind == TopologyViolationKind::negative_incidence);
}

TEST_CASE("traffic_intensity is the product nu * m") {
  TrafficSpec spec;
  spec.interarrival = {Exponential{1.0}, Exponential{4.0}};
  spec.service = {Exponential{0.5}, Deterministic{2.0}};
  auto rho = traffic_intensity(spec);
  REQUIRE(rho[0] == 0.5);
  REQUIRE(rho[1] == 0.5);
}

TEST_CASE("traffic_intensity scales exactly with the service mean") {
  TrafficSpec spec;
  spec.interarrival = {Exponential{2.0}};
  spec.service = {Deterministic{0.75}};
  auto rho = traffic_intensity(spec);
  TrafficSpec scaled = spec;
  scaled.service = {Deterministic{0.75 * 4.0}};  // power-of-two scaling is exact
  auto rho2 = traffic_intensity(scaled);
  REQUIRE(rho2[0] == 4.0 * rho[0]);
}

TEST_CASE("check_subcritical slack and boolean") {
  auto t = single_link();
  auto rep = check_subcritical(t, {0.5});
  REQUIRE(rep.subcritical);
  REQUIRE(rep.slack[0] == Catch::Approx(0.5));
  REQUIRE(rep.margin == Catch::Approx(std::sqrt(2.0) - 1.0));

  auto t2 = NetworkTopology::make({{1.0, 1.0}}, {1.0}, {1.0, 1.0});
  auto rep2 = check_subcritical(t2, {0.5, 0.5});
  REQUIRE_FALSE(rep2.subcritical);  // critical is not subcritical
  REQUIRE(rep2.slack[0] == Catch::Approx(0.0));
}

TEST_CASE("check_subcritical on the two-link linear network") {
  auto t = NetworkTopology::make({{1.0, 1.0, 0.0}, {1.0, 0.0, 1.0}}, {1.0, 1.0},
                                 {1.0, 1.0, 1.0});
  // hand oracle: slack_l = c_l - sum_r A[l][r] * 0.3
  auto rep = check_subcritical(t, {0.3, 0.3, 0.3});
  REQUIRE(rep.subcritical);
  REQUIRE(rep.slack[0] == Catch::Approx(0.4));
  REQUIRE(rep.slack[1] == Catch::Approx(0.4));
}

TEST_CASE("check_subcritical rejects mismatched dimensions") {
  REQUIRE_THROWS_AS(check_subcritical(single_link(), {0.5, 0.5}), DimensionMismatch);
}

TEST_CASE("check_feasible boundary cases") {
  auto t = single_link();
  REQUIRE(check_feasible(t, std::vector<double>{0.0}, 0.0));
  REQUIRE(check_feasible(t, std::vector<double>{1.0}, 0.0));  // boundary equality
  double tol = 1e-6;
  REQUIRE_FALSE(check_feasible(t, std::vector<double>{1.0 + 2.0 * tol}, tol));
}

TEST_CASE("subcritical intensities are feasible as route totals") {
  auto t = NetworkTopology::make({{1.0, 0.5}, {0.0, 2.0}}, {2.0, 3.0}, {1.0, 2.0});
  std::vector<double> rho = {0.8, 1.2};
  auto rep = check_subcritical(t, rho);
  REQUIRE(rep.subcritical);
  REQUIRE(check_feasible(t, rho, 0.0));
}
