// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "optoqst/error.hpp"
#include "optoqst/protocols.hpp"

using namespace optoqst;

TEST_CASE("PST profile, printed convention") {
  const double J = 1.7;
  const auto p4 = pst_profile(4, J, HopConvention::kAsPrinted);
  REQUIRE(p4.hops.size() == 3);
  CHECK(p4.hops[0] == doctest::Approx(1.224745 * J).epsilon(1e-6));
  CHECK(p4.hops[1] == doctest::Approx(1.414214 * J).epsilon(1e-6));
  CHECK(p4.hops[2] == doctest::Approx(1.224745 * J).epsilon(1e-6));
  CHECK(p4.tau_A == doctest::Approx(std::sqrt(2.0) * M_PI / J));
  const auto p2 = pst_profile(2, J, HopConvention::kAsPrinted);
  REQUIRE(p2.hops.size() == 1);
  CHECK(p2.hops[0] == doctest::Approx(0.707107 * J).epsilon(1e-6));
}

TEST_CASE("PST profile, polariton-chain convention") {
  const double J = 2e8;
  const auto p = pst_profile(4, J);
  CHECK(p.convention == HopConvention::kPolaritonChain);
  CHECK(p.hops[0] == doctest::Approx(std::sqrt(3.0) * J));
  CHECK(p.hops[1] == doctest::Approx(2.0 * J));
  CHECK(p.tau_A == doctest::Approx(M_PI / J));
  CHECK(p.tau_B == p.tau_A);
  CHECK(p.compatibility.ok);
  CHECK(p.compatibility.ratio == doctest::Approx(1.0));
  CHECK(p.num_cells() == 4);
  CHECK_THROWS_AS(pst_profile(1, J), InvalidArgument);
  CHECK_THROWS_AS(pst_profile(4, -1.0), InvalidArgument);
}

TEST_CASE("PST profile properties") {
  for (auto conv : {HopConvention::kPolaritonChain, HopConvention::kAsPrinted}) {
    for (int N = 2; N <= 50; ++N) {
      const auto p = pst_profile(N, 1.0, conv);
      REQUIRE(p.hops.size() == std::size_t(N - 1));
      for (int n = 0; n < N - 1; ++n) {
        CHECK(p.hops[n] == p.hops[N - 2 - n]);
        CHECK(p.hops[n] >= 0.0);
      }
      // Midpoint chain coupling (half the photon hop) is NJ/4 for even N.
      if (N % 2 == 0 && conv == HopConvention::kPolaritonChain)
        CHECK(0.5 * p.hops[N / 2 - 1] == doctest::Approx(N / 4.0));
      const auto scaled = pst_profile(N, 3.0, conv);
      CHECK(scaled.tau() == doctest::Approx(p.tau() / 3.0));
      CHECK(scaled.hops[0] == doctest::Approx(3.0 * p.hops[0]));
    }
  }
}

TEST_CASE("eigenmode-mediated profile") {
  const double J = 1.0;
  SUBCASE("five cells") {
    const auto p = eigenmode_profile(5, 0.01 * J, J, HopConvention::kAsPrinted);
    REQUIRE(p.hops.size() == 4);
    CHECK(p.hops[0] == doctest::Approx(0.01));
    CHECK(p.hops[1] == doctest::Approx(1.0));
    CHECK(p.hops[2] == doctest::Approx(1.0));
    CHECK(p.hops[3] == doctest::Approx(0.01));
    CHECK(p.tau() == doctest::Approx(1088.28).epsilon(1e-5));
    const auto chain = eigenmode_profile(5, 0.01 * J, J);
    CHECK(chain.hops[0] == doctest::Approx(0.02));
    CHECK(chain.hops[1] == doctest::Approx(2.0));
    CHECK(chain.tau() == doctest::Approx(p.tau()));
    CHECK(p.warnings.empty());
  }
  SUBCASE("three cells") {
    const auto p = eigenmode_profile(3, 0.05, J);
    CHECK(p.tau() == doctest::Approx(M_PI / 0.05 * std::sqrt(8.0)));
  }
  SUBCASE("even length is rejected") { CHECK_THROWS_AS(eigenmode_profile(4, 0.01, J), InvalidArgument); }
  SUBCASE("margin violation is a warning") {
    const auto p = eigenmode_profile(5, 0.5, J);
    CHECK_FALSE(p.warnings.empty());
  }
}

TEST_CASE("tunneling profile") {
  const double J = 1.0;
  const auto p = tunneling_profile(4, 0.01, 0.1, J);
  CHECK(p.tau() == doctest::Approx(2 * M_PI * 1e3));
  CHECK(p.endpoint_detuning == doctest::Approx(0.1));
  for (std::size_t n = 0; n < p.hops.size(); ++n) CHECK(p.hops[n] == p.hops[p.hops.size() - 1 - n]);
  CHECK(p.warnings.empty());
  CHECK_THROWS_AS(tunneling_profile(4, 0.01, 0.0, J), InvalidArgument);
  CHECK_FALSE(tunneling_profile(4, 0.05, 0.1, J).warnings.empty());
  const auto odd = tunneling_profile(7, 0.001, 0.05, J);
  for (std::size_t n = 0; n < odd.hops.size(); ++n) CHECK(odd.hops[n] == odd.hops[odd.hops.size() - 1 - n]);
}

TEST_CASE("time compatibility") {
  const double t = M_PI;
  auto c = check_time_compatibility(t, t);
  CHECK(c.ok);
  CHECK(c.ratio == doctest::Approx(1.0));
  c = check_time_compatibility(t, 3 * t);
  CHECK(c.ok);
  CHECK(c.ratio == doctest::Approx(3.0));
  CHECK(check_time_compatibility(5 * t, t).ok);
  CHECK_FALSE(check_time_compatibility(t, 2 * t).ok);
  CHECK_FALSE(check_time_compatibility(t, 1.5 * t).ok);
  CHECK_FALSE(check_time_compatibility(t, 3 * t * (1 + 1e-6)).ok);
  CHECK_THROWS_AS(check_time_compatibility(0.0, t), InvalidArgument);
}
