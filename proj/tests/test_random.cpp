#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "soblab/parallel.hpp"
#include "soblab/random.hpp"

using namespace soblab;

TEST_CASE("derived seeds are deterministic and path sensitive") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t n = 0; n < 100; ++n) {
    for (std::uint64_t t = 0; t < 100; ++t) seen.insert(derive_seed(42, {n, t}));
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("uniform draws stay in [0, 1) with the right moments") {
  Rng rng(7);
  double s = 0.0;
  double s2 = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / m;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / m));
  CHECK(std::abs(s2 / m - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal draws have unit variance and a two-sided tail of 2 Phi(-1)") {
  Rng rng(11);
  const int m = 200000;
  double s = 0.0;
  double s2 = 0.0;
  int tail = 0;
  for (int i = 0; i < m; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    tail += std::abs(z) >= 1.0 ? 1 : 0;
  }
  CHECK(std::abs(s / m) < 4.0 / std::sqrt(m));
  CHECK(std::abs(s2 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
  const double rho = std::erfc(1.0 / std::sqrt(2.0));
  CHECK(std::abs(static_cast<double>(tail) / m - rho) < 4.0 * std::sqrt(rho * (1 - rho) / m));
}

TEST_CASE("same seed, same stream") {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.bits() == b.bits());
  Rng c(100);
  CHECK(Rng(99).bits() != c.bits());
}

TEST_CASE("parallel_for visits every index exactly once") {
  for (unsigned threads : {1u, 2u, 4u, 7u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) REQUIRE(h.load() == 1);
  }
}

TEST_CASE("parallel_for rethrows the failure with the smallest index") {
  for (unsigned threads : {1u, 4u}) {
    try {
      parallel_for(100, threads, [](std::size_t i) {
        if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
      });
      FAIL("no exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "37");
    }
  }
}
