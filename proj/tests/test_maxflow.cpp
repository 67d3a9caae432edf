#include <doctest.h>

#include <random>

#include "flatflow/maxflow.hpp"

using flatflow::MaxFlow;

namespace {

struct Instance {
  int n = 0;
  std::vector<double> cs, ct;
  struct E {
    int u, v;
    double cuv, cvu;
  };
  std::vector<E> edges;

  double cut(const std::vector<int>& in) const {
    double c = 0;
    for (int i = 0; i < n; ++i) c += in[i] ? ct[i] : cs[i];
    for (const auto& e : edges) {
      if (in[e.u] && !in[e.v]) c += e.cuv;
      if (in[e.v] && !in[e.u]) c += e.cvu;
    }
    return c;
  }
};

Instance random_lattice(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.n = 16;
  for (int i = 0; i < 16; ++i) {
    const double roll = u(rng);
    in.cs.push_back(roll < 0.5 ? u(rng) * 2 : 0.0);
    in.ct.push_back(roll > 0.3 ? u(rng) * 2 : 0.0);
  }
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const int i = y * 4 + x;
      if (x + 1 < 4) in.edges.push_back({i, i + 1, u(rng), u(rng)});
      if (y + 1 < 4) in.edges.push_back({i, i + 4, u(rng), u(rng)});
      if (x + 1 < 4 && y + 1 < 4 && u(rng) < 0.5) in.edges.push_back({i, i + 5, u(rng), u(rng)});
    }
  }
  return in;
}

}  // namespace

TEST_CASE("path graph") {
  // s -> a with capacity 1, a -> t with capacity 2.
  MaxFlow g(1);
  g.add_terminal(0, 1.0, 2.0);
  CHECK(g.solve() == doctest::Approx(1.0));
  CHECK_FALSE(g.in_source_set(0));
}

TEST_CASE("disconnected sink") {
  MaxFlow g(3);
  g.add_terminal(0, 5.0, 0.0);
  g.add_edge(0, 1, 3.0, 0.0);
  g.add_terminal(2, 0.0, 4.0);
  CHECK(g.solve() == 0.0);
  CHECK(g.in_source_set(0));
  CHECK(g.in_source_set(1));
  CHECK_FALSE(g.in_source_set(2));
}

TEST_CASE("random 4x4 lattices against exhaustive cuts") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_lattice(rng);
    MaxFlow g(in.n);
    for (int i = 0; i < in.n; ++i) g.add_terminal(i, in.cs[i], in.ct[i]);
    for (const auto& e : in.edges) g.add_edge(e.u, e.v, e.cuv, e.cvu);
    const double flow = g.solve();
    double best = 1e300;
    std::vector<int> lab(in.n);
    for (int mask = 0; mask < (1 << in.n); ++mask) {
      for (int i = 0; i < in.n; ++i) lab[i] = (mask >> i) & 1;
      best = std::min(best, in.cut(lab));
    }
    for (int i = 0; i < in.n; ++i) lab[i] = g.in_source_set(i);
    CHECK(flow == doctest::Approx(best).epsilon(1e-12));
    CHECK(in.cut(lab) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("source side is the minimal minimum cut") {
  // Zero-cost tie: node 0 may sit on either side; the minimal side excludes it.
  MaxFlow g(2);
  g.add_terminal(0, 1.0, 1.0);
  g.add_terminal(1, 2.0, 0.0);
  g.add_edge(0, 1, 0.0, 0.0);
  g.solve();
  CHECK_FALSE(g.in_source_set(0));
  CHECK(g.in_source_set(1));
}
