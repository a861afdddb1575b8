#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include "pcn/harness.hpp"

namespace pcn::testing {

inline UserId uid(std::uint32_t v) { return UserId{v}; }

inline Amount coins(std::string_view s) { return Amount::coins(s); }

// Linear path u1 -> u2 -> ... -> u(hops+1), every channel with the given
// capacity and fee.
inline Scenario line_scenario(std::size_t hops, Amount capacity, Amount fee, Amount value) {
  Scenario s;
  s.name = "line" + std::to_string(hops);
  for (std::uint32_t i = 1; i <= hops + 1; ++i) s.users.push_back({uid(i), "u" + std::to_string(i)});
  for (std::uint32_t i = 1; i <= hops; ++i) s.channels.push_back({uid(i), uid(i + 1), capacity, fee});
  ScenarioPayment p;
  for (std::uint32_t i = 1; i <= hops + 1; ++i) p.path.push_back(uid(i));
  p.value = value;
  s.payments.push_back(p);
  return s;
}

// Random scenario on at most `max_nodes` users: a random directed graph with
// unit-ish capacities and up to `max_payments` payments along random simple
// paths of that graph.
struct ScenarioGen {
  Rng rng;
  std::size_t max_nodes = 6;
  std::size_t max_payments = 3;

  explicit ScenarioGen(std::uint64_t seed) : rng(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  Scenario next() {
    Scenario s;
    const std::size_t n = 3 + below(max_nodes - 2);
    s.name = "gen";
    for (std::uint32_t i = 1; i <= n; ++i) s.users.push_back({uid(i), "u" + std::to_string(i)});
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 1; i < n; ++i) edges.insert({i, i + 1});
    const std::size_t extra = below(n + 1);
    for (std::size_t k = 0; k < extra; ++k) {
      auto a = static_cast<std::uint32_t>(1 + below(n));
      auto b = static_cast<std::uint32_t>(1 + below(n));
      if (a != b && !edges.count({b, a})) edges.insert({a, b});
    }
    std::map<std::uint32_t, std::vector<std::uint32_t>> adj;
    for (auto [a, b] : edges) {
      const Amount cap = Amount::units(static_cast<std::int64_t>(1 + below(3)) * Amount::kUnitsPerCoin);
      const Amount fee = Amount::units(static_cast<std::int64_t>(below(3)) * 10'000'000);
      s.channels.push_back({uid(a), uid(b), cap, fee});
      adj[a].push_back(b);
    }
    const std::size_t payments = 1 + below(max_payments);
    for (std::size_t k = 0; k < payments; ++k) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        std::vector<std::uint32_t> path{static_cast<std::uint32_t>(1 + below(n))};
        const std::size_t len = 1 + below(4);
        while (path.size() <= len) {
          const auto& next = adj[path.back()];
          std::vector<std::uint32_t> fresh;
          for (auto v : next)
            if (std::find(path.begin(), path.end(), v) == path.end()) fresh.push_back(v);
          if (fresh.empty()) break;
          path.push_back(fresh[below(fresh.size())]);
        }
        if (path.size() < 2) continue;
        ScenarioPayment p;
        for (auto v : path) p.path.push_back(uid(v));
        p.value = Amount::units(static_cast<std::int64_t>(1 + below(2)) * 50'000'000);
        s.payments.push_back(p);
        break;
      }
    }
    return s;
  }
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Least-squares fit y = a + b x; returns R^2.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

}  // namespace pcn::testing
