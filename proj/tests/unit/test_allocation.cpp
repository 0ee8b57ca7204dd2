#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "searchplan/allocation.hpp"

using namespace searchplan;

namespace {

std::vector<DetectionFunction> exponential(std::vector<double> rho) {
  std::vector<DetectionFunction> out;
  for (double r : rho) out.emplace_back(ExponentialDetection{r});
  return out;
}

double value(const CellPrior& p, const std::vector<double>& rho, const std::vector<double>& z) {
  double s = 0;
  for (std::size_t j = 0; j < z.size(); ++j) s += p.p[j] * (1 - std::exp(-rho[j] * z[j]));
  return s;
}

}  // namespace

TEST(Evaluate, ClosedForms) {
  const CellPrior one{{1.0}};
  EXPECT_EQ(evaluate({{0.0}, 1.0}, one, exponential({1})).probability, 0.0);
  const auto v = evaluate({{1.0}, 1.0}, one, exponential({1}));
  EXPECT_NEAR(v.probability, 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(v.probability, 0.6321, 1e-4);
  EXPECT_EQ(v.cost, 1.0);
  const auto two = evaluate({{1.0, 0.0}, 1.0}, {{0.5, 0.5}}, exponential({1, 1}));
  EXPECT_NEAR(two.probability, 0.3161, 1e-4);
  EXPECT_EQ(two.cost, 1.0);
  EXPECT_THROW(evaluate({{-1.0}, 1.0}, one, exponential({1})), std::invalid_argument);
}

TEST(Optimize, SingleCellTakesBudget) {
  const Allocation a = optimize({{1.0}}, exponential({2.0}), 3.5);
  EXPECT_NEAR(a.effort[0], 3.5, 1e-9);
}

TEST(Optimize, SymmetricSplit) {
  const Allocation a = optimize({{0.5, 0.5}}, exponential({1, 1}), 3.0);
  EXPECT_NEAR(a.effort[0], 1.5, 1e-9);
  EXPECT_NEAR(a.effort[1], 1.5, 1e-9);
}

TEST(Optimize, ZeroBudget) {
  const Allocation a = optimize({{0.5, 0.5}}, exponential({1, 1}), 0.0);
  EXPECT_EQ(a.effort[0], 0.0);
  EXPECT_EQ(a.effort[1], 0.0);
  EXPECT_THROW(optimize({{0.5, 0.5}}, exponential({1, 1}), -1.0), std::invalid_argument);
}

TEST(Optimize, BruteForceSimplex) {
  const CellPrior p{{0.5, 0.3, 0.2}};
  const std::vector<double> rho{1, 1, 1};
  const double T = 2.0;
  double best = -1;
  double bz0 = 0, bz1 = 0;
  for (int i = 0; i <= 2000; ++i) {
    for (int j = 0; i + j <= 2000; ++j) {
      const double z0 = i * 1e-3, z1 = j * 1e-3, z2 = T - z0 - z1;
      const double v = value(p, rho, {z0, z1, z2});
      if (v > best) best = v, bz0 = z0, bz1 = z1;
    }
  }
  const Allocation a = optimize(p, exponential(rho), T);
  EXPECT_NEAR(a.effort[0], bz0, 1e-3);
  EXPECT_NEAR(a.effort[1], bz1, 1e-3);
  EXPECT_NEAR(a.effort[2], T - bz0 - bz1, 1e-3);
  EXPECT_GE(evaluate(a, p, exponential(rho)).probability, best - 1e-9);
  // closed form: all three cells active, z_j = ln(p_j / lambda), sum = 2
  const double log_lambda = (std::log(0.5) + std::log(0.3) + std::log(0.2) - T) / 3.0;
  EXPECT_NEAR(a.effort[0], std::log(0.5) - log_lambda, 1e-9);
}

TEST(Optimize, MarginalRatesEqual) {
  const CellPrior p{{0.4, 0.25, 0.2, 0.1, 0.05}};
  const std::vector<double> rho{0.5, 1.0, 2.0, 1.5, 0.8};
  const Allocation a = optimize(p, exponential(rho), 2.5);
  EXPECT_LE(std::accumulate(a.effort.begin(), a.effort.end(), 0.0), 2.5 + 1e-9);
  double lambda = -1;
  for (std::size_t j = 0; j < 5; ++j) {
    if (a.effort[j] > 0) {
      const double m = p.p[j] * rho[j] * std::exp(-rho[j] * a.effort[j]);
      if (lambda < 0) lambda = m;
      EXPECT_NEAR(m, lambda, 1e-6);
    }
  }
  for (std::size_t j = 0; j < 5; ++j) {
    if (a.effort[j] == 0) {
      EXPECT_LE(p.p[j] * rho[j], lambda + 1e-6);
    }
  }
}

TEST(Optimize, DominatesRandomAllocations) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  for (std::size_t J = 2; J <= 6; ++J) {
    CellPrior p;
    std::vector<double> rho;
    double s = 0;
    for (std::size_t j = 0; j < J; ++j) {
      p.p.push_back(u(rng) + 0.01);
      s += p.p.back();
      rho.push_back(0.2 + 2 * u(rng));
    }
    for (auto& v : p.p) v /= s;
    const double T = 0.5 + 3 * u(rng);
    const double opt = evaluate(optimize(p, exponential(rho), T), p, exponential(rho)).probability;
    for (int k = 0; k < 20000; ++k) {
      std::vector<double> z(J);
      double zs = 0;
      for (auto& v : z) zs += (v = ex(rng));
      const double scale = T * u(rng) / zs;  // somewhere inside the feasible set
      for (auto& v : z) v *= scale;
      ASSERT_LE(value(p, rho, z), opt + 1e-9);
    }
  }
}

TEST(Optimize, BudgetMonotone) {
  const CellPrior p{{0.6, 0.3, 0.1}};
  double last = -1;
  for (double T = 0; T <= 10; T += 0.25) {
    const double v = evaluate(optimize(p, exponential({1, 2, 0.5}), T), p, exponential({1, 2, 0.5})).probability;
    EXPECT_GE(v, last - 1e-12);
    last = v;
  }
}

TEST(Optimize, IncrementalOptimality) {
  const CellPrior p{{0.5, 0.3, 0.15, 0.05}};
  const auto b = exponential({1.0, 0.7, 1.3, 0.4});
  const double T = 3.0;
  const double single = evaluate(optimize(p, b, T), p, b).probability;
  const Allocation first = optimize(p, b, T / 2);
  const double p1 = evaluate(first, p, b).probability;
  const CellPrior post = posterior_given_failure(p, first, b);
  const double p2 = evaluate(optimize(post, b, T / 2), post, b).probability;
  EXPECT_NEAR(p1 + (1 - p1) * p2, single, 1e-6);
}

TEST(Optimize, TabulatedGreedy) {
  // piecewise-linear concave: slope 0.5 to z=1, then 0.2 to z=2, flat after
  TabulatedDetection t{{{0, 0}, {1, 0.5}, {2, 0.7}, {10, 0.7}}};
  const std::vector<DetectionFunction> b{t, t};
  const Allocation a = optimize({{0.5, 0.5}}, b, 2.0);
  EXPECT_NEAR(a.effort[0], 1.0, 2.0 / kTabulatedEffortQuanta + 1e-9);
  EXPECT_NEAR(a.effort[1], 1.0, 2.0 / kTabulatedEffortQuanta + 1e-9);
  TabulatedDetection convex{{{0, 0}, {1, 0.1}, {2, 0.9}}};
  try {
    optimize({{1.0}}, {convex}, 1.0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("requires concavity"), std::string::npos);
  }
}

TEST(PosteriorGivenFailure, Oracles) {
  const CellPrior p{{0.5, 0.5}};
  const auto b = exponential({1, 1});
  const CellPrior same = posterior_given_failure(p, {{0, 0}, 0}, b);
  EXPECT_EQ(same.p, p.p);
  const CellPrior limit = posterior_given_failure(p, {{60, 0}, 60}, b);
  EXPECT_NEAR(limit.p[1], 1.0, 1e-12);
  TabulatedDetection half{{{0, 0}, {1, 0.5}}};
  TabulatedDetection none{{{0, 0}, {1, 0.0}}};
  const CellPrior post = posterior_given_failure({{0.6, 0.4}}, {{1, 0}, 1}, {half, none});
  EXPECT_NEAR(post.p[0], 0.3 / 0.7, 1e-12);
  EXPECT_NEAR(post.p[0], 0.4286, 1e-4);
  EXPECT_NEAR(post.p[1], 0.5714, 1e-4);
}
