#include <gtest/gtest.h>

#include <cmath>

#include "harris/transdim.hpp"

using namespace harris;

namespace {

// Three models sharing one normalized 1-d density, with identity maps.
struct Symmetric {
  TransDimTarget target;
  ModelJumpKernel R;
  CoordinateMaps maps;
  WithinModelSamplers within;
};

Symmetric symmetric_three() {
  std::vector<ModelSpec> models;
  for (std::size_t m = 1; m <= 3; ++m) models.push_back({m, standard_normal_target(1), 1.0 / 3.0});
  TransDimTarget target(std::move(models));
  auto R = ModelJumpKernel::uniform_others(target);
  WithinModelSamplers within;
  for (std::size_t m = 1; m <= 3; ++m)
    within.emplace(m, CoordinateSampler({normal_coordinate_proposal(0, 1.0)}, ScanSchedule::random()));
  return {std::move(target), std::move(R), CoordinateMaps{}, std::move(within)};
}

double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST(TransDimTarget, Validation) {
  EXPECT_THROW(TransDimTarget({{1, standard_normal_target(1), 1.0}}), InvalidInput);
  EXPECT_THROW(TransDimTarget({{1, standard_normal_target(1), 0.5}, {2, standard_normal_target(2), 0.4}}),
               InvalidInput);
  EXPECT_THROW(TransDimTarget({{1, standard_normal_target(1), 0.5}, {1, standard_normal_target(2), 0.5}}),
               InvalidInput);
  EXPECT_THROW(TransDimTarget({{1, standard_normal_target(1), 1.0}, {2, standard_normal_target(2), 0.0}}),
               InvalidInput);
  TransDimTarget ok({{1, standard_normal_target(1), 0.25}, {4, standard_normal_target(2), 0.75}});
  EXPECT_EQ(ok.dim(4), 2u);
  EXPECT_THROW(ok.model(2), InvalidInput);
}

TEST(ModelJumpKernel, Validation) {
  const auto toy = make_toy_family({});
  EXPECT_THROW(ModelJumpKernel(toy.target, {{0, 1, 0}, {0.5, 0, 0.5}, {0, 0.9, 0}}), InvalidInput);
  EXPECT_THROW(ModelJumpKernel(toy.target, {{0, 1, 0}, {1, 0, 0}, {0, 1, 0}}), InvalidInput);
  EXPECT_THROW(ModelJumpKernel(toy.target, {{0, 1}, {1, 0}}), InvalidInput);
  EXPECT_NO_THROW(ModelJumpKernel(toy.target, {{0, 1, 0}, {0.5, 0, 0.5}, {0, 1, 0}}));
}

TEST(ModelJumpKernel, NeighboursProbabilities) {
  const auto toy = make_toy_family({});
  EXPECT_EQ(toy.R.prob(1, 2), 1.0);
  EXPECT_EQ(toy.R.prob(2, 1), 0.5);
  EXPECT_EQ(toy.R.prob(2, 3), 0.5);
  EXPECT_EQ(toy.R.prob(1, 3), 0.0);
  EXPECT_EQ(toy.R.log_R(1, 3), kNegInf);
}

TEST(MixingProbability, OpenInterval) {
  EXPECT_THROW(MixingProbability(0.0), InvalidInput);
  EXPECT_THROW(MixingProbability(1.0), InvalidInput);
  EXPECT_THROW(MixingProbability(-0.2), InvalidInput);
  EXPECT_EQ(MixingProbability(0.3).value(), 0.3);
  EXPECT_EQ(MixingProbability::always_between().value(), 1.0);
}

TEST(ApplyMap, IdentityLeavesPointAndZeroJacobian) {
  CoordinateMaps maps;
  const std::vector<double> x{0.3, -1.0, 2.5};
  const auto r = apply_map(maps, 1, 2, x);
  EXPECT_EQ(r.x, x);
  EXPECT_EQ(r.log_jacobian, 0.0);
}

TEST(ApplyMap, LogitAtOneHalf) {
  CoordinateMaps maps;
  maps.set(1, 2, {ScalarMap::identity(), ScalarMap::logit()});
  const std::vector<double> x{0.7, 0.5};
  const auto r = apply_map(maps, 1, 2, x);
  EXPECT_EQ(r.x[0], 0.7);
  EXPECT_NEAR(r.x[1], 0.0, 1e-15);
  EXPECT_NEAR(r.log_jacobian, std::log(4.0), 1e-12);
  const auto h = ScalarMap::logit();
  EXPECT_NEAR(std::exp(r.log_jacobian), central_difference(h.forward, 0.5), 1e-6);
}

TEST(ApplyMap, RoundTripAndJacobiansCancel) {
  CoordinateMaps maps;
  maps.set(1, 2, {ScalarMap::identity(), ScalarMap::logit()});
  RngStream rng(17, 0);
  for (int k = 0; k < 10000; ++k) {
    const std::vector<double> x{rng.normal(), rng.uniform()};
    const auto fwd = apply_map(maps, 1, 2, x);
    const auto back = apply_map(maps, 2, 1, fwd.x);
    ASSERT_NEAR(back.x[1], x[1], 1e-12);
    ASSERT_EQ(back.x[0], x[0]);
    ASSERT_NEAR(fwd.log_jacobian + back.log_jacobian, 0.0, 1e-12);
  }
}

TEST(ApplyMap, LogDerivativeMatchesFiniteDifference) {
  const auto h = ScalarMap::logit();
  const auto g = h.inverted();
  for (double u : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    const double fd = central_difference(h.forward, u);
    EXPECT_NEAR(std::exp(h.log_derivative(u)), fd, 1e-6 * fd);
  }
  for (double t : {-4.0, -1.0, 0.0, 2.0, 5.0}) {
    const double fd = central_difference(g.forward, t);
    EXPECT_NEAR(std::exp(g.log_derivative(t)), fd, 1e-6 * fd);
  }
}

TEST(ApplyMap, OutsideDomainThrows) {
  CoordinateMaps maps;
  maps.set(1, 2, {ScalarMap::identity(), ScalarMap::logit()});
  EXPECT_THROW(apply_map(maps, 1, 2, std::vector<double>{0.0, 1.5}), InvalidInput);
  EXPECT_THROW(maps.set(2, 1, {}), InvalidInput);
}

TEST(BetweenModel, SymmetricModelsAlwaysAccept) {
  auto s = symmetric_three();
  RngStream rng(3, 0);
  TransDimState state{1, Point{0.2}};
  for (int k = 0; k < 10000; ++k) {
    const auto r = between_model_step(s.target, s.R, s.maps, state, rng);
    ASSERT_TRUE(r.accepted);
    ASSERT_EQ(r.log_alpha, 0.0);
    ASSERT_NE(r.state.model, state.model);
    ASSERT_EQ(r.state.x, state.x);
    state = r.state;
  }
}

TEST(BetweenModel, SymmetricModelMarginalIsUniform) {
  auto s = symmetric_three();
  RngStream rng(3, 1);
  const std::uint64_t n = 1'000'000;
  const auto trace = run_transdim(s.target, s.R, s.maps, MixingProbability::always_between(), s.within,
                                  {1, Point{0.0}}, n, rng);
  std::array<std::uint64_t, 4> count{};
  for (const auto& e : trace.events()) ++count[e.state.model];
  for (std::size_t m = 1; m <= 3; ++m) EXPECT_NEAR(static_cast<double>(count[m]) / n, 1.0 / 3.0, 0.02);
}

TEST(BetweenModel, OffSupportImageIsRejected) {
  TargetDensity half(1, [](std::span<const double> x) { return x[0] > 0.0; },
                     [](std::span<const double> x) { return std::log(2.0) + standard_normal_log_pdf(x[0]); });
  TransDimTarget t({{1, standard_normal_target(1), 0.5}, {2, std::move(half), 0.5}});
  auto R = ModelJumpKernel::uniform_others(t);
  CoordinateMaps maps;
  RngStream rng(3, 2);
  for (int k = 0; k < 1000; ++k) {
    const auto r = between_model_step(t, R, maps, {1, Point{-0.5}}, rng);
    ASSERT_FALSE(r.accepted);
    ASSERT_EQ(r.log_alpha, kNegInf);
    ASSERT_EQ(r.state, (TransDimState{1, Point{-0.5}}));
  }
}

TEST(BetweenModel, AuxiliaryCountMustMatch) {
  const auto toy = make_toy_family({});
  const std::vector<double> none;
  EXPECT_THROW(between_model_proposal(toy.target, toy.R, toy.maps, {1, Point{0.0}}, none, 2), InvalidInput);
  EXPECT_THROW(between_model_proposal(toy.target, toy.R, toy.maps, {1, Point{0.0, 1.0}}, std::vector<double>{0.5}, 2),
               InvalidInput);
}

TEST(BetweenModel, FlowSymmetryUnderRaisingAndLowering) {
  const auto toy = make_toy_family({});
  RngStream rng(19, 0);
  for (int k = 0; k < 10000; ++k) {
    const TransDimState s{2, Point{rng.normal(), rng.normal()}};
    const std::vector<double> u{rng.uniform()};
    const auto up = between_model_proposal(toy.target, toy.R, toy.maps, s, u, 3);
    ASSERT_EQ(up.proposed.x.dim(), 3u);
    const auto down = between_model_proposal(toy.target, toy.R, toy.maps, up.proposed, {}, 2);
    ASSERT_EQ(down.proposed.x[0], s.x[0]);
    ASSERT_EQ(down.proposed.x[1], s.x[1]);
    ASSERT_NEAR(up.log_ratio + down.log_ratio, 0.0, 1e-12);
    const double lhs = toy.target.log_p(2) + toy.target.model(2).density.log_density(s.x) + toy.R.log_R(2, 3) +
                       std::min(0.0, up.log_ratio) - toy.maps.coordinate_map(2, 3, 2).log_derivative(u[0]);
    const double rhs = toy.target.log_p(3) + toy.target.model(3).density.log_density(up.proposed.x) +
                       toy.R.log_R(3, 2) + std::min(0.0, down.log_ratio);
    ASSERT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(TransDimStep, MoveKindFrequency) {
  auto toy = make_toy_family({.a = 0.3});
  RngStream rng(23, 0);
  const std::uint64_t n = 100000;
  TransDimState s{3, Point{0.0, 0.0, 0.0}};
  std::uint64_t between = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto r = transdim_step(toy.target, toy.R, toy.maps, toy.a, toy.within, s, rng);
    if (r.kind == MoveKind::between) {
      ++between;
    } else {
      ASSERT_EQ(r.state.model, s.model);
      ASSERT_EQ(r.direction.kind, Direction::Kind::coordinate);
    }
    s = r.state;
  }
  const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(between) / static_cast<double>(n), 0.3, 3.0 * se);
}

TEST(TransDimStep, AuxiliaryUniformsOnlyWhenRaising) {
  auto toy = make_toy_family({});
  RngStream rng(29, 0);
  AuxiliaryCounters counters;
  const auto trace = run_transdim(toy.target, toy.R, toy.maps, toy.a, toy.within, {3, Point{0.0, 0.0, 0.0}},
                                  50000, rng, &counters);
  std::uint64_t proposals = 0, raised = 0;
  std::size_t current = trace.initial().model;
  for (const auto& e : trace.events()) {
    if (e.direction.kind == Direction::Kind::model) {
      ++proposals;
      const std::size_t to = e.direction.index;
      if (to > current) raised += toy.target.dim(to) - toy.target.dim(current);
    }
    current = e.state.model;
  }
  EXPECT_EQ(counters.between_proposals, proposals);
  EXPECT_EQ(counters.materialized, raised);
  EXPECT_GT(raised, 0u);
}

TEST(HypothesisMonitor, NoWithinAcceptFlagged) {
  Trace<TransDimState> t({2, Point{0.0, 0.0}});
  t.record({1, Direction::coordinate(0), false, {2, Point{0.0, 0.0}}});
  t.record({2, Direction::model(1), true, {1, Point{0.0}}});
  const auto rep = theorem_hypothesis_monitor(t);
  EXPECT_TRUE(rep.no_within_move_accepted());
  EXPECT_FALSE(rep.all_coordinates_covered());
}

TEST(HypothesisMonitor, BetweenOnlyRunLeavesCoordinatesUncovered) {
  auto s = symmetric_three();
  RngStream rng(31, 0);
  const auto trace = run_transdim(s.target, s.R, s.maps, MixingProbability::always_between(), s.within,
                                  {2, Point{0.1}}, 1000, rng);
  const auto rep = theorem_hypothesis_monitor(trace);
  EXPECT_TRUE(rep.no_within_move_accepted());
  for (const auto& c : rep.coordinate_first_accept) EXPECT_FALSE(c.has_value());
}

TEST(HypothesisMonitor, RecordsFirstAcceptPerCoordinate) {
  Trace<TransDimState> t({2, Point{0.0, 0.0}});
  t.record({1, Direction::coordinate(1), true, {2, Point{0.0, 1.0}}});
  t.record({2, Direction::coordinate(1), true, {2, Point{0.0, 2.0}}});
  t.record({3, Direction::coordinate(0), true, {2, Point{3.0, 2.0}}});
  const auto rep = theorem_hypothesis_monitor(t);
  EXPECT_EQ(rep.first_within_accept, 1u);
  EXPECT_EQ(rep.coordinate_first_accept[0], 3u);
  EXPECT_EQ(rep.coordinate_first_accept[1], 1u);
  EXPECT_TRUE(rep.all_coordinates_covered());
}

TEST(ToyFamily, EveryReplicaCoversAllCoordinates) {
  auto toy = make_toy_family({});
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng = derive_stream(37, r);
    const auto trace =
        run_transdim(toy.target, toy.R, toy.maps, toy.a, toy.within, {3, Point{0.0, 0.0, 0.0}}, 10000, rng);
    const auto rep = theorem_hypothesis_monitor(trace);
    ASSERT_FALSE(rep.no_within_move_accepted()) << "replica " << r;
    ASSERT_TRUE(rep.all_coordinates_covered()) << "replica " << r;
  }
}

TEST(ToyFamily, ModelMarginalMatchesProbabilities) {
  auto toy = make_toy_family({});
  RngStream rng(41, 0);
  const std::uint64_t n = 1'000'000;
  TransDimState s{3, Point{0.0, 0.0, 0.0}};
  std::array<std::uint64_t, 4> count{};
  for (std::uint64_t k = 0; k < n; ++k) {
    s = transdim_step(toy.target, toy.R, toy.maps, toy.a, toy.within, s, rng).state;
    ++count[s.model];
  }
  const std::array<double, 4> p{0.0, 0.5, 0.3, 0.2};
  for (std::size_t m = 1; m <= 3; ++m) EXPECT_NEAR(static_cast<double>(count[m]) / n, p[m], 0.02) << "model " << m;
}

TEST(ToyFamily, FormatsModelThenCoordinates) {
  EXPECT_EQ(format_coords(TransDimState{2, Point{0.5, -1.0}}), "2;0.5;-1");
}
