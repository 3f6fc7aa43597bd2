#include <gtest/gtest.h>

#include <random>
#include <set>

#include "obsim/scenario.hpp"
#include "obsim/vrpipe.hpp"
#include "oracles.hpp"

using namespace obsim;

TEST(FlatIndex, Examples) {
  EXPECT_EQ(flat_index(1, 1, 64, 64), 1);
  EXPECT_EQ(flat_index(1, 64, 64, 64), 64);
  EXPECT_EQ(flat_index(2, 1, 64, 64), 65);
  EXPECT_EQ(flat_index(64, 64, 64, 64), 4096);
  EXPECT_EQ(flat_index(3, 2, 4, 5), 12);
  EXPECT_EQ(cell_of(12, 4, 5), (CellIndex{3, 2}));
}

TEST(FlatIndex, OutOfRangeThrows) {
  EXPECT_THROW(flat_index(0, 1, 64, 64), DomainError);
  EXPECT_THROW(flat_index(1, 65, 64, 64), DomainError);
  EXPECT_THROW(flat_index(1, 1, 0, 64), DomainError);
  EXPECT_THROW(cell_of(0, 64, 64), DomainError);
  EXPECT_THROW(cell_of(4097, 64, 64), DomainError);
}

TEST(FlatIndex, BijectionOnFullGrid) {
  for (auto [R, C] : {std::pair{64, 64}, std::pair{7, 3}, std::pair{1, 9}}) {
    std::set<std::int64_t> seen;
    for (int r = 1; r <= R; ++r) {
      for (int c = 1; c <= C; ++c) {
        const auto i = flat_index(r, c, R, C);
        ASSERT_GE(i, 1);
        ASSERT_LE(i, static_cast<std::int64_t>(R) * C);
        ASSERT_TRUE(seen.insert(i).second);
        ASSERT_EQ(cell_of(i, R, C), (CellIndex{r, c}));
      }
    }
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(R * C));
  }
}

TEST(RegisterMatrix, BitWidth) {
  RegisterMatrix regs(2, 2, 8);
  EXPECT_EQ(regs.max_value(), 255u);
  regs.set(1, 2, 255);
  EXPECT_EQ(regs.get(1, 2), 255u);
  EXPECT_THROW(regs.set(1, 1, 256), DomainError);
  EXPECT_THROW(regs.get(3, 1), DomainError);
  EXPECT_THROW(RegisterMatrix(0, 2), ConfigError);
  EXPECT_THROW(RegisterMatrix(2, 2, 33), ConfigError);
}

TEST(PixelOf, CenterAndEdges) {
  const RenderGrid grid;
  EXPECT_EQ(pixel_of(grid, 0.0, 0.0), (CellIndex{33, 33}));
  EXPECT_EQ(pixel_of(grid, -1.2, 1.2), (CellIndex{1, 1}));
  EXPECT_EQ(pixel_of(grid, 1.0, 0.0), (CellIndex{33, 59}));
  EXPECT_FALSE(pixel_of(grid, 1.2, 0.0));
  EXPECT_FALSE(pixel_of(grid, 0.0, -1.2));
  EXPECT_FALSE(pixel_of(grid, 5.0, 5.0));
}

TEST(Render, MarksBodiesAndMatchesRegisters) {
  const Scenario sc = sem::make();
  RenderGrid grid;
  RegisterMatrix regs(64, 64);
  const PixelFrame frame = render(sc.system, sc.init.q, 0.0, grid, regs);
  EXPECT_EQ(frame.at(33, 33), 255u);  // Sun
  EXPECT_EQ(frame.at(33, 59), 170u);  // Earth
  EXPECT_EQ(frame.at(33, 61), 85u);   // Moon
  int marked = 0;
  for (auto v : frame.values) marked += v != 0;
  EXPECT_EQ(marked, 3);
  EXPECT_EQ(checksum(frame), checksum(regs, 64, 64));
}

TEST(Render, SharedCellKeepsBrightestMark) {
  const Scenario sc = sem::make();
  VectorXd q(6);
  q << 0.5, 0.5, 0, 0.501, 0.501, 0;
  RegisterMatrix regs(64, 64);
  const PixelFrame frame = render(sc.system, q, 0.0, RenderGrid{}, regs);
  const CellIndex cell = *pixel_of(RenderGrid{}, 0.5, 0.5);
  EXPECT_EQ(frame.at(cell.r, cell.c), 170u);
}

TEST(Render, EmptyWindowGivesBlankFrame) {
  const Scenario sc = sem::make();
  RenderGrid grid;
  grid.xmin = 10;
  grid.xmax = 11;
  RegisterMatrix regs(64, 64);
  const PixelFrame frame = render(sc.system, sc.init.q, 0.0, grid, regs);
  for (auto v : frame.values) ASSERT_EQ(v, 0u);
}

TEST(Render, IdentityLawOverRandomStates) {
  const Scenario sc = sem::make();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  RenderGrid grid;
  grid.R = 48;
  grid.C = 64;
  RegisterMatrix regs(48, 64);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd q(6);
    for (int i = 0; i < 6; ++i) q[i] = pos(rng);
    const PixelFrame frame = render(sc.system, q, 0.0, grid, regs);
    for (int r = 1; r <= grid.R; ++r) {
      for (int c = 1; c <= grid.C; ++c) ASSERT_EQ(frame.at(r, c), regs.get(r, c));
    }
  }
}

TEST(Render, LeavesRegistersOutsideTheFrameAlone) {
  const Scenario sc = sem::make();
  RegisterMatrix regs(80, 80);
  for (int r = 1; r <= 80; ++r) {
    for (int c = 1; c <= 80; ++c) regs.set(r, c, 7);
  }
  render(sc.system, sc.init.q, 0.0, RenderGrid{}, regs);
  for (int r = 1; r <= 80; ++r) {
    for (int c = 1; c <= 80; ++c) {
      if (r > 64 || c > 64) {
        ASSERT_EQ(regs.get(r, c), 7u);
      }
    }
  }
}

TEST(Render, ConsecutiveFramesDifferOnlyWhereBodiesMoved) {
  const Scenario sc = sem::make();
  const Trajectory traj = simulate(sc.system, sc.init, 0.5, sem::kStep);
  RenderGrid grid;
  RegisterMatrix regs(64, 64);
  PixelFrame prev = render(sc.system, traj.samples[0].q, 0.0, grid, regs);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const PixelFrame next = render(sc.system, traj.samples[k].q, traj.samples[k].t, grid, regs);
    for (std::size_t i = 0; i < next.values.size(); ++i) {
      if (next.values[i] != prev.values[i]) {
        ASSERT_TRUE(next.values[i] != 0 || prev.values[i] != 0);
      }
    }
    prev = next;
  }
}

TEST(Render, RejectsMismatchedInputs) {
  const Scenario sc = sem::make();
  RegisterMatrix small(10, 10);
  EXPECT_THROW(render(sc.system, sc.init.q, 0.0, RenderGrid{}, small), ConfigError);
  RegisterMatrix regs(64, 64);
  EXPECT_THROW(render(sc.system, VectorXd::Zero(3), 0.0, RenderGrid{}, regs), ConfigError);
}

TEST(Controller, TriggerScalesForwardImpulse) {
  ControllerState ctrl;
  ctrl.trigger = 0.0;
  const auto zero = controller_to_force(ctrl, 2.0, std::string("Moon"), 1.5);
  EXPECT_EQ(std::get<Impulse>(zero.kind).dp, Vector3d::Zero());
  ctrl.trigger = 1.0;
  const auto full = controller_to_force(ctrl, 2.0, std::string("Moon"), 1.5);
  EXPECT_EQ(full.target, "Moon");
  EXPECT_TRUE(std::get<Impulse>(full.kind).dp.isApprox(Vector3d(2, 0, 0)));
  EXPECT_DOUBLE_EQ(std::get<Impulse>(full.kind).time, 1.5);
  ctrl.orientation.z() = oracle::kPi;
  const Vector3d back = std::get<Impulse>(controller_to_force(ctrl, 2.0, std::string("Moon"), 0).kind).dp;
  EXPECT_NEAR(back.x(), -2.0, 1e-12);
  ctrl.orientation = Vector3d(0, 0, oracle::kPi / 2);
  EXPECT_TRUE(controller_forward(ctrl).isApprox(Vector3d::UnitY()));
}

TEST(Controller, Validation) {
  ControllerState ctrl;
  ctrl.trigger = 0.5;
  EXPECT_THROW(controller_to_force(ctrl, 1.0, std::nullopt, 0), ConfigError);
  ctrl.trigger = 1.5;
  EXPECT_THROW(controller_to_force(ctrl, 1.0, std::string("Moon"), 0), ConfigError);
  ctrl.trigger = 0.5;
  EXPECT_THROW(controller_to_force(ctrl, -1.0, std::string("Moon"), 0), ConfigError);
}

TEST(Pgm, GoldenBytes) {
  PixelFrame frame{1, 2, 0.0, {0, 255}};
  EXPECT_EQ(encode_pgm(frame), std::string("P5\n2 1\n255\n\x00\xff", 13));
}

TEST(Pgm, RoundTrip) {
  std::mt19937_64 rng(3);
  for (auto [R, C] : {std::pair{1, 1}, std::pair{64, 64}, std::pair{5, 17}}) {
    PixelFrame frame{R, C, 0.0, {}};
    for (int i = 0; i < R * C; ++i) frame.values.push_back(static_cast<std::uint32_t>(rng() % 256));
    EXPECT_EQ(decode_pgm(encode_pgm(frame)), frame);
  }
}

TEST(Pgm, Errors) {
  EXPECT_THROW(encode_pgm(PixelFrame{1, 1, 0.0, {256}}), DomainError);
  EXPECT_THROW(encode_pgm(PixelFrame{2, 2, 0.0, {1}}), DomainError);
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), DomainError);
  EXPECT_THROW(decode_pgm(std::string("P5\n2 2\n255\n\x01", 12)), DomainError);
  EXPECT_THROW(decode_pgm("P5\n1 1\n65535\n\x01\x02"), DomainError);
}
