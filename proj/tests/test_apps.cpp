// Copyright 2026 The HandleForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>

#include <fstream>

#include "handleforge/apps/latent.hpp"
#include "support.hpp"
#include "toy_model.hpp"

using namespace hf;
using namespace hf::apps;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_argument;
}

double distance(const LatentCode& a, const LatentCode& b) { return (a.values - b.values).norm(); }

const Model& model() { return hf::testing::toy_model(); }
const std::vector<HandleSet>& shapes() { return hf::testing::toy_shapes(); }

}  // namespace

TEST(Apps, InterpolationEndpointsAndRange) {
  const LatentCode z1 = net::encode(model(), shapes()[0]), z2 = net::encode(model(), shapes()[1]);
  const auto frames = interpolate(model(), z1, z2, 7);
  ASSERT_EQ(frames.size(), 7u);
  EXPECT_EQ(frames.front().alpha, 1.0);
  EXPECT_EQ(frames.back().alpha, 0.0);
  EXPECT_EQ(data::handle_set_to_string(frames.front().handles), data::handle_set_to_string(net::decode(model(), z1)));
  EXPECT_EQ(data::handle_set_to_string(frames.back().handles), data::handle_set_to_string(net::decode(model(), z2)));
  for (size_t i = 0; i < frames.size(); ++i) {
    EXPECT_NEAR(frames[i].alpha, 1.0 - i / 6.0, 1e-15);
    const HandleSet& s = frames[i].handles;
    ASSERT_TRUE(s.existence.has_value());
    for (double e : *s.existence) {
      EXPECT_GT(e, 0.0);
      EXPECT_LT(e, 1.0);
    }
    for (const auto& h : s.handles) EXPECT_TRUE([&] { for (double v : params_of(h)) if (!std::isfinite(v)) return false; return true; }());
  }
  EXPECT_EQ(kind_of([&] { interpolate(model(), z1, z2, 1); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { interpolate(model(), z1, LatentCode{Eigen::VectorXd::Zero(3)}, 3); }), ErrorKind::width_mismatch);
}

TEST(Apps, CompletionReachesADecodableTarget) {
  double best = 0.0, random = 0.0;
  for (int i = 0; i < 8; ++i) {
    const HandleSet target = net::decode(model(), net::encode(model(), shapes()[static_cast<size_t>(i)])).thresholded();
    ASSERT_FALSE(target.empty());
    const auto proposals = complete(model(), target);
    ASSERT_EQ(proposals.size(), 8u);
    for (size_t k = 1; k < proposals.size(); ++k) {
      EXPECT_LE(proposals[k - 1].result.objective, proposals[k].result.objective);
      for (size_t j = 0; j < k; ++j) EXPECT_GT(distance(proposals[k].result.z, proposals[j].result.z), 0.0);
    }
    const LatentResult& top = proposals.front().result;
    EXPECT_NEAR(top.coverage, coverage_C(top.handles, target), 1e-9);
    best += top.coverage;
    for (int r = 0; r < 8; ++r) random += coverage_C(net::decode(model(), completion_start(model(), 99, r)), target) / 8;
  }
  EXPECT_LT(best, 0.1 * random);
}

TEST(Apps, CompletionIsDeterministicAndNeverWorsensAStart) {
  const HandleSet target = net::decode(model(), net::encode(model(), shapes()[2])).thresholded();
  OptimizationConfig cfg;
  cfg.steps = 100;
  cfg.restarts = 3;
  const auto a = complete(model(), target, cfg), b = complete(model(), target, cfg);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].result.z.values, b[i].result.z.values);

  const LatentCode z0 = net::encode(model(), shapes()[2]);
  const auto anchored = complete(model(), target, cfg, z0);
  EXPECT_LE(anchored.front().result.objective, coverage_C(net::decode(model(), z0), target) + 1e-9);
}

TEST(Apps, CompletionPenaltyShrinksExpectedCount) {
  hf::testing::Rng rng(5);
  double counts[3] = {0, 0, 0};
  const double gammas[3] = {0.0, 0.1, 1.0};
  for (int trial = 0; trial < 5; ++trial) {
    HandleSet partial = shapes()[static_cast<size_t>(10 + trial)];
    partial.handles.resize(static_cast<size_t>((partial.size() + 1) / 2));
    for (int g = 0; g < 3; ++g) {
      OptimizationConfig cfg;
      cfg.steps = 150;
      cfg.restarts = 2;
      cfg.gamma = gammas[g];
      cfg.seed = static_cast<std::uint64_t>(trial);
      counts[g] += expected_count(complete(model(), partial, cfg).front().result.handles);
    }
  }
  EXPECT_GE(counts[0], counts[1]);
  EXPECT_GE(counts[1], counts[2]);
}

TEST(Apps, OptimizationTrace) {
  const HandleSet target = shapes()[4];
  OptimizationConfig cfg;
  cfg.steps = 200;
  const LatentCode start = completion_start(model(), 1, 0);
  const LatentResult r = optimize_latent(model(), start, target, 0.0, Penalty::expected_count, cfg);
  ASSERT_EQ(r.trace.size(), 200u);
  EXPECT_LE(r.objective, r.trace.front());
  // Windowed averages after the Adam transient never rise.
  const auto window = [&](size_t at) {
    double s = 0;
    for (size_t i = at; i < at + 20; ++i) s += r.trace[i];
    return s / 20;
  };
  for (size_t at = 10; at + 40 <= r.trace.size(); at += 20) EXPECT_LE(window(at + 20), window(at) * (1 + 1e-9));

  EXPECT_EQ(kind_of([&] { optimize_latent(model(), LatentCode{Eigen::VectorXd::Zero(5)}, target, 0, Penalty::expected_count, cfg); }),
            ErrorKind::width_mismatch);
  EXPECT_EQ(kind_of([&] { optimize_latent(model(), start, target, 0, Penalty::deviation, cfg); }), ErrorKind::invalid_argument);
  HandleSet spheres{HandleType::sphere_triangle, {SphereTriangle{}}, std::nullopt};
  std::get<SphereTriangle>(spheres.handles[0]).radii = {0.1, 0.1, 0.1};
  EXPECT_EQ(kind_of([&] { optimize_latent(model(), start, spheres, 0, Penalty::expected_count, cfg); }), ErrorKind::variant_mismatch);
  OptimizationConfig bad = cfg;
  bad.gamma = -1;
  EXPECT_EQ(kind_of([&] { complete(model(), target, bad); }), ErrorKind::invalid_argument);
  bad = cfg;
  bad.restarts = 0;
  EXPECT_EQ(kind_of([&] { complete(model(), target, bad); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { complete(model(), HandleSet{}, cfg); }), ErrorKind::empty_set);
}

// z_A is the exact optimum when the deviation kink (slope gamma) is steeper
// than the coverage slope there. That holds when the decoded handles that
// survive thresholding exist with probability near one; an uncertain handle
// leaves coverage to gain by raising its existence. The optimizer never
// returns a worse objective than the start.
TEST(Apps, EditFixedPoint) {
  int confident = 0;
  for (int i = 0; i < 10; ++i) {
    const LatentCode z_a = net::encode(model(), shapes()[static_cast<size_t>(i)]);
    const HandleSet a = net::decode(model(), z_a);
    const double start = coverage_C(a, a.thresholded());
    for (double gamma : {0.0, 0.1, 1.0}) {
      OptimizationConfig cfg;
      cfg.gamma = gamma;
      // The deviation norm is smoothed by 1e-6 at zero.
      EXPECT_LE(edit(model(), z_a, a, cfg).objective, start + gamma * 1e-6 + 1e-9);
    }
    double lowest = 1.0;
    for (double e : *a.existence)
      if (e >= 0.5) lowest = std::min(lowest, e);
    if (lowest < 0.999) continue;
    ++confident;
    for (double gamma : {0.1, 1.0, 1e6}) {
      OptimizationConfig cfg;
      cfg.gamma = gamma;
      EXPECT_LT(distance(edit(model(), z_a, a, cfg).z, z_a), 1e-3) << "shape " << i << " gamma " << gamma;
    }
  }
  EXPECT_GE(confident, 3);
}

TEST(Apps, EditPenaltyDominance) {
  const LatentCode z_a = net::encode(model(), shapes()[5]);
  const HandleSet other = shapes()[6];
  OptimizationConfig cfg;
  cfg.gamma = 1e6;
  EXPECT_LT(distance(edit(model(), z_a, other, cfg).z, z_a), 1e-3);
  cfg.gamma = 0.0;
  const LatentResult free = edit(model(), z_a, other, cfg);
  EXPECT_GT(distance(free.z, z_a), 1e-3);
  EXPECT_LE(free.objective, free.trace.front());

  LatentCode bad = z_a;
  bad.values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { edit(model(), bad, other, cfg); }), ErrorKind::non_finite);
  EXPECT_EQ(kind_of([&] { edit(model(), z_a, HandleSet{}, cfg); }), ErrorKind::empty_set);
}

TEST(ExpectedCount, SumsExistence) {
  HandleSet s{HandleType::cuboid, {Cuboid{}, Cuboid{}, Cuboid{}}, std::nullopt};
  EXPECT_EQ(expected_count(s), 3.0);
  s.existence = std::vector<double>{0.25, 0.5, 0.125};
  EXPECT_EQ(expected_count(s), 0.875);
}

TEST(LatentFile, RoundTripAndErrors) {
  hf::testing::TempDir dir("latent");
  hf::testing::Rng rng(6);
  LatentCode z{Eigen::VectorXd(64)};
  for (Eigen::Index i = 0; i < z.size(); ++i) z.values[i] = hf::testing::uniform(rng, -1e3, 1e3) * std::pow(10.0, i % 7 - 3);
  save_latent(dir / "z.txt", z);
  EXPECT_EQ(load_latent(dir / "z.txt").values, z.values);

  const auto write = [&](const std::string& text) {
    std::ofstream(dir / "bad.txt") << text;
    return dir / "bad.txt";
  };
  EXPECT_EQ(load_latent(write("# comment\n1\n\n2.5\n")).size(), 2);
  EXPECT_EQ(kind_of([&] { load_latent(write("1\nabc\n")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([&] { load_latent(write("1 2\n")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([&] { load_latent(write("inf\n")); }), ErrorKind::non_finite);
  EXPECT_EQ(kind_of([&] { load_latent(write("")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([&] { load_latent(dir / "missing.txt"); }), ErrorKind::io);
}
