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

#include <cstdlib>
#include <set>

#include "handleforge/data/adaptive.hpp"
#include "handleforge/data/fit.hpp"
#include "handleforge/data/io.hpp"
#include "handleforge/data/sampling.hpp"
#include "handleforge/data/synthetic.hpp"
#include "support.hpp"

using namespace hf;
using namespace hf::data;

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

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

// Dense samples on the surface of an oriented box.
PointCloud box_samples(const Cuboid& c, int n, hf::testing::Rng& rng) {
  return sample_points_on_handles(HandleSet{HandleType::cuboid, {c}, std::nullopt}, n, rng);
}

bool near(const Vec3d& a, const Vec3d& b, double tol) { return norm(a - b) <= tol; }

}  // namespace

// ---------------------------------------------------------------------------
// Handle-set files

TEST(HandleSetFile, RoundTripIsBitExact) {
  hf::testing::TempDir dir("io");
  hf::testing::Rng rng(1);
  HandleSet cubes = hf::testing::random_cuboid_set(rng, 5);
  cubes.existence = hf::testing::random_existence(rng, 5);
  HandleSet spheres{HandleType::sphere_triangle, {}, std::nullopt};
  for (int i = 0; i < 3; ++i) spheres.handles.push_back(hf::testing::random_sphere_triangle(rng));
  for (const HandleSet& s : {cubes, spheres}) {
    save_handle_set(dir / "s.json", s);
    const HandleSet back = load_handle_set(dir / "s.json");
    ASSERT_EQ(back.size(), s.size());
    EXPECT_EQ(back.type, s.type);
    EXPECT_EQ(back.existence, s.existence);
    for (int i = 0; i < s.size(); ++i) EXPECT_EQ(params_of(back.handles[i]), params_of(s.handles[i]));
    EXPECT_EQ(handle_set_to_string(back), handle_set_to_string(s));
  }
}

TEST(HandleSetFile, JsonObjectRoundTrip) {
  hf::testing::Rng rng(2);
  const HandleSet s = hf::testing::random_cuboid_set(rng, 3);
  EXPECT_EQ(handle_set_to_string(handle_set_from_json(handle_set_to_json(s))), handle_set_to_string(s));
}

TEST(HandleSetFile, Diagnostics) {
  const std::string unknown = R"({"handle_type": "cylinder", "handles": []})";
  EXPECT_EQ(kind_of([&] { parse_handle_set(unknown); }), ErrorKind::parse);
  EXPECT_NE(message_of([&] { parse_handle_set(unknown); }).find("handle_type"), std::string::npos);

  const std::string malformed = "{\n  \"handle_type\": \"cuboid\",\n  \"handles\": [1, 2,\n}";
  const std::string msg = message_of([&] { parse_handle_set(malformed, "bad.json"); });
  EXPECT_NE(msg.find("bad.json:4:"), std::string::npos) << msg;

  const std::string short_row = R"({"handle_type": "cuboid", "handles": [[0,0,0, 1,1,1, 1,0,0, 0,1]]})";
  EXPECT_NE(message_of([&] { parse_handle_set(short_row); }).find("handles[0]"), std::string::npos);

  const std::string text_value = R"({"handle_type": "cuboid", "handles": [[0,0,0, 1,1,"x", 1,0,0, 0,1,0]]})";
  EXPECT_NE(message_of([&] { parse_handle_set(text_value); }).find("handles[0][5]"), std::string::npos);

  const std::string overflow = R"({"handle_type": "cuboid", "handles": [[0,0,0, 1,1,1e999, 1,0,0, 0,1,0]]})";
  EXPECT_THROW(parse_handle_set(overflow), Error);

  const std::string degenerate = R"({"handle_type": "cuboid", "handles": [[0,0,0, 1,1,1, 1,0,0, 2,0,0]]})";
  EXPECT_EQ(kind_of([&] { parse_handle_set(degenerate); }), ErrorKind::degenerate_rotation);

  EXPECT_EQ(kind_of([] { load_handle_set("/nonexistent/set.json"); }), ErrorKind::io);
}

// ---------------------------------------------------------------------------
// OBJ

TEST(Obj, ParseAndDiagnostics) {
  const TriangleMesh m = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -3 -2\n");
  EXPECT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.triangles.size(), 3u);
  EXPECT_EQ(m.triangles[1], (std::array<int, 3>{0, 2, 3}));
  EXPECT_EQ(m.triangles[2], (std::array<int, 3>{0, 1, 2}));
  EXPECT_NE(message_of([] { parse_obj("v 0 0 0\nf 1 2 3\n", "m.obj"); }).find("m.obj:2:"), std::string::npos);
  EXPECT_THROW(parse_obj("v 0 nan 0\n"), Error);
  EXPECT_EQ(kind_of([] { parse_obj("v 0 0\n"); }), ErrorKind::parse);
}

TEST(Obj, ExportedUnitCuboid) {
  const HandleSet unit{HandleType::cuboid, {Cuboid{{0, 0, 0}, {1, 1, 1}, {}}}, std::nullopt};
  const TriangleMesh m = handles_to_mesh(unit);
  EXPECT_EQ(m.vertices.size(), 8u);
  EXPECT_EQ(m.triangles.size(), 12u);
  double area = 0;
  for (const auto& t : m.triangles) area += triangle_area(m, t);
  EXPECT_NEAR(area, 24.0, 1e-12);
  // Outward winding: the signed volume is positive.
  double volume = 0;
  for (const auto& t : m.triangles) {
    const Vec3d a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
    volume += dot(a, cross(b, c)) / 6.0;
  }
  EXPECT_NEAR(volume, 8.0, 1e-12);

  hf::testing::TempDir dir("obj");
  export_obj(dir / "unit.obj", unit);
  const TriangleMesh back = load_obj(dir / "unit.obj");
  EXPECT_EQ(back.vertices.size(), 8u);
  EXPECT_EQ(back.triangles, m.triangles);
}

TEST(Obj, ExportRespectsExistenceAndSpheres) {
  HandleSet s{HandleType::cuboid, {Cuboid{}, Cuboid{{1, 0, 0}, {1, 1, 1}, {}}}, std::vector<double>{0.2, 0.9}};
  EXPECT_EQ(handles_to_mesh(s).triangles.size(), 12u);
  SphereTriangle t;
  t.centers = {Vec3d{0, 0, 0}, Vec3d{0, 0, 0}, Vec3d{1, 0, 0}};
  t.radii = {0.5, 0.5, 0.2};
  const TriangleMesh spheres = handles_to_mesh(HandleSet{HandleType::sphere_triangle, {t}, std::nullopt});
  EXPECT_EQ(spheres.vertices.size(), 2u * 42u);
  EXPECT_EQ(spheres.triangles.size(), 2u * 80u);
  for (size_t i = 0; i < 42; ++i) EXPECT_NEAR(norm(spheres.vertices[i]), 0.5, 1e-12);
}

// ---------------------------------------------------------------------------
// Point files and manifests

TEST(PointFiles, RoundTripAndErrors) {
  hf::testing::TempDir dir("pts");
  hf::testing::Rng rng(3);
  PointCloud pts;
  for (int i = 0; i < 50; ++i) pts.push_back(hf::testing::uniform_vec(rng, -1, 1));
  save_points(dir / "a.xyz", pts);
  EXPECT_EQ(load_points(dir / "a.xyz"), pts);
  EXPECT_EQ(parse_points("# c\nv 1 2 3\n4 5 6\n").size(), 2u);
  EXPECT_EQ(kind_of([] { parse_points("1 2\n"); }), ErrorKind::parse);
  EXPECT_THROW(parse_points("1 inf 2\n"), Error);
  EXPECT_THROW(parse_points("nan 1 2\n"), Error);

  const SegmentedShape shape = parse_labelled_points("7 0 0 0\n2 1 1 1\n7 1 0 0\n");
  ASSERT_EQ(shape.parts.size(), 2u);
  EXPECT_EQ(shape.parts[0].size(), 1u);  // label 2 first
  EXPECT_EQ(shape.parts[1].size(), 2u);
  EXPECT_EQ(kind_of([] { parse_labelled_points("a 0 0 0\n"); }), ErrorKind::parse);
}

TEST(Manifest, RoundTrip) {
  hf::testing::TempDir dir("manifest");
  DatasetManifest m;
  m.type = HandleType::sphere_triangle;
  m.entries.push_back({"a", "meshes/a.obj", "sets/a.json", NormalizationRecord{{-1, 2, 0.5}, 0.25}});
  m.entries.push_back({"b", "meshes/b.obj", "sets/b.json", std::nullopt});
  save_manifest(dir / "manifest.txt", m);
  const DatasetManifest back = load_manifest(dir / "manifest.txt");
  EXPECT_EQ(back.type, HandleType::sphere_triangle);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].handle_set_path, "sets/a.json");
  ASSERT_TRUE(back.entries[0].normalization.has_value());
  EXPECT_EQ(back.entries[0].normalization->scale, 0.25);
  EXPECT_FALSE(back.entries[1].normalization.has_value());
  EXPECT_EQ(back.root, dir.path());
  data::detail::write_file(dir / "bad.txt", "a b c\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "bad.txt"); }), ErrorKind::parse);
}

// ---------------------------------------------------------------------------
// Fitting

// PCA on 10K surface samples tilts the axes by up to ~0.02 rad, so errors
// are measured against the box diagonal.
TEST(Fit, RecoversSampledBox) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    hf::testing::Rng rng(seed);
    const Cuboid truth{{0.3, -0.2, 0.1}, {0.5, 0.3, 0.1}, {}};
    const double tol = 0.02 * 2.0 * norm(truth.half_extents);
    const Cuboid fit = fit_cuboid_pca(box_samples(truth, 10000, rng));
    EXPECT_TRUE(near(fit.center, truth.center, tol));
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(fit.half_extents[a], truth.half_extents[a], tol);
    EXPECT_LT(handle_similarity(fit, truth), 0.01);
  }
}

TEST(Fit, DegenerateParts) {
  const Cuboid point = fit_cuboid_pca({Vec3d{1, 2, 3}});
  EXPECT_EQ(point.center, (Vec3d{1, 2, 3}));
  EXPECT_EQ(point.half_extents, (Vec3d{0, 0, 0}));
  rotation_from_pair(point.rotation);  // still a valid frame

  hf::testing::Rng rng(5);
  PointCloud plane;
  for (int i = 0; i < 2000; ++i) plane.push_back({hf::testing::uniform(rng, -0.4, 0.4), 0.2, hf::testing::uniform(rng, -0.2, 0.2)});
  const Cuboid flat = fit_cuboid_pca(plane);
  EXPECT_NEAR(flat.half_extents.x, 0.4, 0.01);
  EXPECT_NEAR(flat.half_extents.y, 0.2, 0.01);
  EXPECT_LT(flat.half_extents.z, 1e-12);
  EXPECT_THROW(fit_cuboid_pca({}), Error);
}

TEST(Fit, RotationEquivariant) {
  hf::testing::Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Cuboid axis_aligned{{0, 0, 0}, {0.5, 0.25, 0.1}, {}};
    const PointCloud pts = box_samples(axis_aligned, 4000, rng);
    const Mat3d r = rotation_from_pair(hf::testing::random_pair(rng));
    const Vec3d shift = hf::testing::uniform_vec(rng, -0.3, 0.3);
    PointCloud moved;
    for (const auto& p : pts) moved.push_back(r * p + shift);
    const Cuboid a = fit_cuboid_pca(pts), b = fit_cuboid_pca(moved);
    Cuboid expected = a;
    expected.center = r * a.center + shift;
    const Mat3d ra = rotation_from_pair(a.rotation);
    expected.rotation = {r * ra.col[0], r * ra.col[1]};
    EXPECT_LT(handle_similarity(b, expected), 1e-9);
  }
}

TEST(Fit, SignCanonicalization) {
  hf::testing::Rng rng(7);
  const Cuboid fit = fit_cuboid_pca(box_samples(Cuboid{{0, 0, 0}, {0.6, 0.3, 0.1}, {}}, 3000, rng));
  const Mat3d r = rotation_from_pair(fit.rotation);
  for (int c = 0; c < 2; ++c) {
    int arg = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(r.col[c][k]) > std::abs(r.col[c][arg])) arg = k;
    EXPECT_GT(r.col[c][arg], 0.0);
  }
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Fit, TopByVolume) {
  std::vector<Cuboid> cubes;
  for (int i = 0; i < 18; ++i) cubes.push_back(Cuboid{{0, 0, 0}, {0.1 + 0.01 * i, 0.1, 0.1}, {}});
  EXPECT_EQ(select_top_by_volume(cubes).size(), 18);
  for (int i = 18; i < 35; ++i) cubes.push_back(Cuboid{{0, 0, 0}, {0.1 + 0.01 * i, 0.1, 0.1}, {}});
  const HandleSet top = select_top_by_volume(cubes);
  ASSERT_EQ(top.size(), 30);
  EXPECT_DOUBLE_EQ(std::get<Cuboid>(top.handles.front()).half_extents.x, 0.1 + 0.01 * 34);
  EXPECT_DOUBLE_EQ(std::get<Cuboid>(top.handles.back()).half_extents.x, 0.1 + 0.01 * 5);

  // Ties at the cutoff keep the lower original index.
  std::vector<Cuboid> ties(3, Cuboid{{0, 0, 0}, {0.2, 0.2, 0.2}, {}});
  for (int i = 0; i < 3; ++i) ties[i].center.x = i;
  const HandleSet two = select_top_by_volume(ties, 2);
  EXPECT_EQ(std::get<Cuboid>(two.handles[0]).center.x, 0.0);
  EXPECT_EQ(std::get<Cuboid>(two.handles[1]).center.x, 1.0);
}

// ---------------------------------------------------------------------------
// Normalization

TEST(Normalize, PointClouds) {
  hf::testing::Rng rng(8);
  PointCloud unit;
  for (int i = 0; i < 100; ++i) {
    const Vec3d d = hf::testing::uniform_vec(rng, -1, 1);
    unit.push_back(d / norm(d));
  }
  // Symmetrize so the centroid is exactly zero.
  const size_t n = unit.size();
  for (size_t i = 0; i < n; ++i) unit.push_back(unit[i] * -1.0);
  NormalizationRecord rec;
  normalize_to_unit_sphere(unit, &rec);
  EXPECT_NEAR(norm(rec.translation), 0.0, 1e-15);
  EXPECT_NEAR(rec.scale, 1.0, 1e-15);

  PointCloud moved;
  for (const auto& p : unit) moved.push_back(p * 2.0 + Vec3d{10, 0, 0});
  const PointCloud normalized = normalize_to_unit_sphere(moved, &rec);
  EXPECT_NEAR(rec.translation.x, -10.0, 1e-12);
  EXPECT_NEAR(rec.scale, 0.5, 1e-12);
  double max_norm = 0;
  for (const auto& p : normalized) max_norm = std::max(max_norm, norm(p));
  EXPECT_NEAR(max_norm, 1.0, 1e-12);
  const PointCloud back = denormalize(normalized, rec);
  for (size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(near(back[i], moved[i], 1e-12));
  EXPECT_THROW(normalize_to_unit_sphere(PointCloud{{1, 1, 1}, {1, 1, 1}}), Error);
  EXPECT_THROW(normalize_to_unit_sphere(PointCloud{}), Error);
}

TEST(Normalize, HandleSetsTransformCovariantly) {
  hf::testing::Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    HandleSet s = hf::testing::random_cuboid_set(rng, 4);
    for (auto& h : s.handles) std::get<Cuboid>(h).center += Vec3d{3, -2, 5};
    NormalizationRecord rec;
    const HandleSet n = normalize_to_unit_sphere(s, &rec);
    double extent = 0;
    for (const auto& h : n.handles) extent = std::max(extent, data::detail::handle_extent(h, {0, 0, 0}));
    EXPECT_LE(extent, 1.0 + 1e-12);
    const HandleSet back = denormalize(n, rec);
    for (int i = 0; i < s.size(); ++i) {
      const HandleParams a = params_of(s.handles[i]), b = params_of(back.handles[i]);
      for (int k = 0; k < kHandleDim; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
    // Rotations are untouched.
    EXPECT_EQ(std::get<Cuboid>(n.handles[0]).rotation.r1, std::get<Cuboid>(s.handles[0]).rotation.r1);
  }
  SphereTriangle st;
  st.centers = {Vec3d{2, 0, 0}, Vec3d{4, 0, 0}, Vec3d{3, 1, 0}};
  st.radii = {0.5, 0.5, 1.0};
  NormalizationRecord rec;
  const HandleSet n = normalize_to_unit_sphere(HandleSet{HandleType::sphere_triangle, {st}, std::nullopt}, &rec);
  const auto& nt = std::get<SphereTriangle>(n.handles[0]);
  EXPECT_NEAR(nt.radii[2], rec.scale, 1e-15);
}

// ---------------------------------------------------------------------------
// Sampling and Hausdorff

TEST(Sampling, UnitCuboidFaceFractions) {
  hf::testing::Rng rng(10);
  const PointCloud pts = box_samples(Cuboid{{0, 0, 0}, {1, 1, 1}, {}}, 200000, rng);
  int faces[6] = {0, 0, 0, 0, 0, 0};
  for (const auto& p : pts) {
    for (int a = 0; a < 3; ++a) {
      if (p[a] == 1.0) ++faces[2 * a + 1];
      if (p[a] == -1.0) ++faces[2 * a];
    }
  }
  for (int f = 0; f < 6; ++f) EXPECT_NEAR(faces[f] / 200000.0, 1.0 / 6.0, 0.02 / 6.0);
}

TEST(Sampling, SpheresAndDeterminism) {
  SphereTriangle t;
  t.centers = {Vec3d{0, 0, 0}, Vec3d{0, 0, 0}, Vec3d{0, 0, 0}};
  t.radii = {0.3, 0.3, 0.3};
  const HandleSet s{HandleType::sphere_triangle, {t}, std::nullopt};
  hf::testing::Rng a(11), b(11);
  const PointCloud pa = sample_points_on_handles(s, 500, a), pb = sample_points_on_handles(s, 500, b);
  EXPECT_EQ(pa, pb);
  for (const auto& p : pa) EXPECT_NEAR(norm(p), 0.3, 1e-9);
  EXPECT_THROW(sample_points_on_handles(HandleSet{}, 10, a), Error);
}

TEST(Hausdorff, ClosedForms) {
  const PointCloud a{{0, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(hausdorff(a, a), 0.0);
  EXPECT_DOUBLE_EQ(hausdorff({{0, 0, 0}}, {{0, 3, 4}}), 5.0);
  PointCloud corners;
  for (int i = 0; i < 8; ++i) corners.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  EXPECT_DOUBLE_EQ(hausdorff(corners, {{0.5, 0.5, 0.5}}), std::sqrt(3.0) / 2.0);
  hf::testing::Rng rng(12);
  PointCloud x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(hf::testing::uniform_vec(rng, -1, 1));
    y.push_back(hf::testing::uniform_vec(rng, -1, 1));
  }
  EXPECT_EQ(hausdorff(x, y), hausdorff(y, x));
  EXPECT_THROW(hausdorff({}, x), Error);
}

// ---------------------------------------------------------------------------
// Adaptive cardinality

namespace {

// 0.25 x 0.25 square: every surface point lies within 0.177 of a corner,
// while a single corner is 0.354 from the opposite one.
TriangleMesh small_square() { return parse_obj("v 0 0 0\nv 0.25 0 0\nv 0.25 0.25 0\nv 0 0.25 0\nf 1 2 3 4\n"); }

class ScriptedDecimator final : public Decimator {
 public:
  explicit ScriptedDecimator(int exact_at) : exact_at_(exact_at) {}
  HandleSet decimate(const TriangleMesh& mesh, const std::filesystem::path&, int budget) override {
    calls.push_back(budget);
    HandleSet s{HandleType::sphere_triangle, {}, std::nullopt};
    const size_t n = budget >= exact_at_ ? mesh.vertices.size() : 1;
    for (size_t i = 0; i < n; ++i) {
      SphereTriangle t;
      t.centers = {mesh.vertices[i], mesh.vertices[i], mesh.vertices[i]};
      s.handles.push_back(t);
    }
    return s;
  }
  std::vector<int> calls;

 private:
  int exact_at_;
};

struct EnvGuard {
  EnvGuard(const char* name, const std::string& value) : name_(name) { setenv(name, value.c_str(), 1); }
  ~EnvGuard() { unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST(Adaptive, LoopStopsAtFirstSatisfyingBudget) {
  const TriangleMesh mesh = small_square();
  AdaptiveConfig cfg;
  cfg.sample_count = 2000;
  ScriptedDecimator at10(10);
  AdaptiveResult r = adaptive_cardinality(mesh, "", at10, cfg);
  EXPECT_EQ(r.budget, 10);
  EXPECT_TRUE(r.satisfied);
  EXPECT_LT(r.hausdorff, 0.2);
  EXPECT_EQ(at10.calls, std::vector<int>{10});

  ScriptedDecimator at25(25);
  r = adaptive_cardinality(mesh, "", at25, cfg);
  EXPECT_EQ(r.budget, 25);
  EXPECT_EQ(at25.calls.size(), 16u);

  ScriptedDecimator never(100);
  r = adaptive_cardinality(mesh, "", never, cfg);
  EXPECT_EQ(r.budget, 40);
  EXPECT_FALSE(r.satisfied);
  EXPECT_GT(r.hausdorff, 0.2);
  EXPECT_EQ(r.set.size(), 1);

  cfg.start_vertices = 50;
  EXPECT_THROW(adaptive_cardinality(mesh, "", never, cfg), Error);
}

TEST(Adaptive, ExternalStubDecimator) {
  hf::testing::TempDir dir("adaptive");
  const TriangleMesh mesh = small_square();
  save_obj(dir / "square.obj", mesh);
  AdaptiveConfig cfg;
  cfg.sample_count = 2000;
  ExternalDecimator stub(HANDLEFORGE_STUB_DECIMATOR, dir / "work");
  {
    EnvGuard g("STUB_EXACT_AT", "10");
    const AdaptiveResult r = adaptive_cardinality(mesh, dir / "square.obj", stub, cfg);
    EXPECT_EQ(r.budget, 10);
    EXPECT_TRUE(r.satisfied);
    EXPECT_EQ(r.set.size(), 4);
  }
  {
    EnvGuard g("STUB_EXACT_AT", "40");
    const AdaptiveResult r = adaptive_cardinality(mesh, dir / "square.obj", stub, cfg);
    EXPECT_EQ(r.budget, 40);
    EXPECT_TRUE(r.satisfied);
  }
  {
    EnvGuard g("STUB_EXACT_AT", "41");
    const AdaptiveResult r = adaptive_cardinality(mesh, dir / "square.obj", stub, cfg);
    EXPECT_EQ(r.budget, 40);
    EXPECT_FALSE(r.satisfied);
  }
  {
    EnvGuard g("STUB_FAIL", "1");
    const std::string msg = message_of([&] { adaptive_cardinality(mesh, dir / "square.obj", stub, cfg); });
    EXPECT_NE(msg.find("budget 10"), std::string::npos) << msg;
    EXPECT_EQ(kind_of([&] { adaptive_cardinality(mesh, dir / "square.obj", stub, cfg); }), ErrorKind::decimator);
  }
}

// ---------------------------------------------------------------------------
// Synthetic dataset

TEST(Synthetic, ShapesAreValidSymmetricAndNormalized) {
  const auto sets = gen_synthetic_sets(500, 0);
  ASSERT_EQ(sets.size(), 500u);
  std::set<int> counts;
  for (const HandleSet& s : sets) {
    EXPECT_GE(s.size(), 4);
    EXPECT_LE(s.size(), kSyntheticMaxParts);
    counts.insert(s.size());
    s.validate();
    EXPECT_LT(mirror_asymmetry(s), 1e-9);
    double extent = 0;
    for (const auto& h : s.handles) extent = std::max(extent, data::detail::handle_extent(h, {0, 0, 0}));
    EXPECT_LE(extent, 1.0 + 1e-9);
  }
  EXPECT_GE(counts.size(), 4u);  // a spread of part counts
}

TEST(Synthetic, DeterministicPerSeed) {
  hf::testing::TempDir a("syn_a"), b("syn_b");
  gen_synthetic(a.path(), 5, 3);
  gen_synthetic(b.path(), 5, 3);
  for (const char* f : {"manifest.txt", "handles/shape_0004.json", "points/shape_0002.xyz"})
    EXPECT_EQ(data::detail::read_file(a / f), data::detail::read_file(b / f)) << f;
  EXPECT_NE(handle_set_to_string(synthetic_shape(3, 0).handles), handle_set_to_string(synthetic_shape(4, 0).handles));
  const DatasetManifest m = load_manifest(a / "manifest.txt");
  ASSERT_EQ(m.entries.size(), 5u);
  const auto sets = load_manifest_sets(m);
  EXPECT_EQ(handle_set_to_string(sets[1]), handle_set_to_string(synthetic_shape(3, 1).handles));
  EXPECT_EQ(load_points(a / m.entries[0].input_path).size(), static_cast<size_t>(kSyntheticPointCount));
}

TEST(Synthetic, AsymmetryDetectsBrokenPairs) {
  HandleSet s = synthetic_shape(0, 0).handles;
  std::get<Cuboid>(s.handles[1]).center.x += 0.1;
  EXPECT_GT(mirror_asymmetry(s), 1e-3);
}
