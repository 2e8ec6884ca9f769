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

#include <thread>

#include "handleforge/eval/voxel.hpp"
#include "handleforge/service/server.hpp"
#include "toy_model.hpp"

using namespace hf;
using namespace hf::service;

namespace {

std::shared_ptr<const net::Model> shared_model() {
  static const auto model = std::make_shared<const net::Model>(hf::testing::toy_model());
  return model;
}

json set_json(const HandleSet& s) { return data::handle_set_to_json(s); }

HandleSet set_from(const json& j) { return data::handle_set_from_json(j); }

LatentCode latent_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return {Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

class ServiceTest : public ::testing::Test {
 protected:
  Service service{shared_model()};

  Response post(const std::string& path, const json& body) { return service.handle("POST", path, body.dump()); }
};

}  // namespace

TEST_F(ServiceTest, Health) {
  const Response r = service.handle("GET", "/health", "");
  ASSERT_EQ(r.status, 200);
  const auto& c = shared_model()->config;
  EXPECT_EQ(r.body["status"], "ok");
  EXPECT_EQ(r.body["handle_type"], "cuboid");
  EXPECT_EQ(r.body["latent_dim"], c.encoder.code_width);
  EXPECT_EQ(r.body["max_handles"], c.decoder.max_handles);
  EXPECT_EQ(r.body["encoder_mode"], "ae");
}

TEST_F(ServiceTest, EncodeDecodeMatchesLibrary) {
  const HandleSet s = hf::testing::toy_shapes()[0];
  const Response enc = post("/encode", set_json(s));
  ASSERT_EQ(enc.status, 200) << enc.body.dump();
  const LatentCode z = latent_from(enc.body["z"]);
  EXPECT_EQ(z.values, net::encode(*shared_model(), s).values);
  // The wrapped form is accepted too.
  EXPECT_EQ(post("/encode", json{{"handles", set_json(s)}}).body["z"], enc.body["z"]);

  const Response dec = post("/decode", json{{"z", enc.body["z"]}});
  ASSERT_EQ(dec.status, 200);
  EXPECT_EQ(data::handle_set_to_string(set_from(dec.body)), data::handle_set_to_string(net::decode(*shared_model(), z)));
  EXPECT_EQ(dec.body["z"], enc.body["z"]);
}

TEST_F(ServiceTest, RoundTripQualityOnTrainingShapes) {
  const auto& shapes = hf::testing::toy_shapes();
  double train = 0.0, held_out = 0.0;
  for (int i = 0; i < 10; ++i) {
    const HandleSet& s = shapes[static_cast<size_t>(i)];
    const Response dec = post("/decode", json{{"z", post("/encode", set_json(s)).body["z"]}});
    train += eval::handle_set_iou(set_from(dec.body), s) / 10;
  }
  for (size_t i = hf::testing::kToyTrainCount; i < shapes.size(); ++i) {
    const auto& m = *shared_model();
    held_out += eval::handle_set_iou(net::decode(m, net::encode(m, shapes[i])), shapes[i]);
  }
  held_out /= static_cast<double>(shapes.size() - hf::testing::kToyTrainCount);
  EXPECT_GE(train, held_out);
}

TEST_F(ServiceTest, Interpolate) {
  const auto& shapes = hf::testing::toy_shapes();
  const json z1 = post("/encode", set_json(shapes[0])).body["z"], z2 = post("/encode", set_json(shapes[1])).body["z"];
  const Response r = post("/interpolate", json{{"z1", z1}, {"z2", z2}, {"steps", 4}});
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["frames"].size(), 4u);
  EXPECT_EQ(r.body["frames"][0]["alpha"], 1.0);
  EXPECT_EQ(r.body["frames"][0]["z"], z1);
  EXPECT_EQ(r.body["frames"][3]["z"], z2);
  EXPECT_EQ(post("/interpolate", json{{"z1", z1}, {"z2", z2}, {"steps", 1}}).status, 400);
}

TEST_F(ServiceTest, EditFixedPointAndSessions) {
  const HandleSet s = hf::testing::toy_shapes()[2];
  const Response created = post("/session", json{{"handles", set_json(s)}});
  ASSERT_EQ(created.status, 201) << created.body.dump();
  const std::string id = created.body["session_id"];
  const LatentCode z_a = latent_from(created.body["z"]);
  json original = created.body;
  original.erase("z");
  original.erase("session_id");

  const Response direct = post("/edit", json{{"z_A", created.body["z"]}, {"edited", original}});
  ASSERT_EQ(direct.status, 200) << direct.body.dump();
  EXPECT_LT((latent_from(direct.body["z"]).values - z_a.values).norm(), 1e-3);
  EXPECT_TRUE(direct.body.contains("handles"));
  EXPECT_TRUE(direct.body.contains("existence"));

  const Response via_session = post("/edit", json{{"session", id}, {"edited", original}, {"gamma", 0.1}});
  ASSERT_EQ(via_session.status, 200);
  EXPECT_LT((latent_from(via_session.body["z"]).values - z_a.values).norm(), 1e-3);

  const Response state = service.handle("GET", "/session/" + id, "");
  ASSERT_EQ(state.status, 200);
  EXPECT_EQ(state.body["history"].size(), 1u);
  EXPECT_EQ(state.body["z"], via_session.body["z"]);
}

TEST_F(ServiceTest, EditIsDeterministic) {
  const auto& shapes = hf::testing::toy_shapes();
  const json z = post("/encode", set_json(shapes[3])).body["z"];
  const json body{{"z_A", z}, {"edited", set_json(shapes[4])}, {"gamma", 0.05}, {"steps", 40}, {"seed", 3}};
  const Response a = post("/edit", body), b = post("/edit", body);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  EXPECT_GT((latent_from(a.body["z"]).values - latent_from(z).values).norm(), 0.0);
}

TEST_F(ServiceTest, Complete) {
  HandleSet partial = hf::testing::toy_shapes()[5];
  partial.handles.resize(2);
  const json body{{"partial", set_json(partial)}, {"restarts", 3}, {"steps", 30}, {"seed", 1}};
  const Response r = post("/complete", body);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  ASSERT_EQ(r.body["proposals"].size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.body["proposals"][i]["rank"], i);
  EXPECT_LE(r.body["proposals"][0]["objective"].get<double>(), r.body["proposals"][2]["objective"].get<double>());
  EXPECT_EQ(post("/complete", body).body, r.body);
}

TEST_F(ServiceTest, ErrorCodes) {
  const auto& shapes = hf::testing::toy_shapes();
  const auto check = [&](const Response& r, int status, const std::string& field) {
    EXPECT_EQ(r.status, status) << r.body.dump();
    EXPECT_EQ(r.body.value("field", ""), field) << r.body.dump();
    EXPECT_FALSE(r.body.value("error", "").empty());
  };
  check(service.handle("POST", "/decode", "{not json"), 400, "body");
  check(service.handle("POST", "/decode", "[1, 2]"), 400, "body");
  check(service.handle("POST", "/decode", "{\"z\": 1e999}"), 400, "body");
  check(post("/decode", json::object()), 400, "z");
  check(post("/decode", json{{"z", json::array({1, "x"})}}), 400, "z[1]");
  check(post("/decode", json{{"z", std::vector<double>(5, 0.0)}}), 409, "width_mismatch");
  check(post("/edit", json{{"session", "nope"}, {"edited", set_json(shapes[0])}}), 404, "session");
  check(post("/edit", json{{"z_A", std::vector<double>(3, 0.0)}, {"edited", set_json(shapes[0])}}), 409, "width_mismatch");
  check(post("/edit", json{{"z_A", std::vector<double>(32, 0.0)}}), 400, "edited");
  check(post("/edit", json{{"z_A", std::vector<double>(32, 0.0)}, {"edited", set_json(shapes[0])}, {"gamma", -1}}), 400, "gamma");
  json bad = set_json(shapes[0]);
  bad["handles"][0][3] = -1.0;
  check(post("/complete", json{{"partial", bad}}), 400, "partial");
  check(post("/complete", json{{"partial", set_json(shapes[0])}, {"restarts", 0}}), 400, "restarts");
  check(post("/complete", json{{"partial", set_json(shapes[0])}, {"seed", -4}}), 400, "seed");
  check(post("/session", json::object()), 400, "z");
  check(service.handle("GET", "/session/missing", ""), 404, "session");
  check(service.handle("GET", "/jobs/missing", ""), 404, "job");
  check(service.handle("POST", "/nowhere", "{}"), 404, "path");
  check(service.handle("DELETE", "/health", ""), 404, "path");

  Service empty(nullptr);
  EXPECT_EQ(empty.handle("GET", "/health", "").status, 503);
  check(empty.handle("POST", "/decode", "{}"), 503, "model");
}

TEST(ServiceJobs, SlowWorkReturnsAJob) {
  ServiceOptions opt;
  opt.timeout = std::chrono::milliseconds(0);
  Service service(shared_model(), opt);
  HandleSet partial = hf::testing::toy_shapes()[6];
  partial.handles.resize(3);
  const json body{{"partial", data::handle_set_to_json(partial)}, {"restarts", 2}, {"steps", 200}};
  const Response first = service.handle("POST", "/complete", body.dump());
  ASSERT_EQ(first.status, 202);
  EXPECT_EQ(first.body["status"], "in_progress");
  const std::string path = "/jobs/" + first.body["job_id"].get<std::string>();
  Response done;
  for (int i = 0; i < 600; ++i) {
    done = service.handle("GET", path, "");
    if (done.status != 202) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_EQ(done.status, 200);
  EXPECT_EQ(done.body["proposals"].size(), 2u);
}

TEST(ServiceHttp, InterleavedSessionsOverHttp) {
  Service service(shared_model());
  HttpServer server(service);
  const int port = server.start_background();
  const auto& shapes = hf::testing::toy_shapes();

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  const auto post = [&](httplib::Client& c, const std::string& path, const json& body) {
    auto res = c.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    return std::make_pair(res ? res->status : 0, res ? json::parse(res->body) : json());
  };

  const auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Content-Type"), "application/json");

  // Two sessions edited from separate threads, each with its own sequence of
  // targets. The result must match running the same sequence alone.
  const auto run_sequence = [&](const std::string& id, int offset, std::vector<json>& outputs) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    for (int step = 0; step < 3; ++step) {
      const json body{{"session", id}, {"edited", set_json(shapes[static_cast<size_t>(offset + step)])}, {"steps", 30}};
      outputs.push_back(post(c, "/edit", body).second["z"]);
    }
  };
  const auto create = [&](int shape) { return post(client, "/session", json{{"handles", set_json(shapes[static_cast<size_t>(shape)])}}); };

  const auto [s1, c1] = create(10);
  const auto [s2, c2] = create(20);
  ASSERT_EQ(s1, 201);
  ASSERT_EQ(s2, 201);
  std::vector<json> out1, out2;
  std::thread t1(run_sequence, c1["session_id"].get<std::string>(), 11, std::ref(out1));
  std::thread t2(run_sequence, c2["session_id"].get<std::string>(), 21, std::ref(out2));
  t1.join();
  t2.join();

  const auto [s3, c3] = create(10);
  std::vector<json> alone;
  run_sequence(c3["session_id"].get<std::string>(), 11, alone);
  EXPECT_EQ(out1, alone);
  EXPECT_NE(out1, out2);

  const auto history = client.Get("/session/" + c1["session_id"].get<std::string>());
  ASSERT_TRUE(history);
  EXPECT_EQ(json::parse(history->body)["history"].size(), 3u);

  const auto [bad_status, bad_body] = post(client, "/decode", json{{"z", std::vector<double>(2, 0.0)}});
  EXPECT_EQ(bad_status, 409);
  const auto missing = client.Get("/session/zzz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
}
