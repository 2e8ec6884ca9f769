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
#pragma once

// Transport-independent request handling for the editing service. Every
// endpoint maps (method, path, JSON body) to (status, JSON body); the HTTP
// server in server.hpp is a thin adapter over Service::handle.

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "../apps/latent.hpp"
#include "../data/io.hpp"
#include "../net/checkpoint.hpp"

namespace hf::service {

using json = nlohmann::json;
using net::LatentCode;

struct Response {
  int status = 200;
  json body;
};

struct ServiceOptions {
  /// Requests running longer than this return 202 with a job id to poll.
  std::chrono::milliseconds timeout{30000};
  int edit_steps = 200;
  int complete_steps = 500;
  int complete_restarts = 8;
  double edit_gamma = 0.1;
};

/// A 400 response naming the offending field.
class BadRequest : public std::runtime_error {
 public:
  BadRequest(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {
inline const json& field(const json& body, const std::string& name) {
  if (!body.is_object() || !body.contains(name)) throw BadRequest(name, "missing field");
  return body[name];
}

inline double number(const json& body, const std::string& name, double fallback) {
  if (!body.is_object() || !body.contains(name) || body[name].is_null()) return fallback;
  if (!body[name].is_number()) throw BadRequest(name, "expected a number");
  const double v = body[name].get<double>();
  if (!std::isfinite(v)) throw BadRequest(name, "must be finite");
  return v;
}

inline int integer(const json& body, const std::string& name, int fallback, int lo, int hi) {
  if (!body.is_object() || !body.contains(name) || body[name].is_null()) return fallback;
  if (!body[name].is_number_integer()) throw BadRequest(name, "expected an integer");
  const auto v = body[name].get<long long>();
  if (v < lo || v > hi) throw BadRequest(name, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline std::uint64_t seed(const json& body) {
  if (!body.is_object() || !body.contains("seed") || body["seed"].is_null()) return 0;
  if (!body["seed"].is_number_unsigned() && !(body["seed"].is_number_integer() && body["seed"].get<long long>() >= 0))
    throw BadRequest("seed", "expected a non-negative integer");
  return body["seed"].get<std::uint64_t>();
}

inline LatentCode latent(const json& body, const std::string& name) {
  const json& v = field(body, name);
  if (!v.is_array() || v.empty()) throw BadRequest(name, "expected a non-empty array of numbers");
  LatentCode z{Eigen::VectorXd(static_cast<Eigen::Index>(v.size()))};
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw BadRequest(name + "[" + std::to_string(i) + "]", "expected a number");
    z.values[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    if (!std::isfinite(z.values[static_cast<Eigen::Index>(i)]))
      throw BadRequest(name + "[" + std::to_string(i) + "]", "must be finite");
  }
  return z;
}

inline HandleSet handle_set(const json& body, const std::string& name) {
  const json& v = field(body, name);
  try {
    HandleSet set = data::handle_set_from_json(v);
    set.validate();
    return set;
  } catch (const Error& e) {
    throw BadRequest(name, e.what());
  }
}

inline json latent_json(const LatentCode& z) { return std::vector<double>(z.values.data(), z.values.data() + z.size()); }

inline json set_json(const HandleSet& set) {
  json j = data::handle_set_to_json(set);
  return j;
}

inline int status_for(ErrorKind kind) { return kind == ErrorKind::width_mismatch ? 409 : 400; }
}  // namespace detail

struct EditStep {
  HandleSet edited;
  LatentCode z;
};

struct EditSession {
  std::string id;
  LatentCode z;
  std::vector<EditStep> history;  // append-only
  std::mutex mutex;               // serializes edits within the session
};

class Service {
 public:
  explicit Service(std::shared_ptr<const net::Model> model, ServiceOptions options = {})
      : model_(std::move(model)), options_(options) {}

  ~Service() {
    std::lock_guard<std::mutex> lock(jobs_mutex_);
    for (auto& [id, job] : jobs_) job.wait();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  bool model_loaded() const { return model_ != nullptr; }

  /// Routes one request. Never throws; failures become 4xx/5xx responses.
  Response handle(const std::string& method, const std::string& path, const std::string& body_text) {
    try {
      if (method == "GET" && path == "/health") return health();
      if (method == "GET" && path.rfind("/session/", 0) == 0) return get_session(path.substr(9));
      if (method == "GET" && path.rfind("/jobs/", 0) == 0) return get_job(path.substr(6));
      if (method != "POST") return error(404, "path", "no such endpoint: " + method + " " + path);
      static const char* const posts[] = {"/encode", "/decode", "/complete", "/edit", "/interpolate", "/session"};
      if (std::find(std::begin(posts), std::end(posts), path) == std::end(posts))
        return error(404, "path", "no such endpoint: POST " + path);
      if (!model_) return error(503, "model", "no model is loaded");
      json body;
      try {
        body = body_text.empty() ? json::object() : json::parse(body_text);
      } catch (const json::exception& e) {
        return error(400, "body", std::string("malformed JSON: ") + e.what());
      }
      if (!body.is_object()) return error(400, "body", "expected a JSON object");
      if (path == "/encode") return encode(body);
      if (path == "/decode") return decode(body);
      if (path == "/interpolate") return interpolate(body);
      if (path == "/session") return create_session(body);
      if (path == "/complete") return complete(body);
      return edit(body);
    } catch (const BadRequest& e) {
      return error(400, e.field(), e.what());
    } catch (const Error& e) {
      return error(detail::status_for(e.kind()), std::string(to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
      return error(500, "server", e.what());
    }
  }

 private:
  using Job = std::shared_future<Response>;

  static Response error(int status, const std::string& field, const std::string& message) {
    return {status, json{{"error", message}, {"field", field}}};
  }

  Response health() const {
    if (!model_) return {503, json{{"status", "unavailable"}, {"error", "no model is loaded"}}};
    const auto& c = model_->config;
    return {200, json{{"status", "ok"},
                      {"handle_type", std::string(to_string(c.handle_type))},
                      {"latent_dim", c.encoder.code_width},
                      {"max_handles", c.decoder.max_handles},
                      {"encoder_mode", net::to_string(c.encoder.mode)},
                      {"seed", model_->metadata.seed},
                      {"iterations", model_->metadata.iterations}}};
  }

  void check_width(const LatentCode& z, const std::string& name) const {
    if (z.size() != model_->config.encoder.code_width)
      throw Error(ErrorKind::width_mismatch, name + " has width " + std::to_string(z.size()) + " but the model expects " +
                                                 std::to_string(model_->config.encoder.code_width));
  }

  LatentCode encode_body(const json& body) const {
    if (model_->config.encoder.mode == net::EncoderMode::point_cloud_parse) {
      const json& pts = detail::field(body, "points");
      if (!pts.is_array()) throw BadRequest("points", "expected an array of [x, y, z]");
      std::vector<Vec3d> points;
      for (size_t i = 0; i < pts.size(); ++i) {
        const json& p = pts[i];
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
          throw BadRequest("points[" + std::to_string(i) + "]", "expected [x, y, z]");
        points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      }
      if (points.size() != static_cast<size_t>(net::kParsePointCount))
        throw BadRequest("points", "expected exactly 1024 points");
      return net::encode_points(*model_, points);
    }
    // The body is the handle set itself, or wraps it as {"handles": {...}}.
    const bool wrapped = body.contains("handles") && body["handles"].is_object();
    HandleSet set;
    try {
      set = data::handle_set_from_json(wrapped ? body["handles"] : body);
      set.validate();
    } catch (const Error& e) {
      throw BadRequest(wrapped ? "handles" : "body", e.what());
    }
    if (set.type != model_->config.handle_type)
      throw BadRequest("handle_type", "model expects " + std::string(to_string(model_->config.handle_type)));
    return net::encode(*model_, set);
  }

  Response encode(const json& body) const { return {200, json{{"z", detail::latent_json(encode_body(body))}}}; }

  json decoded(const LatentCode& z) const {
    json out = detail::set_json(net::decode(*model_, z));
    out["z"] = detail::latent_json(z);
    return out;
  }

  Response decode(const json& body) const {
    const LatentCode z = detail::latent(body, "z");
    check_width(z, "z");
    return {200, decoded(z)};
  }

  Response interpolate(const json& body) const {
    const LatentCode z1 = detail::latent(body, "z1"), z2 = detail::latent(body, "z2");
    check_width(z1, "z1");
    check_width(z2, "z2");
    const int steps = detail::integer(body, "steps", 5, 2, 256);
    json frames = json::array();
    for (const auto& f : apps::interpolate(*model_, z1, z2, steps)) {
      json frame = detail::set_json(f.handles);
      frame["alpha"] = f.alpha;
      frame["z"] = detail::latent_json(f.z);
      frames.push_back(std::move(frame));
    }
    return {200, json{{"frames", std::move(frames)}}};
  }

  Response create_session(const json& body) {
    LatentCode z;
    if (body.contains("z")) {
      z = detail::latent(body, "z");
      check_width(z, "z");
    } else if (body.contains("handles")) {
      z = encode_body(body);
    } else {
      throw BadRequest("z", "provide either z or a handle set");
    }
    auto session = std::make_shared<EditSession>();
    session->z = z;
    {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      session->id = "s" + std::to_string(++session_counter_);
      sessions_[session->id] = session;
    }
    json out = decoded(z);
    out["session_id"] = session->id;
    return {201, std::move(out)};
  }

  std::shared_ptr<EditSession> find_session(const std::string& id) {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  Response get_session(const std::string& id) {
    auto session = find_session(id);
    if (!session) return error(404, "session", "unknown session '" + id + "'");
    if (!model_) return error(503, "model", "no model is loaded");
    std::lock_guard<std::mutex> lock(session->mutex);
    json out = decoded(session->z);
    out["session_id"] = session->id;
    json history = json::array();
    for (const auto& step : session->history)
      history.push_back(json{{"edited", detail::set_json(step.edited)}, {"z", detail::latent_json(step.z)}});
    out["history"] = std::move(history);
    return {200, std::move(out)};
  }

  Response edit(const json& body) {
    const HandleSet edited = detail::handle_set(body, "edited");
    if (edited.type != model_->config.handle_type)
      throw BadRequest("edited.handle_type", "model expects " + std::string(to_string(model_->config.handle_type)));
    apps::OptimizationConfig cfg;
    cfg.gamma = detail::number(body, "gamma", options_.edit_gamma);
    if (cfg.gamma < 0) throw BadRequest("gamma", "must be >= 0");
    cfg.steps = detail::integer(body, "steps", options_.edit_steps, 1, 100000);
    cfg.seed = detail::seed(body);

    std::shared_ptr<EditSession> session;
    LatentCode z_a;
    if (body.contains("session") && !body["session"].is_null()) {
      if (!body["session"].is_string()) throw BadRequest("session", "expected a session id string");
      session = find_session(body["session"].get<std::string>());
      if (!session) return error(404, "session", "unknown session '" + body["session"].get<std::string>() + "'");
    } else {
      z_a = detail::latent(body, "z_A");
      check_width(z_a, "z_A");
    }
    auto model = model_;
    return run_job([model, session, z_a, edited, cfg]() -> Response {
      std::unique_lock<std::mutex> lock;
      LatentCode start = z_a;
      if (session) {
        lock = std::unique_lock<std::mutex>(session->mutex);
        start = session->z;
      }
      const apps::LatentResult r = apps::edit(*model, start, edited, cfg);
      if (session) {
        session->z = r.z;
        session->history.push_back({edited, r.z});
      }
      json out = detail::set_json(r.handles);
      out["z"] = detail::latent_json(r.z);
      out["objective"] = r.objective;
      if (session) out["session_id"] = session->id;
      return {200, std::move(out)};
    });
  }

  Response complete(const json& body) {
    const HandleSet partial = detail::handle_set(body, "partial");
    if (partial.type != model_->config.handle_type)
      throw BadRequest("partial.handle_type", "model expects " + std::string(to_string(model_->config.handle_type)));
    apps::OptimizationConfig cfg;
    cfg.gamma = detail::number(body, "gamma", 0.0);
    if (cfg.gamma < 0) throw BadRequest("gamma", "must be >= 0");
    cfg.restarts = detail::integer(body, "restarts", options_.complete_restarts, 1, 64);
    cfg.steps = detail::integer(body, "steps", options_.complete_steps, 1, 100000);
    cfg.seed = detail::seed(body);
    auto model = model_;
    return run_job([model, partial, cfg]() -> Response {
      json proposals = json::array();
      int rank = 0;
      for (const auto& p : apps::complete(*model, partial, cfg)) {
        json item = detail::set_json(p.result.handles);
        item["rank"] = rank++;
        item["restart"] = p.restart;
        item["objective"] = p.result.objective;
        item["z"] = detail::latent_json(p.result.z);
        proposals.push_back(std::move(item));
      }
      return {200, json{{"proposals", std::move(proposals)}}};
    });
  }

  // Runs work on its own thread and waits up to the configured timeout;
  // slower work is parked under a job id for GET /jobs/{id}.
  template <class F>
  Response run_job(F work) {
    auto task = [work = std::move(work)]() -> Response {
      try {
        return work();
      } catch (const Error& e) {
        return error(detail::status_for(e.kind()), std::string(to_string(e.kind())), e.what());
      } catch (const std::exception& e) {
        return error(500, "server", e.what());
      }
    };
    Job job = std::async(std::launch::async, std::move(task)).share();
    if (job.wait_for(options_.timeout) == std::future_status::ready) return job.get();
    std::lock_guard<std::mutex> lock(jobs_mutex_);
    const std::string id = "j" + std::to_string(++job_counter_);
    jobs_[id] = job;
    return {202, json{{"status", "in_progress"}, {"job_id", id}}};
  }

  Response get_job(const std::string& id) {
    Job job;
    {
      std::lock_guard<std::mutex> lock(jobs_mutex_);
      auto it = jobs_.find(id);
      if (it == jobs_.end()) return error(404, "job", "unknown job '" + id + "'");
      job = it->second;
    }
    if (job.wait_for(std::chrono::milliseconds(0)) != std::future_status::ready)
      return {202, json{{"status", "in_progress"}, {"job_id", id}}};
    return job.get();
  }

  std::shared_ptr<const net::Model> model_;
  ServiceOptions options_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<EditSession>> sessions_;
  long session_counter_ = 0;
  std::mutex jobs_mutex_;
  std::map<std::string, Job> jobs_;
  long job_counter_ = 0;
};

}  // namespace hf::service
