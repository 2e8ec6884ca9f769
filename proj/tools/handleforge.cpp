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

// handleforge: command-line front end for the data pipeline, training,
// evaluation, latent-space applications and the editing service.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <random>
#include <string>

#include "handleforge.hpp"
#include "handleforge/service/server.hpp"

namespace fs = std::filesystem;
using namespace hf;

namespace {

fs::path manifest_path(const fs::path& data) {
  return fs::is_directory(data) ? data / "manifest.txt" : data;
}

void print_line(const std::string& s) {
  std::printf("%s\n", s.c_str());
  std::fflush(stdout);
}

std::string numbered(const std::string& stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d%s", stem.c_str(), i, ext);
  return buf;
}

int run_gen_synthetic(int count, std::uint64_t seed, const fs::path& out) {
  const auto manifest = data::gen_synthetic(out, count, seed);
  print_line("wrote " + std::to_string(manifest.entries.size()) + " shapes to " + (out / "manifest.txt").string());
  return 0;
}

int run_fit_cuboids(const fs::path& input, const fs::path& out, int k, bool normalize) {
  HandleSet set = data::fit_shape(data::load_labelled_points(input), k);
  if (normalize) set = data::normalize_to_unit_sphere(set);
  data::save_handle_set(out, set);
  print_line("fitted " + std::to_string(set.size()) + " cuboids");
  return 0;
}

struct TrainArgs {
  std::string mode = "ae";
  std::string handle_type = "cuboid";
  std::string alternate = "on";
  std::string similarity = "field";
  std::uint64_t seed = 0;
  fs::path data = "data";
  fs::path out = "model.ckpt";
  int stage1 = 5000;
  int stage2 = 5000;
  int batch = 32;
  double lr = 1e-3;
  double lambda = 0.1;
  double noise = 0.01;
  int log_every = 100;
};

int run_train(const TrainArgs& a) {
  const net::EncoderMode mode = net::parse_encoder_mode(a.mode);
  const HandleType type = parse_handle_type(a.handle_type);
  net::TrainingConfig cfg;
  cfg.stage1_iters = a.stage1;
  cfg.stage2_iters = a.stage2;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.lambda = a.lambda;
  cfg.noise_variance = a.noise;
  cfg.vae = mode == net::EncoderMode::handle_set_vae;
  cfg.alternate = a.alternate == "on";
  cfg.similarity = net::parse_similarity(a.similarity);
  cfg.log_every = a.log_every;

  const fs::path mpath = manifest_path(a.data);
  const data::DatasetManifest manifest = data::load_manifest(mpath);
  require(manifest.type == type, ErrorKind::variant_mismatch,
          mpath.string() + ": dataset holds " + std::string(to_string(manifest.type)) + " handles");
  std::vector<net::TrainingExample> examples;
  for (const auto& e : manifest.entries) {
    const HandleSet target = data::load_handle_set(manifest.root / e.handle_set_path);
    if (mode == net::EncoderMode::point_cloud_parse)
      examples.push_back(net::make_point_example(data::load_points(manifest.root / e.input_path), target));
    else
      examples.push_back(net::make_set_example(target));
  }
  net::Model model = net::train_model(net::ModelConfig::defaults(mode, type), cfg, examples, print_line);
  model.metadata.notes = "mode=" + a.mode + " alternate=" + a.alternate + " similarity=" + a.similarity;
  net::save_checkpoint(a.out, model);
  print_line("saved " + a.out.string());
  return 0;
}

int run_parse(const fs::path& model_path, const fs::path& points, const fs::path& out) {
  const net::Model model = net::load_checkpoint(model_path);
  const HandleSet set = net::decode(model, net::encode_points(model, data::load_points(points)));
  data::save_handle_set(out, set);
  print_line("wrote " + out.string());
  return 0;
}

int run_reconstruct(const fs::path& model_path, const fs::path& input, const fs::path& out, const fs::path& z_out) {
  const net::Model model = net::load_checkpoint(model_path);
  const net::LatentCode z = net::encode(model, data::load_handle_set(input));
  data::save_handle_set(out, net::decode(model, z));
  if (!z_out.empty()) apps::save_latent(z_out, z);
  print_line("wrote " + out.string());
  return 0;
}

net::LatentCode latent_from(const net::Model& model, const std::string& path) {
  const fs::path p(path);
  if (p.extension() == ".json") return net::encode(model, data::load_handle_set(p));
  return apps::load_latent(p);
}

int run_interpolate(const fs::path& model_path, const std::string& a, const std::string& b, int steps,
                    const fs::path& out) {
  const net::Model model = net::load_checkpoint(model_path);
  const auto frames = apps::interpolate(model, latent_from(model, a), latent_from(model, b), steps);
  for (size_t i = 0; i < frames.size(); ++i)
    data::save_handle_set(out / numbered("frame", static_cast<int>(i), ".json"), frames[i].handles);
  print_line("wrote " + std::to_string(frames.size()) + " frames to " + out.string());
  return 0;
}

int run_complete(const fs::path& model_path, const fs::path& partial, const apps::OptimizationConfig& cfg,
                 const fs::path& out) {
  const net::Model model = net::load_checkpoint(model_path);
  const auto proposals = apps::complete(model, data::load_handle_set(partial), cfg);
  std::string index;
  for (size_t i = 0; i < proposals.size(); ++i) {
    const auto name = numbered("proposal", static_cast<int>(i), ".json");
    data::save_handle_set(out / name, proposals[i].result.handles);
    apps::save_latent(out / numbered("proposal", static_cast<int>(i), ".z"), proposals[i].result.z);
    index += name + " objective=" + data::format_number(proposals[i].result.objective) +
             " restart=" + std::to_string(proposals[i].restart) + "\n";
  }
  data::detail::write_file(out / "ranking.txt", index);
  print_line("wrote " + std::to_string(proposals.size()) + " proposals to " + out.string());
  return 0;
}

int run_edit(const fs::path& model_path, const std::string& original, const fs::path& edited,
             const apps::OptimizationConfig& cfg, const fs::path& out, const fs::path& z_out) {
  const net::Model model = net::load_checkpoint(model_path);
  const net::LatentCode z_a = latent_from(model, original);
  const apps::LatentResult r = apps::edit(model, z_a, data::load_handle_set(edited), cfg);
  data::save_handle_set(out, r.handles);
  if (!z_out.empty()) apps::save_latent(z_out, r.z);
  print_line("objective " + data::format_number(r.objective) + " shift " +
             data::format_number((r.z.values - z_a.values).norm()));
  return 0;
}

int run_eval_iou(const fs::path& pred, const fs::path& gt, int resolution, double threshold) {
  eval::GridSpec spec;
  spec.resolution = resolution;
  const auto a = eval::voxelize(data::load_handle_set(pred), spec, threshold);
  const auto b = eval::voxelize(data::load_handle_set(gt), spec, threshold);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", eval::iou(a, b));
  print_line(buf);
  return 0;
}

int run_ablate(const fs::path& data_dir, std::uint64_t seed, int test_count, int stage1, int stage2,
               const fs::path& out) {
  const auto sets = data::load_manifest_sets(data::load_manifest(manifest_path(data_dir)));
  net::TrainingConfig cfg;
  cfg.seed = seed;
  cfg.stage1_iters = stage1;
  cfg.stage2_iters = stage2;
  eval::AblationOptions options;
  options.test_count = test_count;
  options.log = print_line;
  const auto run = eval::run_ablation(
      sets, net::ModelConfig::defaults(net::EncoderMode::handle_set_ae, sets.front().type), cfg, options);
  const std::string report = run.report.table() + run.report.machine_line() + "\n";
  std::fputs(report.c_str(), stdout);
  if (!out.empty()) data::detail::write_file(out, report);
  return 0;
}

int run_export_obj(const fs::path& input, const fs::path& out, double threshold) {
  const auto mesh = data::handles_to_mesh(data::load_handle_set(input), threshold);
  data::save_obj(out, mesh);
  print_line("wrote " + std::to_string(mesh.vertices.size()) + " vertices, " + std::to_string(mesh.triangles.size()) +
             " triangles");
  return 0;
}

int run_serve(const fs::path& model_path, const std::string& host, int port, int timeout_ms) {
  service::ServiceOptions options;
  options.timeout = std::chrono::milliseconds(timeout_ms);
  auto model = std::make_shared<const net::Model>(net::load_checkpoint(model_path));
  service::Service svc(model, options);
  service::HttpServer server(svc);
  print_line("serving on " + host + ":" + std::to_string(port));
  server.serve(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative models of shapes built from handles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "handleforge 0.1.0");

  int count = 500;
  std::uint64_t seed = 0;
  fs::path out, model, input, input2, gt, z_out;
  std::string orig, a_path, b_path;
  int k = 30, steps = 5, resolution = 32, test_count = 100, port = 8080, timeout_ms = 30000;
  bool normalize = false;
  double threshold = 0.5;
  std::string host = "127.0.0.1";
  TrainArgs train;
  apps::OptimizationConfig opt;

  auto* gen = app.add_subcommand("gen-synthetic", "Write a procedural chair dataset");
  gen->add_option("--count", count, "Number of shapes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out, "Output directory")->required();

  auto* fit = app.add_subcommand("fit-cuboids", "Fit one cuboid per labelled part ('label x y z' lines)");
  fit->add_option("--input", input, "Labelled point file")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Output handle set")->required();
  fit->add_option("--max-handles", k, "Keep the largest cuboids by volume")->check(CLI::PositiveNumber);
  fit->add_flag("--normalize", normalize, "Normalize to the unit sphere");

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--mode", train.mode, "Encoder mode")->check(CLI::IsMember({"ae", "vae", "parse"}));
  tr->add_option("--handle-type", train.handle_type)->check(CLI::IsMember({"cuboid", "sphere_triangle"}));
  tr->add_option("--alternate", train.alternate, "Alternating schedule")->check(CLI::IsMember({"on", "off"}));
  tr->add_option("--similarity", train.similarity, "Handle similarity")->check(CLI::IsMember({"field", "l2"}));
  tr->add_option("--seed", train.seed);
  tr->add_option("--data", train.data, "Dataset directory or manifest");
  tr->add_option("--out", train.out, "Checkpoint path");
  tr->add_option("--stage1-iters", train.stage1)->check(CLI::PositiveNumber);
  tr->add_option("--stage2-iters", train.stage2)->check(CLI::PositiveNumber);
  tr->add_option("--batch-size", train.batch)->check(CLI::Range(2, 1 << 20));
  tr->add_option("--lr", train.lr)->check(CLI::PositiveNumber);
  tr->add_option("--lambda", train.lambda, "VAE regularizer weight")->check(CLI::NonNegativeNumber);
  tr->add_option("--noise", train.noise, "VAE regularizer noise variance")->check(CLI::NonNegativeNumber);
  tr->add_option("--log-every", train.log_every)->check(CLI::NonNegativeNumber);

  auto* parse = app.add_subcommand("parse", "Infer handles from a 1024-point cloud");
  parse->add_option("--model", model)->required()->check(CLI::ExistingFile);
  parse->add_option("--points", input, "Point cloud (x y z per line)")->required()->check(CLI::ExistingFile);
  parse->add_option("--out", out)->required();

  auto* rec = app.add_subcommand("reconstruct", "Encode and decode a handle set");
  rec->add_option("--model", model)->required()->check(CLI::ExistingFile);
  rec->add_option("--input", input)->required()->check(CLI::ExistingFile);
  rec->add_option("--out", out)->required();
  rec->add_option("--z-out", z_out, "Also write the latent code");

  auto* interp = app.add_subcommand("interpolate", "Decode a linear path between two latents");
  interp->add_option("--model", model)->required()->check(CLI::ExistingFile);
  interp->add_option("--from", a_path, "Handle set (.json) or latent file")->required()->check(CLI::ExistingFile);
  interp->add_option("--to", b_path, "Handle set (.json) or latent file")->required()->check(CLI::ExistingFile);
  interp->add_option("--steps", steps)->check(CLI::Range(2, 1000));
  interp->add_option("--out", out, "Output directory")->required();

  auto* comp = app.add_subcommand("complete", "Complete a partial handle set");
  comp->add_option("--model", model)->required()->check(CLI::ExistingFile);
  comp->add_option("--partial", input)->required()->check(CLI::ExistingFile);
  comp->add_option("--gamma", opt.gamma)->check(CLI::NonNegativeNumber);
  comp->add_option("--restarts", opt.restarts)->check(CLI::PositiveNumber);
  comp->add_option("--steps", opt.steps)->check(CLI::PositiveNumber);
  comp->add_option("--lr", opt.lr)->check(CLI::PositiveNumber);
  comp->add_option("--seed", opt.seed);
  comp->add_option("--out", out, "Output directory")->required();

  double edit_gamma = 0.1;
  auto* ed = app.add_subcommand("edit", "Propagate an edit through the latent space");
  ed->add_option("--model", model)->required()->check(CLI::ExistingFile);
  ed->add_option("--original", orig, "Original handle set (.json) or latent file")->required()->check(CLI::ExistingFile);
  ed->add_option("--edited", input, "Edited handle set")->required()->check(CLI::ExistingFile);
  ed->add_option("--gamma", edit_gamma)->check(CLI::NonNegativeNumber);
  ed->add_option("--steps", opt.steps)->check(CLI::PositiveNumber);
  ed->add_option("--lr", opt.lr)->check(CLI::PositiveNumber);
  ed->add_option("--out", out)->required();
  ed->add_option("--z-out", z_out, "Also write the optimized latent");

  auto* ev = app.add_subcommand("eval-iou", "IoU between two voxelized handle sets");
  ev->add_option("--pred", input)->required()->check(CLI::ExistingFile);
  ev->add_option("--gt", gt)->required()->check(CLI::ExistingFile);
  ev->add_option("--resolution", resolution)->check(CLI::Range(1, 512));
  ev->add_option("--threshold", threshold, "Existence threshold")->check(CLI::Range(0.0, 1.0));

  int stage1 = 5000, stage2 = 5000;
  auto* abl = app.add_subcommand("ablate", "Compare similarity and schedule variants");
  abl->add_option("--data", train.data, "Dataset directory or manifest");
  abl->add_option("--seed", seed);
  abl->add_option("--test-count", test_count)->check(CLI::PositiveNumber);
  abl->add_option("--stage1-iters", stage1)->check(CLI::PositiveNumber);
  abl->add_option("--stage2-iters", stage2)->check(CLI::PositiveNumber);
  abl->add_option("--out", out, "Also write the report here");

  auto* exp = app.add_subcommand("export-obj", "Triangulate a handle set as OBJ");
  exp->add_option("--input", input)->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out)->required();
  exp->add_option("--threshold", threshold, "Existence threshold")->check(CLI::Range(0.0, 1.0));

  auto* srv = app.add_subcommand("serve", "Serve the editing API over HTTP");
  srv->add_option("--model", model)->required()->check(CLI::ExistingFile);
  srv->add_option("--host", host);
  srv->add_option("--port", port)->check(CLI::Range(1, 65535));
  srv->add_option("--timeout-ms", timeout_ms)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_gen_synthetic(count, seed, out);
    if (*fit) return run_fit_cuboids(input, out, k, normalize);
    if (*tr) return run_train(train);
    if (*parse) return run_parse(model, input, out);
    if (*rec) return run_reconstruct(model, input, out, z_out);
    if (*interp) return run_interpolate(model, a_path, b_path, steps, out);
    if (*comp) return run_complete(model, input, opt, out);
    if (*ed) {
      opt.gamma = edit_gamma;
      return run_edit(model, orig, input, opt, out, z_out);
    }
    if (*ev) return run_eval_iou(input, gt, resolution, threshold);
    if (*abl) return run_ablate(train.data, seed, test_count, stage1, stage2, out);
    if (*exp) return run_export_obj(input, out, threshold);
    if (*srv) return run_serve(model, host, port, timeout_ms);
  } catch (const hf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
