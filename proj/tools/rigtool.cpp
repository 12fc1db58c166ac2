#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rigkit/cli/edit_script.hpp"
#include "rigkit/core/normalize.hpp"
#include "rigkit/core/repair.hpp"
#include "rigkit/core/rig_io.hpp"
#include "rigkit/core/validate.hpp"
#include "rigkit/deform/lbs.hpp"
#include "rigkit/deform/metrics.hpp"
#include "rigkit/deform/voxel_geodesic.hpp"
#include "rigkit/neural/checkpoint.hpp"
#include "rigkit/neural/train.hpp"
#include "rigkit/physics/spring.hpp"
#include "rigkit/synth/generator.hpp"
#include "rigkit/token/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rigkit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::make(default_template_registry());
  return v;
}

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return train_config_from_json(read_file(path));
}

GenSpec load_genspec(const std::string& path) {
  if (path.empty()) return GenSpec{};
  return genspec_from_json(read_file(path));
}

void run_jobs(int jobs, int count, const std::function<void(int)>& work) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  std::exception_ptr error;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- dataset helpers ---------------------------------------------------------

struct DatasetEntry {
  std::string id;
  RigAsset asset;
  std::vector<Motion> motions;
};

std::vector<DatasetEntry> load_dataset(const std::string& dir) {
  std::vector<DatasetEntry> out;
  const fs::path assets = fs::path(dir) / "assets";
  if (!fs::exists(assets)) throw ParseError("dataset directory has no assets/: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(assets)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    DatasetEntry entry;
    std::string stem = f.filename().string();
    const std::string suffix = ".rig.json";
    entry.id = stem.size() > suffix.size() ? stem.substr(0, stem.size() - suffix.size()) : stem;
    entry.asset = load_rig(f.string());
    // Motions: {id}.motion.json plus {id}.motion{k}.json when present.
    const fs::path mdir = fs::path(dir) / "motions";
    for (int k = 0;; ++k) {
      fs::path mp = mdir / (entry.id + (k == 0 ? std::string(".motion.json") : ".motion" + std::to_string(k) + ".json"));
      if (!fs::exists(mp)) break;
      entry.motions.push_back(load_motion(mp.string()));
    }
    out.push_back(std::move(entry));
  }
  if (out.empty()) throw ParseError("dataset directory is empty: " + dir);
  return out;
}

json metrics_report(const RigAsset& pred, const RigAsset& gt, const std::vector<Motion>& motions) {
  json r;
  r["j2j"] = chamfer_j2j(pred.skeleton, gt.skeleton);
  r["j2b"] = chamfer_j2b(pred.skeleton, gt.skeleton);
  r["b2b"] = chamfer_b2b(pred.skeleton, gt.skeleton);
  if (pred.skin.vertex_count() == gt.skin.vertex_count() && pred.skin.joint_count == gt.skin.joint_count) {
    r["skin_l1"] = skin_l1(pred.skin, gt.skin);
  }
  if (!motions.empty() && pred.mesh.vertex_count() == gt.mesh.vertex_count()) {
    r["motion_l2"] = motion_l2(pred, gt, motions);
  }
  return r;
}

// ---- pipeline pieces -----------------------------------------------------------

RigAsset rig_pipeline(const RigAsset& input, SkeletonModel& skeleton_model, SkinModel* skin_model, const std::string& cls, const TokenSequence& prompt, uint64_t seed, bool strict, int geo_resolution, json& info) {
  std::mt19937_64 rng(seed);
  auto sample = sample_surface(input.mesh, skeleton_model.config().points, rng);

  SamplerOptions sampler;
  sampler.greedy = true;
  sampler.seed = seed;
  auto generated = generate_skeleton(skeleton_model, sample.positions, sample.normals, prompt, vocab(), sampler);
  info["truncated"] = generated.truncated;
  info["tokens"] = generated.sequence.length();

  DetokenizeOptions opts;
  opts.strict = strict;
  auto decoded = detokenize(generated.sequence, default_template_registry(), vocab(), opts);
  info["merge_fallback_used"] = decoded.merge_fallback_used;

  RigAsset out;
  out.class_tag = cls;
  out.mesh = input.mesh;
  out.skeleton = decoded.tree;
  out.skin.joint_count = out.skeleton.joint_count();
  out.skin.rows.resize(static_cast<size_t>(out.mesh.vertex_count()));
  if (skin_model != nullptr && out.mesh.vertex_count() > 0) {
    auto geodesic = voxel_geodesic(out.mesh, out.skeleton, geo_resolution);
    auto normals = out.mesh.normals.empty() ? compute_vertex_normals(out.mesh) : out.mesh.normals;
    auto fwd = skin_model->forward(out.mesh.vertices, normals, out.skeleton, geodesic);
    out.skin = SkinModel::extract_weights(fwd);
    auto attrs = SkinModel::extract_attributes(fwd);
    for (int j = 0; j < out.skeleton.joint_count(); ++j) {
      if (out.skeleton.joints[static_cast<size_t>(j)].type.kind == BoneKind::Spring) {
        out.skeleton.joints[static_cast<size_t>(j)].spring = attrs[static_cast<size_t>(j)];
      }
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton rigging toolkit"};
  app.require_subcommand(1);

  // Shared options.
  uint64_t seed = 0;
  std::string config_path;
  bool strict = false;
  int jobs = 1;
  std::string out_path;

  try {
    // ---- gen ----
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic rigged dataset");
    int gen_count = 16;
    bool gen_augment = false;
    gen_cmd->add_option("--count", gen_count, "number of assets");
    gen_cmd->add_option("--seed", seed);
    gen_cmd->add_option("--config", config_path, "GenSpec JSON");
    gen_cmd->add_option("--out", out_path, "output dataset directory")->required();
    gen_cmd->add_option("--jobs", jobs);
    gen_cmd->add_flag("--augment", gen_augment, "apply the training augmentations");
    gen_cmd->callback([&] {
      GenSpec spec = load_genspec(config_path);
      if (seed != 0) spec.seed = seed;
      std::vector<GeneratedAsset> generated(static_cast<size_t>(gen_count));
      run_jobs(jobs, gen_count, [&](int i) {
        std::mt19937_64 rng(spec.seed + static_cast<uint64_t>(i) * 7919 + 1);
        generated[static_cast<size_t>(i)] = gen_asset(spec, rng);
        if (gen_augment) {
          std::mt19937_64 arng(spec.seed + static_cast<uint64_t>(i) * 104729 + 2);
          generated[static_cast<size_t>(i)].asset = augment(generated[static_cast<size_t>(i)].asset, generated[static_cast<size_t>(i)].motions, arng);
        }
      });
      json manifest;
      manifest["spec"] = json::parse(genspec_to_json(spec));
      manifest["seed"] = spec.seed;
      manifest["count"] = gen_count;
      json ids = json::array();
      for (int i = 0; i < gen_count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "%05d", i);
        ids.push_back(id);
        write_file((fs::path(out_path) / "assets" / (std::string(id) + ".rig.json")).string(), rig_to_json(generated[static_cast<size_t>(i)].asset));
        for (size_t m = 0; m < generated[static_cast<size_t>(i)].motions.size(); ++m) {
          const std::string mname = std::string(id) + (m == 0 ? std::string(".motion.json") : ".motion" + std::to_string(m) + ".json");
          write_file((fs::path(out_path) / "motions" / mname).string(), motion_to_json(generated[static_cast<size_t>(i)].motions[m]));
        }
      }
      manifest["assets"] = std::move(ids);
      write_file((fs::path(out_path) / "manifest.json").string(), manifest.dump(2) + "\n");
      write_file((fs::path(out_path) / "vocab.json").string(), vocab().manifest_json());
      std::cout << json{{"generated", gen_count}, {"out", out_path}}.dump() << "\n";
    });

    // ---- tokenize ----
    auto* tok_cmd = app.add_subcommand("tokenize", "encode a rig file as a token sequence");
    std::string rig_path;
    bool naive = false;
    tok_cmd->add_option("--rig", rig_path)->required();
    tok_cmd->add_option("--out", out_path, "token text file")->required();
    tok_cmd->add_flag("--naive", naive, "use the naive codec");
    tok_cmd->callback([&] {
      RigAsset asset = load_rig(rig_path);
      TokenSequence seq = naive ? tokenize_naive(asset.skeleton, vocab()) : tokenize(asset.skeleton, asset.class_tag, default_template_registry(), vocab());
      write_file(out_path, sequences_to_text({seq}));
      write_file((fs::path(out_path).parent_path() / "vocab.json").string(), vocab().manifest_json());
      std::cout << json{{"tokens", seq.length()}, {"form", naive ? "naive" : "optimized"}}.dump() << "\n";
    });

    // ---- detokenize ----
    auto* detok_cmd = app.add_subcommand("detokenize", "rebuild a skeleton from a token sequence");
    std::string tokens_path;
    detok_cmd->add_option("--tokens", tokens_path)->required();
    detok_cmd->add_option("--out", out_path, "rig json")->required();
    detok_cmd->add_flag("--strict", strict);
    detok_cmd->callback([&] {
      auto seqs = sequences_from_text(read_file(tokens_path), vocab());
      if (seqs.empty()) throw ParseError("no sequences in " + tokens_path);
      DetokenizeOptions opts;
      opts.strict = strict;
      auto res = detokenize(seqs.front(), default_template_registry(), vocab(), opts);
      RigAsset out;
      out.class_tag = res.class_tag.empty() ? "other" : res.class_tag;
      out.skeleton = res.tree;
      out.skin.joint_count = res.tree.joint_count();
      write_file(out_path, rig_to_json(out));
      std::cout << json{{"joints", res.tree.joint_count()}, {"merge_fallback_used", res.merge_fallback_used}}.dump() << "\n";
    });

    // ---- repair ----
    auto* repair_cmd = app.add_subcommand("repair", "apply the star-root topology repair");
    repair_cmd->add_option("--rig", rig_path)->required();
    repair_cmd->add_option("--out", out_path)->required();
    repair_cmd->callback([&] {
      RigAsset asset = load_rig(rig_path);
      auto [fixed, repaired] = repair_topology(asset.skeleton);
      asset.skeleton = fixed;
      if (repaired) {
        // Joint storage changed; skins keyed by old indices are remapped by name.
        RigAsset reloaded = load_rig(rig_path);
        std::vector<int> old_to_new(static_cast<size_t>(reloaded.skeleton.joint_count()));
        for (int j = 0; j < reloaded.skeleton.joint_count(); ++j) old_to_new[static_cast<size_t>(j)] = fixed.find_joint(reloaded.skeleton.joints[static_cast<size_t>(j)].name);
        for (auto& row : asset.skin.rows) {
          for (auto& [j, w] : row) j = old_to_new[static_cast<size_t>(j)];
          std::sort(row.begin(), row.end());
        }
      }
      write_file(out_path, rig_to_json(asset));
      std::cout << json{{"repaired", repaired}}.dump() << "\n";
    });

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "rig metric report (J2J/J2B/B2B, skin L1, motion L2)");
    std::string pred_path, gt_path, pred_dir, gt_dir, motion_path;
    metrics_cmd->add_option("--pred", pred_path);
    metrics_cmd->add_option("--gt", gt_path);
    metrics_cmd->add_option("--pred-dir", pred_dir);
    metrics_cmd->add_option("--gt-dir", gt_dir);
    metrics_cmd->add_option("--motion", motion_path, "motion file for the deformation metric");
    metrics_cmd->add_option("--out", out_path);
    metrics_cmd->add_option("--jobs", jobs);
    metrics_cmd->callback([&] {
      json report;
      std::vector<Motion> motions;
      if (!motion_path.empty()) motions.push_back(load_motion(motion_path));
      if (!pred_path.empty()) {
        report["assets"]["single"] = metrics_report(load_rig(pred_path), load_rig(gt_path), motions);
      } else {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(pred_dir)) {
          if (e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<json> rows(files.size());
        run_jobs(jobs, static_cast<int>(files.size()), [&](int i) {
          const auto& f = files[static_cast<size_t>(i)];
          rows[static_cast<size_t>(i)] = metrics_report(load_rig(f.string()), load_rig((fs::path(gt_dir) / f.filename()).string()), motions);
        });
        for (size_t i = 0; i < files.size(); ++i) report["assets"][files[i].filename().string()] = rows[i];
      }
      json means;
      for (const char* key : {"j2j", "j2b", "b2b", "skin_l1", "motion_l2"}) {
        double sum = 0.0;
        int count = 0;
        for (const auto& [id, r] : report["assets"].items()) {
          if (r.contains(key)) {
            sum += r[key].get<double>();
            ++count;
          }
        }
        if (count > 0) means[key] = sum / count;
      }
      report["mean"] = std::move(means);
      const std::string text = report.dump(2) + "\n";
      if (!out_path.empty()) write_file(out_path, text);
      std::cout << text;
    });

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "forward kinematics + spring simulation");
    double dt = kDefaultFrameDt;
    sim_cmd->add_option("--rig", rig_path)->required();
    sim_cmd->add_option("--motion", motion_path)->required();
    sim_cmd->add_option("--dt", dt);
    sim_cmd->add_option("--out", out_path)->required();
    sim_cmd->callback([&] {
      RigAsset asset = load_rig(rig_path);
      Motion motion = load_motion(motion_path);
      std::vector<Pose> poses;
      for (const auto& f : motion.frames) poses.push_back(retarget_frame(asset.skeleton, f));
      auto layout = spring_layout(asset.skeleton);
      auto states = init_spring_states(asset.skeleton, layout);
      auto frames = simulate(asset.skeleton, poses, layout_params(asset.skeleton, layout), states, dt);
      json out;
      out["fps"] = motion.fps;
      json jframes = json::array();
      for (const auto& f : frames) {
        json jf;
        json tails = json::array(), heads = json::array();
        for (int i = 0; i < asset.skeleton.joint_count(); ++i) {
          tails.push_back({f.tail[static_cast<size_t>(i)].x(), f.tail[static_cast<size_t>(i)].y(), f.tail[static_cast<size_t>(i)].z()});
          heads.push_back({f.head[static_cast<size_t>(i)].x(), f.head[static_cast<size_t>(i)].y(), f.head[static_cast<size_t>(i)].z()});
        }
        jf["tails"] = std::move(tails);
        jf["heads"] = std::move(heads);
        jframes.push_back(std::move(jf));
      }
      out["frames"] = std::move(jframes);
      write_file(out_path, out.dump(2) + "\n");
      std::cout << json{{"frames", frames.size()}}.dump() << "\n";
    });

    // ---- deform ----
    auto* deform_cmd = app.add_subcommand("deform", "skin the mesh under a motion frame");
    int frame_index = 0;
    deform_cmd->add_option("--rig", rig_path)->required();
    deform_cmd->add_option("--motion", motion_path)->required();
    deform_cmd->add_option("--frame", frame_index);
    deform_cmd->add_option("--out", out_path)->required();
    deform_cmd->callback([&] {
      RigAsset asset = load_rig(rig_path);
      Motion motion = load_motion(motion_path);
      if (frame_index < 0 || frame_index >= static_cast<int>(motion.frames.size())) throw RangeError("frame index out of range");
      std::vector<Pose> poses;
      for (int f = 0; f <= frame_index; ++f) poses.push_back(retarget_frame(asset.skeleton, motion.frames[static_cast<size_t>(f)]));
      auto layout = spring_layout(asset.skeleton);
      auto states = init_spring_states(asset.skeleton, layout);
      auto frames = simulate(asset.skeleton, poses, layout_params(asset.skeleton, layout), states, kDefaultFrameDt);
      auto verts = lbs_deform(asset.mesh, asset.skeleton, asset.skin, frame_transforms(asset.skeleton, frames.back()));
      json out;
      json jv = json::array();
      for (const auto& v : verts) jv.push_back({v.x(), v.y(), v.z()});
      out["vertices"] = std::move(jv);
      write_file(out_path, out.dump(2) + "\n");
      std::cout << json{{"vertices", verts.size()}}.dump() << "\n";
    });

    // ---- train-skeleton ----
    auto* ts_cmd = app.add_subcommand("train-skeleton", "train the autoregressive skeleton model");
    std::string data_dir;
    bool ts_naive = false;
    int eval_limit = 8;
    ts_cmd->add_option("--data", data_dir)->required();
    ts_cmd->add_option("--out", out_path)->required();
    ts_cmd->add_option("--config", config_path);
    ts_cmd->add_option("--seed", seed);
    ts_cmd->add_option("--eval-limit", eval_limit, "assets evaluated by generate->detokenize->chamfer");
    ts_cmd->add_flag("--naive", ts_naive, "train on the naive codec");
    ts_cmd->callback([&] {
      TrainConfig config = load_train_config(config_path);
      if (seed != 0) config.seed = seed;
      auto dataset = load_dataset(data_dir);
      std::mt19937_64 rng(config.seed + 17);
      std::vector<SkeletonSample> samples;
      for (const auto& e : dataset) {
        TokenSequence seq = ts_naive ? tokenize_naive(e.asset.skeleton, vocab()) : tokenize(e.asset.skeleton, e.asset.class_tag, default_template_registry(), vocab());
        samples.push_back(make_skeleton_sample(e.asset, seq, config.points, rng));
      }
      SkeletonModel model(vocab().size(), config, config.seed);
      auto log = train_skeleton(model, samples, config);
      Checkpoint::save_skeleton(model, out_path);
      // Generation-based validation, the same loop the ablations use.
      json eval;
      double j2j_sum = 0.0, j2b_sum = 0.0, b2b_sum = 0.0;
      int evaluated = 0, valid = 0;
      for (size_t i = 0; i < samples.size() && static_cast<int>(i) < eval_limit; ++i) {
        TokenSequence prompt;
        prompt.provenance = samples[i].tokens.provenance;
        prompt.tokens = {vocab().bos()};
        if (!ts_naive) prompt.tokens.push_back(samples[i].tokens.tokens[1]);
        SamplerOptions sampler;
        sampler.seed = config.seed + i;
        auto gen = generate_skeleton(model, samples[i].points, samples[i].normals, prompt, vocab(), sampler);
        try {
          DetokenizeOptions opts;
          opts.strict = false;
          auto res = detokenize(gen.sequence, default_template_registry(), vocab(), opts);
          j2j_sum += chamfer_j2j(res.tree, dataset[i].asset.skeleton);
          j2b_sum += chamfer_j2b(res.tree, dataset[i].asset.skeleton);
          b2b_sum += chamfer_b2b(res.tree, dataset[i].asset.skeleton);
          ++valid;
        } catch (const RigError&) {
        }
        ++evaluated;
      }
      if (valid > 0) {
        eval["j2j"] = j2j_sum / valid;
        eval["j2b"] = j2b_sum / valid;
        eval["b2b"] = b2b_sum / valid;
      }
      eval["evaluated"] = evaluated;
      eval["decoded"] = valid;
      std::string log_text = log.to_jsonl();
      log_text += json{{"final", true}, {"eval", eval}}.dump() + "\n";
      write_file(out_path + ".log.jsonl", log_text);
      std::cout << json{{"final_loss", log.entries.back().loss}, {"eval", eval}}.dump() << "\n";
    });

    // ---- train-skin ----
    auto* tk_cmd = app.add_subcommand("train-skin", "train the bone-point cross-attention skin model");
    int geo_res = 24;
    tk_cmd->add_option("--data", data_dir)->required();
    tk_cmd->add_option("--out", out_path)->required();
    tk_cmd->add_option("--config", config_path);
    tk_cmd->add_option("--seed", seed);
    tk_cmd->add_option("--geodesic-resolution", geo_res);
    tk_cmd->callback([&] {
      TrainConfig config = load_train_config(config_path);
      if (seed != 0) config.seed = seed;
      auto dataset = load_dataset(data_dir);
      std::vector<SkinSample> samples;
      for (const auto& e : dataset) samples.push_back(make_skin_sample(e.asset, e.motions, geo_res));
      SkinModel model(config, config.seed);
      auto log = train_skin(model, samples, config);
      Checkpoint::save_skin(model, out_path);
      double l1 = 0.0;
      for (const auto& s : samples) {
        auto normals = s.asset.mesh.normals.empty() ? compute_vertex_normals(s.asset.mesh) : s.asset.mesh.normals;
        auto fwd = model.forward(s.asset.mesh.vertices, normals, s.asset.skeleton, s.geodesic);
        l1 += skin_l1(SkinModel::extract_weights(fwd), s.asset.skin);
      }
      l1 /= static_cast<double>(samples.size());
      std::string log_text = log.to_jsonl();
      log_text += json{{"final", true}, {"skin_l1", l1}, {"use_physics", config.use_physics}, {"use_freeze", config.use_freeze}, {"bone_loss_normalization", config.bone_loss_normalization}}.dump() + "\n";
      write_file(out_path + ".log.jsonl", log_text);
      std::cout << json{{"final_loss", log.entries.back().loss}, {"skin_l1", l1}}.dump() << "\n";
    });

    // ---- rig ----
    auto* rig_cmd = app.add_subcommand("rig", "full pipeline: skeleton generation + skinning");
    std::string skeleton_ckpt, skin_ckpt, cls = "other";
    rig_cmd->add_option("--input", rig_path, "rig json providing the mesh")->required();
    rig_cmd->add_option("--skeleton-model", skeleton_ckpt)->required();
    rig_cmd->add_option("--skin-model", skin_ckpt);
    rig_cmd->add_option("--cls", cls);
    rig_cmd->add_option("--seed", seed);
    rig_cmd->add_option("--out", out_path)->required();
    rig_cmd->add_option("--geodesic-resolution", geo_res);
    rig_cmd->add_flag("--strict", strict);
    rig_cmd->callback([&] {
      RigAsset input = load_rig(rig_path);
      auto model = Checkpoint::load_skeleton(skeleton_ckpt);
      std::optional<SkinModel> skin;
      if (!skin_ckpt.empty()) skin.emplace(Checkpoint::load_skin(skin_ckpt));
      TokenSequence prompt;
      prompt.tokens = {vocab().bos(), vocab().cls_id(cls)};
      json info;
      RigAsset out = rig_pipeline(input, model, skin ? &*skin : nullptr, cls, prompt, seed, strict, geo_res, info);
      write_file(out_path, rig_to_json(out));
      info["joints"] = out.skeleton.joint_count();
      std::cout << info.dump() << "\n";
    });

    // ---- edit ----
    auto* edit_cmd = app.add_subcommand("edit", "apply an edit script and regenerate");
    std::string script_path;
    edit_cmd->add_option("--rig", rig_path)->required();
    edit_cmd->add_option("--script", script_path)->required();
    edit_cmd->add_option("--skeleton-model", skeleton_ckpt)->required();
    edit_cmd->add_option("--skin-model", skin_ckpt);
    edit_cmd->add_option("--seed", seed);
    edit_cmd->add_option("--out", out_path)->required();
    edit_cmd->add_option("--geodesic-resolution", geo_res);
    edit_cmd->add_flag("--strict", strict);
    edit_cmd->callback([&] {
      RigAsset input = load_rig(rig_path);
      auto script = edit_script_from_json(read_file(script_path));
      auto edit = apply_edit(input.skeleton, script);
      TokenSequence prompt = build_edit_prompt(edit, input.class_tag, default_template_registry(), vocab());
      auto model = Checkpoint::load_skeleton(skeleton_ckpt);
      std::optional<SkinModel> skin;
      if (!skin_ckpt.empty()) skin.emplace(Checkpoint::load_skin(skin_ckpt));
      json info;
      info["prompt_tokens"] = prompt.length();
      RigAsset out = rig_pipeline(input, model, skin ? &*skin : nullptr, input.class_tag, prompt, seed, strict, geo_res, info);
      write_file(out_path, rig_to_json(out));
      info["joints"] = out.skeleton.joint_count();
      std::cout << info.dump() << "\n";
    });

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const RigError& e) {
    std::cerr << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
