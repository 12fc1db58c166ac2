// Acceptance suite: runs every criterion at its pinned tolerance and prints
// one pass/fail line each. Exit code is the number of failed criteria.

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "rigkit/ad/tensor.hpp"
#include "rigkit/cli/edit_script.hpp"
#include "rigkit/core/normalize.hpp"
#include "rigkit/core/repair.hpp"
#include "rigkit/core/validate.hpp"
#include "rigkit/deform/metrics.hpp"
#include "rigkit/neural/checkpoint.hpp"
#include "rigkit/neural/train.hpp"
#include "rigkit/physics/spring.hpp"
#include "rigkit/synth/generator.hpp"
#include "rigkit/token/tokenizer.hpp"

using namespace rigkit;
using Clock = std::chrono::steady_clock;

namespace {

// ---- shared helpers ---------------------------------------------------------

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::make(default_template_registry());
  return v;
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& msg) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << msg;
    }
  }
};

SkeletonTree random_tree(std::mt19937_64& rng, int joints, double min_spacing) {
  std::uniform_real_distribution<double> coord(-0.9, 0.9);
  std::vector<Vec3> tails;
  while (static_cast<int>(tails.size()) < joints) {
    Vec3 p(coord(rng), coord(rng), coord(rng));
    bool ok = true;
    for (const auto& q : tails) {
      if ((p - q).norm() <= min_spacing) {
        ok = false;
        break;
      }
    }
    if (ok) tails.push_back(p);
  }
  SkeletonTree tree;
  for (int i = 0; i < joints; ++i) {
    JointRecord j;
    j.name = "j" + std::to_string(i);
    j.tail = tails[static_cast<size_t>(i)];
    if (i == 0) {
      j.head = j.tail;
    } else {
      std::uniform_int_distribution<int> pick(0, i - 1);
      j.parent = pick(rng);
      j.head = tree.joints[static_cast<size_t>(*j.parent)].tail;
    }
    tree.joints.push_back(std::move(j));
  }
  tree.root_index = 0;
  return sort_children(tree);
}

std::vector<std::pair<std::string, std::string>> parent_relation_quantized(const SkeletonTree& tree) {
  auto key = [&](const Vec3& v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%d,%d", quantize(v.x()), quantize(v.y()), quantize(v.z()));
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> rel;
  for (const auto& j : tree.joints) {
    if (j.parent) rel.emplace_back(key(tree.joints[static_cast<size_t>(*j.parent)].tail), key(j.tail));
  }
  std::sort(rel.begin(), rel.end());
  return rel;
}

double oracle_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  double abx = b.x() - a.x(), aby = b.y() - a.y(), abz = b.z() - a.z();
  double len2 = abx * abx + aby * aby + abz * abz;
  if (len2 == 0.0) return std::sqrt((p - a).squaredNorm());
  double t = ((p.x() - a.x()) * abx + (p.y() - a.y()) * aby + (p.z() - a.z()) * abz) / len2;
  t = std::max(0.0, std::min(1.0, t));
  Vec3 q(a.x() + t * abx, a.y() + t * aby, a.z() + t * abz);
  return (p - q).norm();
}

// ---- shared trained fixtures (criteria 8 and 9) ------------------------------

struct DatasetAsset {
  RigAsset asset;
  std::vector<Motion> motions;
};

struct SkeletonFixture {
  std::vector<DatasetAsset> dataset;
  std::vector<SkeletonSample> samples;
  TrainConfig config;
  std::unique_ptr<SkeletonModel> model;
  double final_ntp = 1e9;

  static SkeletonFixture& instance() {
    static SkeletonFixture f;
    return f;
  }

  void ensure_trained() {
    if (model) return;
    GenSpec spec;
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 20; ++i) {
      auto gen = gen_asset(spec, rng);
      dataset.push_back({gen.asset, gen.motions});
    }
    config.steps = 2000;
    config.batch = 2;
    config.points = 512;
    config.feature = 64;
    config.heads = 4;
    config.layers = 2;
    config.context_tokens = 8;
    config.max_len = 1024;
    config.lr_start = 2e-3;
    config.lr_end = 3e-4;
    config.seed = 7;
    model = std::make_unique<SkeletonModel>(vocab().size(), config, 7);
    std::mt19937_64 srng(5);
    for (const auto& e : dataset) {
      auto seq = tokenize(e.asset.skeleton, e.asset.class_tag, default_template_registry(), vocab());
      samples.push_back(make_skeleton_sample(e.asset, seq, config.points, srng));
    }
    train_skeleton(*model, samples, config);
    double total = 0.0;
    for (const auto& s : samples) total += model->ntp_loss(s.points, s.normals, s.tokens).item();
    final_ntp = total / static_cast<double>(samples.size());
  }
};

// Small spring asset suites for the ablation criteria.
DatasetAsset make_spring_asset(uint64_t seed) {
  GenSpec spec;
  spec.class_mix = {{"static", 1.0}};
  spec.capsule_segments = 5;
  spec.capsule_rings = 1;
  std::mt19937_64 rng(seed);
  auto gen = gen_asset(spec, rng);
  auto& tree = gen.asset.skeleton;
  // Two spring chains on distinct leaves.
  auto kids = tree.children();
  std::vector<int> leaves;
  for (int i = 0; i < tree.joint_count(); ++i) {
    if (kids[static_cast<size_t>(i)].empty()) leaves.push_back(i);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 2 && c < static_cast<int>(leaves.size()); ++c) {
    int attach = leaves[static_cast<size_t>(c)];
    SpringParams params;
    params.drag = 0.15 + 0.5 * u(rng);
    params.stiffness = 0.3 * u(rng);
    params.gravity = 0.3 + 0.6 * u(rng);
    for (int k = 0; k < 2; ++k) {
      JointRecord j;
      j.name = "sp" + std::to_string(c) + "_" + std::to_string(k);
      j.type = BoneType::spring(c, k);
      j.parent = attach;
      j.head = tree.joints[static_cast<size_t>(attach)].tail;
      j.tail = j.head + Vec3(0.08 - 0.16 * c, 0.05, -0.1);
      j.spring = params;
      attach = tree.joint_count();
      tree.joints.push_back(j);
    }
  }
  gen.asset.skin = falloff_weights(gen.asset.mesh, tree);
  return {gen.asset, gen.motions};
}

/// Static asset with deliberately sparse bones: a thick 3-bone trunk plus a
/// thin 2-bone tail whose capsules carry very few vertices.
DatasetAsset make_sparse_bone_asset(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  SkeletonTree tree;
  auto add = [&](const std::string& name, int parent, Vec3 tail) {
    JointRecord j;
    j.name = name;
    j.tail = tail + Vec3(u(rng), u(rng), u(rng));
    if (parent >= 0) {
      j.parent = parent;
      j.head = tree.joints[static_cast<size_t>(parent)].tail;
    } else {
      j.head = j.tail;
    }
    tree.joints.push_back(j);
    return tree.joint_count() - 1;
  };
  int root = add("trunk0", -1, Vec3(0, 0, -0.3));
  int t1 = add("trunk1", root, Vec3(0, 0, 0.0));
  int t2 = add("trunk2", t1, Vec3(0, 0, 0.3));
  int t3 = add("trunk3", t2, Vec3(0, 0, 0.6));
  int s1 = add("thin0", t3, Vec3(0.22, 0, 0.62));
  add("thin1", s1, Vec3(0.42, 0, 0.6));
  tree = sort_children(tree);

  Mesh mesh;
  for (int i = 0; i < tree.joint_count(); ++i) {
    const double len = tree.bone_length(i);
    if (len < 0.015) continue;
    // Thin bones get sparse capsules.
    const bool thin = tree.joints[static_cast<size_t>(i)].name.rfind("thin", 0) == 0;
    const double radius = thin ? 0.015 : 0.08;
    const int segments = thin ? 3 : 8;
    const int rings = thin ? 0 : 3;
    const JointRecord& j = tree.joints[static_cast<size_t>(i)];
    const Vec3 axis = j.tail - j.head;
    const Vec3 dir = axis.normalized();
    Vec3 up = std::abs(dir.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    const Vec3 ux = dir.cross(up).normalized();
    const Vec3 uy = dir.cross(ux).normalized();
    std::vector<std::vector<int>> rings_idx;
    const int nrings = rings + 2;
    for (int r = 0; r < nrings; ++r) {
      std::vector<int> ring;
      const Vec3 center = j.head + (static_cast<double>(r) / (nrings - 1)) * axis;
      for (int sgm = 0; sgm < segments; ++sgm) {
        const double ang = 2.0 * M_PI * sgm / segments;
        ring.push_back(mesh.vertex_count());
        mesh.vertices.push_back(center + radius * (std::cos(ang) * ux + std::sin(ang) * uy));
      }
      rings_idx.push_back(ring);
    }
    for (int r = 0; r + 1 < nrings; ++r) {
      for (int sgm = 0; sgm < segments; ++sgm) {
        int a = rings_idx[static_cast<size_t>(r)][static_cast<size_t>(sgm)];
        int b = rings_idx[static_cast<size_t>(r)][static_cast<size_t>((sgm + 1) % segments)];
        int c = rings_idx[static_cast<size_t>(r + 1)][static_cast<size_t>(sgm)];
        int d = rings_idx[static_cast<size_t>(r + 1)][static_cast<size_t>((sgm + 1) % segments)];
        mesh.faces.push_back({a, b, c});
        mesh.faces.push_back({b, d, c});
      }
    }
    const int c0 = mesh.vertex_count();
    mesh.vertices.push_back(j.head - 0.8 * radius * dir);
    const int c1 = mesh.vertex_count();
    mesh.vertices.push_back(j.tail + 0.8 * radius * dir);
    for (int sgm = 0; sgm < segments; ++sgm) {
      mesh.faces.push_back({c0, rings_idx.front()[static_cast<size_t>((sgm + 1) % segments)], rings_idx.front()[static_cast<size_t>(sgm)]});
      mesh.faces.push_back({c1, rings_idx.back()[static_cast<size_t>(sgm)], rings_idx.back()[static_cast<size_t>((sgm + 1) % segments)]});
    }
  }

  RigAsset asset;
  asset.class_tag = "static";
  asset.skeleton = tree;
  asset.mesh = mesh;
  asset.skin = falloff_weights(mesh, tree);
  auto [norm, tf] = normalize_rig(asset);
  asset = std::move(norm);
  asset.mesh.normals = compute_vertex_normals(asset.mesh);

  // One wiggle motion on the trunk.
  Motion motion;
  motion.fps = 30.0;
  for (int f = 0; f < 6; ++f) {
    MotionFrame frame;
    frame.rotations["trunk1"] = Quat(Eigen::AngleAxisd(0.12 * std::sin(0.9 * f), Vec3::UnitX()));
    frame.rotations["trunk2"] = Quat(Eigen::AngleAxisd(0.10 * std::sin(1.3 * f + 0.4), Vec3::UnitY()));
    motion.frames.push_back(frame);
  }
  return {asset, {motion}};
}

}  // namespace

// =============================================================================
// criteria
// =============================================================================

namespace {

bool criterion_1(Check& c) {
  const double min_spacing = 4.0 * std::sqrt(3.0) / 256.0;
  std::mt19937_64 rng(11);
  const auto t0 = Clock::now();
  for (int rep = 0; rep < 1000; ++rep) {
    std::uniform_int_distribution<int> joints(2, 40);
    auto tree = random_tree(rng, joints(rng), min_spacing * 1.01);
    auto seq = tokenize(tree, "other", default_template_registry(), vocab());
    auto res = detokenize(seq, default_template_registry(), vocab());
    if (res.tree.joint_count() != tree.joint_count()) {
      c.require(false, "joint count changed at rep " + std::to_string(rep));
      return c.ok;
    }
    if (parent_relation_quantized(res.tree) != parent_relation_quantized(tree)) {
      c.require(false, "topology changed at rep " + std::to_string(rep));
      return c.ok;
    }
    for (const auto& j : tree.joints) {
      double best = 1e9;
      for (const auto& k : res.tree.joints) best = std::min(best, (j.tail - k.tail).cwiseAbs().maxCoeff());
      if (best > 2.0 / 256.0 + 1e-12) {
        c.require(false, "coordinate error above 2/D");
        return c.ok;
      }
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.detail << "1000 trees in " << secs << " s";
  c.require(secs < 10.0, "runtime above 10 s");
  return c.ok;
}

bool criterion_2(Check& c) {
  std::mt19937_64 rng(23);
  GenSpec spec;
  int checked = 0;
  auto check_tree = [&](const SkeletonTree& tree, const std::string& cls) {
    auto seq = tokenize(tree, cls, default_template_registry(), vocab());
    int m = 0, s = 0;
    for (int t : seq.tokens) {
      if (vocab().is_template(t)) ++m;
      if (t == vocab().branch() || t == vocab().spring_chain()) ++s;
    }
    const int total = static_cast<int>(seq.tokens.size()) - 2;
    if (total != 3 * tree.joint_count() + m + 4 * s + 1) {
      c.require(false, "formula violated on a tree with " + std::to_string(tree.joint_count()) + " joints");
    }
    ++checked;
  };
  for (int i = 0; i < 200; ++i) {
    auto gen = gen_asset(spec, rng);
    check_tree(gen.asset.skeleton, gen.asset.class_tag);
  }
  for (int i = 0; i < 500; ++i) {
    std::uniform_int_distribution<int> joints(1, 40);
    check_tree(random_tree(rng, joints(rng), 0.03), "other");
  }
  c.detail << checked << " trees, exact match";
  return c.ok;
}

bool criterion_3(Check& c) {
  std::mt19937_64 rng(31);
  const auto& reg = default_template_registry();

  GenSpec vroid_spec;
  vroid_spec.class_mix = {{"vroid", 1.0}};
  std::vector<SkeletonTree> vtrees;
  std::vector<std::string> vcls;
  for (int i = 0; i < 120; ++i) {
    auto gen = gen_asset(vroid_spec, rng);
    vtrees.push_back(gen.asset.skeleton);
    vcls.push_back(gen.asset.class_tag);
  }
  auto vstats = token_stats(vtrees, vcls, reg, vocab());
  c.detail << "vroid-like " << vstats.reduction_pct << "%";
  c.require(vstats.reduction_pct >= 20.0 && vstats.reduction_pct <= 40.0, "vroid-like reduction out of [20,40]");

  GenSpec mixed;
  std::vector<SkeletonTree> mtrees;
  std::vector<std::string> mcls;
  for (int i = 0; i < 200; ++i) {
    auto gen = gen_asset(mixed, rng);
    mtrees.push_back(gen.asset.skeleton);
    mcls.push_back(gen.asset.class_tag);
  }
  auto mstats = token_stats(mtrees, mcls, reg, vocab());
  c.detail << ", rig-xl-like " << mstats.reduction_pct << "%";
  c.require(mstats.reduction_pct >= 20.0 && mstats.reduction_pct <= 40.0, "rig-xl-like reduction out of [20,40]");
  return c.ok;
}

bool criterion_4(Check& c) {
  // Equal-epoch A/B with naive vs optimized codecs on one synthetic set.
  GenSpec spec;
  spec.class_mix = {{"quadruped", 0.4}, {"bird", 0.2}, {"insect", 0.2}, {"static", 0.1}, {"other", 0.1}};
  std::mt19937_64 rng(41);
  std::vector<DatasetAsset> dataset;
  for (int i = 0; i < 12; ++i) {
    auto gen = gen_asset(spec, rng);
    dataset.push_back({gen.asset, gen.motions});
  }

  TrainConfig config;
  config.steps = 1200;
  config.batch = 4;
  config.points = 256;
  config.feature = 64;
  config.heads = 4;
  config.layers = 2;
  config.context_tokens = 8;
  config.lr_start = 2e-3;
  config.lr_end = 3e-4;
  config.seed = 3;

  auto run_arm = [&](bool naive, double& mean_len, double& mean_j2j) {
    std::mt19937_64 srng(9);
    std::vector<SkeletonSample> samples;
    for (const auto& e : dataset) {
      TokenSequence seq = naive ? tokenize_naive(e.asset.skeleton, vocab()) : tokenize(e.asset.skeleton, e.asset.class_tag, default_template_registry(), vocab());
      samples.push_back(make_skeleton_sample(e.asset, seq, config.points, srng));
    }
    SkeletonModel model(vocab().size(), config, 3);
    train_skeleton(model, samples, config);
    double len = 0.0, j2j = 0.0;
    int decoded = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
      len += samples[i].tokens.length();
      TokenSequence prompt;
      prompt.provenance = samples[i].tokens.provenance;
      prompt.tokens = {vocab().bos()};
      if (!naive) prompt.tokens.push_back(samples[i].tokens.tokens[1]);
      auto gen = generate_skeleton(model, samples[i].points, samples[i].normals, prompt, vocab());
      try {
        DetokenizeOptions opts;
        opts.strict = false;
        auto res = detokenize(gen.sequence, default_template_registry(), vocab(), opts);
        j2j += chamfer_j2j(res.tree, dataset[i].asset.skeleton);
        ++decoded;
      } catch (const RigError&) {
        j2j += 1.0;  // failed decode scores a unit-cube-scale miss
        ++decoded;
      }
    }
    mean_len = len / static_cast<double>(samples.size());
    mean_j2j = j2j / static_cast<double>(decoded);
  };

  double naive_len = 0.0, naive_j2j = 0.0, opt_len = 0.0, opt_j2j = 0.0;
  run_arm(true, naive_len, naive_j2j);
  run_arm(false, opt_len, opt_j2j);
  c.detail << "tokens " << naive_len << " vs " << opt_len << ", J2J " << naive_j2j << " vs " << opt_j2j;
  c.require(opt_len < naive_len, "optimized sequences not strictly shorter");
  c.require(opt_j2j <= naive_j2j * 1.05, "optimized J2J worse than naive by more than 5%");
  return c.ok;
}

bool criterion_5(Check& c) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    SpringState st;
    st.current_tail = Vec3(pos(rng), pos(rng), pos(rng));
    st.previous_tail = st.current_tail + 0.1 * Vec3(pos(rng), pos(rng), pos(rng));
    st.rest_length = 0.02 + u(rng);
    st.rest_dir = Vec3(pos(rng), pos(rng), pos(rng)).normalized();
    SpringParams p;
    p.drag = u(rng);
    p.stiffness = u(rng);
    p.gravity = u(rng);
    p.gravity_dir = Vec3(pos(rng), pos(rng), pos(rng)).normalized();
    ParentRotations rot;
    std::normal_distribution<double> nd(0.0, 1.0);
    rot.rot_tail = Quat(nd(rng), nd(rng), nd(rng), nd(rng));
    rot.rot_tail.normalize();
    Vec3 head(pos(rng), pos(rng), pos(rng));
    Vec3 next = spring_step(st, p, head, rot, 1.0 / 30.0);
    worst = std::max(worst, std::abs((next - head).norm() - st.rest_length) / st.rest_length);
  }
  c.detail << "max relative length error " << worst;
  c.require(worst <= 1e-12, "bone length drifted beyond 1e-12");

  // Gravity-only closed form, exact.
  SpringState st;
  st.current_tail = Vec3(0.3, -0.2, 0.5);
  st.previous_tail = Vec3(0.31, -0.18, 0.52);
  st.rest_length = 0.37;
  st.rest_dir = Vec3(1, 0, 0);
  SpringParams p;
  p.drag = 1.0;
  p.gravity = 1.0;
  p.gravity_dir = Vec3(0, 0, -1);
  Vec3 head(0.1, 0.1, 0.9);
  Vec3 next = spring_step(st, p, head, ParentRotations{}, 1.0 / 30.0);
  c.require((next - (head + st.rest_length * Vec3(0, 0, -1))).norm() == 0.0, "gravity-only step not exact");
  return c.ok;
}

bool criterion_6(Check& c) {
  double worst = 0.0;
  for (int probe = 0; probe < 20; ++probe) {
    auto entry = make_spring_asset(600 + static_cast<uint64_t>(probe));
    const auto& asset = entry.asset;
    const int n = asset.mesh.vertex_count();
    const int j = asset.skeleton.joint_count();

    // Use a small random subset of W entries as free parameters to keep
    // finite differencing affordable; eta coefficients are all free.
    std::vector<double> wdense(static_cast<size_t>(n) * static_cast<size_t>(j), 0.0);
    for (int v = 0; v < n; ++v) {
      for (const auto& [b, w] : asset.skin.rows[static_cast<size_t>(v)]) wdense[static_cast<size_t>(v * j + b)] = w;
    }
    std::mt19937_64 prng(900 + static_cast<uint64_t>(probe));
    std::uniform_real_distribution<double> uu(0.15, 0.85);
    std::vector<double> attr(static_cast<size_t>(j) * 3, 0.0);
    for (int b = 0; b < j; ++b) {
      attr[static_cast<size_t>(b * 3 + 0)] = uu(prng);
      attr[static_cast<size_t>(b * 3 + 1)] = uu(prng);
      attr[static_cast<size_t>(b * 3 + 2)] = uu(prng);
    }

    // 24 probed W entries + the full attribute matrix.
    std::vector<int> probe_cells;
    std::uniform_int_distribution<int> cell(0, n * j - 1);
    for (int k = 0; k < 24; ++k) probe_cells.push_back(cell(prng));

    auto w_probe = ad::Tensor::param({static_cast<int>(probe_cells.size())}, [&] {
      std::vector<double> v;
      for (int idx : probe_cells) v.push_back(wdense[static_cast<size_t>(idx)] + 0.05);
      return v;
    }());
    auto a_param = ad::Tensor::param({j, 3}, attr);

    TrainConfig cfg;
    cfg.lambda_w = 0.0;
    cfg.lambda_a = 0.0;
    cfg.lambda_x = 1.0;
    std::mt19937_64 mrng(3);
    SkinSample sample{asset, GeodesicField{}, entry.motions};
    auto poses = physics_horizon(sample, 3, mrng);
    std::vector<uint8_t> frozen(static_cast<size_t>(j), 0);

    auto f = [&](const std::vector<ad::Tensor>& in) {
      // Scatter the probed entries into the dense constant weight matrix.
      std::vector<ad::Tensor> cols;
      ad::Tensor base = ad::Tensor::constant({n, j}, wdense);
      ad::Tensor scattered = base;
      for (size_t k = 0; k < probe_cells.size(); ++k) {
        std::vector<double> onehot(static_cast<size_t>(n) * static_cast<size_t>(j), 0.0);
        onehot[static_cast<size_t>(probe_cells[k])] = 1.0;
        scattered = scattered + ad::Tensor::constant({n, j}, onehot) * slice_rows(in[0], static_cast<int>(k), static_cast<int>(k) + 1);
      }
      SkinModel::Forward fwd;
      fwd.weights = scattered;
      fwd.attributes = in[1];
      return skin_loss(fwd, asset, poses, frozen, cfg).total;
    };
    const double err = ad::autodiff_check(f, {w_probe, a_param});
    worst = std::max(worst, err);
  }
  c.detail << "max relative gradient error " << worst;
  c.require(worst < 1e-3, "gradient mismatch above 1e-3");
  return c.ok;
}

bool criterion_7(Check& c) {
  TrainConfig cfg;
  cfg.feature = 32;
  cfg.heads = 4;
  SkinModel model(cfg, 77);
  double worst_row = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    auto entry = make_spring_asset(700 + static_cast<uint64_t>(rep));
    auto geodesic = voxel_geodesic(entry.asset.mesh, entry.asset.skeleton, 16);
    auto fwd = model.forward(entry.asset.mesh.vertices, entry.asset.mesh.normals, entry.asset.skeleton, geodesic);
    const int n = fwd.weights.rows();
    const int j = fwd.weights.cols();
    for (int v = 0; v < n; ++v) {
      double sum = 0.0;
      for (int b = 0; b < j; ++b) sum += fwd.weights.value()[static_cast<size_t>(v * j + b)];
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
  }
  c.detail << "max |row sum - 1| " << worst_row;
  c.require(worst_row <= 1e-6, "weight rows not normalized within 1e-6");

  std::mt19937_64 rng(71);
  double worst_sum = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<int> nd(5, 200), jd(2, 20);
    const int n = nd(rng), j = jd(rng);
    std::vector<std::vector<double>> dense(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(j), 0.0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& row : dense) {
      int nonzero = 0;
      for (int b = 0; b < j; ++b) {
        if (u(rng) < 0.4) {
          row[static_cast<size_t>(b)] = u(rng);
          ++nonzero;
        }
      }
      if (nonzero == 0) row[0] = 1.0;
    }
    auto gt = SkinWeights::from_dense(dense);
    auto eq = skeletal_equivalence_weights(gt);
    const int nonempty = j - eq.skipped_bones;
    double sum = 0.0;
    for (double w : eq.weights) sum += w;
    worst_sum = std::max(worst_sum, std::abs(sum - static_cast<double>(nonempty) / j));
  }
  c.detail << ", max |sum - nonempty/J| " << worst_sum;
  c.require(worst_sum <= 1e-9, "equivalence weights drift above 1e-9");
  return c.ok;
}

bool criterion_8(Check& c) {
  auto t0 = Clock::now();
  auto& fixture = SkeletonFixture::instance();
  fixture.ensure_trained();
  const double skel_secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.detail << "NTP " << fixture.final_ntp << " after " << fixture.config.steps << " steps (" << skel_secs << " s)";
  c.require(fixture.final_ntp < 0.1, "NTP loss not below 0.1 within 2000 steps");
  c.require(skel_secs < 1800.0, "skeleton overfit exceeded 30 min");

  t0 = Clock::now();
  auto entry = make_spring_asset(801);
  auto sample = make_skin_sample(entry.asset, entry.motions, 20);
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch = 1;
  cfg.feature = 64;
  cfg.heads = 4;
  cfg.lr_start = 3e-3;
  cfg.lr_end = 3e-4;
  cfg.use_freeze = false;
  cfg.use_physics = false;  // direct-supervision overfit
  cfg.seed = 5;
  SkinModel model(cfg, 5);
  std::vector<SkinSample> data{sample};
  train_skin(model, data, cfg);
  auto normals = sample.asset.mesh.normals;
  auto fwd = model.forward(sample.asset.mesh.vertices, normals, sample.asset.skeleton, sample.geodesic);
  const double l1 = skin_l1(SkinModel::extract_weights(fwd), sample.asset.skin);
  const double skin_secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.detail << "; skin L1 " << l1 << " (" << skin_secs << " s)";
  c.require(l1 < 0.01, "skin L1 not below 0.01 within 2000 steps");
  c.require(skin_secs < 1800.0, "skin overfit exceeded 30 min");
  return c.ok;
}

bool criterion_9(Check& c) {
  auto& fixture = SkeletonFixture::instance();
  fixture.ensure_trained();
  int valid = 0;
  const int samples = 40;
  for (int s = 0; s < samples; ++s) {
    const auto& data = fixture.samples[static_cast<size_t>(s) % fixture.samples.size()];
    TokenSequence prompt;
    prompt.tokens = {vocab().bos(), data.tokens.tokens[1]};
    SamplerOptions opt;
    opt.greedy = false;
    opt.top_k = 5;
    opt.temperature = 0.8;
    opt.seed = static_cast<uint64_t>(s) + 1;
    auto gen = generate_skeleton(*fixture.model, data.points, data.normals, prompt, vocab(), opt);
    try {
      DetokenizeOptions dopt;
      dopt.strict = false;
      auto res = detokenize(gen.sequence, default_template_registry(), vocab(), dopt);
      if (validate_tree(res.tree).ok()) ++valid;
    } catch (const RigError&) {
    }
  }
  const double rate = 100.0 * valid / samples;
  c.detail << rate << "% of " << samples << " samples decode to valid trees";
  c.require(rate >= 90.0, "validity rate below 90%");
  return c.ok;
}

constexpr int kPhysicsAblationSteps = 180;
constexpr double kPhysicsAblationLambdaX = 2.0;

bool criterion_10(Check& c) {
  // (a) full strategy vs w/o physical simulation, deformation error.
  auto physics_pair = [&](uint64_t seed, double& full_err, double& ablated_err) {
    std::vector<SkinSample> suite;
    std::vector<Motion> probes;  // held-out evaluation motions
    for (int i = 0; i < 3; ++i) {
      auto entry = make_spring_asset(1000 + seed * 17 + static_cast<uint64_t>(i));
      suite.push_back(make_skin_sample(entry.asset, entry.motions, 16));
      std::mt19937_64 prng(5000 + seed * 13 + static_cast<uint64_t>(i));
      Motion probe;
      probe.fps = 30.0;
      std::vector<std::string> names;
      for (const auto& jj : entry.asset.skeleton.joints) {
        if (jj.type.kind != BoneKind::Spring) names.push_back(jj.name);
      }
      std::uniform_int_distribution<size_t> pickj(0, names.size() - 1);
      std::uniform_real_distribution<double> amp(0.1, 0.3);
      const std::string a = names[pickj(prng)], b = names[pickj(prng)];
      for (int f = 0; f < 6; ++f) {
        MotionFrame frame;
        frame.rotations[a] = Quat(Eigen::AngleAxisd(amp(prng) * std::sin(0.8 * f), Vec3::UnitX()));
        frame.rotations[b] = Quat(Eigen::AngleAxisd(amp(prng) * std::sin(1.1 * f + 0.7), Vec3::UnitY()));
        probe.frames.push_back(frame);
      }
      probes.push_back(std::move(probe));
    }
    auto run = [&](bool physics) {
      TrainConfig cfg;
      cfg.steps = kPhysicsAblationSteps;
      cfg.batch = 1;
      cfg.feature = 32;
      cfg.heads = 4;
      cfg.lr_start = 3e-3;
      cfg.lr_end = 5e-4;
      // The indirect term competes with a KL that sits orders of magnitude
      // higher at this scale; the suite weight keeps it in the race. Both
      // arms share the value, only the toggle differs.
      cfg.lambda_x = kPhysicsAblationLambdaX;
      cfg.use_physics = physics;
      cfg.seed = seed;
      SkinModel model(cfg, seed);
      train_skin(model, suite, cfg);
      double err = 0.0;
      for (size_t si = 0; si < suite.size(); ++si) {
        const auto& s = suite[si];
        auto fwd = model.forward(s.asset.mesh.vertices, s.asset.mesh.normals, s.asset.skeleton, s.geodesic);
        RigAsset pred = s.asset;
        pred.skin = SkinModel::extract_weights(fwd);
        auto attrs = SkinModel::extract_attributes(fwd);
        for (int b = 0; b < pred.skeleton.joint_count(); ++b) {
          if (pred.skeleton.joints[static_cast<size_t>(b)].type.kind == BoneKind::Spring) {
            pred.skeleton.joints[static_cast<size_t>(b)].spring = attrs[static_cast<size_t>(b)];
          }
        }
        err += motion_l2(pred, s.asset, {probes[si]});
      }
      return err / static_cast<double>(suite.size());
    };
    full_err = run(true);
    ablated_err = run(false);
  };

  // (b) full strategy vs w/o bone loss normalization, sparse-bone skin L1.
  auto normalization_pair = [&](uint64_t seed, double& full_l1, double& ablated_l1) {
    std::vector<SkinSample> suite;
    for (int i = 0; i < 3; ++i) {
      auto entry = make_sparse_bone_asset(2000 + seed * 31 + static_cast<uint64_t>(i));
      suite.push_back(make_skin_sample(entry.asset, entry.motions, 16));
    }
    auto sparse_l1 = [&](SkinModel& model) {
      double total = 0.0;
      int rows = 0;
      for (const auto& s : suite) {
        auto fwd = model.forward(s.asset.mesh.vertices, s.asset.mesh.normals, s.asset.skeleton, s.geodesic);
        auto pred = SkinModel::extract_weights(fwd);
        // Sparse bones: influence count below 10% of vertices.
        const int n = s.asset.mesh.vertex_count();
        const int j = s.asset.skeleton.joint_count();
        std::vector<int> influence(static_cast<size_t>(j), 0);
        for (int v = 0; v < n; ++v) {
          for (const auto& [b, w] : s.asset.skin.rows[static_cast<size_t>(v)]) influence[static_cast<size_t>(b)]++;
        }
        for (int v = 0; v < n; ++v) {
          double dominant_w = 0.0;
          int dominant = -1;
          for (const auto& [b, w] : s.asset.skin.rows[static_cast<size_t>(v)]) {
            if (w > dominant_w) {
              dominant_w = w;
              dominant = b;
            }
          }
          if (dominant < 0 || influence[static_cast<size_t>(dominant)] * 10 >= n) continue;
          auto pr = pred.dense_row(v);
          auto gr = s.asset.skin.dense_row(v);
          double row = 0.0;
          for (int b = 0; b < j; ++b) row += std::abs(pr[static_cast<size_t>(b)] - gr[static_cast<size_t>(b)]);
          total += row;
          ++rows;
        }
      }
      return rows > 0 ? total / rows : 0.0;
    };
    auto run = [&](bool normalization) {
      TrainConfig cfg;
      cfg.steps = 350;
      cfg.batch = 1;
      cfg.feature = 32;
      cfg.heads = 4;
      cfg.lr_start = 3e-3;
      cfg.lr_end = 5e-4;
      cfg.bone_loss_normalization = normalization;
      cfg.seed = seed;
      SkinModel model(cfg, seed);
      train_skin(model, suite, cfg);
      return sparse_l1(model);
    };
    full_l1 = run(true);
    ablated_l1 = run(false);
  };

  std::atomic<int> physics_wins{0};
  std::atomic<int> normalization_wins{0};
  const int runs = 10;
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const unsigned workers = std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::string> lines(static_cast<size_t>(runs) * 2);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int task = next.fetch_add(1); task < 2 * runs; task = next.fetch_add(1)) {
        const uint64_t seed = static_cast<uint64_t>(task % runs) + 1;
        if (task < runs) {
          double full = 0.0, ablated = 0.0;
          physics_pair(seed, full, ablated);
          if (full <= ablated) physics_wins++;
          std::ostringstream os;
          os << "physics seed " << seed << ": " << full << (full <= ablated ? " <= " : " > ") << ablated;
          lines[static_cast<size_t>(task)] = os.str();
        } else {
          double full = 0.0, ablated = 0.0;
          normalization_pair(seed, full, ablated);
          if (full <= ablated) normalization_wins++;
          std::ostringstream os;
          os << "normalization seed " << seed << ": " << full << (full <= ablated ? " <= " : " > ") << ablated;
          lines[static_cast<size_t>(task)] = os.str();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  c.detail << "physics wins " << physics_wins << "/10, normalization wins " << normalization_wins << "/10";
  c.require(physics_wins >= 7, "physics ablation direction below 7/10");
  c.require(normalization_wins >= 7, "normalization ablation direction below 7/10");
  return c.ok;
}

bool criterion_11(Check& c) {
  std::mt19937_64 rng(111);
  double worst_j2j = 0.0, worst_j2b = 0.0, worst_b2b = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::uniform_int_distribution<int> joints(2, 15);
    auto a = random_tree(rng, joints(rng), 0.03);
    auto b = random_tree(rng, joints(rng), 0.03);

    // Brute-force oracles, written long-hand.
    double s1 = 0.0;
    for (const auto& x : a.joints) {
      double best = 1e300;
      for (const auto& y : b.joints) best = std::min(best, (x.tail - y.tail).norm());
      s1 += best;
    }
    double s2 = 0.0;
    for (const auto& y : b.joints) {
      double best = 1e300;
      for (const auto& x : a.joints) best = std::min(best, (y.tail - x.tail).norm());
      s2 += best;
    }
    const double oracle_j2j = 0.5 * (s1 / a.joint_count() + s2 / b.joint_count());
    worst_j2j = std::max(worst_j2j, std::abs(chamfer_j2j(a, b) - oracle_j2j));

    double t1 = 0.0;
    for (const auto& x : a.joints) {
      double best = 1e300;
      for (const auto& y : b.joints) best = std::min(best, oracle_point_segment(x.tail, y.head, y.tail));
      t1 += best;
    }
    double t2 = 0.0;
    for (const auto& y : b.joints) {
      double best = 1e300;
      for (const auto& x : a.joints) best = std::min(best, oracle_point_segment(y.tail, x.head, x.tail));
      t2 += best;
    }
    const double oracle_j2b = 0.5 * (t1 / a.joint_count() + t2 / b.joint_count());
    worst_j2b = std::max(worst_j2b, std::abs(chamfer_j2b(a, b) - oracle_j2b));

    auto side = [&](const SkeletonTree& from, const SkeletonTree& to) {
      double s = 0.0;
      int cnt = 0;
      for (const auto& x : from.joints) {
        for (int k = 0; k < 64; ++k) {
          const double u = (k + 0.5) / 64.0;
          Vec3 p = x.head + u * (x.tail - x.head);
          double best = 1e300;
          for (const auto& y : to.joints) best = std::min(best, oracle_point_segment(p, y.head, y.tail));
          s += best;
          ++cnt;
        }
      }
      return s / cnt;
    };
    const double oracle_b2b = 0.5 * (side(a, b) + side(b, a));
    double max_len = 0.0;
    for (const auto& x : a.joints) max_len = std::max(max_len, (x.tail - x.head).norm());
    for (const auto& y : b.joints) max_len = std::max(max_len, (y.tail - y.head).norm());
    const double bound = 2.0 * max_len / 64.0;
    worst_b2b = std::max(worst_b2b, std::abs(chamfer_b2b(a, b) - oracle_b2b) - bound);
  }
  c.detail << "max |impl - oracle|: j2j " << worst_j2j << ", j2b " << worst_j2b;
  c.require(worst_j2j <= 1e-6, "J2J deviates from the oracle beyond 1e-6");
  c.require(worst_j2b <= 1e-6, "J2B deviates from the oracle beyond 1e-6");
  c.require(worst_b2b <= 0.0, "B2B outside its documented sampling bound");
  return c.ok;
}

bool criterion_12(Check& c) {
  std::mt19937_64 rng(121);
  std::uniform_int_distribution<int> arms_d(5, 8);
  std::uniform_int_distribution<int> extra_d(0, 2);
  int repaired_count = 0;
  for (int rep = 0; rep < 50; ++rep) {
    // Star-root pathology: root with many direct children, one heavy chain.
    const int arms = arms_d(rng);
    SkeletonTree tree;
    JointRecord root;
    root.name = "root";
    root.tail = Vec3(0, 0, 0);
    root.head = root.tail;
    tree.joints.push_back(root);
    std::uniform_real_distribution<double> off(-0.04, 0.04);
    for (int a = 0; a < arms - 1; ++a) {
      const int len = 1 + extra_d(rng);
      int parent = 0;
      for (int k = 0; k < len; ++k) {
        JointRecord j;
        j.name = "arm" + std::to_string(a) + "_" + std::to_string(k);
        j.parent = parent;
        j.tail = Vec3(0.4 + 0.15 * k + off(rng), -0.5 + 0.25 * a + off(rng), 0.1 * k + off(rng));
        j.head = tree.joints[static_cast<size_t>(parent)].tail;
        parent = tree.joint_count();
        tree.joints.push_back(j);
      }
    }
    // Heavy chain: longer than everything else combined.
    const int heavy_len = tree.joint_count() + 2;
    int parent = 0;
    for (int k = 0; k < heavy_len; ++k) {
      JointRecord j;
      j.name = "heavy" + std::to_string(k);
      j.parent = parent;
      j.tail = Vec3(-0.3 - 0.08 * k + off(rng), 0.4 + off(rng), 0.15 * k + off(rng));
      j.head = tree.joints[static_cast<size_t>(parent)].tail;
      parent = tree.joint_count();
      tree.joints.push_back(j);
    }
    tree = sort_children(tree);

    auto [fixed, repaired] = repair_topology(tree);
    if (!repaired) {
      c.require(false, "pathological case " + std::to_string(rep) + " not repaired");
      continue;
    }
    ++repaired_count;
    auto report = validate_tree(fixed);
    c.require(report.ok(), "case " + std::to_string(rep) + " invalid after repair: " + report.summary());
    c.require(fixed.joint_count() == tree.joint_count(), "joint count changed");
    // Tails unchanged (matched by name).
    for (const auto& j : fixed.joints) {
      int orig = tree.find_joint(j.name);
      if (orig < 0 || (j.tail - tree.joints[static_cast<size_t>(orig)].tail).norm() != 0.0) {
        c.require(false, "joint coordinates changed in case " + std::to_string(rep));
        break;
      }
    }
  }

  // Non-pathological cases come back untouched.
  for (int rep = 0; rep < 20; ++rep) {
    std::uniform_int_distribution<int> joints(3, 25);
    auto tree = random_tree(rng, joints(rng), 0.03);
    auto kids = tree.children();
    if (static_cast<int>(kids[static_cast<size_t>(tree.root_index)].size()) > 4) continue;
    auto [fixed, repaired] = repair_topology(tree);
    c.require(!repaired, "benign tree was repaired");
    c.require(fixed.joint_count() == tree.joint_count(), "benign tree changed");
  }
  c.detail << repaired_count << "/50 pathological cases repaired to valid trees";
  return c.ok;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "tokenizer round-trip over 1000 seeded trees", criterion_1},
      {2, "optimized token count equals 3T + M + 4S + 1", criterion_2},
      {3, "token reduction in [20%, 40%] on both populations", criterion_3},
      {4, "naive-vs-optimized codec ablation at equal epochs", criterion_4},
      {5, "bone length conserved to 1e-12; gravity step exact", criterion_5},
      {6, "simulation gradients match finite differences (1e-3)", criterion_6},
      {7, "weight rows sum to 1; equivalence weights sum exactly", criterion_7},
      {8, "overfit capability: NTP < 0.1 and skin L1 < 0.01", criterion_8},
      {9, "at least 90% of sampled sequences decode to valid trees", criterion_9},
      {10, "ablation directions hold in at least 7 of 10 paired runs", criterion_10},
      {11, "chamfer metrics match brute-force oracles", criterion_11},
      {12, "topology repair fixes 50 pathological rigs untouched elsewhere", criterion_12},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& crit : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), crit.id) == selected.end()) continue;
    Check check;
    const auto t0 = Clock::now();
    bool ok = false;
    try {
      ok = crit.run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << crit.id << ": " << crit.name << " (" << secs << " s)";
    if (!check.detail.str().empty()) std::cout << " -- " << check.detail.str();
    std::cout << std::endl;
    if (!ok) ++failures;
  }
  return failures;
}
