#include "rigkit/neural/skin_model.hpp"

#include <algorithm>
#include <cmath>

#include "rigkit/deform/lbs.hpp"
#include "rigkit/physics/spring.hpp"

namespace rigkit {

using ad::Tensor;
using ad::concat_cols;

namespace {

std::vector<double> gaussian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = d(rng);
  return out;
}

constexpr int kPeFreqs = 4;  // sin/cos at pi * {1,2,4,8}
constexpr int kBoneInput = 6 + 6 * 2 * kPeFreqs;

Tensor bone_input(const SkeletonTree& tree) {
  std::vector<double> data;
  data.reserve(static_cast<size_t>(tree.joint_count()) * kBoneInput);
  for (const auto& j : tree.joints) {
    double coords[6] = {j.head.x(), j.head.y(), j.head.z(), j.tail.x(), j.tail.y(), j.tail.z()};
    for (double c : coords) data.push_back(c);
    for (double c : coords) {
      double freq = M_PI;
      for (int k = 0; k < kPeFreqs; ++k) {
        data.push_back(std::sin(freq * c));
        data.push_back(std::cos(freq * c));
        freq *= 2.0;
      }
    }
  }
  return Tensor::constant({tree.joint_count(), kBoneInput}, std::move(data));
}

Tensor point_input(const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
  if (points.size() != normals.size()) throw RangeError("point cloud and normals disagree");
  std::vector<double> data;
  data.reserve(points.size() * 6);
  for (size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) data.push_back(points[i][k]);
    for (int k = 0; k < 3; ++k) data.push_back(normals[i][k]);
  }
  return Tensor::constant({static_cast<int>(points.size()), 6}, std::move(data));
}

/// Batched rotation of constant row vectors by an autodiff quaternion.
Tensor rotate_rows(const simcore::GQuat<ad::AdAlgebra>& q, const Tensor& rel) {
  auto comp = [](const Tensor& v, int i) { return slice_rows(v, i, i + 1); };
  auto cross_cols = [&](const Tensor& a, const Tensor& m) {
    Tensor m0 = slice_cols(m, 0, 1), m1 = slice_cols(m, 1, 2), m2 = slice_cols(m, 2, 3);
    Tensor a0 = comp(a, 0), a1 = comp(a, 1), a2 = comp(a, 2);
    return concat_cols({a1 * m2 - a2 * m1, a2 * m0 - a0 * m2, a0 * m1 - a1 * m0});
  };
  Tensor t = cross_cols(q.v, rel);
  Tensor t2 = cross_cols(q.v, t);
  return rel + (t * q.w + t2) * 2.0;
}

}  // namespace

Tensor scaled_cross_attention_logits(const Tensor& q, const Tensor& k, int feature_dim) {
  return matmul(q, transpose(k)) / std::sqrt(static_cast<double>(feature_dim));
}

SkinModel::SkinModel(const TrainConfig& config, uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const int f = config_.feature;
  const int dh = f / config_.heads;
  auto add = [&](const std::string& name, ad::Shape shape, double scale) {
    params_.emplace_back(name, Tensor::param(shape, gaussian(rng, ad::shape_size(shape), scale)));
  };
  auto add_const = [&](const std::string& name, ad::Shape shape, double value) {
    params_.emplace_back(name, Tensor::param(shape, std::vector<double>(static_cast<size_t>(ad::shape_size(shape)), value)));
  };
  add("bone.w1", {kBoneInput, f}, 0.15);
  add_const("bone.b1", {f}, 0.0);
  add("bone.w2", {f, f}, 0.1);
  add_const("bone.b2", {f}, 0.0);
  add("point.w1", {6, f}, 0.3);
  add_const("point.b1", {f}, 0.0);
  add("point.w2", {f, f}, 0.1);
  add_const("point.b2", {f}, 0.0);
  for (int h = 0; h < config_.heads; ++h) {
    const std::string hp = "attn.head" + std::to_string(h) + ".";
    add(hp + "wq", {f, dh}, 0.1);
    add(hp + "wk", {f, dh}, 0.1);
  }
  add("weight.w1", {config_.heads + 1, 16}, 0.3);
  add_const("weight.b1", {16}, 0.0);
  add("weight.w2", {16, 1}, 0.3);
  add_const("weight.b2", {1}, 0.0);
  for (int h = 0; h < config_.heads; ++h) {
    const std::string hp = "attr.head" + std::to_string(h) + ".";
    add(hp + "wq", {f, dh}, 0.1);
    add(hp + "wk", {f, dh}, 0.1);
    add(hp + "wv", {f, dh}, 0.1);
  }
  add("attr.wo", {f, f}, 0.1);
  add_const("attr.bo", {f}, 0.0);
  add("attr.w1", {f, f}, 0.1);
  add_const("attr.b1", {f}, 0.0);
  add("attr.w2", {f, 3}, 0.1);
  add_const("attr.b2", {3}, 0.0);
}

Tensor SkinModel::p(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw RangeError("unknown parameter '" + name + "'");
}

SkinModel::Forward SkinModel::forward(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const SkeletonTree& tree, const GeodesicField& geodesic) {
  const int n = static_cast<int>(points.size());
  const int j = tree.joint_count();
  if (geodesic.vertex_count != n || geodesic.joint_count != j) {
    throw RangeError("skin forward: geodesic field shape does not match inputs");
  }
  const int f = config_.feature;

  Tensor fb = relu(matmul(bone_input(tree), p("bone.w1")) + p("bone.b1"));
  fb = matmul(fb, p("bone.w2")) + p("bone.b2");  // [J, F]
  Tensor fp = relu(matmul(point_input(points, normals), p("point.w1")) + p("point.b1"));
  fp = matmul(fp, p("point.w2")) + p("point.b2");  // [N, F]

  // Per-pair attention maps, one column per head, plus the geodesic field.
  std::vector<Tensor> pair_feats;
  for (int h = 0; h < config_.heads; ++h) {
    const std::string hp = "attn.head" + std::to_string(h) + ".";
    Tensor s = softmax_rows(scaled_cross_attention_logits(matmul(fp, p(hp + "wq")), matmul(fb, p(hp + "wk")), f));
    pair_feats.push_back(reshape(s, {n * j, 1}));
  }
  pair_feats.push_back(reshape(Tensor::constant({n, j}, geodesic.dist), {n * j, 1}));
  Tensor feats = concat_cols(pair_feats);
  Tensor w = matmul(relu(matmul(feats, p("weight.w1")) + p("weight.b1")), p("weight.w2")) + p("weight.b2");
  Forward out;
  out.weights = softmax_rows(reshape(w, {n, j}));

  // Attribute head: bones query the points.
  std::vector<Tensor> heads;
  for (int h = 0; h < config_.heads; ++h) {
    const std::string hp = "attr.head" + std::to_string(h) + ".";
    Tensor att = softmax_rows(scaled_cross_attention_logits(matmul(fb, p(hp + "wq")), matmul(fp, p(hp + "wk")), f));
    heads.push_back(matmul(att, matmul(fp, p(hp + "wv"))));
  }
  Tensor o = matmul(concat_cols(heads), p("attr.wo")) + p("attr.bo");
  out.attributes = sigmoid(matmul(relu(matmul(o, p("attr.w1")) + p("attr.b1")), p("attr.w2")) + p("attr.b2"));
  return out;
}

SkinWeights SkinModel::extract_weights(const Forward& f, double threshold) {
  const int n = f.weights.rows();
  const int j = f.weights.cols();
  SkinWeights out;
  out.joint_count = j;
  out.rows.resize(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) {
    double kept = 0.0;
    for (int b = 0; b < j; ++b) {
      const double w = f.weights.value()[static_cast<size_t>(v * j + b)];
      if (w >= threshold) kept += w;
    }
    for (int b = 0; b < j; ++b) {
      const double w = f.weights.value()[static_cast<size_t>(v * j + b)];
      if (w >= threshold) out.rows[static_cast<size_t>(v)].emplace_back(b, w / kept);
    }
    if (out.rows[static_cast<size_t>(v)].empty()) {
      // Extremely flat row: keep the argmax so no vertex is unbound.
      int best = 0;
      for (int b = 1; b < j; ++b) {
        if (f.weights.value()[static_cast<size_t>(v * j + b)] > f.weights.value()[static_cast<size_t>(v * j + best)]) best = b;
      }
      out.rows[static_cast<size_t>(v)].emplace_back(best, 1.0);
    }
  }
  return out;
}

std::vector<SpringParams> SkinModel::extract_attributes(const Forward& f) {
  std::vector<SpringParams> out;
  const int j = f.attributes.rows();
  out.reserve(static_cast<size_t>(j));
  for (int b = 0; b < j; ++b) {
    SpringParams p;
    p.drag = f.attributes.value()[static_cast<size_t>(b * 3 + 0)];
    p.stiffness = f.attributes.value()[static_cast<size_t>(b * 3 + 1)];
    p.gravity = f.attributes.value()[static_cast<size_t>(b * 3 + 2)];
    p.gravity_dir = Vec3(0, 0, -1);
    out.push_back(p);
  }
  return out;
}

EquivalenceWeights skeletal_equivalence_weights(const SkinWeights& gt) {
  const int n = gt.vertex_count();
  const int j = gt.joint_count;
  std::vector<int> influence(static_cast<size_t>(j), 0);
  for (int v = 0; v < n; ++v) {
    for (const auto& [b, w] : gt.rows[static_cast<size_t>(v)]) {
      if (w > 0.0) influence[static_cast<size_t>(b)]++;
    }
  }
  EquivalenceWeights out;
  out.weights.assign(static_cast<size_t>(n), 0.0);
  for (int b = 0; b < j; ++b) {
    if (influence[static_cast<size_t>(b)] == 0) out.skipped_bones++;
  }
  for (int v = 0; v < n; ++v) {
    double w = 0.0;
    for (const auto& [b, wv] : gt.rows[static_cast<size_t>(v)]) {
      if (wv > 0.0) w += 1.0 / influence[static_cast<size_t>(b)];
    }
    out.weights[static_cast<size_t>(v)] = w / j;
  }
  return out;
}

std::vector<uint8_t> freeze_bones(std::mt19937_64& rng, double p, int bones) {
  if (p < 0.0 || p >= 1.0) throw RangeError("freeze_bones: probability must be in [0,1)");
  std::vector<uint8_t> mask(static_cast<size_t>(bones), 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& m : mask) m = u(rng) < p ? 1 : 0;
  return mask;
}

SkinLossParts skin_loss(const SkinModel::Forward& pred, const RigAsset& asset, const std::vector<Pose>& motion_frames, const std::vector<uint8_t>& frozen, const TrainConfig& config) {
  const SkeletonTree& tree = asset.skeleton;
  const int n = asset.mesh.vertex_count();
  const int j = tree.joint_count();
  if (pred.weights.rows() != n || pred.weights.cols() != j || static_cast<int>(frozen.size()) != j) {
    throw RangeError("skin_loss: shape mismatch");
  }

  // Ground-truth dense weights and their logs over the support.
  std::vector<double> gt_dense(static_cast<size_t>(n) * static_cast<size_t>(j), 0.0);
  std::vector<double> gt_log(gt_dense.size(), 0.0);
  for (int v = 0; v < n; ++v) {
    for (const auto& [b, w] : asset.skin.rows[static_cast<size_t>(v)]) {
      gt_dense[static_cast<size_t>(v * j + b)] = w;
      gt_log[static_cast<size_t>(v * j + b)] = std::log(w);
    }
  }
  Tensor gt = Tensor::constant({n, j}, gt_dense);
  Tensor gt_log_t = Tensor::constant({n, j}, std::move(gt_log));

  std::vector<double> unfrozen_row(static_cast<size_t>(j), 1.0);
  std::vector<double> frozen_row(static_cast<size_t>(j), 0.0);
  for (int b = 0; b < j; ++b) {
    if (frozen[static_cast<size_t>(b)]) {
      unfrozen_row[static_cast<size_t>(b)] = 0.0;
      frozen_row[static_cast<size_t>(b)] = 1.0;
    }
  }
  Tensor unfrozen_r = Tensor::constant({j}, unfrozen_row);
  Tensor frozen_r = Tensor::constant({j}, frozen_row);
  Tensor unfrozen_c = Tensor::constant({j, 1}, unfrozen_row);
  Tensor frozen_c = Tensor::constant({j, 1}, frozen_row);

  // KL(gt || pred) over unfrozen columns, eps-clamped.
  Tensor kl_terms = gt * (gt_log_t - log(clamp_min(pred.weights, 1e-8))) * unfrozen_r;
  Tensor kl = sum(kl_terms) / static_cast<double>(n);

  // Attribute L2 against normalized spring coefficients (zero elsewhere).
  std::vector<double> attr_gt(static_cast<size_t>(j) * 3, 0.0);
  for (int b = 0; b < j; ++b) {
    if (tree.joints[static_cast<size_t>(b)].spring) {
      const auto& s = *tree.joints[static_cast<size_t>(b)].spring;
      attr_gt[static_cast<size_t>(b * 3 + 0)] = s.drag;
      attr_gt[static_cast<size_t>(b * 3 + 1)] = s.stiffness;
      attr_gt[static_cast<size_t>(b * 3 + 2)] = s.gravity;
    }
  }
  Tensor attr_gt_t = Tensor::constant({j, 3}, attr_gt);
  Tensor attr_l2 = sum(square((pred.attributes - attr_gt_t) * unfrozen_c)) / static_cast<double>(3 * j);

  SkinLossParts parts;
  Tensor total = kl * config.lambda_w + attr_l2 * config.lambda_a;

  Tensor physics = Tensor::scalar(0.0);
  const bool run_physics = config.use_physics && config.lambda_x > 0.0 && !motion_frames.empty();
  if (run_physics) {
    using A = ad::AdAlgebra;
    const auto layout = spring_layout(tree);

    // Mixed weights and attributes: frozen bones use ground truth.
    Tensor w_mix = pred.weights * unfrozen_r + gt * frozen_r;
    Tensor a_mix = pred.attributes * unfrozen_c + attr_gt_t * frozen_c;

    // Per-vertex loss weights (skeletal equivalence or uniform).
    std::vector<double> vw;
    if (config.bone_loss_normalization) {
      vw = skeletal_equivalence_weights(asset.skin).weights;
    } else {
      vw.assign(static_cast<size_t>(n), 1.0 / n);
    }
    Tensor vweights = Tensor::constant({n, 1}, vw);

    // Ground-truth trajectory on the plain double path.
    auto gt_states = init_spring_states(tree, layout);
    auto gt_frames = simulate(tree, motion_frames, layout_params(tree, layout), gt_states, kDefaultFrameDt);

    // Predicted spring coefficients per layout entry.
    std::vector<Tensor> eta_d, eta_s, eta_g;
    std::vector<Eigen::Vector3d> gdir;
    for (int e = 0; e < layout.count(); ++e) {
      const int joint = layout.joint[static_cast<size_t>(e)];
      Tensor row = slice_rows(a_mix, joint, joint + 1);
      eta_d.push_back(reshape(slice_cols(row, 0, 1), {1}));
      eta_s.push_back(reshape(slice_cols(row, 1, 2), {1}));
      eta_g.push_back(reshape(slice_cols(row, 2, 3), {1}));
      const auto& sp = tree.joints[static_cast<size_t>(joint)].spring;
      gdir.push_back(sp ? sp->gravity_dir : Vec3(0, 0, -1));
    }
    simcore::SpringChainState<A> chain;
    for (int e = 0; e < layout.count(); ++e) {
      const int joint = layout.joint[static_cast<size_t>(e)];
      chain.cur.push_back(Tensor::constant(tree.joints[static_cast<size_t>(joint)].tail));
      chain.prev.push_back(Tensor::constant(tree.joints[static_cast<size_t>(joint)].tail));
    }

    // Rest vertex positions as constants.
    std::vector<double> rest;
    rest.reserve(static_cast<size_t>(n) * 3);
    for (const auto& v : asset.mesh.vertices) {
      rest.push_back(v.x());
      rest.push_back(v.y());
      rest.push_back(v.z());
    }
    Tensor rest_t = Tensor::constant({n, 3}, std::move(rest));

    for (size_t fidx = 0; fidx < motion_frames.size(); ++fidx) {
      FkResult fk = fk_pose(tree, motion_frames[fidx]);
      std::vector<Tensor> anchor_pos;
      std::vector<simcore::GQuat<A>> anchor_rot;
      for (int e = 0; e < layout.count(); ++e) {
        const int pj = layout.parent_joint[static_cast<size_t>(e)];
        if (layout.parent_entry[static_cast<size_t>(e)] < 0) {
          anchor_pos.push_back(Tensor::constant(fk.tail[static_cast<size_t>(pj)]));
          anchor_rot.push_back(simcore::GQuat<A>::from_eigen(fk.world_rot[static_cast<size_t>(pj)]));
        } else {
          anchor_pos.push_back(Tensor::scalar(0.0));  // unused
          anchor_rot.push_back(simcore::GQuat<A>::identity());
        }
      }
      auto sim = simcore::spring_frame_update<A>(layout, anchor_pos, anchor_rot, eta_d, eta_s, eta_g, gdir, kDefaultFrameDt, chain);

      // Per-joint posed positions of all vertices.
      std::vector<int> entry_of(static_cast<size_t>(j), -1);
      for (int e = 0; e < layout.count(); ++e) entry_of[static_cast<size_t>(layout.joint[static_cast<size_t>(e)])] = e;
      Tensor x_pred;
      for (int b = 0; b < j; ++b) {
        Tensor posed;
        const Vec3 head_rest = tree.joints[static_cast<size_t>(b)].head;
        if (entry_of[static_cast<size_t>(b)] < 0) {
          // Rigid joint: constant transform from FK.
          Eigen::Affine3d m = Eigen::Translation3d(fk.head[static_cast<size_t>(b)]) * fk.world_rot[static_cast<size_t>(b)] * Eigen::Translation3d(-head_rest);
          std::vector<double> vals;
          vals.reserve(static_cast<size_t>(n) * 3);
          for (const auto& v : asset.mesh.vertices) {
            const Vec3 q = m * v;
            vals.push_back(q.x());
            vals.push_back(q.y());
            vals.push_back(q.z());
          }
          posed = Tensor::constant({n, 3}, std::move(vals));
        } else {
          const int e = entry_of[static_cast<size_t>(b)];
          std::vector<double> rel;
          rel.reserve(static_cast<size_t>(n) * 3);
          for (const auto& v : asset.mesh.vertices) {
            const Vec3 q = v - head_rest;
            rel.push_back(q.x());
            rel.push_back(q.y());
            rel.push_back(q.z());
          }
          Tensor rel_t = Tensor::constant({n, 3}, std::move(rel));
          Tensor head_now = reshape(sim.head[static_cast<size_t>(e)], {1, 3});
          posed = rotate_rows(sim.world_rot[static_cast<size_t>(e)], rel_t) + head_now;
        }
        Tensor weighted = slice_cols(w_mix, b, b + 1) * posed;
        x_pred = x_pred.defined() ? x_pred + weighted : weighted;
      }

      // Ground-truth frame on the double path.
      auto gt_verts = lbs_deform(asset.mesh, tree, asset.skin, frame_transforms(tree, gt_frames[fidx]));
      std::vector<double> gtv;
      gtv.reserve(static_cast<size_t>(n) * 3);
      for (const auto& v : gt_verts) {
        gtv.push_back(v.x());
        gtv.push_back(v.y());
        gtv.push_back(v.z());
      }
      Tensor x_gt = Tensor::constant({n, 3}, std::move(gtv));
      physics = physics + sum(vweights * sum_rows(square(x_pred - x_gt)));
    }
    total = total + physics * config.lambda_x;
  }

  parts.total = total;
  parts.kl = kl.item();
  parts.attr_l2 = attr_l2.item();
  parts.physics = physics.item();
  return parts;
}

}  // namespace rigkit
