#include <doctest.h>

#include <random>

#include "rigkit/ad/tensor.hpp"
#include "rigkit/physics/sim_core.hpp"

using namespace rigkit;
using ad::Tensor;

namespace {

std::vector<double> randn(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = d(rng);
  return out;
}

}  // namespace

TEST_CASE("quadratic form gradient matches finite differences") {
  std::mt19937_64 rng(1);
  auto x = Tensor::param({6}, randn(rng, 6));
  auto a = Tensor::constant({6}, randn(rng, 6));
  auto f = [&](const std::vector<Tensor>& in) {
    auto v = in[0] * in[0] * 0.5 + in[0] * a;
    return sum(v);
  };
  CHECK(ad::autodiff_check(f, {x}) < 1e-6);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  std::mt19937_64 rng(2);
  auto logits = Tensor::param({4, 7}, randn(rng, 28));
  std::vector<int> targets{3, 0, 6, 2};
  auto f = [&](const std::vector<Tensor>& in) { return nll_rows(log_softmax_rows(in[0]), targets); };
  CHECK(ad::autodiff_check(f, {logits}) < 1e-4);
}

TEST_CASE("matmul, broadcast, layernorm and attention block gradients") {
  std::mt19937_64 rng(3);
  auto w1 = Tensor::param({5, 4}, randn(rng, 20, 0.5));
  auto w2 = Tensor::param({4, 3}, randn(rng, 12, 0.5));
  auto b = Tensor::param({4}, randn(rng, 4, 0.1));
  auto g = Tensor::param({4}, randn(rng, 4, 0.1));
  auto x = Tensor::constant({2, 5}, randn(rng, 10));
  std::vector<int> targets{1, 2};
  auto f = [&](const std::vector<Tensor>& in) {
    auto h = matmul(x, in[0]) + in[2];           // row-broadcast bias
    h = layernorm_rows(h, in[3], in[2]);         // bias reused as beta
    auto q = matmul(h, slice_cols(in[1], 0, 3));
    auto att = softmax_rows(matmul(q, transpose(q)) / std::sqrt(3.0));
    auto o = matmul(att, h);
    auto logits = matmul(o, in[1]);
    return nll_rows(log_softmax_rows(logits), targets) + mean(square(o)) * 0.1;
  };
  CHECK(ad::autodiff_check(f, {w1, w2, b, g}) < 1e-4);
}

TEST_CASE("column and row broadcasting have correct values and gradients") {
  auto a = Tensor::param({2, 3}, {1, 2, 3, 4, 5, 6});
  auto col = Tensor::param({2, 1}, {10, 100});
  auto row = Tensor::param({3}, {1, 2, 3});
  auto out = a * col + row;
  CHECK(out.value() == std::vector<double>{11, 22, 33, 401, 502, 603});
  ad::backward(sum(out));
  CHECK(a.grad() == std::vector<double>{10, 10, 10, 100, 100, 100});
  CHECK(col.grad() == std::vector<double>{6, 15});
  CHECK(row.grad() == std::vector<double>{2, 2, 2});
}

TEST_CASE("gradient buffers match value shapes") {
  auto x = Tensor::param({3, 2}, {1, 2, 3, 4, 5, 6});
  ad::backward(mean(square(x)));
  CHECK(x.grad().size() == x.value().size());
}

TEST_CASE("gather and slice route gradients to the right rows") {
  auto table = Tensor::param({4, 2}, {0, 0, 1, 1, 2, 2, 3, 3});
  auto picked = gather_rows(table, {2, 2, 0});
  ad::backward(sum(picked * 3.0));
  CHECK(table.grad() == std::vector<double>{3, 3, 0, 0, 6, 6, 0, 0});
}

TEST_CASE("detach blocks gradient flow") {
  auto x = Tensor::param({2}, {1.0, 2.0});
  auto y = sum(x.detach() * x);
  ad::backward(y);
  CHECK(x.grad() == std::vector<double>{1.0, 2.0});  // only the live branch
}

TEST_CASE("three-step spring simulation gradients match finite differences") {
  // One chain of two spring bones hanging from a fixed anchor.
  simcore::SpringLayout layout;
  layout.joint = {0, 1};
  layout.parent_entry = {-1, 0};
  layout.parent_joint = {-1, 0};
  layout.rest_len = {0.3, 0.25};
  layout.rest_dir = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.8, 0, -0.6).normalized()};

  auto eta_d = Tensor::param({1}, {0.35});
  auto eta_s = Tensor::param({1}, {0.2});
  auto eta_g = Tensor::param({1}, {0.7});

  const Eigen::Vector3d anchor(0.1, 0.2, 0.5);
  const Eigen::Vector3d tail0 = anchor + 0.3 * Eigen::Vector3d(1, 0, 0);
  const Eigen::Vector3d tail1 = tail0 + 0.25 * Eigen::Vector3d(0.8, 0, -0.6).normalized();

  auto f = [&](const std::vector<Tensor>& in) {
    using A = ad::AdAlgebra;
    simcore::SpringChainState<A> state;
    state.cur = {Tensor::constant(tail0), Tensor::constant(tail1)};
    state.prev = state.cur;
    std::vector<Tensor> d{in[0], in[0]}, s{in[1], in[1]}, g{in[2], in[2]};
    std::vector<Eigen::Vector3d> gdir(2, Eigen::Vector3d(0, 0, -1));
    Tensor loss = Tensor::scalar(0.0);
    for (int frame = 0; frame < 3; ++frame) {
      // Anchor swings a little each frame.
      Eigen::Vector3d a = anchor + 0.05 * frame * Eigen::Vector3d(0, 1, 0);
      std::vector<Tensor> anchor_pos{Tensor::constant(a), Tensor::constant(Eigen::Vector3d::Zero())};
      std::vector<simcore::GQuat<A>> anchor_rot{simcore::GQuat<A>::from_eigen(Eigen::Quaterniond(Eigen::AngleAxisd(0.1 * frame, Eigen::Vector3d::UnitY()))), simcore::GQuat<A>::identity()};
      auto res = simcore::spring_frame_update<A>(layout, anchor_pos, anchor_rot, d, s, g, gdir, 1.0 / 30.0, state);
      for (const auto& t : res.tail) loss = loss + dot(t - Tensor::constant(Eigen::Vector3d(0, 0, 0.2)), t - Tensor::constant(Eigen::Vector3d(0, 0, 0.2)));
    }
    return loss;
  };
  CHECK(ad::autodiff_check(f, {eta_d, eta_s, eta_g}) < 1e-3);
}

TEST_CASE("spring simulation on tensors matches the double path bitwise") {
  simcore::SpringLayout layout;
  layout.joint = {0};
  layout.parent_entry = {-1};
  layout.parent_joint = {-1};
  layout.rest_len = {0.4};
  layout.rest_dir = {Eigen::Vector3d(0, 1, 0)};

  const Eigen::Vector3d anchor(0.0, 0.0, 0.3);
  const Eigen::Vector3d tail = anchor + 0.4 * Eigen::Vector3d(0, 1, 0);

  simcore::SpringChainState<simcore::DoubleAlgebra> sd;
  sd.cur = {tail};
  sd.prev = {tail + Eigen::Vector3d(0.01, 0, 0)};
  simcore::SpringChainState<ad::AdAlgebra> st;
  st.cur = {Tensor::constant(tail)};
  st.prev = {Tensor::constant(tail + Eigen::Vector3d(0.01, 0, 0))};

  std::vector<double> pd{0.3}, ps{0.1}, pg{0.9};
  std::vector<Tensor> td{Tensor::scalar(0.3)}, ts{Tensor::scalar(0.1)}, tg{Tensor::scalar(0.9)};
  std::vector<Eigen::Vector3d> gdir{Eigen::Vector3d(0, 0, -1)};

  for (int f = 0; f < 5; ++f) {
    std::vector<Eigen::Vector3d> ap{anchor};
    std::vector<simcore::GQuat<simcore::DoubleAlgebra>> ar{simcore::GQuat<simcore::DoubleAlgebra>::identity()};
    auto rd = simcore::spring_frame_update<simcore::DoubleAlgebra>(layout, ap, ar, pd, ps, pg, gdir, 1.0 / 30.0, sd);

    std::vector<Tensor> tap{Tensor::constant(anchor)};
    std::vector<simcore::GQuat<ad::AdAlgebra>> tar{simcore::GQuat<ad::AdAlgebra>::identity()};
    auto rt = simcore::spring_frame_update<ad::AdAlgebra>(layout, tap, tar, td, ts, tg, gdir, 1.0 / 30.0, st);

    for (int k = 0; k < 3; ++k) CHECK(rd.tail[0][k] == rt.tail[0].value()[static_cast<size_t>(k)]);
  }
}

TEST_CASE("clamp_min kills gradients below the floor") {
  auto x = Tensor::param({3}, {-1.0, 0.5, 2.0});
  ad::backward(sum(clamp_min(x, 0.0)));
  CHECK(x.grad() == std::vector<double>{0.0, 1.0, 1.0});
}
