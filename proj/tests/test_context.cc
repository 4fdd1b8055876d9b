// tests/test_context.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "cefa/context/context.h"
#include "cefa/nn/modules.h"
#include "doctest.h"

namespace cefa::context {
namespace {

using cefa::nn::Graph;
using cefa::nn::Matrix;

Matrix RandomMatrix(int rows, int cols, cefa::Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

datagen::Image RandomImage(int size, cefa::Rng& rng) {
  datagen::Image img;
  img.height = size;
  img.width = size;
  img.pix.resize(static_cast<std::size_t>(size) * size * 3);
  for (auto& v : img.pix) v = rng.uniform();
  return img;
}

Config CtxConfig() {
  Config c;
  c.set("model.heads", "2");
  return c;
}

TEST_CASE("mask plans honor the rounded ratio exactly") {
  SUBCASE("12x12 grid at ratio 0.8 masks 115 patches, every draw") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
      MaskPlan plan = MakeMaskPlan(12, 12, 0.8, seed);
      CHECK(plan.masked_count() == 115);  // round(115.2)
      CHECK(plan.num_patches() == 144);
    }
  }
  SUBCASE("round-half-up boundary: 2 patches at 0.5 masks exactly 1") {
    CHECK(MakeMaskPlan(1, 2, 0.5, 3).masked_count() == 1);
  }
  SUBCASE("8x8 grid at 0.8 masks round(51.2) = 51") {
    CHECK(MakeMaskPlan(8, 8, 0.8, 0).masked_count() == 51);
  }
  SUBCASE("invalid ratios are rejected") {
    CHECK_THROWS_AS(MakeMaskPlan(4, 4, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(MakeMaskPlan(4, 4, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(MakeMaskPlan(4, 4, -0.3, 0), ConfigError);
    CHECK_THROWS_AS(MakeMaskPlan(4, 4, 1.5, 0), ConfigError);
    CHECK_THROWS_AS(MakeMaskPlan(0, 4, 0.5, 0), ConfigError);
  }
  SUBCASE("plans regenerate exactly from the same seed") {
    MaskPlan a = MakeMaskPlan(6, 6, 0.7, 42);
    MaskPlan b = MakeMaskPlan(6, 6, 0.7, 42);
    CHECK(a.mask == b.mask);
    MaskPlan c = MakeMaskPlan(6, 6, 0.7, 43);
    CHECK(a.mask != c.mask);
  }
  SUBCASE("masked and visible indices partition the grid") {
    MaskPlan plan = MakeMaskPlan(5, 5, 0.6, 9);
    auto m = plan.masked_indices();
    auto v = plan.visible_indices();
    CHECK(static_cast<int>(m.size()) == plan.masked_count());
    CHECK(m.size() + v.size() == 25);
  }
}

TEST_CASE("pixel masking zeroes exactly the planned patches") {
  cefa::Rng rng(1);
  datagen::Image img = RandomImage(16, rng);
  MaskPlan plan = MakeMaskPlan(4, 4, 0.5, 7);
  datagen::Image masked = MaskPixels(img, plan, 4);
  for (int py = 0; py < 4; ++py)
    for (int px = 0; px < 4; ++px) {
      bool is_masked = plan.mask[py * 4 + px];
      for (int dy = 0; dy < 4; ++dy)
        for (int dx = 0; dx < 4; ++dx)
          for (int c = 0; c < 3; ++c) {
            double got = masked.at(py * 4 + dy, px * 4 + dx, c);
            if (is_masked) {
              CHECK(got == 0.0);
            } else {
              CHECK(got == img.at(py * 4 + dy, px * 4 + dx, c));
            }
          }
    }
  CHECK_THROWS_AS(MaskPixels(img, MakeMaskPlan(3, 3, 0.5, 0), 4),
                  cefa::nn::ShapeError);
}

TEST_CASE("patch matrix round-trips the image") {
  cefa::Rng rng(2);
  datagen::Image img = RandomImage(12, rng);
  Matrix patches = ImageToPatches(img, 4);
  CHECK(patches.rows() == 9);
  CHECK(patches.cols() == 48);
  datagen::Image back = PatchesToImage(patches, 12, 12, 4);
  CHECK(back.pix == img.pix);
  CHECK_THROWS_AS(ImageToPatches(img, 5), cefa::nn::ShapeError);
}

TEST_CASE("mask tokens replace exactly the masked feature rows") {
  Config c = CtxConfig();
  ContextBranch branch(c, 8, 4, 11);
  cefa::Rng rng(3);
  Matrix x = RandomMatrix(9, 8, rng);
  MaskPlan plan = MakeMaskPlan(3, 3, 0.5, 5);

  Graph g;
  Var out = branch.apply_mask_tokens(g, g.input_tracked(x), plan);
  const Matrix& got = g.value(out);
  Matrix token;
  for (auto* p : branch.params())
    if (p->name == "ctx.mask_token") token = p->value;
  for (int i = 0; i < 9; ++i) {
    if (plan.mask[i]) {
      CHECK(got.row(i) == token.row(0));
    } else {
      CHECK(got.row(i) == x.row(i));
    }
  }
  SUBCASE("plan size mismatch is rejected") {
    Graph g2;
    CHECK_THROWS_AS(
        branch.apply_mask_tokens(g2, g2.input(RandomMatrix(4, 8, rng)), plan),
        cefa::nn::ShapeError);
  }
}

TEST_CASE("conditional controller variants") {
  cefa::Rng rng(4);
  Matrix x_src = RandomMatrix(6, 8, rng);
  Matrix x_mask = RandomMatrix(6, 8, rng);

  SUBCASE("cross-attention output is per-channel in (0,1)") {
    ContextBranch branch(CtxConfig(), 8, 4, 13);
    Graph g(false);
    Matrix d = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    CHECK(d.rows() == 6);
    CHECK(d.cols() == 8);
    CHECK(d.minCoeff() > 0.0);
    CHECK(d.maxCoeff() < 1.0);
  }
  SUBCASE("cross-attention responds to the masked stream") {
    ContextBranch branch(CtxConfig(), 8, 4, 13);
    Graph g(false);
    Matrix d1 = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    Matrix shifted = x_mask;
    shifted.array() += 1.0;
    Matrix d2 = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(shifted)));
    CHECK(d1 != d2);
  }
  SUBCASE("zeroed sign head emits exactly 0.5 everywhere") {
    ContextBranch branch(CtxConfig(), 8, 4, 13);
    for (auto* p : branch.params())
      if (p->name.rfind("ctx.sign_head", 0) == 0) p->value.setZero();
    Graph g(false);
    Matrix d = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    CHECK(d == Matrix::Constant(6, 8, 0.5));
  }
  SUBCASE("mlp controller ignores the masked stream entirely") {
    Config c = CtxConfig();
    c.set("ctx.controller", "mlp");
    ContextBranch branch(c, 8, 4, 13);
    Graph g(false);
    Matrix d1 = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    Matrix d2 = g.value(branch.conditional_controller(
        g, g.input(x_src), g.input(RandomMatrix(6, 8, rng))));
    CHECK(d1 == d2);
  }
  SUBCASE("self-attention mixes both streams, output rows match the source") {
    Config c = CtxConfig();
    c.set("ctx.controller", "self_attention");
    ContextBranch branch(c, 8, 4, 13);
    Graph g(false);
    Matrix d1 = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    CHECK(d1.rows() == 6);
    Matrix d2 = g.value(branch.conditional_controller(
        g, g.input(x_src), g.input(RandomMatrix(6, 8, rng))));
    CHECK(d1 != d2);
  }
  SUBCASE("per-token signal has one column") {
    Config c = CtxConfig();
    c.set("ctx.sign_channels", "per_token");
    ContextBranch branch(c, 8, 4, 13);
    Graph g(false);
    Matrix d = g.value(
        branch.conditional_controller(g, g.input(x_src), g.input(x_mask)));
    CHECK(d.rows() == 6);
    CHECK(d.cols() == 1);
  }
  SUBCASE("channel mismatch is rejected") {
    ContextBranch branch(CtxConfig(), 8, 4, 13);
    Graph g(false);
    CHECK_THROWS_AS(branch.conditional_controller(
                        g, g.input(RandomMatrix(6, 4, rng)), g.input(x_mask)),
                    cefa::nn::ShapeError);
  }
  SUBCASE("unknown controller and bad sigma are rejected at construction") {
    Config c = CtxConfig();
    c.set("ctx.controller", "gru");
    CHECK_THROWS_AS(ContextBranch(c, 8, 4, 0), ConfigError);
    Config c2 = CtxConfig();
    c2.set("ctx.sigma", "1.0");
    CHECK_THROWS_AS(ContextBranch(c2, 8, 4, 0), ConfigError);
  }
}

TEST_CASE("gating binarizes strictly above one half") {
  Config c = CtxConfig();
  c.set("ctx.sign_channels", "per_token");
  ContextBranch branch(c, 4, 4, 17);
  cefa::Rng rng(5);
  Matrix x = RandomMatrix(3, 4, rng);
  Matrix d(3, 1);
  d << 0.3, 0.6, 0.5;

  SUBCASE("0.3 and the exact 0.5 gate off, 0.6 gates on") {
    Graph g;
    Var xv = g.input_tracked(x);
    Var out = branch.gate_and_condition(g, g.input(d), xv);
    const Matrix& got = g.value(out);
    CHECK(got.row(0) == Matrix::Zero(1, 4).row(0));
    CHECK(got.row(1) == x.row(1));
    CHECK(got.row(2) == Matrix::Zero(1, 4).row(0));

    // Gradient reaches only the gated-on row of X_src.
    g.backward(g.sum_all(out));
    CHECK(g.grad(xv).row(0) == Matrix::Zero(1, 4).row(0));
    CHECK(g.grad(xv).row(2) == Matrix::Zero(1, 4).row(0));
    CHECK(g.grad(xv).row(1) == Matrix::Ones(1, 4).row(0));
  }

  SUBCASE("no gradient crosses the hard threshold into D_sign") {
    Graph g;
    Var dv = g.input_tracked(d);
    Var sigvar = g.sigmoid(dv);  // differentiable producer for D_sign
    Var out = branch.gate_and_condition(g, sigvar, g.input(x));
    g.backward(g.sum_all(out));
    CHECK(g.grad(dv) == Matrix::Zero(3, 1));
  }

  SUBCASE("straight-through mode forwards hard but passes gradient") {
    Config c2 = CtxConfig();
    c2.set("ctx.sign_channels", "per_token");
    c2.set("ctx.gate_mode", "straight_through");
    ContextBranch st(c2, 4, 4, 17);
    Graph g;
    Var dv = g.input_tracked(d);
    Var out = st.gate_and_condition(g, dv, g.input(x));
    CHECK(g.value(out).row(0) == Matrix::Zero(1, 4).row(0));
    CHECK(g.value(out).row(1) == x.row(1));
    g.backward(g.sum_all(out));
    // d/d(D_sign[i]) = sum_j x(i,j) under the soft surrogate.
    CHECK(g.grad(dv)(0, 0) == doctest::Approx(x.row(0).sum()));
    CHECK(g.grad(dv)(1, 0) == doctest::Approx(x.row(1).sum()));
  }

  SUBCASE("all-on and all-off extremes") {
    Graph g;
    Var xv = g.input_tracked(x);
    Var on = branch.gate_and_condition(g, g.input(Matrix::Constant(3, 1, 0.9)), xv);
    CHECK(g.value(on) == x);
    Var off = branch.gate_and_condition(g, g.input(Matrix::Constant(3, 1, 0.1)), xv);
    CHECK(g.value(off) == Matrix::Zero(3, 4));
    g.backward(g.sum_all(off));
    CHECK(g.grad(xv) == Matrix::Zero(3, 4));  // fully gated off
  }

  SUBCASE("gating twice equals gating once") {
    Graph g;
    Var dv = g.input(d);
    Var once = branch.gate_and_condition(g, dv, g.input(x));
    Var twice = branch.gate_and_condition(g, dv, once);
    CHECK(g.value(once) == g.value(twice));
  }

  SUBCASE("per-channel signal dims must match the source") {
    ContextBranch pc(CtxConfig(), 4, 4, 17);
    Graph g;
    CHECK_THROWS_AS(
        pc.gate_and_condition(g, g.input(Matrix::Constant(3, 2, 0.7)), g.input(x)),
        cefa::nn::ShapeError);
  }
}

TEST_CASE("reconstruction decoder") {
  Config c = CtxConfig();
  int dim = 8, patch = 4;
  ContextBranch branch(c, dim, patch, 19);
  cefa::Rng rng(6);
  int n = 9;  // 3x3 grid of 4x4 patches = 12x12 image
  Matrix pos = nn::SinusoidalGridEncoding(3, 3, dim);
  Matrix x_src = RandomMatrix(n, dim, rng);
  Matrix x_mask = RandomMatrix(n, dim, rng);

  SUBCASE("one output row of patch pixels per generated-image patch") {
    Graph g(false);
    Matrix out = g.value(
        branch.reconstruct(g, g.input(x_src), g.input(x_mask), pos));
    CHECK(out.rows() == n);
    CHECK(out.cols() == patch * patch * 3);
    CHECK(out.allFinite());
  }
  SUBCASE("deterministic given identical inputs") {
    Graph g(false);
    Matrix a = g.value(branch.reconstruct(g, g.input(x_src), g.input(x_mask), pos));
    Graph g2(false);
    Matrix b = g2.value(
        branch.reconstruct(g2, g2.input(x_src), g2.input(x_mask), pos));
    CHECK(a == b);
  }
  SUBCASE("source context matters in gated mode") {
    Graph g(false);
    Matrix a = g.value(branch.reconstruct(g, g.input(x_src), g.input(x_mask), pos));
    Matrix moved = x_src;
    moved.array() += 1.0;
    Matrix b = g.value(branch.reconstruct(g, g.input(moved), g.input(x_mask), pos));
    CHECK(a != b);
  }
  SUBCASE("non-conditioned mode ignores the source tokens") {
    Config c2 = CtxConfig();
    c2.set("ctx.conditioning", "none");
    ContextBranch nc(c2, dim, patch, 19);
    Graph g(false);
    Matrix a = g.value(nc.reconstruct(g, g.input(x_src), g.input(x_mask), pos));
    Matrix b = g.value(nc.reconstruct(
        g, g.input(RandomMatrix(n, dim, rng)), g.input(x_mask), pos));
    CHECK(a == b);
  }
  SUBCASE("token count must match the patch grid") {
    Graph g(false);
    CHECK_THROWS_AS(branch.reconstruct(g, g.input(x_src),
                                       g.input(RandomMatrix(4, dim, rng)), pos),
                    cefa::nn::ShapeError);
  }
}

TEST_CASE("context loss over scopes") {
  Config c = CtxConfig();
  ContextBranch masked_only(c, 8, 4, 23);
  Config c2 = CtxConfig();
  c2.set("ctx.loss_scope", "all_patches");
  ContextBranch all_patches(c2, 8, 4, 23);

  // 1x2 grid; patch 0 masked (choose the seed so that holds).
  MaskPlan plan;
  plan.rows = 1;
  plan.cols = 2;
  plan.sigma = 0.5;
  plan.mask = {true, false};
  int pp = 4 * 4 * 3;
  Matrix target = Matrix::Constant(2, pp, 0.25);

  SUBCASE("perfect reconstruction costs zero") {
    Graph g(false);
    Var recon = g.input(target);
    CHECK(g.value(masked_only.context_loss(g, recon, target, plan))(0, 0) == 0.0);
    CHECK(g.value(all_patches.context_loss(g, recon, target, plan))(0, 0) == 0.0);
  }
  SUBCASE("constant error 0.5 on the single masked patch costs 0.25") {
    Matrix recon = target;
    recon.row(0).array() += 0.5;
    Graph g(false);
    double got =
        g.value(masked_only.context_loss(g, g.input(recon), target, plan))(0, 0);
    CHECK(got == doctest::Approx(0.25).epsilon(1e-12));
    // all_patches averages the same squared error over both patches.
    double all =
        g.value(all_patches.context_loss(g, g.input(recon), target, plan))(0, 0);
    CHECK(all == doctest::Approx(0.125).epsilon(1e-12));
  }
  SUBCASE("scope decomposition holds on random instances") {
    cefa::Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      MaskPlan p = MakeMaskPlan(3, 3, 0.6, 100 + trial);
      Matrix t = RandomMatrix(9, pp, rng);
      Matrix r = RandomMatrix(9, pp, rng);
      Graph g(false);
      double lm =
          g.value(masked_only.context_loss(g, g.input(r), t, p))(0, 0);
      double la =
          g.value(all_patches.context_loss(g, g.input(r), t, p))(0, 0);
      double unmasked_mse = 0;
      for (int i : p.visible_indices())
        unmasked_mse += (r.row(i) - t.row(i)).squaredNorm() / pp;
      unmasked_mse /= p.visible_indices().size();
      double m = p.masked_count(), n = p.num_patches();
      CHECK(la == doctest::Approx((m / n) * lm + ((n - m) / n) * unmasked_mse)
                      .epsilon(1e-12));
      CHECK(lm >= 0.0);
    }
  }
  SUBCASE("plan mismatch is rejected") {
    Graph g(false);
    MaskPlan bad = MakeMaskPlan(2, 2, 0.5, 0);
    CHECK_THROWS_AS(masked_only.context_loss(g, g.input(target), target, bad),
                    cefa::nn::ShapeError);
  }
}

TEST_CASE("full branch loss wires the stages together") {
  Config c = CtxConfig();
  int dim = 8, patch = 4;
  ContextBranch branch(c, dim, patch, 29);
  cefa::Rng rng(8);
  datagen::Image gen = RandomImage(12, rng);
  MaskPlan plan = MakeMaskPlan(3, 3, 0.8, 31);
  Matrix pos = nn::SinusoidalGridEncoding(3, 3, dim);
  Matrix x_src = RandomMatrix(9, dim, rng);
  Matrix x_mask = RandomMatrix(9, dim, rng);

  Graph g;
  Var loss = branch.branch_loss(g, g.input_tracked(x_src), g.input(x_mask),
                                gen, plan, pos);
  double v = g.value(loss)(0, 0);
  CHECK(v >= 0.0);
  CHECK(std::isfinite(v));

  // Gradients reach the reconstruction stack.
  g.backward(loss);
  double total = 0;
  for (auto* p : branch.params()) total += p->grad.cwiseAbs().sum();
  CHECK(total > 0.0);
  // The hard gate means controller parameters receive exactly zero gradient.
  for (auto* p : branch.params()) {
    if (p->name.rfind("ctx.controller", 0) == 0 ||
        p->name.rfind("ctx.sign_head", 0) == 0) {
      CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
    }
  }
  for (auto* p : branch.params()) p->zero_grad();
}

}  // namespace
}  // namespace cefa::context
