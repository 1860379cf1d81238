#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "orbitpose/objective.hpp"
#include "orbitpose/rng.hpp"

using namespace orbitpose;

namespace {

// Scalar-loop reconstruction oracle: sums elementwise squared differences
// without any linear-algebra shortcuts.
double recon_oracle(const Eigen::MatrixXd& di, const Eigen::MatrixXd& dj,
                    const Eigen::MatrixXd& gi, const Eigen::MatrixXd& gj, int batch_size,
                    bool normalize_pixels) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < di.cols(); ++c)
    for (Eigen::Index r = 0; r < di.rows(); ++r) {
      const double a = di(r, c) - gi(r, c);
      const double b = dj(r, c) - gj(r, c);
      sum += a * a + b * b;
    }
  double denom = 2.0 * static_cast<double>(di.cols()) * batch_size;
  if (normalize_pixels) denom *= static_cast<double>(di.rows());
  return sum / denom;
}

double radius_oracle(double x, double y, double c) {
  return std::abs(c - std::sqrt(x * x + y * y));
}

double pair_oracle(const Eigen::Vector2d& fp1, const Eigen::Vector2d& fp2, int n,
                   const GroupParams& group) {
  const double a = n * group.delta_theta();
  const double rx = fp2.x() - (std::cos(a) * fp1.x() - std::sin(a) * fp1.y());
  const double ry = fp2.y() - (std::sin(a) * fp1.x() + std::cos(a) * fp1.y());
  return std::sqrt(rx * rx + ry * ry);
}

}  // namespace

TEST_CASE("radius_loss closed forms") {
  CHECK(radius_loss({0.8, 0.0}, 0.8) == 0.0);
  CHECK(radius_loss({0.0, 0.0}, 0.8) == 0.8);
  CHECK(radius_loss({0.3, 0.4}, 0.8) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(radius_loss({0.1, 0.1}, 0.0), std::invalid_argument);
}

TEST_CASE("pair_loss closed forms") {
  const GroupParams group(36);
  const LatentGenerator p(group);
  CHECK(pair_loss({0.8, 0.0}, {0.0, 0.8}, 9, p) < 1e-9);
  CHECK(pair_loss({0.12, -0.77}, {0.12, -0.77}, 0, p) == 0.0);
  CHECK(pair_loss({0.8, 0.0}, {0.8, 0.0}, 18, p) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("recon_loss closed form and oracle equivalence") {
  SUBCASE("perfect reconstruction") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 4);
    CHECK(recon_loss(x, x, x, x, 3) == 0.0);
  }
  SUBCASE("one branch off by 0.1 everywhere, K=1, N_b=1") {
    const int dim = 48;
    const Eigen::MatrixXd gt = Eigen::MatrixXd::Constant(dim, 1, 0.5);
    const Eigen::MatrixXd off = Eigen::MatrixXd::Constant(dim, 1, 0.6);
    CHECK(recon_loss(off, gt, gt, gt, 1) ==
          doctest::Approx(0.1 * 0.1 * dim / 2.0).epsilon(1e-12));
  }
  SUBCASE("random tensors match the scalar-loop oracle within 1e-12") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const int rows = 3 + static_cast<int>(rng.below(20));
      const int cols = 1 + static_cast<int>(rng.below(6));
      const int batch = 1 + static_cast<int>(rng.below(8));
      Eigen::MatrixXd di(rows, cols), dj(rows, cols), gi(rows, cols), gj(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
          di(r, c) = rng.uniform();
          dj(r, c) = rng.uniform();
          gi(r, c) = rng.uniform();
          gj(r, c) = rng.uniform();
        }
      for (bool norm : {false, true}) {
        const double got = recon_loss(di, dj, gi, gj, batch, norm);
        const double want = recon_oracle(di, dj, gi, gj, batch, norm);
        CHECK(std::abs(got - want) < 1e-12);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 2);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 3);
    CHECK_THROWS_AS(recon_loss(a, a, b, a, 1), std::invalid_argument);
  }
}

TEST_CASE("radius and pair losses match scalar oracles on random inputs") {
  const GroupParams group(36);
  const LatentGenerator p(group);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector2d fp1(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector2d fp2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double c = rng.uniform(0.1, 0.95);
    const int n = static_cast<int>(rng.below(36));
    CHECK(std::abs(radius_loss(fp1, c) - radius_oracle(fp1.x(), fp1.y(), c)) < 1e-12);
    CHECK(std::abs(pair_loss(fp1, fp2, n, p) - pair_oracle(fp1, fp2, n, group)) < 1e-12);
  }
}

TEST_CASE("pair_loss is invariant under joint rotation") {
  const GroupParams group(36);
  const LatentGenerator p(group);
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector2d fp1(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector2d fp2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const int n = static_cast<int>(rng.below(36));
    const int k = static_cast<int>(rng.below(36));
    const double base = pair_loss(fp1, fp2, n, p);
    const double rotated =
        pair_loss(apply_power(p, k, fp1), apply_power(p, k, fp2), n, p);
    CHECK(std::abs(base - rotated) < 1e-9);
  }
}

TEST_CASE("losses are zero exactly when their conditions hold") {
  const GroupParams group(36);
  const LatentGenerator p(group);
  // On-circle pose: zero radius loss.
  CHECK(radius_loss({0.8 * std::cos(1.1), 0.8 * std::sin(1.1)}, 0.8) < 1e-12);
  // Slightly off: strictly positive.
  CHECK(radius_loss({0.81, 0.0}, 0.8) > 1e-3);
  CHECK(pair_loss({0.4, 0.1}, apply_power(p, 7, {0.4, 0.1}), 7, p) < 1e-12);
  CHECK(pair_loss({0.4, 0.1}, apply_power(p, 8, {0.4, 0.1}), 7, p) > 1e-3);
}

TEST_CASE("total_loss weighting") {
  SUBCASE("zeros") {
    const LossReport r = total_loss(0, 0, 0, LossWeights{100, 1, 3});
    CHECK(r.total == 0.0);
  }
  SUBCASE("stage-1 weights") {
    const LossReport r = total_loss(0.01, 0.1, 0.2, LossWeights{100, 1, 3});
    CHECK(r.total == doctest::Approx(1.7).epsilon(1e-12));
  }
  SUBCASE("stage-2 weights") {
    const LossReport r = total_loss(0.01, 0.1, 0.2, LossWeights{100, 1, 5});
    CHECK(r.total == doctest::Approx(2.1).epsilon(1e-12));
  }
  SUBCASE("report invariant: total equals the recomputed weighted sum") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const LossWeights w{rng.uniform(0, 200), rng.uniform(0, 5), rng.uniform(0, 10)};
      const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
      const LossReport r = total_loss(a, b, c, w);
      CHECK(std::abs(r.total - (w.beta1 * r.recon + w.beta2 * r.radius + w.beta3 * r.pair)) <
            1e-12);
      CHECK(r.recon >= 0.0);
      CHECK(r.radius >= 0.0);
      CHECK(r.pair >= 0.0);
    }
  }
  SUBCASE("weights validation") {
    CHECK_THROWS_AS((LossWeights{-1, 0, 0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((LossWeights{1, std::nan(""), 0}.validate()), std::invalid_argument);
  }
}

TEST_CASE("batch_loss equals recomputation from the op-level losses") {
  // Builds a tiny two-pair batch and cross-checks batch_loss against the
  // individual loss operations composed by hand.
  ModelConfig cfg;
  cfg.image_size = 4;
  cfg.channels = 1;
  cfg.d_id = 3;
  cfg.hidden_sizes = {6};
  cfg.group = GroupParams(4);
  const ModelParams params = init_params(cfg, 8);
  const LatentGenerator gen(cfg.group);

  Rng rng(55);
  Eigen::MatrixXd views(cfg.input_dim(), 4);
  for (Eigen::Index c = 0; c < views.cols(); ++c)
    for (Eigen::Index r = 0; r < views.rows(); ++r) views(r, c) = rng.uniform();

  Batch batch;
  batch.pairs.push_back(TrainingPair{&views, 0, 3, 3});
  batch.pairs.push_back(TrainingPair{&views, 2, 2, 0});

  const LossWeights w{100, 1, 3};
  const ObjectiveOptions opt{false};
  const LossReport got = batch_loss(batch, params, cfg, w, opt);

  double recon = 0.0, radius = 0.0, pairs = 0.0;
  for (const auto& tp : batch.pairs) {
    const LatentCode ci = encode(views.col(tp.pose_i), params, cfg);
    const LatentCode cj = encode(views.col(tp.pose_j), params, cfg);
    radius += radius_loss(ci.f_pose, cfg.c) + radius_loss(cj.f_pose, cfg.c);
    pairs += pair_loss(ci.f_pose, cj.f_pose, tp.n_steps, gen);

    const auto [si, sj] = swap_pose_units(ci, cj);
    Eigen::MatrixXd dec_i =
        decode_batch(assemble_decoder_matrix(si.f_id, generate_orbit(si.f_pose, gen)),
                     params, cfg, nullptr);
    Eigen::MatrixXd dec_j =
        decode_batch(assemble_decoder_matrix(sj.f_id, generate_orbit(sj.f_pose, gen)),
                     params, cfg, nullptr);
    Eigen::MatrixXd gt_i(views.rows(), 4), gt_j(views.rows(), 4);
    for (int k = 0; k < 4; ++k) {
      gt_i.col(k) = views.col((tp.pose_j + k) % 4);  // branch i holds pose j
      gt_j.col(k) = views.col((tp.pose_i + k) % 4);
    }
    recon += recon_loss(dec_i, dec_j, gt_i, gt_j,
                        static_cast<int>(batch.pairs.size()), false);
  }
  radius /= 2.0 * static_cast<double>(batch.pairs.size());
  pairs /= static_cast<double>(batch.pairs.size());

  CHECK(got.recon == doctest::Approx(recon).epsilon(1e-12));
  CHECK(got.radius == doctest::Approx(radius).epsilon(1e-12));
  CHECK(got.pair == doctest::Approx(pairs).epsilon(1e-12));
  CHECK(got.total ==
        doctest::Approx(w.beta1 * recon + w.beta2 * radius + w.beta3 * pairs)
            .epsilon(1e-12));
}
