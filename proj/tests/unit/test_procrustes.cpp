#include <doctest.h>

#include "compatnet/procrustes.hpp"
#include "compatnet/rng.hpp"
#include "oracles.hpp"

using namespace compatnet;

namespace {

Matrix random_points(Index n, Index d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Matrix::NullaryExpr(n, d, [&] { return g(rng); });
}

} // namespace

TEST_CASE("aligning a configuration to itself") {
  Rng rng(1);
  const Matrix x = random_points(8, 2, rng);
  const auto r = procrustes_align(x, x);
  CHECK(r.residual_rmse <= 1e-12);
  CHECK(r.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((r.rotation - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(r.translation.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("pure rotation is undone") {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix x = random_points(10, 3, rng);
    const Matrix q = oracle::random_orthogonal(3, rng);
    const auto r = procrustes_align(x, x * q);
    CHECK(r.residual_rmse <= 1e-8);
    CHECK(std::abs(r.scale - 1.0) <= 1e-8);
    CHECK((r.rotation.transpose() * r.rotation - Matrix::Identity(3, 3)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("scale, rotation and translation are recovered") {
  Rng rng(3);
  const Matrix x = random_points(12, 2, rng);
  const Matrix q = oracle::random_orthogonal(2, rng);
  const Eigen::RowVector2d t(3.0, -1.5);
  const Matrix target = (2.0 * x * q).rowwise() + t;
  const auto r = procrustes_align(x, target);
  CHECK(std::abs(r.scale - 2.0) <= 1e-8);
  CHECK((r.rotation - q).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((r.translation.transpose() - t).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((r.aligned - target).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("degenerate source maps to the target centroid") {
  Rng rng(4);
  const Matrix src = Matrix::Constant(5, 2, 0.7);
  const Matrix target = random_points(5, 2, rng);
  const auto r = procrustes_align(src, target);
  CHECK(r.scale == 1.0);
  CHECK(r.rotation == Matrix::Identity(2, 2));
  const Vector centroid = target.colwise().mean().transpose();
  CHECK((r.translation - (centroid.array() - 0.7).matrix()).lpNorm<Eigen::Infinity>() <= 1e-12);
  for (Index i = 0; i < 5; ++i) CHECK((r.aligned.row(i).transpose() - centroid).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("alignment never hurts and ignores a pre-rotation") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = random_points(9, 2, rng);
    const Matrix y = random_points(9, 2, rng);
    const auto r = procrustes_align(x, y);
    CHECK(r.residual_rmse <= coordinate_rmse(x, y) + 1e-12);
    const Matrix q0 = oracle::random_orthogonal(2, rng);
    CHECK(std::abs(procrustes_align(x * q0, y).residual_rmse - r.residual_rmse) <= 1e-10);
  }
}

TEST_CASE("joint alignment preserves cross distances up to scale") {
  Rng rng(6);
  const Matrix x = random_points(10, 2, rng);
  const Matrix y = random_points(10, 2, rng);
  const auto r = procrustes_align(x, y);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 5; j < 10; ++j)
      CHECK((r.aligned.row(i) - r.aligned.row(j)).norm() ==
            doctest::Approx(r.scale * (x.row(i) - x.row(j)).norm()).epsilon(1e-12));
}

TEST_CASE("coordinate rmse") {
  const Matrix a = Matrix::Zero(2, 2);
  const Matrix b = Matrix::Ones(2, 2);
  CHECK(coordinate_rmse(a, b) == 1.0);
  CHECK(coordinate_rmse(a, a) == 0.0);
}
