#include <algorithm>
#include <cmath>
#include <complex>

#include "catch_amalgamated.hpp"
#include "outlab/eigen_qr.hpp"
#include "outlab/ensembles.hpp"

using namespace outlab;

namespace {

struct Moments {
  double mean_abs;      // |sample mean|
  double second_moment; // mean of |draw|^2
};

Moments atom_moments(const AtomDistribution& atom, std::size_t count) {
  Rng r = SeedPolicy{901}.stream(0);
  Complex sum(0.0, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    Complex d = atom.draw(r);
    sum += d;
    sq += std::norm(d);
  }
  double inv = 1.0 / static_cast<double>(count);
  return {std::abs(sum) * inv, sq * inv};
}

}  // namespace

TEST_CASE("every atom distribution is centered with unit variance", "[ensembles]") {
  const std::size_t count = 1000000;
  for (AtomDistribution atom : {AtomDistribution::rademacher(), AtomDistribution::gaussian_real(),
                                AtomDistribution::gaussian_complex(),
                                AtomDistribution::uniform_bounded()}) {
    Moments m = atom_moments(atom, count);
    INFO(atom.name());
    CHECK(m.mean_abs < 5e-3);
    CHECK(std::abs(m.second_moment - 1.0) < 0.01);
  }
}

TEST_CASE("atom draws respect their support", "[ensembles]") {
  Rng r = SeedPolicy{902}.stream(0);
  AtomDistribution rad = AtomDistribution::rademacher();
  AtomDistribution uni = AtomDistribution::uniform_bounded(0.7);
  for (int i = 0; i < 20000; ++i) {
    Complex d = rad.draw(r);
    REQUIRE((d == Complex(1.0, 0.0) || d == Complex(-1.0, 0.0)));
    Complex u = uni.draw(r);
    REQUIRE(u.imag() == 0.0);
    REQUIRE(std::abs(u) <= 0.7);
  }
  REQUIRE_THROWS_AS(AtomDistribution::uniform_bounded(0.0), invalid_argument_error);
  REQUIRE_THROWS_AS(atom_from_name("cauchy"), invalid_argument_error);
}

TEST_CASE("matrix draws are a pure function of seed and trial", "[ensembles]") {
  SeedPolicy seed{77};
  Matrix a = sample_iid_matrix(2, AtomDistribution::rademacher(), seed, 0);
  Matrix b = sample_iid_matrix(2, AtomDistribution::rademacher(), seed, 0);
  REQUIRE((a - b).frobenius_norm() == 0.0);
  // distinct trials draw fresh entries; 64 sign bits cannot collide by luck
  Matrix c = sample_iid_matrix(8, AtomDistribution::rademacher(), seed, 1);
  Matrix d = sample_iid_matrix(8, AtomDistribution::rademacher(), seed, 2);
  REQUIRE((c - d).frobenius_norm() != 0.0);
  REQUIRE_THROWS_AS(sample_iid_matrix(0, AtomDistribution::rademacher(), seed, 0),
                    invalid_argument_error);
}

TEST_CASE("large draws have the declared entry statistics", "[ensembles]") {
  SeedPolicy seed{55};
  Matrix sgn = sample_iid_matrix(1000, AtomDistribution::rademacher(), seed, 0);
  for (std::size_t i = 0; i < 1000; ++i)
    for (std::size_t j = 0; j < 1000; ++j)
      REQUIRE((sgn(i, j) == Complex(1.0, 0.0) || sgn(i, j) == Complex(-1.0, 0.0)));

  Matrix g = sample_iid_matrix(1000, AtomDistribution::gaussian_real(), seed, 1);
  double sq = 0.0;
  for (std::size_t i = 0; i < 1000; ++i)
    for (std::size_t j = 0; j < 1000; ++j) sq += std::norm(g(i, j));
  REQUIRE(std::abs(sq / 1e6 - 1.0) < 0.1);
}

TEST_CASE("the flat unit vector is normalized", "[ensembles]") {
  Vector v = unit_ones_vector(4);
  for (Complex x : v) REQUIRE(x == Complex(0.5, 0.0));
  REQUIRE(std::abs(norm2(unit_ones_vector(37)) - 1.0) < 1e-14);
  REQUIRE(unit_ones_vector(1)[0] == Complex(1.0, 0.0));
}

TEST_CASE("diagonal payload factors reconstruct the embedded diagonal", "[ensembles]") {
  auto [a, b] = low_rank_from_diag(3, {Complex(5.0, 0.0)});
  Matrix ab = a * b;
  REQUIRE(ab(0, 0) == Complex(5.0, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != 0 || j != 0) REQUIRE(ab(i, j) == Complex(0.0, 0.0));

  REQUIRE_THROWS_AS(low_rank_from_diag(2, {1.0, 2.0, 3.0}), invalid_argument_error);
}

TEST_CASE("nonzero spectrum of the diagonal payload matches the request", "[ensembles]") {
  const std::vector<Complex> leading{Complex(2.0, 1.0), Complex(3.0, 0.0), Complex(2.0, 0.0)};
  auto [a, b] = low_rank_from_diag(200, leading);
  auto eigs = eigenvalues(a * b);
  std::vector<Complex> nonzero;
  for (Complex e : eigs)
    if (std::abs(e) > 1e-8) nonzero.push_back(e);
  REQUIRE(nonzero.size() == 3);
  auto key = [](Complex u, Complex v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  };
  std::sort(nonzero.begin(), nonzero.end(), key);
  std::vector<Complex> want = leading;
  std::sort(want.begin(), want.end(), key);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(std::abs(nonzero[i] - want[i]) < 1e-10);
}

TEST_CASE("empty payload gives a rank zero factor pair", "[ensembles]") {
  auto [a, b] = low_rank_from_diag(4, {});
  REQUIRE(a.cols() == 0);
  REQUIRE(b.rows() == 0);
  PerturbedModel model{4, Matrix(4, 4), std::move(a), std::move(b), "empty"};
  REQUIRE(model.assembled().frobenius_norm() == 0.0);
}

TEST_CASE("mean shift factors carry mu sqrt(n) on the flat direction", "[ensembles]") {
  auto [a, b] = mean_shift_factors(4, Complex(1.0, 0.0));
  Matrix ab = a * b;
  // every entry of mu*sqrt(n)*phi phi* is mu/sqrt(n), here 1/2
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(std::abs(ab(i, j) - Complex(0.5, 0.0)) < 1e-15);

  // rank one, so the only nonzero eigenvalue is the trace mu*sqrt(n)
  auto [a50, b50] = mean_shift_factors(50, Complex(1.0, 0.0));
  Complex lam = (b50 * a50)(0, 0);
  REQUIRE(std::abs(lam - std::sqrt(50.0)) < 1e-12);

  auto [ac, bc] = mean_shift_factors(9, Complex(2.0, -1.0));
  Complex lamc = (bc * ac)(0, 0);
  REQUIRE(std::abs(lamc - Complex(6.0, -3.0)) < 1e-12);
}

TEST_CASE("random right factor takes the two stated values with matching moments",
          "[ensembles]") {
  SeedPolicy seed{11};
  const double p = 0.25;
  auto [a, b] = balanced_two_point_factors(1000000, 2.0, p, seed, 3);
  const double sqrt_n = 1000.0;
  const double hi = std::sqrt(3.0), lo = -1.0 / std::sqrt(3.0);
  double sum = 0.0, sq = 0.0;
  std::size_t hits_hi = 0;
  for (std::size_t j = 0; j < 1000000; ++j) {
    REQUIRE(a(j, 0) == Complex(2.0, 0.0));  // mu*sqrt(n)*phi entry = mu
    double s = b(0, j).real() * sqrt_n;
    REQUIRE(b(0, j).imag() == 0.0);
    bool is_hi = std::abs(s - hi) < 1e-12;
    bool is_lo = std::abs(s - lo) < 1e-12;
    REQUIRE((is_hi || is_lo));
    hits_hi += is_hi ? 1 : 0;
    sum += s;
    sq += s * s;
  }
  REQUIRE(std::abs(sum / 1e6) < 5e-3);
  REQUIRE(std::abs(sq / 1e6 - 1.0) < 0.01);
  REQUIRE(std::abs(static_cast<double>(hits_hi) / 1e6 - p) < 2e-3);
  REQUIRE_THROWS_AS(balanced_two_point_factors(5, 1.0, 1.0, seed, 0), invalid_argument_error);
}

TEST_CASE("row sum projector is the hyperplane projection", "[ensembles]") {
  Matrix p = row_sum_projector(2);
  REQUIRE(p(0, 0) == Complex(0.5, 0.0));
  REQUIRE(p(0, 1) == Complex(-0.5, 0.0));
  REQUIRE(p(1, 0) == Complex(-0.5, 0.0));
  REQUIRE(p(1, 1) == Complex(0.5, 0.0));

  Matrix q = row_sum_projector(31);
  REQUIRE((q * q - q).max_abs() < 1e-13);
  REQUIRE((q.adjoint() - q).max_abs() == 0.0);
  Vector phi = unit_ones_vector(31);
  REQUIRE(norm2(q.apply(phi)) < 1e-14);
}

TEST_CASE("assembled dense operator agrees with the factored action", "[ensembles]") {
  SeedPolicy seed{19};
  auto [a0, b0] = low_rank_from_diag(2, {Complex(3.0, 0.0)});
  PerturbedModel zero{2, Matrix(2, 2), std::move(a0), std::move(b0), "x zero"};
  Matrix dz = zero.assembled();
  REQUIRE(dz(0, 0) == Complex(3.0, 0.0));
  REQUIRE(dz(0, 1) == Complex(0.0, 0.0));
  REQUIRE(dz(1, 0) == Complex(0.0, 0.0));
  REQUIRE(dz(1, 1) == Complex(0.0, 0.0));

  const std::size_t n = 5;
  Matrix x = sample_iid_matrix(n, AtomDistribution::gaussian_complex(), seed, 0);
  auto [a, b] = mean_shift_factors(n, Complex(0.5, 0.25));
  PerturbedModel model{n, x, a, b, "dense check"};
  Matrix dense = model.assembled();
  const double inv_sqrt_n = 1.0 / std::sqrt(5.0);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, Complex(0.0, 0.0));
    e[j] = 1.0;
    Vector via_dense = dense.apply(e);
    Vector via_factors = x.apply(e);
    scale(via_factors, Complex(inv_sqrt_n, 0.0));
    Vector tail = a.apply(b.apply(e));
    for (std::size_t i = 0; i < n; ++i)
      REQUIRE(std::abs(via_dense[i] - (via_factors[i] + tail[i])) < 1e-13);
  }

  PerturbedModel bare{n, x, Matrix(n, 0), Matrix(0, n), "no perturbation"};
  Matrix xs = bare.assembled();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      REQUIRE(std::abs(xs(i, j) - x(i, j) * inv_sqrt_n) < 1e-16);
}
