#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/weights.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coresketch;

TEST_CASE("exact_leverage closed forms") {
  DenseMatrix q = tu::orthonormal_columns(6, 6, 1);
  Vector tau = exact_leverage(q);
  for (Index i = 0; i < 6; ++i) CHECK(tau[i] == doctest::Approx(1.0).epsilon(1e-9));

  DenseMatrix stacked = DenseMatrix::Zero(8, 4);
  stacked.topRows(4) = DenseMatrix::Identity(4, 4);
  Vector t2 = exact_leverage(stacked);
  for (Index i = 0; i < 4; ++i) CHECK(t2[i] == doctest::Approx(1.0));
  for (Index i = 4; i < 8; ++i) CHECK(t2[i] == doctest::Approx(0.0));

  DenseMatrix a = tu::random_matrix(100, 8, 2);
  CHECK(exact_leverage(a).sum() == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("exact_ridge_leverage closed forms") {
  DenseMatrix l = tu::random_matrix(30, 3, 3), r = tu::random_matrix(10, 3, 4);
  DenseMatrix rank3 = l * r.transpose();
  Vector ridge = exact_ridge_leverage(rank3, 3);
  Vector lev = exact_leverage(rank3);
  CHECK((ridge - lev).cwiseAbs().maxCoeff() < 1e-8);

  const Index d = 8;
  DenseMatrix eye = DenseMatrix::Identity(d, d);
  Vector t = exact_ridge_leverage(eye, d / 2);
  // lambda = (d/2)/(d/2) = 1, every score 1/2
  for (Index i = 0; i < d; ++i) CHECK(t[i] == doctest::Approx(0.5));
  CHECK(t.sum() == doctest::Approx(static_cast<double>(d) / 2));

  DenseMatrix a = tu::random_matrix(100, 20, 5);
  CHECK(exact_ridge_leverage(a, 5).sum() <= 10.0 + 1e-9);
}

TEST_CASE("lewis_weights p=2 degeneracy and identity") {
  DenseMatrix a = tu::random_matrix(40, 6, 6);
  LewisState st = lewis_weights(a, 2.0);
  Vector lev = exact_leverage(a);
  CHECK((st.weights - lev).cwiseAbs().maxCoeff() < 1e-8);

  DenseMatrix eye = DenseMatrix::Identity(5, 5);
  for (double p : {1.0, 1.5, 3.0}) {
    LewisState s = lewis_weights(eye, p);
    for (Index i = 0; i < 5; ++i) CHECK(s.weights[i] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("lewis_weights fixed point at p=1") {
  DenseMatrix a = tu::random_matrix(60, 5, 11);
  LewisState st = lewis_weights(a, 1.0, 1e-8, 500);
  CHECK(st.residual <= 1e-6);
  CHECK(st.weights.sum() == doctest::Approx(5.0).epsilon(1e-4 / 5.0));

  // verify the fixed point by direct substitution
  const Index n = a.rows(), d = a.cols();
  Vector we(n);
  for (Index i = 0; i < n; ++i) we[i] = std::pow(st.weights[i], 1.0 - 2.0 / 1.0);
  DenseMatrix g = a.transpose() * we.asDiagonal() * a;
  DenseMatrix ginv = g.ldlt().solve(DenseMatrix::Identity(d, d));
  for (Index i = 0; i < n; ++i) {
    const double v = a.row(i) * ginv * a.row(i).transpose();
    CHECK(std::pow(st.weights[i], 2.0) == doctest::Approx(v).epsilon(1e-5));
  }
}

TEST_CASE("lewis_weights error paths") {
  DenseMatrix rank_def = DenseMatrix::Zero(10, 3);
  rank_def.col(0).setOnes();
  CHECK_THROWS_AS(lewis_weights(rank_def, 1.0), ContractError);

  DenseMatrix a = tu::random_matrix(50, 4, 13);
  CHECK_THROWS_AS(lewis_weights(a, 1.0, 1e-14, 1), ConvergenceError);
  try {
    lewis_weights(a, 1.0, 1e-14, 1);
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("leverage_against_subset") {
  DenseMatrix a = tu::random_matrix(30, 4, 17);
  std::vector<std::uint32_t> all(30);
  for (int i = 0; i < 30; ++i) all[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
  Vector full = leverage_against_subset(a, all);
  Vector lev = exact_leverage(a);
  CHECK((full - lev).cwiseAbs().maxCoeff() < 1e-8);

  // orthogonal row outside the subset has weight exactly 1
  DenseMatrix b = DenseMatrix::Zero(5, 3);
  b(0, 0) = 1.0;
  b(1, 0) = 2.0;
  b(2, 1) = 1.0;
  b(3, 1) = -1.0;
  b(4, 2) = 4.0;  // only row touching coordinate 2
  Vector w = leverage_against_subset(b, {0, 1, 2, 3});
  CHECK(w[4] == doctest::Approx(1.0));

  // domination: subset-relative weights upper bound the full leverage
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    DenseMatrix m = tu::random_matrix(80, 6, seed);
    tu::RngStream rng(seed + 100);
    std::vector<std::uint32_t> half;
    for (int i = 0; i < 80; ++i)
      if (rng.next_double() < 0.5) half.push_back(static_cast<std::uint32_t>(i));
    if (half.size() < 6) continue;
    Vector prime = leverage_against_subset(m, half);
    Vector base = exact_leverage(m);
    for (Index i = 0; i < 80; ++i) CHECK(prime[i] >= base[i] - 1e-9);
  }
}

TEST_CASE("leverage oracle: exact regime") {
  DenseMatrix eye = DenseMatrix::Identity(4, 4);
  WeightOracleState st = leverage_preprocess(eye, 1000, kDefaultJlFactor, 1);
  Vector e1 = Vector::Zero(4);
  e1[0] = 1.0;
  CHECK(st.query(e1) == doctest::Approx(1.0).epsilon(0.5));

  // query in the kernel of C evaluates to zero
  DenseMatrix c = DenseMatrix::Zero(5, 3);
  c.col(0).setOnes();
  c(1, 1) = 2.0;
  WeightOracleState st2 = leverage_preprocess(c, 100, kDefaultJlFactor, 2);
  Vector kernel_vec = Vector::Zero(3);
  kernel_vec[2] = 1.0;
  CHECK(st2.query(kernel_vec) <= 1e-8);

  DenseMatrix m = tu::random_matrix(200, 10, 23);
  WeightOracleState st3 = leverage_preprocess(m, 1000, kDefaultJlFactor, 3);
  DenseMatrix gram_pinv = pseudoinverse(m.transpose() * m);
  DenseMatrix queries = tu::random_matrix(1000, 10, 24);
  for (Index i = 0; i < queries.rows(); ++i) {
    Vector q = queries.row(i).transpose();
    const double exact = q.dot(gram_pinv * q);
    const double got = st3.query(q);
    CHECK(got >= exact - 1e-9 * std::abs(exact));
    CHECK(got <= 2.0 * exact + 1e-12);
  }
}

TEST_CASE("leverage oracle: sketched regime never underestimates") {
  // Force the sketch to bind: rank 60 but only ~7 sketch rows.
  DenseMatrix c = tu::random_matrix(100, 60, 31);
  WeightOracleState st = leverage_preprocess(c, 100, 1, 31);
  CHECK(st.eps0 > 0.0);
  DenseMatrix gram_pinv = pseudoinverse(c.transpose() * c);
  DenseMatrix queries = tu::random_matrix(500, 60, 32);
  for (Index i = 0; i < queries.rows(); ++i) {
    Vector q = queries.row(i).transpose();
    const double exact = q.dot(gram_pinv * q);
    CHECK(st.query(q) >= exact * (1.0 - 1e-9));
  }
}

TEST_CASE("lewis oracle") {
  DenseMatrix c = tu::random_matrix(200, 8, 41);
  WeightOracleState lp2 = lewis_preprocess(c, 2.0, 500, kDefaultJlFactor, 41);
  WeightOracleState l2 = leverage_preprocess(c, 500, kDefaultJlFactor, 41);
  DenseMatrix queries = tu::random_matrix(100, 8, 42);
  for (Index i = 0; i < queries.rows(); ++i) {
    Vector q = queries.row(i).transpose();
    CHECK(lp2.query(q) == doctest::Approx(l2.query(q)).epsilon(1e-6));
  }

  DenseMatrix eye = DenseMatrix::Identity(4, 4);
  WeightOracleState one = lewis_preprocess(eye, 1.0, 100, kDefaultJlFactor, 5);
  Vector e1 = Vector::Zero(4);
  e1[0] = 1.0;
  CHECK(one.query(e1) == doctest::Approx(1.0).epsilon(0.5));

  // factor-2 agreement with the exact dense quadratic form at p=1
  WeightOracleState st = lewis_preprocess(c, 1.0, 500, kDefaultJlFactor, 43);
  DenseMatrix h = lewis_quadratic_form(c, 1.0);
  for (Index i = 0; i < queries.rows(); ++i) {
    Vector q = queries.row(i).transpose();
    const double exact = std::pow(q.dot(h * q), 0.5);
    const double got = st.query(q);
    CHECK(got >= exact * (1.0 - 1e-6));
    CHECK(got <= 2.0 * exact);
  }
}

TEST_CASE("ridge oracle") {
  // rank-k C with in-span query behaves like plain leverage
  DenseMatrix l = tu::random_matrix(40, 3, 51), r = tu::random_matrix(12, 3, 52);
  DenseMatrix c = l * r.transpose();
  WeightOracleState st = ridge_preprocess(c, 3, 200, kDefaultJlFactor, 51);
  DenseMatrix gram_pinv = pseudoinverse(c.transpose() * c);
  Vector in_span = c.row(5).transpose();
  CHECK(st.query(in_span) == doctest::Approx(in_span.dot(gram_pinv * in_span)).epsilon(1e-6));

  // out-of-span query with zero regularizer is unbounded
  Eigen::JacobiSVD<DenseMatrix> svd(c, Eigen::ComputeThinV);
  Vector orth = tu::random_matrix(12, 1, 53).col(0);
  DenseMatrix v3 = svd.matrixV().leftCols(3);
  orth -= v3 * (v3.transpose() * orth);
  CHECK(std::isinf(st.query(orth)));

  // positive regularizer: orthogonal query evaluates to |a|^2 / lambda
  DenseMatrix full = tu::random_matrix(300, 15, 54);
  WeightOracleState st2 = ridge_preprocess(full, 4, 1000, kDefaultJlFactor, 54);
  RidgeForm form = ridge_quadratic_form(full, 4);
  CHECK(st2.lambda == doctest::Approx(form.lambda));

  DenseMatrix queries = tu::random_matrix(1000, 15, 55);
  for (Index i = 0; i < queries.rows(); ++i) {
    Vector q = queries.row(i).transpose();
    const double exact = q.dot(form.inverse * q);
    const double got = st2.query(q);
    CHECK(got >= exact * (1.0 - 1e-8));
    CHECK(got <= 2.0 * exact);
  }

  // literal variant stays finite and upper bounds the span part
  WeightOracleState lit = ridge_preprocess(full, 4, 1000, kDefaultJlFactor, 54, true);
  Vector q0 = queries.row(0).transpose();
  CHECK(std::isfinite(lit.query(q0)));
  CHECK(lit.query(q0) >= 0.0);
}
