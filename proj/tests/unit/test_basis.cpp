#include <doctest.h>

#include "binsreg/basis.hpp"
#include "binsreg/errors.hpp"
#include "support.hpp"

using namespace binsreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Partition random_partition(std::mt19937_64& gen, int J) {
  std::vector<double> knots{0.0};
  std::uniform_real_distribution<double> u(0.3, 1.7);
  for (int j = 0; j < J; ++j) knots.push_back(knots.back() + u(gen));
  return Partition(knots, Placement::manual, J);
}

// Raw piecewise polynomial basis: (x - t_j)^k on bin j.
MatrixXd raw_design(const Partition& part, int p, const VectorXd& x) {
  const int J = part.bins();
  MatrixXd X = MatrixXd::Zero(x.size(), (p + 1) * J);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int j = part.bin_index(x(i));
    const double d = x(i) - part.knots()[static_cast<std::size_t>(j)];
    for (int k = 0; k <= p; ++k) X(i, j * (p + 1) + k) = std::pow(d, k);
  }
  return X;
}

// Rows of C impose equality of derivatives 0..s-1 across each inner knot.
MatrixXd continuity_constraints(const Partition& part, int p, int s) {
  const int J = part.bins();
  MatrixXd C = MatrixXd::Zero((J - 1) * s, (p + 1) * J);
  for (int j = 1; j < J; ++j) {
    const double h = part.knots()[static_cast<std::size_t>(j)] - part.knots()[static_cast<std::size_t>(j) - 1];
    for (int r = 0; r < s; ++r) {
      const Eigen::Index row = (j - 1) * s + r;
      for (int k = r; k <= p; ++k) {
        double falling = 1.0;
        for (int q = 0; q < r; ++q) falling *= (k - q);
        C(row, (j - 1) * (p + 1) + k) = falling * std::pow(h, k - r);
      }
      C(row, j * (p + 1) + r) -= std::tgamma(r + 1.0);
    }
  }
  return C;
}

}  // namespace

TEST_CASE("basis dimension") {
  CHECK(basis_dimension(0, 0, 20) == 20);
  CHECK(basis_dimension(3, 3, 26) == 29);
  CHECK(basis_dimension(1, 0, 5) == 10);
  CHECK(basis_dimension(2, 1, 3) == 7);
  const Partition p = quantile_partition(VectorXd::LinSpaced(200, 0, 1), 26);
  CHECK(build_basis(p, 3, 3).dimension() == 29);
  CHECK_THROWS_AS(build_basis(p, 1, 2), ConfigError);
  CHECK_THROWS_AS((BasisSpec{1, 1, 2}.validate()), ConfigError);
  CHECK_NOTHROW((BasisSpec{2, 0, 2}.validate()));
}

TEST_CASE("extended knots carry the documented multiplicities") {
  const Partition part({0, 1, 2, 3}, Placement::manual, 3);
  const ConstrainedBasis b(part, 3, 1);
  const auto& e = b.extended_knots();
  CHECK(std::count(e.begin(), e.end(), 0.0) == 4);
  CHECK(std::count(e.begin(), e.end(), 1.0) == 3);
  CHECK(std::count(e.begin(), e.end(), 2.0) == 3);
  CHECK(std::count(e.begin(), e.end(), 3.0) == 4);
}

TEST_CASE("p = s = 0 gives bin indicators") {
  const Partition part({0, 1, 2, 4}, Placement::manual, 3);
  const ConstrainedBasis b(part, 0, 0);
  for (double x0 : {0.0, 0.5, 1.0, 1.99, 2.0, 3.5, 4.0}) {
    const VectorXd e = b.evaluate(x0);
    VectorXd unit = VectorXd::Zero(3);
    unit(part.bin_index(x0)) = 1.0;
    CHECK(e == unit);
  }
  CHECK_THROWS_AS(b.evaluate(4.5), DataError);
  CHECK_THROWS_AS(b.evaluate(1.0, 1), ConfigError);
}

TEST_CASE("property: partition of unity and local support") {
  std::mt19937_64 gen(21);
  for (int p = 0; p <= 4; ++p) {
    for (int s = 0; s <= p; ++s) {
      const Partition part = random_partition(gen, 1 + static_cast<int>(gen() % 8));
      const ConstrainedBasis b(part, p, s);
      for (int k = 0; k <= 200; ++k) {
        const double x0 = k == 200 ? part.upper() : part.lower() + (part.upper() - part.lower()) * k / 200.0;
        const VectorXd e = b.evaluate(x0);
        CHECK(std::abs(e.sum() - 1.0) < 1e-12);
        CHECK((e.array().abs() > 0.0).count() <= p + 1);
        CHECK(e.minCoeff() >= -1e-14);
      }
    }
  }
}

TEST_CASE("property: derivatives match finite differences") {
  std::mt19937_64 gen(22);
  for (int p = 1; p <= 4; ++p) {
    for (int s = 0; s <= p; ++s) {
      const Partition part = random_partition(gen, 4);
      const ConstrainedBasis b(part, p, s);
      for (int v = 1; v <= p; ++v) {
        for (int j = 0; j < part.bins(); ++j) {
          const double a = part.knots()[static_cast<std::size_t>(j)], c = part.knots()[static_cast<std::size_t>(j) + 1];
          for (double frac : {0.23, 0.5, 0.81}) {
            const double x0 = a + frac * (c - a);
            const double h = 1e-5 * (c - a);
            const VectorXd fd = (b.evaluate(x0 + h, v - 1) - b.evaluate(x0 - h, v - 1)) / (2 * h);
            const VectorXd an = b.evaluate(x0, v);
            CHECK((fd - an).norm() <= 1e-6 * std::max(1.0, an.norm()));
          }
        }
      }
    }
  }
}

TEST_CASE("property: derivatives up to s-1 are continuous at inner knots") {
  std::mt19937_64 gen(23);
  for (int p = 1; p <= 4; ++p) {
    for (int s = 1; s <= p; ++s) {
      const Partition part = random_partition(gen, 5);
      const ConstrainedBasis b(part, p, s);
      for (double t : part.inner_knots()) {
        for (int r = 0; r < s; ++r) {
          const VectorXd left = b.evaluate(t - 1e-10, r), right = b.evaluate(t + 1e-10, r);
          CHECK((left - right).lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, left.lpNorm<Eigen::Infinity>()));
        }
      }
    }
  }
}

TEST_CASE("evaluation at knots: right limit inside, left limit at the top") {
  const Partition part({0, 1, 2}, Placement::manual, 2);
  const ConstrainedBasis b(part, 1, 0);
  CHECK((b.evaluate(1.0) - b.evaluate(1.0 + 1e-12)).norm() < 1e-9);
  CHECK((b.evaluate(2.0) - b.evaluate(2.0 - 1e-12)).norm() < 1e-9);
  CHECK(b.evaluate(2.0).sum() == doctest::Approx(1.0));
}

TEST_CASE("oracle: spline space equals explicitly constrained piecewise polynomials") {
  std::mt19937_64 gen(24);
  for (int p = 0; p <= 2; ++p) {
    for (int s = 0; s <= p; ++s) {
      for (int J = 1; J <= 4; ++J) {
        const Partition part = random_partition(gen, J);
        const VectorXd x = support::uniform(gen, 80, part.lower(), part.upper());
        const VectorXd y = support::normal(gen, 80);
        const ConstrainedBasis b(part, p, s);
        const MatrixXd B = b.design(x);
        const VectorXd fit_spline = B * B.colPivHouseholderQr().solve(y);

        const MatrixXd X = raw_design(part, p, x);
        MatrixXd N;
        if (J == 1 || s == 0) {
          N = MatrixXd::Identity(X.cols(), X.cols());
        } else {
          N = continuity_constraints(part, p, s).fullPivLu().kernel();
        }
        CHECK(N.cols() == b.dimension());
        const MatrixXd XN = X * N;
        const VectorXd fit_raw = XN * XN.colPivHouseholderQr().solve(y);
        CHECK((fit_spline - fit_raw).lpNorm<Eigen::Infinity>() <= 1e-8);
      }
    }
  }
}
