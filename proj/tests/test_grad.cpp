#include "test_support.hpp"

#include "hcap/grad.hpp"

#include <doctest.h>

using namespace hcap;
using namespace hcap::test;

namespace {

// 0.5 xᵀ Q x + bᵀ x over one block "x"
class Quadratic : public Objective {
 public:
  Quadratic(Eigen::MatrixXd q, Eigen::VectorXd b) : q_(std::move(q)), b_(std::move(b)) {}
  std::vector<std::string> blockNames() const override {
    return {"x"};
  }
  double evaluate(const ParamBlocks& p, BlockGradients* grad) const override {
    const auto& x = p["x"];
    if (grad) {
      (*grad)["x"] = q_ * x + b_;
    }
    return 0.5 * x.dot(q_ * x) + b_.dot(x);
  }
  std::string name() const override {
    return "quadratic";
  }

 private:
  Eigen::MatrixXd q_;
  Eigen::VectorXd b_;
};

class Constant : public Objective {
 public:
  std::vector<std::string> blockNames() const override {
    return {"x", "y"};
  }
  double evaluate(const ParamBlocks&, BlockGradients* grad) const override {
    if (grad) {
      (*grad)["x"] = Eigen::VectorXd::Zero(3);
      (*grad)["y"] = Eigen::VectorXd::Zero(2);
    }
    return 7.0;
  }
  std::string name() const override {
    return "constant";
  }
};

std::shared_ptr<Quadratic> randomQuadratic(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    b[i] = g(rng);
    for (int j = 0; j < n; ++j) {
      a(i, j) = g(rng);
    }
  }
  return std::make_shared<Quadratic>(a * a.transpose() + Eigen::MatrixXd::Identity(n, n), b);
}

ParamBlocks blocksX(const Eigen::VectorXd& x) {
  ParamBlocks p;
  p.add("x", x);
  return p;
}

} // namespace

TEST_SUITE("grad") {

TEST_CASE("quadratic objective passes finite differences to 1e-10") {
  std::mt19937_64 rng(1);
  auto q = randomQuadratic(rng, 6);
  const auto report = fdCheck(*q, blocksX(Eigen::VectorXd::Random(6)));
  CHECK(report.worst < 1e-10);
}

TEST_CASE("zero-gradient point reports an absolute error") {
  CHECK(gradientError(Eigen::Vector2d(1e-12, 0.0), Eigen::Vector2d(0.0, 3e-12)) == doctest::Approx(3e-12));
  CHECK(gradientError(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 2.2)) == doctest::Approx(0.2 / 2.2));
  std::mt19937_64 rng(2);
  auto q = randomQuadratic(rng, 4);
  // stationary point x* = -Q⁻¹ b
  Eigen::MatrixXd qm(4, 4);
  Eigen::VectorXd b(4);
  BlockGradients g;
  q->evaluate(blocksX(Eigen::VectorXd::Zero(4)), &g);
  b = g["x"];
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
    e[i] = 1.0;
    q->evaluate(blocksX(e), &g);
    qm.col(i) = g["x"] - b;
  }
  const Eigen::VectorXd star = -qm.ldlt().solve(b);
  const auto report = fdCheck(*q, blocksX(star));
  CHECK(report.worst < 1e-8);
}

TEST_CASE("constant objective has zero gradient") {
  Constant c;
  ParamBlocks p;
  p.add("x", Eigen::VectorXd::Ones(3));
  p.add("y", Eigen::VectorXd::Ones(2));
  const auto g = gradient(c, p);
  CHECK(g.at("x").norm() == 0.0);
  CHECK(g.at("y").norm() == 0.0);
  CHECK(fdCheck(c, p).worst == 0.0);
}

TEST_CASE("limit gradient at theta max + 0.1 is 0.2") {
  Skeleton s = rootOnlySkeleton(1);
  LimitObjective lim(s);
  Eigen::VectorXd theta = Eigen::Vector3d(1.1, 0.0, 0.0);
  const auto g = gradient(lim, poseBlocks(theta, Vec3::Zero()));
  CHECK(g.at("theta")[0] == doctest::Approx(0.2));
  CHECK(g.at("theta")[1] == 0.0);
}

TEST_CASE("gradient of a weighted sum is the weighted sum of gradients") {
  std::mt19937_64 rng(3);
  auto a = randomQuadratic(rng, 5);
  auto b = randomQuadratic(rng, 5);
  WeightedSum sum;
  sum.add(0.3, a);
  sum.add(-2.0, b);
  const auto p = blocksX(Eigen::VectorXd::Random(5));
  const auto gs = gradient(sum, p).at("x");
  const Eigen::VectorXd expect = 0.3 * gradient(*a, p).at("x") - 2.0 * gradient(*b, p).at("x");
  CHECK((gs - expect).cwiseAbs().maxCoeff() < 1e-12);
  const auto parts = sum.components(p);
  CHECK(sum.evaluate(p, nullptr) == doctest::Approx(0.3 * parts[0] - 2.0 * parts[1]));
}

TEST_CASE("inactive entries get zero gradient") {
  std::mt19937_64 rng(4);
  auto q = randomQuadratic(rng, 4);
  auto p = blocksX(Eigen::VectorXd::Random(4));
  p.block("x").active[2] = 0;
  const auto g = gradient(*q, p);
  CHECK(g.at("x")[2] == 0.0);
  CHECK(g.at("x")[1] != 0.0);
  p.setActive("x", false);
  CHECK(gradient(*q, p).at("x").norm() == 0.0);
}

TEST_CASE("value-only objectives are rejected by gradient()") {
  FunctionObjective f("value", {"x"}, [](const ParamBlocks& p) { return p["x"].squaredNorm(); });
  CHECK_THROWS_AS(gradient(f, blocksX(Eigen::VectorXd::Ones(2))), std::invalid_argument);
  WeightedSum s;
  s.add(1.0, std::make_shared<FunctionObjective>(f));
  CHECK(!s.differentiable());
  CHECK_THROWS_AS(gradient(s, blocksX(Eigen::VectorXd::Ones(2))), std::invalid_argument);
}

TEST_CASE("limited checks visit a reproducible subset") {
  std::mt19937_64 rng(5);
  auto q = randomQuadratic(rng, 30);
  const auto p = blocksX(Eigen::VectorXd::Random(30));
  FdOptions o;
  o.maxEntriesPerBlock = 5;
  o.seed = 9;
  const auto a = fdCheck(*q, p, o);
  const auto b = fdCheck(*q, p, o);
  CHECK(a.worst == b.worst);
  CHECK(a.worst < 1e-8);
}

TEST_CASE("parameter blocks") {
  ParamBlocks p;
  p.add("theta", Eigen::VectorXd::Zero(3));
  CHECK(p.has("theta"));
  CHECK(!p.has("A"));
  CHECK_THROWS(p.block("A"));
  CHECK_THROWS(p.add("theta", Eigen::VectorXd::Zero(1)));
  const auto g = graphFromBlocks(graphBlocks(GraphParams{{Vec3(1, 2, 3)}, {Vec3(4, 5, 6)}}));
  CHECK(g.A[0] == Vec3(1, 2, 3));
  CHECK(g.T[0] == Vec3(4, 5, 6));
}

}
