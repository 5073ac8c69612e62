#include <doctest.h>

#include "helpers.h"
#include "oracles.h"
#include "safetycube/lstm.h"
#include "safetycube/pcr.h"

using namespace safetycube;
using namespace testing;

namespace {

std::vector<Eigen::MatrixXd> random_sequence(CounterRng& rng, int rows, int cols, int steps) {
  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k < steps; ++k) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1, 1);
    out.push_back(m);
  }
  return out;
}

std::vector<TrainingSample> arc_set(int n, std::uint64_t seed) {
  CounterRng rng(seed, 9);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({arc_track({0, 0}, rng.uniform(-3, 3), rng.uniform(3, 10), rng.uniform(-0.4, 0.4), 6.0), {}});
  }
  return out;
}

}  // namespace

TEST_CASE("lstm gradient matches finite differences") {
  CounterRng rng(3, 1);
  LstmNetwork net(2, 4, 2, 17);
  const auto xs = random_sequence(rng, 2, 3, 5);
  const auto ys = random_sequence(rng, 2, 3, 5);
  LstmNetwork::Parameters grad;
  net.loss_and_gradient(xs, ys, grad);

  auto check_block = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& g) {
    for (Eigen::Index i = 0; i < param.size(); i += 3) {
      const double keep = param.data()[i];
      const double h = 1e-6;
      param.data()[i] = keep + h;
      const double up = net.loss(xs, ys);
      param.data()[i] = keep - h;
      const double down = net.loss(xs, ys);
      param.data()[i] = keep;
      const double numeric_grad = (up - down) / (2 * h);
      CHECK(g.data()[i] == doctest::Approx(numeric_grad).epsilon(1e-5).scale(1e-6));
    }
  };
  check_block(net.params().w, grad.w);
  Eigen::MatrixXd b = net.params().b;
  check_block(net.params().w_out, grad.w_out);
  Eigen::MatrixXd gb = grad.b;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double keep = net.params().b(i), h = 1e-6;
    net.params().b(i) = keep + h;
    const double up = net.loss(xs, ys);
    net.params().b(i) = keep - h;
    const double down = net.loss(xs, ys);
    net.params().b(i) = keep;
    CHECK(gb(i) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5).scale(1e-6));
  }
}

TEST_CASE("adam steps reduce the loss") {
  CounterRng rng(4, 1);
  LstmNetwork net(2, 6, 2, 5);
  const auto xs = random_sequence(rng, 2, 4, 6);
  const auto ys = random_sequence(rng, 2, 4, 6);
  AdamOptimizer adam(net.params(), 0.01);
  const double before = net.loss(xs, ys);
  for (int i = 0; i < 50; ++i) {
    LstmNetwork::Parameters g;
    net.loss_and_gradient(xs, ys, g);
    adam.apply(net.params(), g);
  }
  CHECK(net.loss(xs, ys) < before);
}

TEST_CASE("training is deterministic and lowers the loss") {
  const auto data = arc_set(40, 1);
  TrainingOptions opts;
  opts.epochs = 15;
  opts.lstm.hidden = 8;
  const TrainingResult a = train_predictor(data, opts, 99);
  const TrainingResult b = train_predictor(data, opts, 99);
  CHECK(a.predictor.to_json() == b.predictor.to_json());
  CHECK(a.loss_history == b.loss_history);
  REQUIRE(a.loss_history.size() == 16);
  CHECK(a.loss_history.back() < a.loss_history.front());
  const TrainingResult c = train_predictor(data, opts, 100);
  CHECK(c.predictor.to_json() != a.predictor.to_json());
}

TEST_CASE("predictor serialization round trip") {
  const auto data = arc_set(10, 2);
  TrainingOptions opts;
  opts.epochs = 2;
  opts.lstm.hidden = 4;
  const Predictor p = train_predictor(data, opts, 1).predictor;
  const Predictor q = Predictor::from_json(nlohmann::json::parse(p.to_json().dump()));
  const auto hist = arc_track({0, 0}, 0.3, 6.0, 0.2, 3.0);
  const auto a = p.predict(hist, 2.0), b = q.predict(hist, 2.0);
  CHECK(a.position.x == b.position.x);
  CHECK(a.position.y == b.position.y);
  CHECK(p.kind() == PredictorKind::lstm);
  CHECK(Predictor::from_json(Predictor::constant_velocity().to_json()).kind() == PredictorKind::constant_velocity);
}

TEST_CASE("training rejects an empty dataset") {
  CHECK_THROWS_AS(train_predictor({}, TrainingOptions{}, 1), std::invalid_argument);
}
