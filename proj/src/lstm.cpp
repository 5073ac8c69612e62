#include "safetycube/lstm.h"

#include <cmath>
#include <stdexcept>

#include "safetycube/random.h"

namespace safetycube {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void zero_like(LstmNetwork::Parameters& out, const LstmNetwork::Parameters& shape) {
  out.w = Eigen::MatrixXd::Zero(shape.w.rows(), shape.w.cols());
  out.b = Eigen::VectorXd::Zero(shape.b.size());
  out.w_out = Eigen::MatrixXd::Zero(shape.w_out.rows(), shape.w_out.cols());
  out.b_out = Eigen::VectorXd::Zero(shape.b_out.size());
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) data[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw std::runtime_error("matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

LstmNetwork::LstmNetwork(int inputs, int hidden, int outputs, std::uint64_t seed)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs) {
  CounterRng rng(seed, 0x1157);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  p_.w.resize(4 * hidden, inputs + hidden);
  for (Eigen::Index r = 0; r < p_.w.rows(); ++r) {
    for (Eigen::Index c = 0; c < p_.w.cols(); ++c) p_.w(r, c) = rng.uniform(-scale, scale);
  }
  p_.b = Eigen::VectorXd::Zero(4 * hidden);
  p_.b.segment(hidden, hidden).setOnes();  // forget gate starts open
  p_.w_out.resize(outputs, hidden);
  for (Eigen::Index r = 0; r < p_.w_out.rows(); ++r) {
    for (Eigen::Index c = 0; c < p_.w_out.cols(); ++c) p_.w_out(r, c) = rng.uniform(-scale, scale);
  }
  p_.b_out = Eigen::VectorXd::Zero(outputs);
}

LstmNetwork::State LstmNetwork::initial_state(int batch) const {
  return {Eigen::MatrixXd::Zero(hidden_, batch), Eigen::MatrixXd::Zero(hidden_, batch)};
}

Eigen::MatrixXd LstmNetwork::step(const Eigen::MatrixXd& x, State& s) const {
  const Eigen::Index H = hidden_;
  Eigen::MatrixXd z = p_.w.leftCols(inputs_) * x + p_.w.rightCols(H) * s.h;
  z.colwise() += p_.b;
  const Eigen::MatrixXd i = sigmoid(z.topRows(H));
  const Eigen::MatrixXd f = sigmoid(z.middleRows(H, H));
  const Eigen::MatrixXd g = z.middleRows(2 * H, H).array().tanh().matrix();
  const Eigen::MatrixXd o = sigmoid(z.bottomRows(H));
  s.c = (f.array() * s.c.array() + i.array() * g.array()).matrix();
  s.h = (o.array() * s.c.array().tanh()).matrix();
  Eigen::MatrixXd y = p_.w_out * s.h;
  y.colwise() += p_.b_out;
  return y;
}

std::vector<Eigen::MatrixXd> LstmNetwork::forward(const std::vector<Eigen::MatrixXd>& xs) const {
  std::vector<Eigen::MatrixXd> ys;
  if (xs.empty()) return ys;
  State s = initial_state(static_cast<int>(xs.front().cols()));
  ys.reserve(xs.size());
  for (const auto& x : xs) ys.push_back(step(x, s));
  return ys;
}

double LstmNetwork::loss(const std::vector<Eigen::MatrixXd>& xs, const std::vector<Eigen::MatrixXd>& targets) const {
  const auto ys = forward(xs);
  double total = 0.0;
  double count = 0.0;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    total += (ys[t] - targets[t]).squaredNorm();
    count += static_cast<double>(ys[t].size());
  }
  return count > 0 ? total / count : 0.0;
}

double LstmNetwork::loss_and_gradient(const std::vector<Eigen::MatrixXd>& xs,
                                      const std::vector<Eigen::MatrixXd>& targets, Parameters& grad) const {
  if (xs.size() != targets.size() || xs.empty()) throw std::invalid_argument("sequence/target length mismatch");
  const Eigen::Index H = hidden_;
  const std::size_t T = xs.size();
  const Eigen::Index B = xs.front().cols();

  // Forward pass with a tape of gate activations.
  std::vector<Eigen::MatrixXd> hs(T + 1), cs(T + 1), is(T), fs(T), gs(T), os(T), ys(T);
  hs[0] = Eigen::MatrixXd::Zero(H, B);
  cs[0] = Eigen::MatrixXd::Zero(H, B);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd z = p_.w.leftCols(inputs_) * xs[t] + p_.w.rightCols(H) * hs[t];
    z.colwise() += p_.b;
    is[t] = sigmoid(z.topRows(H));
    fs[t] = sigmoid(z.middleRows(H, H));
    gs[t] = z.middleRows(2 * H, H).array().tanh().matrix();
    os[t] = sigmoid(z.bottomRows(H));
    cs[t + 1] = (fs[t].array() * cs[t].array() + is[t].array() * gs[t].array()).matrix();
    hs[t + 1] = (os[t].array() * cs[t + 1].array().tanh()).matrix();
    ys[t] = p_.w_out * hs[t + 1];
    ys[t].colwise() += p_.b_out;
  }

  const double n = static_cast<double>(T) * static_cast<double>(B) * outputs_;
  double total = 0.0;
  zero_like(grad, p_);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dz(4 * H, B);
  for (std::size_t k = T; k-- > 0;) {
    const Eigen::MatrixXd diff = ys[k] - targets[k];
    total += diff.squaredNorm();
    const Eigen::MatrixXd dy = diff * (2.0 / n);
    grad.w_out += dy * hs[k + 1].transpose();
    grad.b_out += dy.rowwise().sum();
    const Eigen::MatrixXd dh = p_.w_out.transpose() * dy + dh_next;
    const Eigen::ArrayXXd tanh_c = cs[k + 1].array().tanh();
    const Eigen::ArrayXXd d_o = dh.array() * tanh_c;
    const Eigen::ArrayXXd dc = dh.array() * os[k].array() * (1.0 - tanh_c.square()) + dc_next.array();
    const Eigen::ArrayXXd d_i = dc * gs[k].array();
    const Eigen::ArrayXXd d_g = dc * is[k].array();
    const Eigen::ArrayXXd d_f = dc * cs[k].array();
    dc_next = (dc * fs[k].array()).matrix();
    dz.topRows(H) = (d_i * is[k].array() * (1.0 - is[k].array())).matrix();
    dz.middleRows(H, H) = (d_f * fs[k].array() * (1.0 - fs[k].array())).matrix();
    dz.middleRows(2 * H, H) = (d_g * (1.0 - gs[k].array().square())).matrix();
    dz.bottomRows(H) = (d_o * os[k].array() * (1.0 - os[k].array())).matrix();
    grad.w.leftCols(inputs_) += dz * xs[k].transpose();
    grad.w.rightCols(H) += dz * hs[k].transpose();
    grad.b += dz.rowwise().sum();
    dh_next = p_.w.rightCols(H).transpose() * dz;
  }
  return total / n;
}

nlohmann::json LstmNetwork::to_json() const {
  return {{"inputs", inputs_},
          {"hidden", hidden_},
          {"outputs", outputs_},
          {"w", matrix_to_json(p_.w)},
          {"b", matrix_to_json(p_.b)},
          {"w_out", matrix_to_json(p_.w_out)},
          {"b_out", matrix_to_json(p_.b_out)}};
}

LstmNetwork LstmNetwork::from_json(const nlohmann::json& j) {
  LstmNetwork net;
  net.inputs_ = j.at("inputs").get<int>();
  net.hidden_ = j.at("hidden").get<int>();
  net.outputs_ = j.at("outputs").get<int>();
  net.p_.w = matrix_from_json(j.at("w"));
  net.p_.b = matrix_from_json(j.at("b"));
  net.p_.w_out = matrix_from_json(j.at("w_out"));
  net.p_.b_out = matrix_from_json(j.at("b_out"));
  if (net.p_.w.rows() != 4 * net.hidden_ || net.p_.w.cols() != net.inputs_ + net.hidden_ ||
      net.p_.w_out.rows() != net.outputs_ || net.p_.w_out.cols() != net.hidden_) {
    throw std::runtime_error("LSTM parameter shapes do not match declared sizes");
  }
  return net;
}

AdamOptimizer::AdamOptimizer(const LstmNetwork::Parameters& shape, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  zero_like(m_, shape);
  zero_like(v_, shape);
}

void AdamOptimizer::apply(LstmNetwork::Parameters& p, const LstmNetwork::Parameters& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = (beta2_ * v.array() + (1.0 - beta2_) * grad.array().square()).matrix();
    param -= (lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_)).matrix();
  };
  update(p.w, g.w, m_.w, v_.w);
  update(p.b, g.b, m_.b, v_.b);
  update(p.w_out, g.w_out, m_.w_out, v_.w_out);
  update(p.b_out, g.b_out, m_.b_out, v_.b_out);
}

}  // namespace safetycube
