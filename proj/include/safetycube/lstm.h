#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace safetycube {

/// Single-layer LSTM with a linear read-out, trained with full backpropagation through time.
/// Batches are column-major: each column is one sequence.
class LstmNetwork {
 public:
  struct Parameters {
    Eigen::MatrixXd w;    // 4H x (I + H), gate order: input, forget, cell, output
    Eigen::VectorXd b;    // 4H
    Eigen::MatrixXd w_out;  // O x H
    Eigen::VectorXd b_out;  // O
  };

  struct State {
    Eigen::MatrixXd h;
    Eigen::MatrixXd c;
  };

  LstmNetwork() = default;
  LstmNetwork(int inputs, int hidden, int outputs, std::uint64_t seed);

  int inputs() const { return inputs_; }
  int hidden() const { return hidden_; }
  int outputs() const { return outputs_; }

  State initial_state(int batch) const;

  /// Advances `state` by one step and returns the read-out (O x B).
  Eigen::MatrixXd step(const Eigen::MatrixXd& x, State& state) const;

  /// Runs a whole sequence from the zero state; returns one read-out per step.
  std::vector<Eigen::MatrixXd> forward(const std::vector<Eigen::MatrixXd>& xs) const;

  /// Mean squared error over all steps, sequences and outputs; fills `grad` (same shapes as params).
  double loss_and_gradient(const std::vector<Eigen::MatrixXd>& xs, const std::vector<Eigen::MatrixXd>& targets,
                           Parameters& grad) const;

  double loss(const std::vector<Eigen::MatrixXd>& xs, const std::vector<Eigen::MatrixXd>& targets) const;

  Parameters& params() { return p_; }
  const Parameters& params() const { return p_; }

  nlohmann::json to_json() const;
  static LstmNetwork from_json(const nlohmann::json& j);

 private:
  int inputs_ = 0;
  int hidden_ = 0;
  int outputs_ = 0;
  Parameters p_;
};

/// Adam over the network's parameter blocks.
class AdamOptimizer {
 public:
  AdamOptimizer(const LstmNetwork::Parameters& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void apply(LstmNetwork::Parameters& params, const LstmNetwork::Parameters& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  LstmNetwork::Parameters m_, v_;
};

}  // namespace safetycube
