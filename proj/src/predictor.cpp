#include <algorithm>
#include <cmath>
#include <numeric>

#include "safetycube/kinematics.h"
#include "safetycube/pcr.h"
#include "safetycube/random.h"

namespace safetycube {

std::string_view to_string(PredictorKind k) { return k == PredictorKind::lstm ? "lstm" : "constant_velocity"; }

PredictorKind parse_predictor_kind(std::string_view s) {
  if (s == "constant_velocity" || s == "cv") return PredictorKind::constant_velocity;
  if (s == "lstm") return PredictorKind::lstm;
  throw std::invalid_argument("unknown predictor kind: " + std::string(s));
}

namespace {

constexpr int kFormatVersion = 1;

/// (speed, turn rate) per resampled step, plus the heading after the last step.
struct MotionSequence {
  std::vector<double> speed;  // m/s
  std::vector<double> turn;   // rad/s
  double last_heading = 0.0;
};

/// Resamples `pts` at `step` seconds ending at the last sample and converts consecutive
/// displacements to speeds and turn rates. Motionless steps keep the previous heading.
MotionSequence motion_sequence(std::span<const TrackPoint> pts, double step, std::size_t steps) {
  const double t_end = pts.back().t;
  std::vector<Vec2> resampled(steps + 2);
  for (std::size_t k = 0; k < resampled.size(); ++k) {
    resampled[k] = interpolate_position(pts, t_end - static_cast<double>(steps + 1 - k) * step);
  }
  std::vector<double> heading(steps + 1, 0.0);
  std::vector<double> speed(steps + 1, 0.0);
  std::vector<bool> moving(steps + 1, false);
  for (std::size_t k = 1; k < resampled.size(); ++k) {
    const Vec2 d = resampled[k] - resampled[k - 1];
    speed[k - 1] = norm(d) / step;
    moving[k - 1] = norm(d) > 1e-6;
    if (moving[k - 1]) heading[k - 1] = std::atan2(d.y, d.x);
  }
  // Fill headings of motionless steps from the nearest earlier (or first later) moving step.
  const auto first_moving = std::find(moving.begin(), moving.end(), true);
  double carry = first_moving == moving.end() ? 0.0 : heading[static_cast<std::size_t>(first_moving - moving.begin())];
  for (std::size_t k = 0; k < heading.size(); ++k) {
    if (moving[k]) {
      carry = heading[k];
    } else {
      heading[k] = carry;
    }
  }
  MotionSequence out;
  out.speed.assign(speed.begin() + 1, speed.end());
  for (std::size_t k = 1; k < heading.size(); ++k) out.turn.push_back(wrap_angle(heading[k] - heading[k - 1]) / step);
  out.last_heading = heading.back();
  return out;
}

Eigen::MatrixXd encode(double v, double w, const LstmSettings& s) {
  Eigen::MatrixXd x(2, 1);
  x(0, 0) = v / s.speed_scale;
  x(1, 0) = w / s.turn_scale;
  return x;
}

}  // namespace

Predictor Predictor::constant_velocity(int window_frames) {
  Predictor p;
  p.kind_ = PredictorKind::constant_velocity;
  p.window_frames_ = std::max(window_frames, 2);
  return p;
}

Predictor Predictor::lstm(LstmNetwork net, LstmSettings settings, int window_frames) {
  if (net.inputs() != 2 || net.outputs() != 2) throw std::invalid_argument("LSTM predictor expects 2 inputs/2 outputs");
  Predictor p;
  p.kind_ = PredictorKind::lstm;
  p.window_frames_ = std::max(window_frames, 2);
  p.settings_ = settings;
  p.net_ = std::make_shared<const LstmNetwork>(std::move(net));
  return p;
}

std::size_t Predictor::required_history(double fps) const {
  if (kind_ == PredictorKind::constant_velocity) return static_cast<std::size_t>(window_frames_);
  const double span = static_cast<double>(settings_.sequence_length + 1) * settings_.step_s;
  return std::max<std::size_t>(static_cast<std::size_t>(window_frames_),
                               static_cast<std::size_t>(std::ceil(span * fps - 1e-9)) + 1);
}

KinematicState Predictor::predict(std::span<const TrackPoint> history, double h) const {
  if (history.size() < 2) throw InsufficientHistory("prediction needs at least 2 samples");
  const double fps = 1.0 / (history[1].t - history[0].t);
  if (history.size() < required_history(fps)) {
    throw InsufficientHistory("history has " + std::to_string(history.size()) + " samples, predictor needs " +
                              std::to_string(required_history(fps)));
  }
  const KinematicState now = estimate_state(history, window_frames_);
  if (h <= 0.0) return now;

  if (kind_ == PredictorKind::constant_velocity) {
    KinematicState out = now;
    out.position = now.position + Vec2{std::cos(now.theta), std::sin(now.theta)} * (h * now.v);
    return out;
  }

  const auto& s = settings_;
  const auto smoothed = smooth_track(history, s.smoothing_window);
  const MotionSequence seq = motion_sequence(smoothed, s.step_s, static_cast<std::size_t>(s.sequence_length));
  LstmNetwork::State state = net_->initial_state(1);
  Eigen::MatrixXd y;
  for (std::size_t k = 0; k < seq.speed.size(); ++k) y = net_->step(encode(seq.speed[k], seq.turn[k], s), state);

  Vec2 pos = history.back().pos();
  double heading = seq.last_heading;
  double remaining = h;
  double v = 0.0;
  while (remaining > 1e-12) {
    v = std::max(0.0, y(0, 0) * s.speed_scale);
    const double w = y(1, 0) * s.turn_scale;
    const double dt = std::min(remaining, s.step_s);
    heading = wrap_angle(heading + w * dt);
    pos = pos + Vec2{std::cos(heading), std::sin(heading)} * (v * dt);
    remaining -= dt;
    if (remaining > 1e-12) y = net_->step(encode(v, w, s), state);
  }
  return {pos, v, heading};
}

nlohmann::json Predictor::to_json() const {
  nlohmann::json j{{"format", "safetycube-predictor"},
                   {"format_version", kFormatVersion},
                   {"kind", std::string(to_string(kind_))},
                   {"window_frames", window_frames_}};
  if (kind_ == PredictorKind::lstm) {
    j["settings"] = {{"hidden", settings_.hidden},
                     {"sequence_length", settings_.sequence_length},
                     {"step_s", settings_.step_s},
                     {"smoothing_window", settings_.smoothing_window},
                     {"speed_scale", settings_.speed_scale},
                     {"turn_scale", settings_.turn_scale}};
    j["network"] = net_->to_json();
  }
  return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "safetycube-predictor") throw std::runtime_error("not a predictor file");
  if (j.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported predictor format_version");
  }
  const PredictorKind kind = parse_predictor_kind(j.at("kind").get<std::string>());
  const int window = j.value("window_frames", 10);
  if (kind == PredictorKind::constant_velocity) return constant_velocity(window);
  const auto& js = j.at("settings");
  LstmSettings s;
  s.hidden = js.at("hidden").get<int>();
  s.sequence_length = js.at("sequence_length").get<int>();
  s.step_s = js.at("step_s").get<double>();
  s.smoothing_window = js.at("smoothing_window").get<int>();
  s.speed_scale = js.at("speed_scale").get<double>();
  s.turn_scale = js.at("turn_scale").get<double>();
  return lstm(LstmNetwork::from_json(j.at("network")), s, window);
}

TrainingResult train_predictor(std::span<const TrainingSample> dataset, const TrainingOptions& opts,
                               std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("train_predictor: empty dataset");
  if (opts.kind == PredictorKind::constant_velocity) {
    return {Predictor::constant_velocity(opts.window_frames), {}};
  }
  const LstmSettings& s = opts.lstm;
  const std::size_t L = static_cast<std::size_t>(s.sequence_length);

  // Whole trajectories as (speed, turn) sequences; windows of L inputs are cut from them.
  std::vector<MotionSequence> sequences;
  for (const auto& sample : dataset) {
    std::vector<TrackPoint> full = sample.history;
    full.insert(full.end(), sample.future.begin(), sample.future.end());
    if (full.size() < 2) continue;
    const auto smoothed = smooth_track(full, s.smoothing_window);
    const double duration = smoothed.back().t - smoothed.front().t;
    const auto steps = static_cast<std::size_t>(std::floor(duration / s.step_s + 1e-9));
    if (steps < L + 2) continue;
    sequences.push_back(motion_sequence(smoothed, s.step_s, steps - 1));
  }
  if (sequences.empty()) {
    throw std::invalid_argument("train_predictor: no trajectory spans a full training window");
  }

  CounterRng rng(seed, 0x7EA1);
  LstmNetwork net(2, s.hidden, 2, rng.next_u64());

  struct Window {
    std::size_t seq;
    std::size_t start;
  };
  auto draw_windows = [&](CounterRng& r) {
    std::vector<Window> out;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      const std::size_t slots = sequences[i].speed.size() - L;  // start positions leaving one target step
      for (int k = 0; k < opts.windows_per_sample; ++k) out.push_back({i, static_cast<std::size_t>(r.below(slots))});
    }
    return out;
  };
  auto make_batch = [&](const std::vector<Window>& ws, std::size_t from, std::size_t to,
                        std::vector<Eigen::MatrixXd>& xs, std::vector<Eigen::MatrixXd>& ys) {
    const auto B = static_cast<Eigen::Index>(to - from);
    xs.assign(L, Eigen::MatrixXd(2, B));
    ys.assign(L, Eigen::MatrixXd(2, B));
    for (std::size_t b = from; b < to; ++b) {
      const auto& q = sequences[ws[b].seq];
      const auto col = static_cast<Eigen::Index>(b - from);
      for (std::size_t k = 0; k < L; ++k) {
        const std::size_t i = ws[b].start + k;
        xs[k](0, col) = q.speed[i] / s.speed_scale;
        xs[k](1, col) = q.turn[i] / s.turn_scale;
        ys[k](0, col) = q.speed[i + 1] / s.speed_scale;
        ys[k](1, col) = q.turn[i + 1] / s.turn_scale;
      }
    }
  };

  CounterRng eval_rng(seed, 0xE7A1);
  const std::vector<Window> eval_windows = draw_windows(eval_rng);
  std::vector<Eigen::MatrixXd> eval_x, eval_y;
  make_batch(eval_windows, 0, eval_windows.size(), eval_x, eval_y);

  TrainingResult result{Predictor::constant_velocity(opts.window_frames), {}};
  auto record_loss = [&] {
    const double l = net.loss(eval_x, eval_y);
    if (!std::isfinite(l)) throw std::runtime_error("train_predictor: loss became non-finite");
    result.loss_history.push_back(l);
  };
  record_loss();

  AdamOptimizer adam(net.params(), opts.learning_rate);
  LstmNetwork::Parameters grad;
  std::vector<Eigen::MatrixXd> xs, ys;
  const std::size_t batch = static_cast<std::size_t>(std::max(opts.batch_size, 1));
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<Window> ws = draw_windows(rng);
    for (std::size_t i = ws.size(); i > 1; --i) std::swap(ws[i - 1], ws[rng.below(i)]);
    for (std::size_t from = 0; from < ws.size(); from += batch) {
      make_batch(ws, from, std::min(ws.size(), from + batch), xs, ys);
      const double l = net.loss_and_gradient(xs, ys, grad);
      if (!std::isfinite(l)) throw std::runtime_error("train_predictor: loss became non-finite");
      adam.apply(net.params(), grad);
    }
    record_loss();
  }
  result.predictor = Predictor::lstm(std::move(net), s, opts.window_frames);
  return result;
}

}  // namespace safetycube
