#pragma once

// Denoiser and classifier backends. Both are addressed by the parent timestep t of
// their own schedule (t = 0 means clean data, alpha_bar = 1).

#include "guidelab/binary_io.hpp"
#include "guidelab/core.hpp"
#include "guidelab/data.hpp"
#include "guidelab/mlp.hpp"
#include "guidelab/random.hpp"
#include "guidelab/schedule.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace guidelab {

/// Gradient of log p(y | x) stored as exp(log_scale) * direction.
///
/// Once p(y | x) rounds to 1 the plain gradient underflows to zero, but its
/// direction is still well defined; direction keeps it at unit order of magnitude
/// (the strongest competing class has weight 1).
struct ClassGradient {
  double logp = 0.0;
  double log_scale = -std::numeric_limits<double>::infinity();
  Vector direction;

  Vector gradient() const {
    if (!std::isfinite(log_scale)) return Vector::Zero(direction.size());
    return std::exp(log_scale) * direction;
  }
};

namespace detail {

inline double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Exact oracles for Gaussian-mixture data. Under the forward process component k
/// becomes N(sqrt(ab) mean_k, ab var_k + (1 - ab)) per coordinate, so the noisy
/// density, its score and the class posterior are all closed form.
class AnalyticMixture {
 public:
  AnalyticMixture(ManifoldDescriptor descriptor, NoiseSchedule schedule)
      : descriptor_(std::move(descriptor)), schedule_(std::move(schedule)) {
    descriptor_.validate();
    require(!schedule_.is_respaced(), "analytic model: pass the full training schedule");
    require(descriptor_.kind == ManifoldKind::gaussian_mixture, "analytic backends need a gaussian_mixture descriptor");
  }

  const ManifoldDescriptor& descriptor() const { return descriptor_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  int dim() const { return descriptor_.dim; }
  int num_classes() const { return descriptor_.num_classes(); }

  double alpha_bar(int t) const {
    require(t >= 0 && t <= schedule_.steps(), "analytic model: timestep out of range");
    return schedule_.alpha_bar(t);
  }

  /// log w_k + log N_k(x) for every component, plus the per-component scores.
  struct Evaluation {
    Vector loglik;
    std::vector<Vector> scores;
  };

  Evaluation evaluate(const Vector& x, double ab) const {
    require(x.size() == dim(), "analytic model: dimension mismatch");
    const int K = num_classes();
    const int P = descriptor_.plane_dim;
    const int R = dim() - P;
    const double root_ab = std::sqrt(ab);
    const double amb_var = ab * descriptor_.ambient_sigma * descriptor_.ambient_sigma + (1.0 - ab);
    Evaluation ev;
    ev.loglik.resize(K);
    ev.scores.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      const auto& c = descriptor_.components[static_cast<std::size_t>(k)];
      const double plane_var = ab * c.sigma * c.sigma + (1.0 - ab);
      Vector diff = x - root_ab * c.mean;
      double quad = diff.head(P).squaredNorm() / plane_var;
      double log_det = P * std::log(2.0 * std::numbers::pi * plane_var);
      Vector score(dim());
      score.head(P) = -diff.head(P) / plane_var;
      if (R > 0) {
        quad += diff.tail(R).squaredNorm() / amb_var;
        log_det += R * std::log(2.0 * std::numbers::pi * amb_var);
        score.tail(R) = -diff.tail(R) / amb_var;
      }
      const double log_w = c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
      ev.loglik[k] = log_w - 0.5 * (quad + log_det);
      ev.scores[static_cast<std::size_t>(k)] = std::move(score);
    }
    return ev;
  }

  /// Score of the noisy marginal, grad log q_t(x).
  Vector score(const Vector& x, int t) const {
    const Evaluation ev = evaluate(x, alpha_bar(t));
    const double lse = detail::logsumexp(ev.loglik);
    Vector s = Vector::Zero(dim());
    for (int k = 0; k < num_classes(); ++k) {
      const double r = std::exp(ev.loglik[k] - lse);
      if (r > 0.0) s += r * ev.scores[static_cast<std::size_t>(k)];
    }
    return s;
  }

  double log_density(const Vector& x, int t) const { return detail::logsumexp(evaluate(x, alpha_bar(t)).loglik); }

  /// Minimizer of E||eps - eps_hat||^2: -sqrt(1 - ab) * score.
  Vector predict_eps(const Vector& x, int t) const {
    const double ab = alpha_bar(t);
    return -std::sqrt(1.0 - ab) * score(x, t);
  }

  Vector class_logprobs(const Vector& x, int t) const {
    const Evaluation ev = evaluate(x, alpha_bar(t));
    return ev.loglik.array() - detail::logsumexp(ev.loglik);
  }

  ClassGradient class_grad(const Vector& x, int t, int y) const {
    require(y >= 0 && y < num_classes(), "class_grad: class out of range");
    const Evaluation ev = evaluate(x, alpha_bar(t));
    const double lse = detail::logsumexp(ev.loglik);
    ClassGradient g;
    g.logp = ev.loglik[y] - lse;
    g.direction = Vector::Zero(dim());
    double strongest = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes(); ++k) {
      if (k != y) strongest = std::max(strongest, ev.loglik[k]);
    }
    if (!std::isfinite(strongest)) return g;
    // grad log p(y|x) = sum_{k != y} p(k|x) (score_y - score_k)
    const Vector& score_y = ev.scores[static_cast<std::size_t>(y)];
    for (int k = 0; k < num_classes(); ++k) {
      if (k == y) continue;
      const double w = std::exp(ev.loglik[k] - strongest);
      if (w > 0.0) g.direction += w * (score_y - ev.scores[static_cast<std::size_t>(k)]);
    }
    g.log_scale = strongest - lse;
    return g;
  }

 private:
  ManifoldDescriptor descriptor_;
  NoiseSchedule schedule_;
};

/// A timestep-conditioned MLP together with the schedule it was trained on.
class LearnedNet {
 public:
  LearnedNet(Mlp net, NoiseSchedule schedule) : net_(std::move(net)), schedule_(std::move(schedule)) {}

  const Mlp& net() const { return net_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  int dim() const { return net_.architecture().data_dim; }
  int outputs() const { return net_.architecture().output_dim; }

  Vector evaluate(const Vector& x, int t) const {
    check(x, t);
    return net_.forward(net_.make_input(x, {static_cast<double>(t)}));
  }

  /// Evaluates the network and returns J^T cotangent restricted to the data inputs.
  Vector input_vjp(const Vector& x, int t, const Vector& cotangent, Vector* output = nullptr) const {
    check(x, t);
    Mlp::Tape tape;
    const Matrix out = net_.forward(net_.make_input(x, {static_cast<double>(t)}), &tape);
    if (output) *output = out.col(0);
    const Matrix g = net_.backward(tape, cotangent);
    return g.col(0).head(dim());
  }

 private:
  void check(const Vector& x, int t) const {
    require(x.size() == dim(), "learned model: dimension mismatch");
    require(t >= 0 && t <= schedule_.steps(), "learned model: timestep out of range");
  }

  Mlp net_;
  NoiseSchedule schedule_;
};

/// eps_theta(x_t, t), analytic or learned.
class DenoiserModel {
 public:
  static DenoiserModel analytic(ManifoldDescriptor descriptor, NoiseSchedule schedule) {
    return DenoiserModel(AnalyticMixture(std::move(descriptor), std::move(schedule)));
  }
  static DenoiserModel learned(Mlp net, NoiseSchedule schedule) {
    require(!schedule.is_respaced(), "learned model: pass the full training schedule");
    require(net.architecture().output_dim == net.architecture().data_dim, "denoiser: output must match data dimension");
    return DenoiserModel(LearnedNet(std::move(net), std::move(schedule)));
  }

  Vector predict_eps(const Vector& x, int t) const {
    return std::visit([&](const auto& b) -> Vector {
      if constexpr (std::is_same_v<std::decay_t<decltype(b)>, AnalyticMixture>) return b.predict_eps(x, t);
      else return b.evaluate(x, t);
    }, backend_);
  }

  bool is_analytic() const { return std::holds_alternative<AnalyticMixture>(backend_); }
  const AnalyticMixture* analytic_backend() const { return std::get_if<AnalyticMixture>(&backend_); }
  const LearnedNet* learned_backend() const { return std::get_if<LearnedNet>(&backend_); }
  int dim() const { return std::visit([](const auto& b) { return b.dim(); }, backend_); }
  const NoiseSchedule& schedule() const {
    return std::visit([](const auto& b) -> const NoiseSchedule& { return b.schedule(); }, backend_);
  }
  std::uint64_t fingerprint() const { return schedule().fingerprint(); }

 private:
  using Backend = std::variant<AnalyticMixture, LearnedNet>;
  explicit DenoiserModel(Backend backend) : backend_(std::move(backend)) {}
  Backend backend_;
};

/// p_phi(y | x_t, t), analytic or learned.
class ClassifierModel {
 public:
  static ClassifierModel analytic(ManifoldDescriptor descriptor, NoiseSchedule schedule) {
    return ClassifierModel(AnalyticMixture(std::move(descriptor), std::move(schedule)));
  }
  static ClassifierModel learned(Mlp net, NoiseSchedule schedule) {
    require(!schedule.is_respaced(), "learned model: pass the full training schedule");
    return ClassifierModel(LearnedNet(std::move(net), std::move(schedule)));
  }

  int num_classes() const {
    if (const auto* a = std::get_if<AnalyticMixture>(&backend_)) return a->num_classes();
    return std::get<LearnedNet>(backend_).outputs();
  }

  Vector class_logprobs(const Vector& x, int t) const {
    if (const auto* a = std::get_if<AnalyticMixture>(&backend_)) return a->class_logprobs(x, t);
    const Vector logits = std::get<LearnedNet>(backend_).evaluate(x, t);
    return logits.array() - detail::logsumexp(logits);
  }

  ClassGradient class_grad(const Vector& x, int t, int y) const {
    require(y >= 0 && y < num_classes(), "class_grad: class out of range");
    if (const auto* a = std::get_if<AnalyticMixture>(&backend_)) return a->class_grad(x, t, y);
    const auto& net = std::get<LearnedNet>(backend_);
    const Vector logits = net.evaluate(x, t);
    const double lse = detail::logsumexp(logits);
    ClassGradient g;
    g.logp = logits[y] - lse;
    double strongest = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes(); ++k) {
      if (k != y) strongest = std::max(strongest, logits[k]);
    }
    if (!std::isfinite(strongest)) {
      g.direction = Vector::Zero(dim());
      return g;
    }
    // d log softmax_y / d logits = e_y - p, rescaled by 1 / max_{k != y} p_k.
    Vector cotangent(num_classes());
    double others = 0.0;
    for (int k = 0; k < num_classes(); ++k) {
      if (k == y) continue;
      cotangent[k] = -std::exp(logits[k] - strongest);
      others -= cotangent[k];
    }
    cotangent[y] = others;
    g.direction = net.input_vjp(x, t, cotangent);
    g.log_scale = strongest - lse;
    return g;
  }

  bool is_analytic() const { return std::holds_alternative<AnalyticMixture>(backend_); }
  const AnalyticMixture* analytic_backend() const { return std::get_if<AnalyticMixture>(&backend_); }
  const LearnedNet* learned_backend() const { return std::get_if<LearnedNet>(&backend_); }
  int dim() const { return std::visit([](const auto& b) { return b.dim(); }, backend_); }
  const NoiseSchedule& schedule() const {
    return std::visit([](const auto& b) -> const NoiseSchedule& { return b.schedule(); }, backend_);
  }
  std::uint64_t fingerprint() const { return schedule().fingerprint(); }

 private:
  using Backend = std::variant<AnalyticMixture, LearnedNet>;
  explicit ClassifierModel(Backend backend) : backend_(std::move(backend)) {}
  Backend backend_;
};

/// mu_theta from an eps prediction, given alpha_t and alpha_bar_t.
inline Vector mu_from_eps(const Vector& x_t, double alpha, double alpha_bar, const Vector& eps_hat) {
  return (x_t - (1.0 - alpha) / std::sqrt(1.0 - alpha_bar) * eps_hat) / std::sqrt(alpha);
}

inline Vector mu_from_eps(const Vector& x_t, int k, const Vector& eps_hat, const NoiseSchedule& schedule) {
  require(k >= 1, "mu_from_eps: timestep must be at least 1");
  return mu_from_eps(x_t, schedule.alpha(k), schedule.alpha_bar(k), eps_hat);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 200;
  int batch = 256;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  int hidden_width = 256;
  int hidden_layers = 3;
  int time_embedding = 64;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double initial_loss = 0.0;  // untrained network on the first batch
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

struct Batch {
  Matrix x;  // data_dim x B, noised inputs
  std::vector<double> t;
  Matrix eps;
  std::vector<int> labels;
};

/// Fisher-Yates over [0, n) driven by the epoch's stream.
inline std::vector<Eigen::Index> permutation(Eigen::Index n, RandomStream& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

inline Batch make_batch(const LabeledDataset& data, const NoiseSchedule& schedule,
                        const std::vector<Eigen::Index>& order, std::size_t begin, std::size_t end,
                        RandomStream& rng) {
  const auto B = static_cast<Eigen::Index>(end - begin);
  const int D = data.dim();
  Batch b;
  b.x.resize(D, B);
  b.eps.resize(D, B);
  b.t.resize(static_cast<std::size_t>(B));
  b.labels.resize(static_cast<std::size_t>(B));
  for (Eigen::Index j = 0; j < B; ++j) {
    const Eigen::Index row = order[begin + static_cast<std::size_t>(j)];
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
    const double ab = schedule.alpha_bar(t);
    for (int d = 0; d < D; ++d) {
      const double e = rng.normal();
      b.eps(d, j) = e;
      b.x(d, j) = std::sqrt(ab) * data.points(row, d) + std::sqrt(1.0 - ab) * e;
    }
    b.t[static_cast<std::size_t>(j)] = t;
    b.labels[static_cast<std::size_t>(j)] = data.labels[static_cast<std::size_t>(row)];
  }
  return b;
}

/// Loss and d loss / d output for one batch.
using LossFn = std::pair<double, Matrix> (*)(const Matrix& out, const Batch& batch);

inline std::pair<double, Matrix> eps_loss(const Matrix& out, const Batch& batch) {
  const auto B = static_cast<double>(out.cols());
  const Matrix diff = out - batch.eps;
  return {diff.squaredNorm() / B, 2.0 * diff / B};
}

inline std::pair<double, Matrix> cross_entropy_loss(const Matrix& out, const Batch& batch) {
  const auto B = static_cast<double>(out.cols());
  Matrix grad(out.rows(), out.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const Vector logits = out.col(j);
    const double lse = logsumexp(logits);
    const int y = batch.labels[static_cast<std::size_t>(j)];
    loss += lse - logits[y];
    grad.col(j) = (logits.array() - lse).exp();
    grad(y, j) -= 1.0;
  }
  return {loss / B, grad / B};
}

inline std::pair<Mlp, TrainReport> train_network(const LabeledDataset& data, const NoiseSchedule& schedule,
                                                 const TrainConfig& config, std::uint64_t seed, int output_dim,
                                                 LossFn loss_fn, const char* what) {
  data.validate();
  require(config.epochs >= 1 && config.batch >= 1, "training: epochs and batch must be positive");
  const auto start = std::chrono::steady_clock::now();
  MlpArchitecture arch{data.dim(), output_dim, config.hidden_width, config.hidden_layers, config.time_embedding};
  Mlp net(arch, seed);
  Adam adam(net.parameters(), config.learning_rate, config.clip_norm);
  TrainReport report;
  report.seed = seed;
  const auto n = static_cast<std::size_t>(data.size());
  const auto batch = static_cast<std::size_t>(config.batch);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    RandomStream shuffle(seed, StreamPurpose::training, static_cast<std::uint64_t>(epoch), 0);
    const auto order = permutation(data.size(), shuffle);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      RandomStream rng(seed, StreamPurpose::training, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint32_t>(1 + batches));
      const Batch b = make_batch(data, schedule, order, begin, end, rng);
      Mlp::Tape tape;
      const Matrix out = net.forward(net.make_input(b.x, b.t), &tape);
      auto [loss, grad_out] = loss_fn(out, b);
      if (!std::isfinite(loss)) {
        throw NumericError(std::string(what) + " training diverged: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1));
      }
      if (epoch == 0 && batches == 0) report.initial_loss = loss;
      MlpParameters grads = MlpParameters::zeros_like(net.parameters());
      net.backward(tape, grad_out, &grads);
      adam.step(net.parameters(), grads);
      total += loss;
      ++batches;
    }
    report.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  if (!net.parameters().all_finite()) throw NumericError(std::string(what) + " training produced non-finite parameters");
  report.final_loss = report.epoch_loss.back();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(net), std::move(report)};
}

}  // namespace detail

/// Minimizes E ||eps - eps_theta(x_t, t)||^2 with t uniform on [1, T].
inline std::pair<DenoiserModel, TrainReport> train_denoiser(const LabeledDataset& data, const NoiseSchedule& schedule,
                                                            const TrainConfig& config, std::uint64_t seed) {
  require(!schedule.is_respaced(), "train_denoiser: train on the full schedule");
  auto [net, report] = detail::train_network(data, schedule, config, seed, data.dim(), &detail::eps_loss, "denoiser");
  return {DenoiserModel::learned(std::move(net), schedule), std::move(report)};
}

/// Minimizes cross-entropy of (x_t, t, y) with t uniform on [1, T].
inline std::pair<ClassifierModel, TrainReport> train_classifier(const LabeledDataset& data, const NoiseSchedule& schedule,
                                                                const TrainConfig& config, std::uint64_t seed) {
  require(!schedule.is_respaced(), "train_classifier: train on the full schedule");
  require(data.num_classes >= 2, "train_classifier: need at least two classes");
  auto [net, report] = detail::train_network(data, schedule, config, seed, data.num_classes,
                                             &detail::cross_entropy_loss, "classifier");
  return {ClassifierModel::learned(std::move(net), schedule), std::move(report)};
}

// ---------------------------------------------------------------------------
// Checkpoints: "GMOD", version, role, backend, schedule fingerprint, payload, CRC32.

inline constexpr std::string_view kModelMagic = "GMOD";
inline constexpr std::uint16_t kModelVersion = 1;

enum class ModelRole : std::uint8_t { denoiser = 0, classifier = 1 };
enum class BackendTag : std::uint8_t { analytic = 0, learned = 1 };

namespace detail {

inline std::vector<unsigned char> encode_model(ModelRole role, const AnalyticMixture* analytic, const LearnedNet* learned,
                                               const NoiseSchedule& schedule) {
  io::ByteWriter w;
  w.u8(static_cast<std::uint8_t>(role));
  w.u8(static_cast<std::uint8_t>(analytic ? BackendTag::analytic : BackendTag::learned));
  w.u64(schedule.fingerprint());
  w.u32(static_cast<std::uint32_t>(schedule.training_steps()));
  if (analytic) {
    w.text(analytic->descriptor().to_text());
  } else {
    const auto& arch = learned->net().architecture();
    w.u32(static_cast<std::uint32_t>(arch.data_dim));
    w.u32(static_cast<std::uint32_t>(arch.output_dim));
    w.u32(static_cast<std::uint32_t>(arch.hidden_width));
    w.u32(static_cast<std::uint32_t>(arch.hidden_layers));
    w.u32(static_cast<std::uint32_t>(arch.time_embedding));
    learned->net().parameters().for_each([&](const double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) w.f64(p[i]);
    });
  }
  return io::frame(kModelMagic, kModelVersion, w.bytes());
}

struct DecodedModel {
  BackendTag backend;
  ManifoldDescriptor descriptor;
  Mlp net;
};

inline DecodedModel decode_model(const std::vector<unsigned char>& file, ModelRole expected_role,
                                 const NoiseSchedule& schedule) {
  const auto payload = io::unframe(kModelMagic, kModelVersion, file);
  io::ByteReader r(payload.data(), payload.size());
  const auto role = static_cast<ModelRole>(r.u8());
  const auto backend = static_cast<BackendTag>(r.u8());
  const std::uint64_t fingerprint = r.u64();
  const std::uint32_t steps = r.u32();
  if (role != expected_role) {
    throw FormatError(FormatError::Kind::malformed, expected_role == ModelRole::denoiser
                                                        ? "checkpoint holds a classifier, expected a denoiser"
                                                        : "checkpoint holds a denoiser, expected a classifier");
  }
  if (fingerprint != schedule.fingerprint() || static_cast<int>(steps) != schedule.training_steps()) {
    throw MismatchError("checkpoint was built for a different noise schedule (fingerprint mismatch)");
  }
  DecodedModel out{backend, {}, {}};
  if (backend == BackendTag::analytic) {
    try {
      out.descriptor = ManifoldDescriptor::from_text(r.text());
    } catch (const InvalidArgument& e) {
      throw FormatError(FormatError::Kind::malformed, std::string("bad descriptor: ") + e.what());
    }
  } else if (backend == BackendTag::learned) {
    MlpArchitecture arch;
    arch.data_dim = static_cast<int>(r.u32());
    arch.output_dim = static_cast<int>(r.u32());
    arch.hidden_width = static_cast<int>(r.u32());
    arch.hidden_layers = static_cast<int>(r.u32());
    arch.time_embedding = static_cast<int>(r.u32());
    try {
      arch.validate();
    } catch (const InvalidArgument& e) {
      throw FormatError(FormatError::Kind::malformed, e.what());
    }
    Mlp net(arch, 0);
    net.parameters().for_each([&](double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) p[i] = r.f64();
    });
    out.net = std::move(net);
  } else {
    throw FormatError(FormatError::Kind::malformed, "unknown backend tag");
  }
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::malformed, "trailing bytes in checkpoint");
  return out;
}

}  // namespace detail

inline void save_model(const DenoiserModel& model, const std::string& path) {
  io::write_file(path, detail::encode_model(ModelRole::denoiser, model.analytic_backend(), model.learned_backend(),
                                            model.schedule()));
}

inline void save_model(const ClassifierModel& model, const std::string& path) {
  io::write_file(path, detail::encode_model(ModelRole::classifier, model.analytic_backend(), model.learned_backend(),
                                            model.schedule()));
}

/// schedule must be the full training schedule the checkpoint was built for.
inline DenoiserModel load_denoiser(const std::string& path, const NoiseSchedule& schedule) {
  auto m = detail::decode_model(io::read_file(path), ModelRole::denoiser, schedule);
  if (m.backend == BackendTag::analytic) return DenoiserModel::analytic(std::move(m.descriptor), schedule);
  return DenoiserModel::learned(std::move(m.net), schedule);
}

inline ClassifierModel load_classifier(const std::string& path, const NoiseSchedule& schedule) {
  auto m = detail::decode_model(io::read_file(path), ModelRole::classifier, schedule);
  if (m.backend == BackendTag::analytic) return ClassifierModel::analytic(std::move(m.descriptor), schedule);
  return ClassifierModel::learned(std::move(m.net), schedule);
}

}  // namespace guidelab
