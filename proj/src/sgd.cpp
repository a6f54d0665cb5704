#include <cmath>

#include "resunit/baselines.hpp"
#include "resunit/error.hpp"
#include "resunit/numerics.hpp"
#include "resunit/rng.hpp"

namespace resunit {

BatchGradient batch_gradient(const Mat& a, const Mat& b, const Mat& xs, const Mat& ys,
                             const std::vector<Index>& batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "empty batch");
  BatchGradient g;
  g.grad_a = Mat::Zero(a.rows(), a.cols());
  g.grad_b = Mat::Zero(b.rows(), b.cols());
  for (Index i : batch) {
    const Vec x = xs.row(i).transpose();
    const Vec z = a * x;
    const Vec s = relu(z) + x;
    const Vec r = b * s - ys.row(i).transpose();
    g.loss += 0.5 * r.squaredNorm();
    g.grad_b.noalias() += r * s.transpose();
    Vec dz = b.transpose() * r;
    for (Index k = 0; k < dz.size(); ++k) {
      if (!(z(k) > 0.0)) dz(k) = 0.0;
    }
    g.grad_a.noalias() += dz * x.transpose();
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  g.loss *= inv;
  g.grad_a *= inv;
  g.grad_b *= inv;
  return g;
}

double mean_loss(const Mat& a, const Mat& b, const Mat& xs, const Mat& ys) {
  const Mat pred = (relu(Mat(xs * a.transpose())) + xs) * b.transpose();
  return 0.5 * (pred - ys).rowwise().squaredNorm().mean();
}

SgdResult sgd_train(const SampleSet& samples, const SgdConfig& cfg) {
  const Index n = samples.n();
  const Index d = samples.d();
  const Index m = samples.m();
  if (cfg.batch_size < 1 || n < cfg.batch_size) {
    throw Error(ErrorKind::InvalidArgument, "sgd_train needs 1 <= batch_size <= n");
  }
  if (cfg.epochs < 0) throw Error(ErrorKind::InvalidArgument, "epochs must be nonnegative");

  SgdResult res;
  Philox init_rng(cfg.seed, 4);
  if (cfg.init == SgdConfig::Init::TeacherPerturbed) {
    if (!cfg.teacher) throw Error(ErrorKind::InvalidArgument, "teacher initialization needs a teacher");
    if (cfg.teacher->d() != d || cfg.teacher->m() != m) {
      throw Error(ErrorKind::DimensionMismatch, "teacher shape does not match the samples");
    }
    res.a_hat = cfg.teacher->a;
    res.b_hat = cfg.teacher->b;
    if (cfg.init_scale > 0.0) {
      for (Index i = 0; i < res.a_hat.size(); ++i) res.a_hat.data()[i] += cfg.init_scale * init_rng.normal();
      for (Index i = 0; i < res.b_hat.size(); ++i) res.b_hat.data()[i] += cfg.init_scale * init_rng.normal();
    }
  } else {
    res.a_hat = Mat(d, d);
    res.b_hat = Mat(m, d);
    for (Index i = 0; i < res.a_hat.size(); ++i) {
      res.a_hat.data()[i] = std::max(0.0, cfg.init_scale * init_rng.normal());
    }
    for (Index i = 0; i < res.b_hat.size(); ++i) res.b_hat.data()[i] = cfg.init_scale * init_rng.normal();
  }

  res.initial_loss = mean_loss(res.a_hat, res.b_hat, samples.xs, samples.ys);
  const double limit = cfg.divergence_factor * std::max(res.initial_loss, 1e-300);
  Philox shuffle_rng(cfg.seed, 5);
  std::vector<Index> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double eta = cfg.eta0 / (1.0 + cfg.gamma * epoch);
    const std::vector<std::size_t> order = shuffle_rng.permutation(static_cast<std::size_t>(n));
    double loss_sum = 0.0;
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index stop = std::min(n, start + cfg.batch_size);
      batch.clear();
      for (Index k = start; k < stop; ++k) batch.push_back(static_cast<Index>(order[k]));
      const BatchGradient g = batch_gradient(res.a_hat, res.b_hat, samples.xs, samples.ys, batch);
      loss_sum += g.loss * static_cast<double>(batch.size());
      res.a_hat -= eta * g.grad_a;
      res.b_hat -= eta * g.grad_b;
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    res.trace.push_back({epoch, epoch_loss, eta});
    if (!std::isfinite(epoch_loss) || epoch_loss > limit) {
      res.diverged = true;
      break;
    }
  }
  return res;
}

}  // namespace resunit
