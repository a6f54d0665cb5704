#include "resunit/eval.hpp"

#include <string>

#include "resunit/error.hpp"
#include "resunit/numerics.hpp"

namespace resunit {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::QP: return "qp";
    case Method::LP: return "lp";
    case Method::SlackLP: return "slack-lp";
    case Method::Sgd: return "sgd";
    case Method::VanillaLr: return "vanilla-lr";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "qp") return Method::QP;
  if (text == "lp") return Method::LP;
  if (text == "slack-lp") return Method::SlackLP;
  if (text == "sgd") return Method::Sgd;
  if (text == "vanilla-lr") return Method::VanillaLr;
  throw Error(ErrorKind::InvalidArgument,
              "unknown method '" + std::string(text) + "' (expected qp, lp, slack-lp, sgd or vanilla-lr)");
}

ErrorReport relative_errors(const Mat& est_a, const Mat& est_b, const ResidualUnit& unit,
                            const SampleSet& test) {
  const Index d = unit.d();
  if (est_a.rows() != d || est_a.cols() != d || est_b.rows() != unit.m() || est_b.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "estimate shapes do not match the teacher");
  }
  if (test.n() < 1) throw Error(ErrorKind::InvalidArgument, "test set is empty");
  if (test.d() != d || test.m() != unit.m()) {
    throw Error(ErrorKind::DimensionMismatch, "test set shape does not match the teacher");
  }
  ErrorReport rep;
  rep.d = d;
  rep.layer1_rel = relative_frobenius(est_a, unit.a);
  rep.layer2_rel = relative_frobenius(est_b, unit.b);
  const ResidualUnit est{est_a, est_b};
  const Mat pred = forward_batch(est, test.xs);
  double total = 0.0;
  for (Index i = 0; i < test.n(); ++i) {
    total += (pred.row(i) - test.ys.row(i)).norm() / test.ys.row(i).norm();
  }
  rep.output_rel = total / static_cast<double>(test.n());
  return rep;
}

namespace {

Layer2Method layer2_method(Method method) {
  switch (method) {
    case Method::QP: return Layer2Method::QP;
    case Method::LP: return Layer2Method::LP;
    case Method::SlackLP: return Layer2Method::SlackLP;
    default: break;
  }
  throw Error(ErrorKind::InvalidArgument,
              "full_pipeline runs qp, lp or slack-lp, not " + std::string(to_string(method)));
}

Layer1Method layer1_method(Method method) {
  switch (method) {
    case Method::QP: return Layer1Method::QP;
    case Method::LP: return Layer1Method::LP;
    default: return Layer1Method::SlackLP;
  }
}

}  // namespace

PipelineResult full_pipeline(const SampleSet& samples, Method method, const PipelineConfig& cfg) {
  PipelineResult res;
  const Layer2Method m2 = layer2_method(method);
  try {
    res.layer2 = learn_layer2(samples, m2, cfg.layer2);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("layer 2: ") + e.what(), e.value());
  }
  for (const auto& w : res.layer2.warnings) res.diagnostics.push_back("layer 2: " + w);

  const HiddenSampleSet hidden{samples.xs, res.layer2.hidden};
  try {
    res.layer1 = learn_layer1(hidden, layer1_method(method), cfg.layer1);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("layer 1: ") + e.what(), e.value());
  }
  for (const auto& w : res.layer1.warnings) res.diagnostics.push_back("layer 1: " + w);
  return res;
}

LearnedUnit learn(const SampleSet& samples, Method method, const LearnConfig& cfg) {
  LearnedUnit out;
  switch (method) {
    case Method::QP:
    case Method::LP:
    case Method::SlackLP: {
      PipelineResult res = full_pipeline(samples, method, cfg.pipeline);
      out.a = std::move(res.layer1.a_hat);
      out.b = std::move(res.layer2.b_hat);
      out.diagnostics = std::move(res.diagnostics);
      break;
    }
    case Method::Sgd: {
      SgdResult res = sgd_train(samples, cfg.sgd);
      if (res.diverged) out.diagnostics.push_back("sgd: loss diverged");
      out.a = std::move(res.a_hat);
      out.b = std::move(res.b_hat);
      break;
    }
    case Method::VanillaLr: {
      VanillaLrResult res = vanilla_lr(samples);
      out.success = res.success;
      if (res.success) {
        out.a = *res.a_hat;
        out.b = *res.b_hat;
      } else {
        out.diagnostics.push_back("vanilla-lr: orthant systems rank deficient (" +
                                  std::to_string(res.n_neg_used) + " negative, " +
                                  std::to_string(res.n_pos_used) + " positive samples)");
      }
      break;
    }
  }
  return out;
}

}  // namespace resunit
