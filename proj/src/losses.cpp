#include "embnoise/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embnoise/error.hpp"

namespace embnoise {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::CCE: return "cce";
    case LossKind::MAE: return "mae";
    case LossKind::GCE: return "gce";
    case LossKind::NCE: return "nce";
    case LossKind::RCE: return "rce";
    case LossKind::APL: return "apl";
  }
  return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
  for (auto k : {LossKind::CCE, LossKind::MAE, LossKind::GCE, LossKind::NCE, LossKind::RCE, LossKind::APL}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown loss kind '" + std::string(name) + "'");
}

void LossSpec::validate() const {
  if (!(prob_floor > 0.0 && prob_floor < 1e-3)) throw ValidationError("prob_floor must be in (0, 1e-3)");
  switch (kind) {
    case LossKind::GCE:
      if (!(q > 0.0 && q <= 1.0)) throw ValidationError("GCE q must be in (0, 1]");
      break;
    case LossKind::RCE:
      if (!(A < 0.0)) throw ValidationError("RCE A must be negative");
      break;
    case LossKind::APL:
      if (!(A < 0.0)) throw ValidationError("APL A must be negative");
      if (!(alpha > 0.0) || !(beta > 0.0)) throw ValidationError("APL alpha and beta must be positive");
      break;
    default:
      break;
  }
}

LossSpec LossSpec::as_cce() const {
  LossSpec s;
  s.kind = LossKind::CCE;
  s.prob_floor = prob_floor;
  return s;
}

double cce(std::span<const double> p, std::size_t y) { return -std::log(p[y]); }

double mae(std::span<const double> p, std::size_t y) { return 2.0 * (1.0 - p[y]); }

double gce(std::span<const double> p, std::size_t y, double q) {
  if (q == 1.0) return 1.0 - p[y];
  // expm1 keeps the q -> 0 limit accurate: (1 - p^q)/q = -expm1(q log p)/q.
  return -std::expm1(q * std::log(p[y])) / q;
}

double nce(std::span<const double> p, std::size_t y) {
  double denom = 0.0;
  for (double pk : p) denom -= std::log(pk);
  return -std::log(p[y]) / denom;
}

double rce(std::span<const double> p, std::size_t y, double A) { return -A * (1.0 - p[y]); }

double apl(std::span<const double> p, std::size_t y, double alpha, double beta, double A) {
  return alpha * nce(p, y) + beta * rce(p, y, A);
}

std::vector<double> clamp_probs(std::span<const double> p, double floor) {
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = std::clamp(p[k], floor, 1.0);
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
  return out;
}

namespace {

double dispatch(const LossSpec& spec, std::span<const double> r, std::size_t y) {
  switch (spec.kind) {
    case LossKind::CCE: return cce(r, y);
    case LossKind::MAE: return mae(r, y);
    case LossKind::GCE: return gce(r, y, spec.q);
    case LossKind::NCE: return nce(r, y);
    case LossKind::RCE: return rce(r, y, spec.A);
    case LossKind::APL: return apl(r, y, spec.alpha, spec.beta, spec.A);
  }
  return 0.0;
}

// d loss / d r for the clamped, renormalized row r; written into g.
void loss_grad_wrt_probs(const LossSpec& spec, std::span<const double> r, std::size_t y, std::span<double> g) {
  std::fill(g.begin(), g.end(), 0.0);
  auto add_nce = [&](double weight) {
    const double a = -std::log(r[y]);
    double b = 0.0;
    for (double rk : r) b -= std::log(rk);
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double da = k == y ? -1.0 / r[y] : 0.0;
      const double db = -1.0 / r[k];
      g[k] += weight * (da * b - a * db) / (b * b);
    }
  };
  switch (spec.kind) {
    case LossKind::CCE: g[y] = -1.0 / r[y]; break;
    case LossKind::MAE: g[y] = -2.0; break;
    case LossKind::GCE: g[y] = -std::pow(r[y], spec.q - 1.0); break;
    case LossKind::NCE: add_nce(1.0); break;
    case LossKind::RCE: g[y] = spec.A; break;
    case LossKind::APL:
      add_nce(spec.alpha);
      g[y] += spec.beta * spec.A;
      break;
  }
}

}  // namespace

double loss_value(const LossSpec& spec, std::span<const double> p, std::size_t y) {
  if (y >= p.size()) throw ValidationError("target class out of range");
  const auto r = clamp_probs(p, spec.prob_floor);
  return dispatch(spec, r, y);
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - m);
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
  return out;
}

LossBatch loss_and_grad(const LossSpec& spec, std::span<const double> scores, std::size_t batch, std::size_t classes,
                        std::span<const Label> targets) {
  spec.validate();
  if (batch == 0 || classes < 2) throw ValidationError("loss_and_grad: empty batch or K < 2");
  if (scores.size() != batch * classes || targets.size() != batch) {
    throw ValidationError("loss_and_grad: shape mismatch");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("loss_and_grad: non-finite score");
  }

  LossBatch out;
  out.batch = batch;
  out.classes = classes;
  out.targets.assign(targets.begin(), targets.end());
  out.probs.resize(batch * classes);
  out.grad_scores.resize(batch * classes);

  std::vector<double> clamped(classes), g(classes), dp(classes);
  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t y = targets[b];
    if (y >= classes) throw ValidationError("loss_and_grad: target " + std::to_string(y) + " >= K");
    const auto p = softmax(scores.subspan(b * classes, classes));
    std::copy(p.begin(), p.end(), out.probs.begin() + static_cast<std::ptrdiff_t>(b * classes));

    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      clamped[k] = std::max(p[k], spec.prob_floor);
      z += clamped[k];
    }
    std::vector<double> r(classes);
    for (std::size_t k = 0; k < classes; ++k) r[k] = clamped[k] / z;

    total += dispatch(spec, r, y);
    loss_grad_wrt_probs(spec, r, y, g);

    // r = c / sum(c):  dL/dc_j = (g_j - <g, r>) / z;  c_j = max(p_j, floor).
    const double gr = std::inner_product(g.begin(), g.end(), r.begin(), 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      dp[k] = p[k] > spec.prob_floor ? (g[k] - gr) / z : 0.0;
    }
    // Softmax Jacobian: dL/ds_i = p_i (dL/dp_i - <dL/dp, p>).
    const double dpp = std::inner_product(dp.begin(), dp.end(), p.begin(), 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      out.grad_scores[b * classes + k] = p[k] * (dp[k] - dpp) * inv_batch;
    }
  }
  out.value = total * inv_batch;
  return out;
}

}  // namespace embnoise
