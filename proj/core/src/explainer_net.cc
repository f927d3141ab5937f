/*
 * Copyright 2026 The faithkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "faithkit/explainer_net.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace faithkit {

namespace {

double sigmoid(double z) { return logistic(z); }

void check_arch(const ExplainerArchitecture& a) {
  if (a.elements == 0 || a.block_dim == 0 || a.hidden == 0) {
    throw std::invalid_argument(
        "explainer architecture needs elements, block_dim and hidden > 0");
  }
}

}  // namespace

nlohmann::json ExplainerArchitecture::to_json() const {
  return {{"elements", elements},
          {"block_dim", block_dim},
          {"hidden", hidden},
          {"depth", depth},
          {"per_element_encoder", per_element_encoder},
          {"gated_mixing", gated_mixing}};
}

ExplainerArchitecture ExplainerArchitecture::from_json(
    const nlohmann::json& j) {
  ExplainerArchitecture a;
  a.elements = j.at("elements").get<std::size_t>();
  a.block_dim = j.at("block_dim").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::size_t>();
  a.depth = j.at("depth").get<std::size_t>();
  a.per_element_encoder = j.value("per_element_encoder", false);
  a.gated_mixing = j.value("gated_mixing", false);
  return a;
}

ExplainerNet::Offsets ExplainerNet::layout(const ExplainerArchitecture& a) {
  Offsets o;
  const std::size_t n = a.elements, d = a.block_dim, h = a.hidden;
  std::size_t at = 0;
  o.enc_w = at;
  at += (a.per_element_encoder ? n : 1) * h * d;
  o.enc_b = at;
  at += h;
  o.pos = at;
  at += n * h;
  for (std::size_t l = 0; l < a.depth; ++l) {
    o.mix_a.push_back(at);
    at += n * n;
    o.mix_w.push_back(at);
    at += h * h;
    o.mix_b.push_back(at);
    at += h;
  }
  o.head_v = at;
  at += h;
  o.head_c = at;
  at += 1;
  o.total = at;
  return o;
}

ExplainerNet::ExplainerNet(const ExplainerArchitecture& arch)
    : arch_(arch), off_(layout(arch)), params_(off_.total, 0.0) {
  check_arch(arch);
}

ExplainerNet ExplainerNet::random(const ExplainerArchitecture& arch,
                                  std::uint64_t seed, bool zero_head) {
  ExplainerNet net(arch);
  std::mt19937_64 rng(seed);
  const std::size_t n = arch.elements, d = arch.block_dim, h = arch.hidden;
  auto fill = [&](std::size_t start, std::size_t count, double limit) {
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t k = 0; k < count; ++k) net.params_[start + k] = u(rng);
  };
  fill(net.off_.enc_w, (arch.per_element_encoder ? n : 1) * h * d,
       std::sqrt(6.0 / double(h + d)));
  fill(net.off_.pos, n * h, 0.5);
  for (std::size_t l = 0; l < arch.depth; ++l) {
    fill(net.off_.mix_a[l], n * n, 1.0 / std::sqrt(double(n)));
    fill(net.off_.mix_w[l], h * h, std::sqrt(6.0 / double(2 * h)));
  }
  if (!zero_head) fill(net.off_.head_v, h, std::sqrt(6.0 / double(h + 1)));
  return net;
}

std::vector<double> ExplainerNet::forward(const Instance& x) const {
  Trace t;
  return forward(x, t);
}

std::vector<double> ExplainerNet::forward(const Instance& x,
                                          Trace& trace) const {
  const std::size_t n = arch_.elements, d = arch_.block_dim, h = arch_.hidden;
  if (x.elements() != n || x.block_dim() != d) {
    throw std::invalid_argument(
        "explainer expects " + std::to_string(n) + "x" + std::to_string(d) +
        " input, got " + std::to_string(x.elements()) + "x" +
        std::to_string(x.block_dim()));
  }
  const double* p = params_.data();
  trace.layers.assign(1, std::vector<double>(n * h));
  trace.mixed.clear();
  trace.squash.clear();
  auto& h0 = trace.layers[0];
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.element(i);
    const double* w = p + encoder_offset(i);
    for (std::size_t k = 0; k < h; ++k) {
      double z = p[off_.enc_b + k] + p[off_.pos + i * h + k];
      for (std::size_t j = 0; j < d; ++j) z += w[k * d + j] * xi[j];
      h0[i * h + k] = std::tanh(z);
    }
  }
  for (std::size_t l = 0; l < arch_.depth; ++l) {
    const auto& g = trace.layers.back();
    std::vector<double> u(n * h, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < h; ++k) {
        double z = 0.0;
        for (std::size_t m = 0; m < h; ++m) {
          z += p[off_.mix_w[l] + k * h + m] * g[j * h + m];
        }
        u[j * h + k] = z;
      }
    }
    std::vector<double> sq(n * h);
    std::vector<double> next(n * h);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < h; ++k) {
        double z = p[off_.mix_b[l] + k];
        for (std::size_t j = 0; j < n; ++j) {
          z += p[off_.mix_a[l] + i * n + j] * u[j * h + k];
        }
        sq[i * h + k] = std::tanh(z);
        const double c = sq[i * h + k];
        next[i * h + k] = g[i * h + k] + c;
        if (arch_.gated_mixing) next[i * h + k] += c * g[i * h + k];
      }
    }
    trace.mixed.push_back(std::move(u));
    trace.squash.push_back(std::move(sq));
    trace.layers.push_back(std::move(next));
  }
  const auto& g = trace.layers.back();
  trace.scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = p[off_.head_c];
    for (std::size_t k = 0; k < h; ++k) z += p[off_.head_v + k] * g[i * h + k];
    trace.scores[i] = sigmoid(z);
  }
  return trace.scores;
}

void ExplainerNet::backward(const Instance& x, const Trace& trace,
                            std::span<const double> d_scores,
                            std::span<double> grad) const {
  const std::size_t n = arch_.elements, d = arch_.block_dim, h = arch_.hidden;
  if (d_scores.size() != n || grad.size() != params_.size()) {
    throw std::invalid_argument("explainer backward: size mismatch");
  }
  const double* p = params_.data();
  double* gp = grad.data();
  std::vector<double> dg(n * h, 0.0);
  const auto& top = trace.layers.back();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = trace.scores[i];
    const double dz = d_scores[i] * s * (1.0 - s);
    gp[off_.head_c] += dz;
    for (std::size_t k = 0; k < h; ++k) {
      gp[off_.head_v + k] += dz * top[i * h + k];
      dg[i * h + k] = dz * p[off_.head_v + k];
    }
  }
  for (std::size_t l = arch_.depth; l-- > 0;) {
    const auto& g = trace.layers[l];
    const auto& u = trace.mixed[l];
    const auto& sq = trace.squash[l];
    std::vector<double> dpre(n * h);
    for (std::size_t q = 0; q < n * h; ++q) {
      double dc = dg[q];
      if (arch_.gated_mixing) {
        dc += dg[q] * g[q];
        dg[q] += dg[q] * sq[q];
      }
      dpre[q] = dc * (1.0 - sq[q] * sq[q]);
    }
    std::vector<double> du(n * h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < h; ++k) {
        const double v = dpre[i * h + k];
        gp[off_.mix_b[l] + k] += v;
        for (std::size_t j = 0; j < n; ++j) {
          gp[off_.mix_a[l] + i * n + j] += v * u[j * h + k];
          du[j * h + k] += p[off_.mix_a[l] + i * n + j] * v;
        }
      }
    }
    // dg keeps the residual path; add the path through W_m.
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < h; ++k) {
        const double v = du[j * h + k];
        if (v == 0.0) continue;
        for (std::size_t m = 0; m < h; ++m) {
          gp[off_.mix_w[l] + k * h + m] += v * g[j * h + m];
          dg[j * h + m] += p[off_.mix_w[l] + k * h + m] * v;
        }
      }
    }
  }
  const auto& h0 = trace.layers[0];
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.element(i);
    double* gw = gp + encoder_offset(i);
    for (std::size_t k = 0; k < h; ++k) {
      const double a = h0[i * h + k];
      const double v = dg[i * h + k] * (1.0 - a * a);
      gp[off_.enc_b + k] += v;
      gp[off_.pos + i * h + k] += v;
      for (std::size_t j = 0; j < d; ++j) gw[k * d + j] += v * xi[j];
    }
  }
}

nlohmann::json ExplainerNet::to_json() const {
  return {{"architecture", arch_.to_json()}, {"parameters", params_}};
}

ExplainerNet ExplainerNet::from_json(const nlohmann::json& j) {
  ExplainerNet net(ExplainerArchitecture::from_json(j.at("architecture")));
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.params_.size()) {
    throw std::invalid_argument("explainer parameters: expected " +
                                std::to_string(net.params_.size()) +
                                " values, got " +
                                std::to_string(params.size()));
  }
  if (!all_finite(params)) {
    throw std::invalid_argument("explainer parameters contain non-finite values");
  }
  net.params_ = std::move(params);
  return net;
}

std::string_view to_string(PcSimilarity s) {
  return s == PcSimilarity::kPearson ? "pearson" : "cosine";
}

PcSimilarity pc_similarity_from_string(std::string_view name) {
  if (name == "pearson") return PcSimilarity::kPearson;
  if (name == "cosine") return PcSimilarity::kCosine;
  throw std::invalid_argument("unknown pattern similarity: " +
                              std::string(name));
}

double pearson_with_grad(std::span<const double> a, std::span<const double> b,
                         std::span<double> grad) {
  const std::size_t n = a.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n < 2 || b.size() != n) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / double(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / double(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  const double denom = std::sqrt(saa * sbb);
  const double r = sab / denom;
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = (b[i] - mb) / denom - r * (a[i] - ma) / saa;
  }
  return r;
}

double cosine_with_grad(std::span<const double> a, std::span<const double> b,
                        std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  const double c = ab / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad[i] = b[i] / (na * nb) - c * a[i] / aa;
  }
  return c;
}

double loss_pc(const ExplainerNet& net, std::span<const SignalPair> batch,
               PcSimilarity similarity, std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("loss_pc: empty batch");
  const std::size_t n = net.architecture().elements;
  if (grad) grad->resize(net.num_parameters(), 0.0);
  const double scale = 1.0 / double(batch.size());
  double total = 0.0;
  ExplainerNet::Trace trace;
  std::vector<double> dsim(n), dscore(n);
  for (const auto& pair : batch) {
    if (pair.saliency.size() != n) {
      throw std::invalid_argument("loss_pc: saliency length mismatch");
    }
    const auto s = net.forward(pair.instance, trace);
    const double sim = similarity == PcSimilarity::kPearson
                           ? pearson_with_grad(s, pair.saliency, dsim)
                           : cosine_with_grad(s, pair.saliency, dsim);
    total += 1.0 - sim;
    if (grad) {
      for (std::size_t i = 0; i < n; ++i) dscore[i] = -scale * dsim[i];
      net.backward(pair.instance, trace, dscore, *grad);
    }
  }
  return total * scale;
}

LcTarget make_lc_target(const Instance& x, const ModelPtr& model,
                        const RemovalStrategy& strategy,
                        const EffectConfig& effects, LcMode mode,
                        std::size_t subsets, std::uint64_t seed) {
  const std::size_t n = x.elements();
  LcTarget t;
  t.instance = x;
  SubsetRequest req;
  req.seed = seed;
  if (mode == LcMode::kExact) {
    req.mode = SubsetMode::kAllSubsets;
  } else {
    if (subsets == 0) throw std::invalid_argument("lc subsets must be > 0");
    req.mode = SubsetMode::kUniformPowerset;
    req.count = n < 63 ? std::min<std::uint64_t>(subsets, std::uint64_t{1} << n)
                       : subsets;
    req.distinct = true;
  }
  t.family = sample_subsets(n, req);
  PerturbationOracle oracle(x, target_prediction(model, x), strategy);
  t.effects.reserve(t.family.size());
  for (const auto& I : t.family) {
    t.effects.push_back(
        delta(oracle.original(), oracle.removed(I), effects.delta));
  }
  return t;
}

double loss_lc(const ExplainerNet& net, std::span<const LcTarget> batch,
               CorrelationKind tau, std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("loss_lc: empty batch");
  if (grad && tau != CorrelationKind::kPearson) {
    throw std::invalid_argument(
        "loss_lc: only the pearson form is differentiable");
  }
  const std::size_t n = net.architecture().elements;
  if (grad) grad->resize(net.num_parameters(), 0.0);
  const double scale = 1.0 / double(batch.size());
  double total = 0.0;
  ExplainerNet::Trace trace;
  std::vector<double> sums, dsum, dscore(n);
  for (const auto& t : batch) {
    if (t.family.size() != t.effects.size()) {
      throw std::invalid_argument("loss_lc: family/effects size mismatch");
    }
    const auto s = net.forward(t.instance, trace);
    sums.assign(t.family.size(), 0.0);
    for (std::size_t q = 0; q < t.family.size(); ++q) {
      sums[q] = local_sum(s, t.family[q]);
    }
    if (!grad) {
      total -= correlation(tau, sums, t.effects);
      continue;
    }
    dsum.assign(sums.size(), 0.0);
    total -= pearson_with_grad(sums, t.effects, dsum);
    std::fill(dscore.begin(), dscore.end(), 0.0);
    for (std::size_t q = 0; q < t.family.size(); ++q) {
      for (std::size_t i : t.family[q]) dscore[i] -= scale * dsum[q];
    }
    net.backward(t.instance, trace, dscore, *grad);
  }
  return total * scale;
}

double alpha(double epoch, const AlphaSchedule& schedule) {
  if (!(schedule.width > 0.0)) {
    throw std::invalid_argument("alpha schedule width must be > 0");
  }
  return 1.0 - logistic((epoch - schedule.midpoint) / schedule.width);
}

double loss_obj(const ExplainerNet& net, std::span<const SignalPair> pc_batch,
                std::span<const LcTarget> lc_batch, double alpha_value,
                PcSimilarity similarity, std::vector<double>* grad) {
  double value = 0.0;
  if (grad) grad->assign(net.num_parameters(), 0.0);
  std::vector<double> part;
  auto add = [&](double weight, double part_value) {
    value += weight * part_value;
    if (!grad) return;
    for (std::size_t k = 0; k < part.size(); ++k) (*grad)[k] += weight * part[k];
  };
  if (alpha_value > 0.0) {
    part.assign(net.num_parameters(), 0.0);
    add(alpha_value,
        loss_pc(net, pc_batch, similarity, grad ? &part : nullptr));
  }
  if (alpha_value < 1.0) {
    part.assign(net.num_parameters(), 0.0);
    add(1.0 - alpha_value, loss_lc(net, lc_batch, CorrelationKind::kPearson,
                                   grad ? &part : nullptr));
  }
  return value;
}

GradcheckResult gradcheck(const ExplainerNet& net, const LossFunction& loss,
                          double h) {
  std::vector<double> analytic(net.num_parameters(), 0.0);
  loss(net, &analytic);
  ExplainerNet probe = net;
  GradcheckResult r;
  for (std::size_t k = 0; k < probe.num_parameters(); ++k) {
    const double saved = probe.parameters()[k];
    probe.parameters()[k] = saved + h;
    const double up = loss(probe, nullptr);
    probe.parameters()[k] = saved - h;
    const double down = loss(probe, nullptr);
    probe.parameters()[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic[k] - numeric) / denom;
    if (k == 0 || err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_parameter = k;
      r.analytic = analytic[k];
      r.numeric = numeric;
    }
  }
  return r;
}

std::string_view to_string(LossSelection s) {
  switch (s) {
    case LossSelection::kObjective: return "objective";
    case LossSelection::kPatternOnly: return "pattern_only";
    case LossSelection::kLocalOnly: return "local_only";
  }
  return "objective";
}

LossSelection loss_selection_from_string(std::string_view name) {
  if (name == "objective") return LossSelection::kObjective;
  if (name == "pattern_only") return LossSelection::kPatternOnly;
  if (name == "local_only") return LossSelection::kLocalOnly;
  throw std::invalid_argument("unknown loss selection: " + std::string(name));
}

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::kMomentum ? "momentum" : "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

AlphaSchedule ExplainerTrainConfig::schedule() const {
  const double e = double(epochs);
  return {alpha_mid_fraction * e, std::max(alpha_width_fraction * e, 1e-9)};
}

nlohmann::json ExplainerTrainConfig::to_json() const {
  return {{"hidden", hidden},
          {"depth", depth},
          {"per_element_encoder", per_element_encoder},
          {"gated_mixing", gated_mixing},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"optimizer", std::string(to_string(optimizer))},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"alpha_mid_fraction", alpha_mid_fraction},
          {"alpha_width_fraction", alpha_width_fraction},
          {"loss", std::string(to_string(loss))},
          {"lc_mode", lc_mode == LcMode::kExact ? "exact" : "sampled"},
          {"lc_subsets", lc_subsets},
          {"pc_similarity", std::string(to_string(pc_similarity))},
          {"delta", std::string(to_string(effects.delta))},
          {"seed", seed}};
}

namespace {

class Optimizer {
 public:
  Optimizer(const ExplainerTrainConfig& cfg, std::size_t size)
      : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::kMomentum) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = cfg_.momentum * m_[k] - lr * grad[k];
        params[k] += m_[k];
      }
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, double(t_));
    const double c2 = 1.0 - std::pow(b2, double(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = b1 * m_[k] + (1.0 - b1) * grad[k];
      v_[k] = b2 * v_[k] + (1.0 - b2) * grad[k] * grad[k];
      params[k] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps);
    }
  }

 private:
  const ExplainerTrainConfig& cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

void validate(const ExplainerTrainConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.hidden == 0) errors.push_back("hidden must be > 0");
  if (cfg.epochs == 0) errors.push_back("epochs must be > 0");
  if (cfg.batch_size == 0) errors.push_back("batch_size must be > 0");
  if (!(cfg.learning_rate > 0.0)) errors.push_back("learning_rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    errors.push_back("momentum must be in [0, 1)");
  }
  if (!(cfg.alpha_width_fraction > 0.0)) {
    errors.push_back("alpha_width_fraction must be > 0");
  }
  if (cfg.lc_mode == LcMode::kSampled && cfg.lc_subsets == 0) {
    errors.push_back("lc_subsets must be > 0");
  }
  if (errors.empty()) return;
  std::string msg = "invalid explainer training config:";
  for (const auto& e : errors) msg += " " + e + ";";
  throw std::invalid_argument(msg);
}

}  // namespace

TrainedExplainer train_explainer(std::span<const SignalPair> signals,
                                 std::span<const Instance> lc_samples,
                                 const ModelPtr& model,
                                 const RemovalStrategy& strategy,
                                 const ExplainerTrainConfig& cfg) {
  validate(cfg);
  const bool need_pc = cfg.loss != LossSelection::kLocalOnly;
  const bool need_lc = cfg.loss != LossSelection::kPatternOnly;
  if (need_pc && signals.empty()) {
    throw std::invalid_argument("train_explainer: no signal pairs");
  }
  if (need_lc && lc_samples.empty()) {
    throw std::invalid_argument("train_explainer: no local-correlation samples");
  }
  const Instance& shape = !signals.empty() ? signals[0].instance : lc_samples[0];
  ExplainerArchitecture arch{shape.elements(), shape.block_dim(), cfg.hidden,
                             cfg.depth, cfg.per_element_encoder,
                             cfg.gated_mixing};
  TrainedExplainer out{ExplainerNet::random(arch, mix_seed(cfg.seed, 1)), {}};
  ExplainerNet& net = out.net;
  Optimizer opt(cfg, net.num_parameters());
  const AlphaSchedule schedule = cfg.schedule();
  std::mt19937_64 rng(mix_seed(cfg.seed, 2));

  // Exact targets never change, so compute them once.
  std::vector<LcTarget> lc_targets;
  auto build_targets = [&](std::size_t epoch) {
    lc_targets.clear();
    for (std::size_t q = 0; q < lc_samples.size(); ++q) {
      lc_targets.push_back(make_lc_target(
          lc_samples[q], model, strategy, cfg.effects, cfg.lc_mode,
          cfg.lc_subsets, mix_seed(mix_seed(cfg.seed, 3 + epoch), q)));
    }
  };
  if (need_lc && cfg.lc_mode == LcMode::kExact) build_targets(0);

  std::vector<std::size_t> pc_order(signals.size());
  std::iota(pc_order.begin(), pc_order.end(), 0);
  std::vector<std::size_t> lc_order(lc_samples.size());
  std::iota(lc_order.begin(), lc_order.end(), 0);

  const std::size_t steps =
      (std::max(need_pc ? signals.size() : 0, need_lc ? lc_samples.size() : 0) +
       cfg.batch_size - 1) / cfg.batch_size;
  std::vector<SignalPair> pc_batch;
  std::vector<LcTarget> lc_batch;
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ExplainerNet last_good = net;
    if (need_lc && cfg.lc_mode == LcMode::kSampled) build_targets(epoch);
    std::shuffle(pc_order.begin(), pc_order.end(), rng);
    std::shuffle(lc_order.begin(), lc_order.end(), rng);
    double a = alpha(double(epoch), schedule);
    if (cfg.loss == LossSelection::kPatternOnly) a = 1.0;
    if (cfg.loss == LossSelection::kLocalOnly) a = 0.0;
    EpochLog log{epoch, a, 0.0, 0.0, 0.0};
    for (std::size_t step = 0; step < steps; ++step) {
      pc_batch.clear();
      lc_batch.clear();
      for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const std::size_t k = step * cfg.batch_size + b;
        if (need_pc) pc_batch.push_back(signals[pc_order[k % pc_order.size()]]);
        if (need_lc) lc_batch.push_back(lc_targets[lc_order[k % lc_order.size()]]);
      }
      grad.assign(net.num_parameters(), 0.0);
      std::vector<double> part;
      double lpc = 0.0, llc = 0.0;
      if (need_pc) {
        part.assign(net.num_parameters(), 0.0);
        lpc = loss_pc(net, pc_batch, cfg.pc_similarity, a > 0.0 ? &part : nullptr);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += a * part[k];
      }
      if (need_lc) {
        part.assign(net.num_parameters(), 0.0);
        llc = loss_lc(net, lc_batch, CorrelationKind::kPearson,
                      a < 1.0 ? &part : nullptr);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += (1.0 - a) * part[k];
      }
      const double obj = a * lpc + (1.0 - a) * llc;
      if (!std::isfinite(obj) || !all_finite(grad)) {
        throw ExplainerDivergence(
            "explainer training diverged at epoch " + std::to_string(epoch),
            std::move(last_good), epoch);
      }
      log.loss_pc += lpc / double(steps);
      log.loss_lc += llc / double(steps);
      log.loss_obj += obj / double(steps);
      opt.step(net.parameters(), grad);
    }
    if (!all_finite(net.parameters())) {
      throw ExplainerDivergence(
          "explainer parameters non-finite after epoch " + std::to_string(epoch),
          std::move(last_good), epoch);
    }
    out.log.push_back(log);
  }
  return out;
}

void write_training_log_csv(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,alpha,loss_pc,loss_lc,loss_obj\n";
  out.precision(10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.alpha << ',' << e.loss_pc << ',' << e.loss_lc
        << ',' << e.loss_obj << '\n';
  }
}

nlohmann::json explainer_checkpoint(const TrainedExplainer& trained,
                                    const ExplainerTrainConfig& cfg) {
  nlohmann::json j = {{"format", "faithkit.explainer"},
                      {"version", 1},
                      {"net", trained.net.to_json()},
                      {"train_config", cfg.to_json()}};
  if (!trained.log.empty()) {
    const auto& e = trained.log.back();
    j["final_losses"] = {{"epoch", e.epoch},
                         {"alpha", e.alpha},
                         {"loss_pc", e.loss_pc},
                         {"loss_lc", e.loss_lc},
                         {"loss_obj", e.loss_obj}};
  }
  return j;
}

ExplainerNet load_explainer(const nlohmann::json& j) {
  if (j.value("format", "") != "faithkit.explainer") {
    throw std::invalid_argument("not an explainer checkpoint");
  }
  if (j.value("version", 0) != 1) {
    throw std::invalid_argument("unsupported explainer checkpoint version");
  }
  return ExplainerNet::from_json(j.at("net"));
}

}  // namespace faithkit
