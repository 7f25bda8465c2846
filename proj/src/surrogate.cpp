#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "evoplace/dse.hpp"
#include "evoplace/error.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::dse {

SurrogateNet::SurrogateNet(int embedding_dim, int digest_dim, const SurrogateConfig& cfg)
    : e_(embedding_dim), d_(digest_dim), cfg_(cfg) {
  if (e_ < 0 || d_ < 0 || cfg.hidden_a < 1 || cfg.out_a < 1 || cfg.hidden_b < 1)
    throw Error(ErrorCode::InvalidArgument, "surrogate dimensions must be positive");
  const Layout l = layout();
  w_.assign(l.total, 0.0);
  Rng rng(derive_seed(cfg.seed, {fnv1a("surrogate-init")}));
  auto xavier = [&](std::size_t off, int rows, int cols) {
    const double r = std::sqrt(6.0 / (rows + cols));
    for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); ++i)
      w_[off + i] = rng.uniform(-r, r);
  };
  xavier(l.a1_w, cfg.hidden_a, d_);
  xavier(l.a2_w, cfg.out_a, cfg.hidden_a);
  xavier(l.b1_w, cfg.hidden_b, e_ + cfg.out_a);
  xavier(l.b2_w, 1, cfg.hidden_b);
  digest_mean_.assign(static_cast<std::size_t>(d_), 0.0);
  digest_scale_.assign(static_cast<std::size_t>(d_), 1.0);
}

void SurrogateNet::set_digest_scaling(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != static_cast<std::size_t>(d_) || scale.size() != static_cast<std::size_t>(d_))
    throw Error(ErrorCode::InvalidArgument, "digest scaling has the wrong size");
  digest_mean_ = std::move(mean);
  digest_scale_ = std::move(scale);
}

SurrogateNet::Layout SurrogateNet::layout() const {
  Layout l{};
  const std::size_t ha = static_cast<std::size_t>(cfg_.hidden_a), oa = static_cast<std::size_t>(cfg_.out_a),
                    hb = static_cast<std::size_t>(cfg_.hidden_b), d = static_cast<std::size_t>(d_),
                    e = static_cast<std::size_t>(e_);
  std::size_t o = 0;
  l.a1_w = o; o += ha * d;
  l.a1_b = o; o += ha;
  l.a2_w = o; o += oa * ha;
  l.a2_b = o; o += oa;
  l.b1_w = o; o += hb * (e + oa);
  l.b1_b = o; o += hb;
  l.b2_w = o; o += hb;
  l.b2_b = o; o += 1;
  l.total = o;
  return l;
}

namespace {

struct Activations {
  std::vector<double> in_a, h_a, h1, in_b, h_b;
  double out = 0.0;
};

// dense layer with tanh
void layer(const std::vector<double>& w, std::size_t wo, std::size_t bo, const std::vector<double>& in, int rows,
           std::vector<double>& out, bool activate) {
  out.assign(static_cast<std::size_t>(rows), 0.0);
  const std::size_t cols = in.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = w[bo + r];
    const double* row = &w[wo + r * cols];
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * in[c];
    out[r] = activate ? std::tanh(s) : s;
  }
}

}  // namespace

double SurrogateNet::predict(const std::vector<double>& embedding, const std::vector<double>& digest) const {
  if (embedding.size() != static_cast<std::size_t>(e_) || digest.size() != static_cast<std::size_t>(d_))
    throw Error(ErrorCode::InvalidArgument, "surrogate input has the wrong dimension");
  const Layout l = layout();
  std::vector<double> in_a(digest.size()), h_a, h1, h_b, out;
  for (std::size_t i = 0; i < digest.size(); ++i) in_a[i] = (digest[i] - digest_mean_[i]) / digest_scale_[i];
  layer(w_, l.a1_w, l.a1_b, in_a, cfg_.hidden_a, h_a, true);
  layer(w_, l.a2_w, l.a2_b, h_a, cfg_.out_a, h1, true);
  std::vector<double> in_b = embedding;
  in_b.insert(in_b.end(), h1.begin(), h1.end());
  layer(w_, l.b1_w, l.b1_b, in_b, cfg_.hidden_b, h_b, true);
  layer(w_, l.b2_w, l.b2_b, h_b, 1, out, false);
  return out[0];
}

double SurrogateNet::loss_and_gradient(const std::vector<DesignPoint>& batch, std::vector<double>* grad) const {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  const Layout l = layout();
  if (grad) grad->assign(l.total, 0.0);
  const std::size_t ha = static_cast<std::size_t>(cfg_.hidden_a), oa = static_cast<std::size_t>(cfg_.out_a),
                    hb = static_cast<std::size_t>(cfg_.hidden_b), d = static_cast<std::size_t>(d_),
                    nb = static_cast<std::size_t>(e_) + oa;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const DesignPoint& p : batch) {
    if (!p.y) throw Error(ErrorCode::InvalidArgument, "training point without a label");
    std::vector<double> in_a(d), h_a, h1, h_b, out;
    for (std::size_t i = 0; i < d; ++i) in_a[i] = (p.digest[i] - digest_mean_[i]) / digest_scale_[i];
    layer(w_, l.a1_w, l.a1_b, in_a, cfg_.hidden_a, h_a, true);
    layer(w_, l.a2_w, l.a2_b, h_a, cfg_.out_a, h1, true);
    std::vector<double> in_b = p.embedding;
    in_b.insert(in_b.end(), h1.begin(), h1.end());
    layer(w_, l.b1_w, l.b1_b, in_b, cfg_.hidden_b, h_b, true);
    layer(w_, l.b2_w, l.b2_b, h_b, 1, out, false);
    const double r = out[0] - *p.y;
    loss += r * r * inv_n;
    if (!grad) continue;
    std::vector<double>& g = *grad;
    const double dout = 2.0 * r * inv_n;
    g[l.b2_b] += dout;
    std::vector<double> dz_b(hb);
    for (std::size_t j = 0; j < hb; ++j) {
      g[l.b2_w + j] += dout * h_b[j];
      dz_b[j] = dout * w_[l.b2_w + j] * (1.0 - h_b[j] * h_b[j]);
    }
    std::vector<double> d_in_b(nb, 0.0);
    for (std::size_t j = 0; j < hb; ++j) {
      g[l.b1_b + j] += dz_b[j];
      for (std::size_t c = 0; c < nb; ++c) {
        g[l.b1_w + j * nb + c] += dz_b[j] * in_b[c];
        d_in_b[c] += dz_b[j] * w_[l.b1_w + j * nb + c];
      }
    }
    std::vector<double> dz_a2(oa);
    for (std::size_t j = 0; j < oa; ++j) dz_a2[j] = d_in_b[static_cast<std::size_t>(e_) + j] * (1.0 - h1[j] * h1[j]);
    std::vector<double> d_h_a(ha, 0.0);
    for (std::size_t j = 0; j < oa; ++j) {
      g[l.a2_b + j] += dz_a2[j];
      for (std::size_t c = 0; c < ha; ++c) {
        g[l.a2_w + j * ha + c] += dz_a2[j] * h_a[c];
        d_h_a[c] += dz_a2[j] * w_[l.a2_w + j * ha + c];
      }
    }
    for (std::size_t j = 0; j < ha; ++j) {
      const double dz = d_h_a[j] * (1.0 - h_a[j] * h_a[j]);
      g[l.a1_b + j] += dz;
      for (std::size_t c = 0; c < d; ++c) g[l.a1_w + j * d + c] += dz * in_a[c];
    }
  }
  return loss;
}

void SurrogateNet::save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little, "surrogate files are little-endian");
  json h = {{"format", "evoplace-surrogate"},
            {"version", 1},
            {"embedding_dim", e_},
            {"digest_dim", d_},
            {"layers", {{d_, cfg_.hidden_a}, {cfg_.hidden_a, cfg_.out_a}, {e_ + cfg_.out_a, cfg_.hidden_b}, {cfg_.hidden_b, 1}}},
            {"activation", "tanh"},
            {"seed", cfg_.seed},
            {"learning_rate", cfg_.learning_rate},
            {"epochs", cfg_.epochs},
            {"batch_size", cfg_.batch_size},
            {"digest_mean", digest_mean_},
            {"digest_scale", digest_scale_},
            {"param_count", w_.size()}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << h.dump() << '\n';
  out.write(reinterpret_cast<const char*>(w_.data()), static_cast<std::streamsize>(w_.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

SurrogateNet SurrogateNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorruptStore, path.string() + ": unreadable surrogate header");
  }
  if (h.value("format", "") != "evoplace-surrogate" || h.value("version", 0) != 1)
    throw Error(ErrorCode::CorruptStore, path.string() + ": not a surrogate file");
  SurrogateConfig cfg;
  const auto& layers = h.at("layers");
  cfg.hidden_a = layers.at(0).at(1).get<int>();
  cfg.out_a = layers.at(1).at(1).get<int>();
  cfg.hidden_b = layers.at(2).at(1).get<int>();
  cfg.seed = h.value("seed", std::uint64_t{0});
  cfg.learning_rate = h.value("learning_rate", 1e-3);
  cfg.epochs = h.value("epochs", 200);
  cfg.batch_size = h.value("batch_size", 16);
  SurrogateNet net(h.at("embedding_dim").get<int>(), h.at("digest_dim").get<int>(), cfg);
  net.set_digest_scaling(h.at("digest_mean").get<std::vector<double>>(), h.at("digest_scale").get<std::vector<double>>());
  if (h.at("param_count").get<std::size_t>() != net.w_.size())
    throw Error(ErrorCode::CorruptStore, path.string() + ": parameter count mismatch");
  in.read(reinterpret_cast<char*>(net.w_.data()), static_cast<std::streamsize>(net.w_.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(net.w_.size() * sizeof(double)))
    throw Error(ErrorCode::CorruptStore, path.string() + ": truncated weights");
  return net;
}

namespace {

SurrogateNet train_once(const std::vector<DesignPoint>& corpus, const SurrogateConfig& cfg, double lr,
                        std::vector<double>& curve, bool& finite) {
  const std::size_t e = corpus.front().embedding.size(), d = corpus.front().digest.size();
  SurrogateNet net(static_cast<int>(e), static_cast<int>(d), cfg);
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto& p : corpus)
    for (std::size_t i = 0; i < d; ++i) mean[i] += p.digest[i] / static_cast<double>(corpus.size());
  for (const auto& p : corpus)
    for (std::size_t i = 0; i < d; ++i) scale[i] += (p.digest[i] - mean[i]) * (p.digest[i] - mean[i]) / static_cast<double>(corpus.size());
  for (double& s : scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  net.set_digest_scaling(mean, scale);
  // output bias starts at the label mean
  double ymean = 0.0;
  for (const auto& p : corpus) ymean += *p.y / static_cast<double>(corpus.size());
  net.params().back() = ymean;
  // zero output weights: the untrained net predicts the label mean everywhere
  const std::size_t hb = static_cast<std::size_t>(cfg.hidden_b);
  std::fill(net.params().end() - 1 - static_cast<std::ptrdiff_t>(hb), net.params().end() - 1, 0.0);

  std::vector<double>& w = net.params();
  std::vector<double> m1(w.size(), 0.0), m2(w.size(), 0.0), g;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  curve.clear();
  finite = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, {fnv1a("surrogate-epoch"), static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double lr_t = lr * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * epoch / cfg.epochs)));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<DesignPoint> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) batch.push_back(corpus[order[k]]);
      const double loss = net.loss_and_gradient(batch, &g);
      if (!std::isfinite(loss)) {
        finite = false;
        return net;
      }
      epoch_loss += loss * static_cast<double>(batch.size()) / static_cast<double>(order.size());
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step)), c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t i = 0; i < w.size(); ++i) {
        m1[i] = b1 * m1[i] + (1 - b1) * g[i];
        m2[i] = b2 * m2[i] + (1 - b2) * g[i] * g[i];
        w[i] -= lr_t * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
      }
    }
    curve.push_back(epoch_loss);
  }
  for (double v : w)
    if (!std::isfinite(v)) finite = false;
  return net;
}

}  // namespace

SurrogateNet pretrain_surrogate(const std::vector<DesignPoint>& corpus, const SurrogateConfig& cfg,
                                TrainingReport* report, std::size_t min_points) {
  if (corpus.size() < min_points)
    throw Error(ErrorCode::InvalidArgument, "surrogate corpus needs at least " + std::to_string(min_points) + " points");
  for (const auto& p : corpus) {
    if (!p.y || !std::isfinite(*p.y)) throw Error(ErrorCode::InvalidArgument, "corpus point " + p.id + " has no finite label");
    if (p.embedding.size() != corpus.front().embedding.size() || p.digest.size() != corpus.front().digest.size())
      throw Error(ErrorCode::InvalidArgument, "corpus dimensions are inconsistent");
  }
  double lr = cfg.learning_rate;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    std::vector<double> curve;
    bool finite = true;
    SurrogateNet net = train_once(corpus, cfg, lr, curve, finite);
    if (finite) {
      if (report) {
        report->loss_curve = curve;
        report->learning_rate = lr;
        report->retries = attempt;
      }
      return net;
    }
    lr *= 0.5;
  }
  throw Error(ErrorCode::NonFiniteLoss, "training loss stayed non-finite after learning-rate halving");
}

}  // namespace evoplace::dse
