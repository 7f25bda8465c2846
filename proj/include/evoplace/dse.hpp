#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "evoplace/strategy.hpp"

namespace evoplace::dse {

using nlohmann::json;

// ---- design points ------------------------------------------------------------

/// Order of the placement digest appended after the algorithm embedding.
const std::vector<std::string>& digest_names();
/// log cells, log nets, utilization, macro share, fixed share, mean degree,
/// degree spread, aspect ratio.
std::vector<double> placement_digest(const dsl::FeatureTable& f);

struct DesignPoint {
  std::string id;
  std::vector<double> embedding;
  std::vector<double> digest;
  std::optional<double> y;

  std::vector<double> features() const;  // embedding then digest
};

/// Maps HPWL to a loss in (0, 1): r / (1 + r) with r = hpwl / baseline.
/// Non-Success runs score 1.
double normalized_loss(double hpwl, double baseline, bool success);

// ---- Gaussian process -------------------------------------------------------------

struct KernelParams {
  double length_scale = 1.0;
  double signal_var = 1.0;
  double noise_var = 1e-4;
};

struct GpModel {
  KernelParams kernel;
  double prior_mean = 0.0;
  double jitter = 0.0;  // added to the diagonal on top of noise_var
  Eigen::MatrixXd X;    // one row per (deduplicated) input
  Eigen::VectorXd y;
  Eigen::MatrixXd L;    // lower Cholesky factor
  Eigen::VectorXd alpha;
};

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& k);

/// Exact GP regression. Duplicate inputs are averaged. Throws
/// InvalidArgument with no data, SingularCovariance when jitter up to 1e-4
/// does not help.
GpModel gp_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y, const KernelParams& k,
               double prior_mean = 0.0);

struct Prediction {
  double mu = 0.0;
  double sigma = 0.0;      // latent function
  double sigma_obs = 0.0;  // including observation noise
};

Prediction gp_predict(const GpModel& m, const std::vector<double>& x);

/// Minimization EI.
double expected_improvement(double mu, double sigma, double best_y, double xi);

/// Median of pairwise Euclidean distances (1 when fewer than two points or
/// all distances are 0).
double median_pairwise_distance(const std::vector<std::vector<double>>& X);

// ---- surrogate network ------------------------------------------------------------

struct SurrogateConfig {
  int hidden_a = 64;
  int out_a = 32;
  int hidden_b = 32;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int max_retries = 3;
};

/// Net A: digest -> tanh(hidden_a) -> tanh(out_a) = h1.
/// Net B: [embedding, h1] -> tanh(hidden_b) -> scalar.
class SurrogateNet {
 public:
  SurrogateNet() = default;
  SurrogateNet(int embedding_dim, int digest_dim, const SurrogateConfig& cfg);

  double predict(const std::vector<double>& embedding, const std::vector<double>& digest) const;
  double predict(const DesignPoint& p) const { return predict(p.embedding, p.digest); }

  /// Mean squared error over `batch` and its gradient with respect to params().
  double loss_and_gradient(const std::vector<DesignPoint>& batch, std::vector<double>* grad) const;

  std::vector<double>& params() { return w_; }
  const std::vector<double>& params() const { return w_; }
  /// Digest standardization applied before net A (identity by default).
  void set_digest_scaling(std::vector<double> mean, std::vector<double> scale);
  int embedding_dim() const { return e_; }
  int digest_dim() const { return d_; }
  const SurrogateConfig& config() const { return cfg_; }

  void save(const std::filesystem::path& path) const;
  static SurrogateNet load(const std::filesystem::path& path);

 private:
  struct Layout {
    std::size_t a1_w, a1_b, a2_w, a2_b, b1_w, b1_b, b2_w, b2_b, total;
  };
  Layout layout() const;

  int e_ = 0;
  int d_ = 0;
  SurrogateConfig cfg_;
  std::vector<double> w_;
  std::vector<double> digest_mean_;
  std::vector<double> digest_scale_;
};

struct TrainingReport {
  std::vector<double> loss_curve;  // mean epoch loss
  double learning_rate = 0.0;      // after any halving
  int retries = 0;
};

/// Mini-batch Adam on squared error. Needs >= `min_points` labelled points.
SurrogateNet pretrain_surrogate(const std::vector<DesignPoint>& corpus, const SurrogateConfig& cfg,
                                TrainingReport* report = nullptr, std::size_t min_points = 50);

// ---- search loop -------------------------------------------------------------------

enum class FusionMode { Residual, Raw };

struct DseOptions {
  std::size_t init_count = 0;  // 0 means max(5, N / 10)
  double xi = 0.01;
  double noise_var = 1e-4;
  FusionMode mode = FusionMode::Residual;
  const SurrogateNet* surrogate = nullptr;
};

/// Returns the loss for one pool point, or nullopt when evaluation failed.
using PointEvaluator = std::function<std::optional<double>(std::size_t index)>;

struct DseResult {
  std::vector<std::size_t> order;  // evaluated pool indices
  std::vector<double> y;           // parallel to order
  std::size_t best = 0;            // pool index
  double best_y = 0.0;
  std::vector<json> history;       // one dse-step record per evaluation
};

DseResult run_dse(const std::vector<DesignPoint>& pool, std::size_t N, std::uint64_t seed,
                  const PointEvaluator& evaluate, const DseOptions& opts = {});

}  // namespace evoplace::dse
