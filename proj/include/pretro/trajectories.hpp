#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pretro/binsim.hpp"
#include "pretro/model.hpp"
#include "pretro/schedules.hpp"

namespace pretro {

// Quadratures (x1, p1, x2, p2) with vacuum variance 1/2.
struct GaussianState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = 0.5 * Eigen::Matrix4d::Identity();

  // Smallest eigenvalue of cov + (i/2) Omega; negative means unphysical.
  double uncertainty_margin() const;
  // Throws StabilityError when cov is asymmetric or violates the
  // uncertainty relation beyond rounding.
  void validate() const;
};

struct OscillatorInput {
  enum class Kind { coherent, thermal };
  Kind kind = Kind::coherent;
  cplx alpha = 0.0;    // coherent amplitude
  double nbar = 0.0;   // thermal occupancy

  static OscillatorInput coherent(cplx a) { return {Kind::coherent, a, 0.0}; }
  static OscillatorInput thermal(double n) { return {Kind::thermal, 0.0, n}; }
  // Mean (x, p) and per-quadrature variance.
  Eigen::Vector2d mean() const;
  double variance() const;
};

// One bin of the collision map in real quadratures. Inputs are the system
// quadratures and the bin's field quadratures (x_a, p_a, x_c, p_c per field
// set); outputs are the new system quadratures and the real and imaginary
// parts of the complex record(s).
struct BinMap {
  BinRates bin;
  Eigen::Matrix4d system;
  Eigen::MatrixXd system_noise;  // 4 x field quadratures
  Eigen::MatrixXd record;        // (2 or 4) x 4
  Eigen::MatrixXd record_noise;  // (2 or 4) x field quadratures
};

BinMap bin_map(double zeta1, double zeta2, Topology topology, const BinRates& bin);

struct RecordSample {
  cplx m = 0.0;       // record m(t_k) sqrt(dt_k), or m_minus for parallel
  cplx m_plus = 0.0;  // parallel only
};

// Full conditional update: apply the bin map with thermal field inputs at
// n_in, sample the record(s) from their marginal and condition the state on
// them.
RecordSample step(GaussianState& state, const BinMap& map, double n_in, std::mt19937_64& rng);

struct TrajectoryConfig {
  InteractionSpec spec;
  RateSchedule s1 = RateSchedule::constant(0.0, 1.0);
  RateSchedule s2 = RateSchedule::constant(0.0, 1.0);
  FilterSpec filter = FilterSpec::custom([](double) { return 0.0; });  // on the bare record
  std::optional<FilterSpec> aux;           // parallel m_plus filter
  OscillatorInput source = OscillatorInput::coherent({1.0, 0.5});
  OscillatorInput target = OscillatorInput::coherent(0.0);
  int trials = 2000;
  std::uint64_t seed = 0;
  int batches = 20;
  BinSimOptions bins;
};

// Optimal protocol on the bare record: raw filter for sequential topologies
// (zeta2 forced to 0 for direct transfer), renormalized filter plus the
// optimal auxiliary filter for parallel teleportation with zeta2 = -zeta1.
TrajectoryConfig optimal_trajectory_config(const InteractionSpec& spec);

// Independent stream seed for trajectory `index`.
std::uint64_t trajectory_seed(std::uint64_t base, std::uint64_t index);

struct TrialResult {
  std::uint64_t index = 0;
  cplx M = 0.0;  // accumulated outcome
  // Target mean after the feedback displacement by (-xbar, -pbar).
  Eigen::Vector2d target_mean = Eigen::Vector2d::Zero();
  // Target mean rotated by pi: measuring sums of quadratures transfers -b.
  Eigen::Vector2d aligned_mean = Eigen::Vector2d::Zero();
  // Single-trial estimate of the excess per-quadrature variance.
  double excess = 0.0;
};

class TrajectoryPlan;
TrialResult run_trial(const TrajectoryPlan& plan, std::uint64_t index);

// The conditional covariance does not depend on the outcomes, so the gains
// are computed once. Each trajectory then only propagates means.
class TrajectoryPlan {
 public:
  explicit TrajectoryPlan(const TrajectoryConfig& config);

  const TrajectoryConfig& config() const { return config_; }
  int bins() const { return int(steps_.size()); }
  const GaussianState& initial() const { return initial_; }
  // Conditional covariance at T, before feedback.
  const Eigen::Matrix4d& final_covariance() const { return final_cov_; }
  double min_uncertainty_margin() const { return min_margin_; }
  int source_index() const;  // 0 for oscillator 1, 2 for oscillator 2
  int target_index() const;

 private:
  struct Step {
    Eigen::Matrix4d propagate;
    Eigen::MatrixXd record;      // record mean from the system mean
    Eigen::MatrixXd noise;       // Cholesky factor of the record covariance
    Eigen::MatrixXd innovation;  // gain times noise factor
    double weight = 0.0, weight_plus = 0.0;
  };
  TrajectoryConfig config_;
  GaussianState initial_;
  std::vector<Step> steps_;
  Eigen::Matrix4d final_cov_;
  double min_margin_ = 0.0;

  friend TrialResult run_trial(const TrajectoryPlan& plan, std::uint64_t index);
};

struct FidelityEstimate {
  double F = 0.0, F_stderr = 0.0;
  double excess = 0.0, excess_stderr = 0.0;
  Eigen::Vector2d aligned_mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d aligned_mean_stderr = Eigen::Vector2d::Zero();
  Eigen::Vector2d expected_mean = Eigen::Vector2d::Zero();  // source mean
  double var_M = 0.0, var_M_stderr = 0.0;  // <|M - <M>|^2>
  Eigen::Matrix2d target_covariance = Eigen::Matrix2d::Zero();  // conditional
  double min_uncertainty_margin = 0.0;
  int bins = 0;
  std::vector<TrialResult> trials;
};

// Runs all trials on `threads` workers; results do not depend on the thread
// count.
FidelityEstimate estimate_fidelity(const TrajectoryConfig& config, int threads = 1);

// Mean and batch-means standard error of a sequence.
struct BatchMean {
  double mean = 0.0;
  double stderr_ = 0.0;
};
BatchMean batch_mean(const std::vector<double>& values, int batches);

}  // namespace pretro
