#include "pretro/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pretro/errors.hpp"

namespace pretro {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

Eigen::Matrix4cd symplectic_form() {
  Eigen::Matrix4cd omega = Eigen::Matrix4cd::Zero();
  omega(0, 1) = omega(2, 3) = 1.0;
  omega(1, 0) = omega(3, 2) = -1.0;
  return omega;
}

// Column of the x quadrature and the sign of the mode (+1 for an
// annihilation operator, -1 for a creation operator) for each entry of a
// LocalExpansion.
struct LocalColumn {
  int x;
  double sign;
};
constexpr LocalColumn kColumns[6] = {{0, 1}, {2, 1}, {4, 1}, {6, -1}, {8, 1}, {10, -1}};

// Real rows of (O + O^dag)/2 and (O - O^dag)/(2i) over the input quadratures.
// Written to rows `row` and `row + 1` of `out`.
void hermitian_parts(const LocalExpansion& op, Eigen::MatrixXd& out, int row) {
  const int columns = int(out.cols());
  auto re = out.row(row);
  auto im = out.row(row + 1);
  re.setZero();
  im.setZero();
  for (int i = 0; i < 6; ++i) {
    const LocalColumn c = kColumns[i];
    if (c.x + 1 >= columns) continue;
    const cplx a = op[i];
    re[c.x] += a.real() * kInvSqrt2;
    re[c.x + 1] += -c.sign * a.imag() * kInvSqrt2;
    im[c.x] += a.imag() * kInvSqrt2;
    im[c.x + 1] += c.sign * a.real() * kInvSqrt2;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Joint moments after one bin: predicted system mean map, covariance blocks.
struct Prediction {
  Eigen::Matrix4d cov_ss;
  Eigen::MatrixXd cov_rs;  // records x system
  Eigen::MatrixXd cov_rr;
};

Prediction predict(const Eigen::Matrix4d& cov, const BinMap& map, double field_var) {
  Prediction p;
  p.cov_ss = map.system * cov * map.system.transpose() +
             field_var * map.system_noise * map.system_noise.transpose();
  p.cov_rs = map.record * cov * map.system.transpose() +
             field_var * map.record_noise * map.system_noise.transpose();
  p.cov_rr = map.record * cov * map.record.transpose() +
             field_var * map.record_noise * map.record_noise.transpose();
  return p;
}

}  // namespace

// --- states -------------------------------------------------------------------

double GaussianState::uncertainty_margin() const {
  const Eigen::Matrix4cd h = cov.cast<cplx>() + cplx(0.0, 0.5) * symplectic_form();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void GaussianState::validate() const {
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (!mean.allFinite() || !cov.allFinite())
    throw StabilityError("Gaussian state is not finite");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw StabilityError("covariance lost symmetry");
  if (uncertainty_margin() < -1e-9 * scale)
    throw StabilityError("covariance violates the uncertainty relation");
}

Eigen::Vector2d OscillatorInput::mean() const {
  if (kind == Kind::thermal) return Eigen::Vector2d::Zero();
  return std::sqrt(2.0) * Eigen::Vector2d(alpha.real(), alpha.imag());
}

double OscillatorInput::variance() const {
  return kind == Kind::thermal ? nbar + 0.5 : 0.5;
}

// --- one bin --------------------------------------------------------------------

BinMap bin_map(double zeta1, double zeta2, Topology topology, const BinRates& bin) {
  const BinCollision c = bin_collision(zeta1, zeta2, topology, bin.Gamma1, bin.Gamma2, bin.dt);
  const bool parallel = topology == Topology::parallel;
  const int fields = parallel ? 8 : 4;
  const int columns = 4 + fields;
  const int records = parallel ? 4 : 2;

  Eigen::MatrixXd sys(4, columns), rec(records, columns);
  hermitian_parts(c.b1, sys, 0);
  hermitian_parts(c.b2, sys, 2);
  sys *= std::sqrt(2.0);
  hermitian_parts(c.record, rec, 0);
  if (parallel) hermitian_parts(c.record_plus, rec, 2);

  BinMap m;
  m.bin = bin;
  m.system = sys.leftCols<4>();
  m.system_noise = sys.rightCols(fields);
  m.record = rec.leftCols<4>();
  m.record_noise = rec.rightCols(fields);
  return m;
}

RecordSample step(GaussianState& state, const BinMap& map, double n_in, std::mt19937_64& rng) {
  const Prediction p = predict(state.cov, map, thermal_factor(n_in) * 0.5);
  const Eigen::Vector4d mean = map.system * state.mean;
  const Eigen::VectorXd record_mean = map.record * state.mean;

  Eigen::LLT<Eigen::MatrixXd> llt(p.cov_rr);
  if (llt.info() != Eigen::Success) throw StabilityError("record covariance is not positive");
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(record_mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Eigen::VectorXd r = record_mean + llt.matrixL() * z;

  const Eigen::MatrixXd gain = llt.solve(p.cov_rs).transpose();  // 4 x records
  state.mean = mean + gain * (r - record_mean);
  state.cov = p.cov_ss - gain * p.cov_rs;
  state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
  state.validate();

  RecordSample s;
  s.m = {r[0], r[1]};
  if (r.size() > 2) s.m_plus = {r[2], r[3]};
  return s;
}

// --- plan -----------------------------------------------------------------------

std::uint64_t trajectory_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

int TrajectoryPlan::source_index() const {
  return config_.spec.direction == Direction::teleport_2_to_1 ? 2 : 0;
}

int TrajectoryPlan::target_index() const { return 2 - source_index(); }

TrajectoryPlan::TrajectoryPlan(const TrajectoryConfig& config) : config_(config) {
  const InteractionSpec& spec = config_.spec;
  spec.validate();
  if (config_.trials < 1) throw DomainError("trial count must be at least 1");
  if (config_.batches < 2 || config_.batches > config_.trials)
    throw DomainError("batch count must lie in [2, trials]");
  const bool parallel = spec.topology == Topology::parallel;
  if (parallel && spec.zeta1 == 0.0)
    throw UnsupportedParameter("parallel records are undefined at zeta1 = 0");
  const double T = spec.T;
  if (std::abs(config_.s1.horizon() - T) > 1e-12 * T ||
      std::abs(config_.s2.horizon() - T) > 1e-12 * T)
    throw DomainError("schedule horizon differs from the protocol horizon");

  const int src = source_index(), tgt = target_index();
  initial_.mean.segment<2>(src) = config_.source.mean();
  initial_.mean.segment<2>(tgt) = config_.target.mean();
  initial_.cov.setZero();
  initial_.cov.block<2, 2>(src, src).diagonal().setConstant(config_.source.variance());
  initial_.cov.block<2, 2>(tgt, tgt).diagonal().setConstant(config_.target.variance());
  initial_.validate();

  const std::vector<BinRates> bins = bin_rates(config_.s1, config_.s2, config_.bins);
  const double field_var = thermal_factor(spec.n_in) * 0.5;
  GaussianState state = initial_;
  min_margin_ = state.uncertainty_margin();
  steps_.reserve(bins.size());
  for (const BinRates& bin : bins) {
    const BinMap map = bin_map(spec.zeta1, spec.zeta2, spec.topology, bin);
    const Prediction p = predict(state.cov, map, field_var);
    Eigen::LLT<Eigen::MatrixXd> llt(p.cov_rr);
    if (llt.info() != Eigen::Success) throw StabilityError("record covariance is not positive");
    const Eigen::MatrixXd gain = llt.solve(p.cov_rs).transpose();

    Step s;
    s.propagate = map.system;
    s.record = map.record;
    s.noise = llt.matrixL();
    s.innovation = gain * s.noise;
    const Instant mid = bin.midpoint();
    const double root = std::sqrt(bin.dt);
    s.weight = config_.filter(mid) * root;
    if (parallel && config_.aux) s.weight_plus = (*config_.aux)(mid) * root;
    steps_.push_back(std::move(s));

    state.cov = p.cov_ss - gain * p.cov_rs;
    state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
    state.validate();
    min_margin_ = std::min(min_margin_, state.uncertainty_margin());
  }
  final_cov_ = state.cov;
}

TrialResult run_trial(const TrajectoryPlan& plan, std::uint64_t index) {
  const TrajectoryConfig& config = plan.config_;
  std::mt19937_64 rng(trajectory_seed(config.seed, index));
  std::normal_distribution<double> normal;

  Eigen::Vector4d mean = plan.initial_.mean;
  cplx M = 0.0;
  Eigen::Vector4d z;
  for (const TrajectoryPlan::Step& s : plan.steps_) {
    const Eigen::Index n = s.noise.rows();
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    const Eigen::VectorXd noise = s.noise * z.head(n);
    const Eigen::VectorXd r = s.record * mean + noise;
    mean = s.propagate * mean + s.innovation * z.head(n);
    M += s.weight * cplx(r[0], r[1]);
    if (n > 2) M += s.weight_plus * cplx(r[2], r[3]);
  }

  TrialResult t;
  t.index = index;
  t.M = M;
  const int tgt = plan.target_index();
  // Displace by (-xbar, -pbar) with xbar = -sqrt(2) Re M, pbar = -sqrt(2) Im M.
  t.target_mean = mean.segment<2>(tgt) + std::sqrt(2.0) * Eigen::Vector2d(M.real(), M.imag());
  t.aligned_mean = -t.target_mean;
  const Eigen::Vector2d delta = t.aligned_mean - config.source.mean();
  const Eigen::Matrix4d& cov = plan.final_cov_;
  t.excess = 0.5 * delta.squaredNorm() + 0.5 * (cov(tgt, tgt) + cov(tgt + 1, tgt + 1)) -
             config.source.variance();
  return t;
}

// --- estimation -------------------------------------------------------------------

BatchMean batch_mean(const std::vector<double>& values, int batches) {
  const std::size_t n = values.size();
  if (batches < 2 || std::size_t(batches) > n)
    throw DomainError("batch count must lie in [2, sample count]");
  BatchMean r;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    const std::size_t lo = n * b / batches, hi = n * (b + 1) / batches;
    for (std::size_t i = lo; i < hi; ++i) means[b] += values[i];
    means[b] /= double(hi - lo);
  }
  for (double v : values) r.mean += v;
  r.mean /= double(n);
  double ss = 0.0;
  for (double m : means) ss += (m - r.mean) * (m - r.mean);
  r.stderr_ = std::sqrt(ss / (batches - 1) / batches);
  return r;
}

TrajectoryConfig optimal_trajectory_config(const InteractionSpec& spec) {
  TrajectoryConfig c;
  c.spec = spec;
  const double z1 = spec.zeta1, G1 = spec.gamma_ref, T = spec.T;
  const bool teleport = spec.direction == Direction::teleport_2_to_1;
  c.s1 = RateSchedule::constant(G1, T);
  c.s2 = teleport ? RateSchedule::optimal_teleport(z1, G1, T)
                  : RateSchedule::optimal_direct(z1, G1, T);
  if (spec.topology == Topology::parallel) {
    if (!teleport) throw UnsupportedParameter("parallel topology is teleportation only");
    c.spec.zeta2 = -z1;
    c.filter = FilterSpec::renormalized(spec.direction, z1, G1, T);
    c.aux = FilterSpec::custom([=](double t) { return filter_parallel_g_optimal(t, z1, G1, T); });
  } else {
    if (!teleport) c.spec.zeta2 = 0.0;
    c.filter = FilterSpec::raw(spec.direction, z1, c.spec.zeta2, G1, T);
  }
  return c;
}

FidelityEstimate estimate_fidelity(const TrajectoryConfig& config, int threads) {
  const TrajectoryPlan plan(config);
  const int n = config.trials;
  FidelityEstimate e;
  e.trials.resize(n);

  threads = std::clamp(threads, 1, n);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += threads) e.trials[i] = run_trial(plan, std::uint64_t(i));
    });
  for (auto& t : pool) t.join();

  std::vector<double> excess(n), x(n), p(n), Mre(n), Mim(n);
  for (int i = 0; i < n; ++i) {
    excess[i] = e.trials[i].excess;
    x[i] = e.trials[i].aligned_mean[0];
    p[i] = e.trials[i].aligned_mean[1];
    Mre[i] = e.trials[i].M.real();
    Mim[i] = e.trials[i].M.imag();
  }
  const BatchMean v = batch_mean(excess, config.batches);
  e.excess = v.mean;
  e.excess_stderr = v.stderr_;
  e.F = 1.0 / (1.0 + v.mean);
  e.F_stderr = v.stderr_ / ((1.0 + v.mean) * (1.0 + v.mean));
  const BatchMean bx = batch_mean(x, config.batches), bp = batch_mean(p, config.batches);
  e.aligned_mean = {bx.mean, bp.mean};
  e.aligned_mean_stderr = {bx.stderr_, bp.stderr_};
  e.expected_mean = config.source.mean();

  const BatchMean mr = batch_mean(Mre, config.batches), mi = batch_mean(Mim, config.batches);
  std::vector<double> spread(n);
  for (int i = 0; i < n; ++i)
    spread[i] = std::norm(e.trials[i].M - cplx(mr.mean, mi.mean)) * n / std::max(1, n - 1);
  const BatchMean vm = batch_mean(spread, config.batches);
  e.var_M = vm.mean;
  e.var_M_stderr = vm.stderr_;

  const int tgt = plan.target_index();
  e.target_covariance = plan.final_covariance().block<2, 2>(tgt, tgt);
  e.min_uncertainty_margin = plan.min_uncertainty_margin();
  e.bins = plan.bins();
  return e;
}

}  // namespace pretro
