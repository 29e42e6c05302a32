#include "mcsched/bound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcsched/rng.hpp"
#include "mcsched/simplex.hpp"

namespace mcsched {
namespace bound {

CapacityReport check_capacity(const std::vector<JointAction>& trajectory,
                              const Grid<int>& duration_table) {
  const int m_channels = duration_table.cols();
  CapacityReport report;
  // A prefix may cut through one in-flight multicast, whose committed slots
  // extend at most max-duration-minus-one past the prefix; beyond that
  // credit the channel is overcommitted. With unit durations the credit is
  // zero and the committed time may never exceed the elapsed time.
  std::vector<long> credit(m_channels, 0);
  for (int m = 0; m < m_channels; ++m) {
    int longest = 1;
    for (int n = 0; n < duration_table.rows(); ++n)
      longest = std::max(longest, duration_table(n, m));
    credit[m] = longest - 1;
  }
  std::vector<long> load(m_channels, 0);
  long t = 0;
  for (const JointAction& action : trajectory) {
    ++t;
    for (int m = 0; m < m_channels; ++m) {
      const int choice = action.choices.at(m);
      if (choice > 0) load[m] += duration_table(choice - 1, m);
      if (load[m] > t + credit[m]) report.ok = false;
    }
  }
  report.loads.resize(m_channels);
  for (int m = 0; m < m_channels; ++m)
    report.loads[m] = t > 0 ? static_cast<double>(load[m]) / t : 0.0;
  return report;
}

namespace {

struct PoissonTable {
  std::vector<double> pmf;   // 0..k_max
  std::vector<double> tail;  // tail[k] = P(A >= k), 0..k_max+1

  PoissonTable(double lambda, int k_max) : pmf(k_max + 1), tail(k_max + 2, 0.0) {
    double p = std::exp(-lambda);
    for (int k = 0; k <= k_max; ++k) {
      pmf[k] = p;
      p *= lambda / (k + 1);
    }
    double cum = 0.0;
    for (int k = 0; k <= k_max; ++k) cum += pmf[k];
    tail[k_max + 1] = std::max(0.0, 1.0 - cum);
    for (int k = k_max; k >= 0; --k) tail[k] = tail[k + 1] + pmf[k];
  }
};

}  // namespace

CycleStats threshold_cycle_stats_exact(double lambda, int threshold, double penalty) {
  if (!(lambda > 0.0)) throw std::invalid_argument("threshold stats: lambda must be > 0");
  if (threshold < -1) throw std::invalid_argument("threshold stats: threshold must be >= -1");

  if (threshold == -1) {
    // Multicast every slot: one-slot cycles, penalty of the fresh arrivals.
    return {1.0, penalty * lambda};
  }

  const PoissonTable pois(lambda, threshold + 1);
  // time(q), pen(q): expected remaining slots / accumulated penalty from a
  // slot whose count is q, until and including the multicast slot.
  std::vector<double> time(threshold + 1, 0.0), pen(threshold + 1, 0.0);
  const double stay = pois.pmf[0];
  for (int q = threshold; q >= 0; --q) {
    // arrivals that keep the count at or below the threshold
    double t_acc = 0.0, p_acc = 0.0;
    for (int a = 1; q + a <= threshold; ++a) {
      t_acc += pois.pmf[a] * time[q + a];
      p_acc += pois.pmf[a] * pen[q + a];
    }
    // arrivals that push past the threshold: terminal next slot
    const int k = threshold - q + 1;  // smallest overflow arrival
    const double tail_k = pois.tail[k];
    const double tail_k1 = pois.tail[std::max(0, k - 1)];
    t_acc += tail_k * 1.0;
    // E[penalty at the terminal slot] = p * (q * P(A>=k) + lambda * P(A>=k-1))
    p_acc += penalty * (q * tail_k + lambda * tail_k1);
    time[q] = (1.0 + t_acc) / (1.0 - stay);
    pen[q] = (penalty * q + p_acc) / (1.0 - stay);
  }

  // Entry state: fresh arrivals after the previous multicast.
  CycleStats stats;
  for (int q = 0; q <= threshold; ++q) {
    stats.mean_length += pois.pmf[q] * time[q];
    stats.mean_penalty += pois.pmf[q] * pen[q];
  }
  stats.mean_length += pois.tail[threshold + 1] * 1.0;
  // entry states past the threshold are terminal with penalty p*q;
  // sum_{q >= thr+1} q pmf(q) = lambda * P(A >= thr)
  stats.mean_penalty += penalty * lambda * pois.tail[threshold];
  return stats;
}

CycleStats threshold_cycle_stats_mc(double lambda, int threshold, long slots, std::uint64_t seed,
                                    double penalty) {
  if (!(lambda > 0.0)) throw std::invalid_argument("threshold stats: lambda must be > 0");
  RngStream rng(seed, "bound/threshold-mc");
  long count = rng.poisson(lambda);
  double total_pen = 0.0;
  long cycles = 0;
  for (long slot = 0; slot < slots; ++slot) {
    total_pen += penalty * static_cast<double>(count);
    if (count > threshold) {
      ++cycles;
      count = rng.poisson(lambda);
    } else {
      count += rng.poisson(lambda);
    }
  }
  if (cycles == 0) throw std::runtime_error("threshold stats: no completed cycles in the horizon");
  CycleStats stats;
  stats.mean_length = static_cast<double>(slots) / cycles;
  stats.mean_penalty = total_pen / cycles;
  return stats;
}

namespace {

struct HullPoint {
  double x;
  double y;
};

// Upper concave hull of points sorted by x (monotone chain).
std::vector<HullPoint> upper_hull(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const HullPoint& a, const HullPoint& b) {
    return a.x < b.x || (a.x == b.x && a.y > b.y);
  });
  // drop duplicate x keeping the best y
  std::vector<HullPoint> clean;
  for (const HullPoint& p : pts)
    if (clean.empty() || p.x > clean.back().x + 1e-15) clean.push_back(p);
  std::vector<HullPoint> hull;
  for (const HullPoint& p : clean) {
    while (hull.size() >= 2) {
      const HullPoint& a = hull[hull.size() - 2];
      const HullPoint& b = hull[hull.size() - 1];
      // keep b only if it lies strictly above chord a-p
      const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return hull;
}

double hull_interpolate(const std::vector<HullPoint>& hull, double x) {
  if (hull.empty()) throw std::runtime_error("hull_interpolate: empty hull");
  if (x <= hull.front().x) return hull.front().y;
  if (x >= hull.back().x) return hull.back().y;
  for (std::size_t i = 1; i < hull.size(); ++i) {
    if (x <= hull[i].x) {
      const double w = (x - hull[i - 1].x) / (hull[i].x - hull[i - 1].x);
      return hull[i - 1].y + w * (hull[i].y - hull[i - 1].y);
    }
  }
  return hull.back().y;
}

// Threshold sweep in (cycle length, -penalty) space up to the needed cycle
// length.
std::vector<HullPoint> sweep_thresholds(double lambda, double max_cycle, long horizon,
                                        double penalty, std::uint64_t seed) {
  std::vector<HullPoint> points;
  for (int thr = -1; thr <= 100000; ++thr) {
    const CycleStats stats = horizon > 0
                                 ? threshold_cycle_stats_mc(lambda, thr, horizon, seed, penalty)
                                 : threshold_cycle_stats_exact(lambda, thr, penalty);
    points.push_back({stats.mean_length, -stats.mean_penalty});
    if (stats.mean_length >= max_cycle && points.size() >= 2) break;
  }
  return points;
}

}  // namespace

double latency_rate_threshold(double lambda, double target_rate, long horizon, double penalty,
                              std::uint64_t seed) {
  if (!(target_rate > 0.0) || target_rate > 1.0 + 1e-12)
    throw std::invalid_argument("latency_rate_threshold: target rate must lie in (0, 1]");
  target_rate = std::min(target_rate, 1.0);
  const double cycle = 1.0 / target_rate;
  const std::vector<HullPoint> hull =
      upper_hull(sweep_thresholds(lambda, cycle, horizon, penalty, seed));
  return hull_interpolate(hull, cycle) / cycle;
}

double LatencyRateCurve::value_at(double rate) const {
  if (rates.empty()) throw std::runtime_error("LatencyRateCurve: empty");
  if (rate <= rates.front()) return values.front();
  if (rate >= rates.back()) return values.back();
  const auto it = std::lower_bound(rates.begin(), rates.end(), rate);
  const std::size_t hi = static_cast<std::size_t>(it - rates.begin());
  const std::size_t lo = hi - 1;
  const double w = (rate - rates[lo]) / (rates[hi] - rates[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

void LatencyRateCurve::validate() const {
  if (rates.size() != values.size() || rates.size() < 2)
    throw std::invalid_argument("LatencyRateCurve: need >= 2 samples");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] > 0.0) || rates[i] > 1.0 + 1e-9 || !std::isfinite(values[i]))
      throw std::invalid_argument("LatencyRateCurve: sample out of range");
    if (i > 0 && rates[i] <= rates[i - 1])
      throw std::invalid_argument("LatencyRateCurve: rates must be ascending");
  }
}

LatencyRateCurve build_threshold_curve(double lambda, double grid_step, long horizon,
                                       double penalty, std::uint64_t seed) {
  if (!(grid_step > 0.0) || grid_step > 1.0)
    throw std::invalid_argument("build_threshold_curve: bad grid step");
  const double max_cycle = 1.0 / grid_step;
  const std::vector<HullPoint> hull =
      upper_hull(sweep_thresholds(lambda, max_cycle, horizon, penalty, seed));

  std::vector<double> sample_rates;
  for (double r = grid_step; r < 1.0 - 1e-12; r += grid_step) sample_rates.push_back(r);
  sample_rates.push_back(1.0);
  for (const HullPoint& v : hull) {
    const double r = 1.0 / v.x;
    if (r >= grid_step - 1e-12 && r <= 1.0 + 1e-12) sample_rates.push_back(std::min(r, 1.0));
  }
  std::sort(sample_rates.begin(), sample_rates.end());
  sample_rates.erase(std::unique(sample_rates.begin(), sample_rates.end(),
                                 [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                     sample_rates.end());

  LatencyRateCurve curve;
  for (double r : sample_rates) {
    const double cycle = 1.0 / r;
    curve.rates.push_back(r);
    curve.values.push_back(hull_interpolate(hull, cycle) / cycle);
  }
  curve.validate();
  return curve;
}

Grid<double> min_energy_table(const Grid<int>& duration_table, const Grid<double>& energy_const,
                              double max_gain) {
  if (duration_table.rows() != energy_const.rows() ||
      duration_table.cols() != energy_const.cols())
    throw std::invalid_argument("min_energy_table: shape mismatch");
  if (!(max_gain > 0.0)) throw std::invalid_argument("min_energy_table: max gain must be > 0");
  Grid<double> e(duration_table.rows(), duration_table.cols());
  for (int n = 0; n < e.rows(); ++n)
    for (int m = 0; m < e.cols(); ++m)
      e(n, m) = duration_table(n, m) * energy_const(n, m) / max_gain;
  return e;
}

BoundResult solve_p51(const std::vector<LatencyRateCurve>& curves, const Grid<double>& energy,
                      const Grid<int>& duration_table, double tradeoff_v, double grid_step) {
  const int n_msgs = static_cast<int>(curves.size());
  const int m_channels = energy.cols();
  if (energy.rows() != n_msgs || duration_table.rows() != n_msgs ||
      duration_table.cols() != m_channels)
    throw std::invalid_argument("solve_p51: table shape mismatch");
  if (tradeoff_v < 0.0) throw std::invalid_argument("solve_p51: tradeoff must be >= 0");

  // Per-message concave envelopes in rate space.
  struct Envelope {
    std::vector<HullPoint> hull;
    double base = 0.0;  // extrapolated value at rate 0 along the first segment
    double top = 0.0;   // value at the largest sampled rate
    double max_rate = 0.0;
  };
  std::vector<Envelope> envelopes(n_msgs);
  for (int n = 0; n < n_msgs; ++n) {
    curves[n].validate();
    for (std::size_t i = 1; i < curves[n].rates.size(); ++i)
      if (curves[n].rates[i] - curves[n].rates[i - 1] > grid_step + 1e-9)
        throw std::invalid_argument("solve_p51: curve sampled coarser than grid_step");
    if (curves[n].rates.front() > grid_step + 1e-9)
      throw std::invalid_argument("solve_p51: curve missing small-rate samples");

    std::vector<HullPoint> pts;
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curves[n].rates.size(); ++i) {
      // enforce monotonicity; a concave majorant of a non-decreasing f stays
      // an upper bound
      running = std::max(running, curves[n].values[i]);
      pts.push_back({curves[n].rates[i], running});
    }
    Envelope& env = envelopes[n];
    env.hull = upper_hull(pts);
    env.max_rate = env.hull.back().x;
    env.top = env.hull.back().y;
    if (env.hull.size() >= 2) {
      const double slope =
          (env.hull[1].y - env.hull[0].y) / (env.hull[1].x - env.hull[0].x);
      env.base = env.hull[0].y - slope * env.hull[0].x;
    } else {
      env.base = env.hull[0].y;
    }
  }

  // LP variables: phi offsets (N), then rates (N*M).
  LpProblem lp;
  lp.n_vars = n_msgs + n_msgs * m_channels;
  lp.objective.assign(lp.n_vars, 0.0);
  const auto phi_var = [&](int n) { return n; };
  const auto rate_var = [&](int n, int m) { return n_msgs + n * m_channels + m; };
  for (int n = 0; n < n_msgs; ++n) lp.objective[phi_var(n)] = 1.0;
  for (int n = 0; n < n_msgs; ++n)
    for (int m = 0; m < m_channels; ++m)
      lp.objective[rate_var(n, m)] = -tradeoff_v * energy(n, m);

  const auto add_row = [&](std::vector<double> row, double rhs) {
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(rhs);
  };

  // Cap the hypograph rows per message: dropping tangents only raises the
  // envelope, so the result stays an upper bound, and a compact tableau
  // keeps the simplex well conditioned.
  constexpr std::size_t kMaxSegments = 220;
  for (int n = 0; n < n_msgs; ++n) {
    const Envelope& env = envelopes[n];
    const std::size_t n_segments = env.hull.size() - 1;
    std::vector<std::size_t> kept;
    if (n_segments <= kMaxSegments) {
      for (std::size_t k = 0; k < n_segments; ++k) kept.push_back(k);
    } else {
      for (std::size_t i = 0; i < kMaxSegments; ++i)
        kept.push_back(i * (n_segments - 1) / (kMaxSegments - 1));
      kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    }
    for (std::size_t k : kept) {
      const double slope =
          (env.hull[k + 1].y - env.hull[k].y) / (env.hull[k + 1].x - env.hull[k].x);
      const double intercept = env.hull[k].y - slope * env.hull[k].x;
      std::vector<double> row(lp.n_vars, 0.0);
      row[phi_var(n)] = 1.0;
      for (int m = 0; m < m_channels; ++m) row[rate_var(n, m)] = -slope;
      add_row(std::move(row), std::max(0.0, intercept - env.base));
    }
    // flat cap at the best sampled value
    std::vector<double> cap(lp.n_vars, 0.0);
    cap[phi_var(n)] = 1.0;
    add_row(std::move(cap), std::max(0.0, env.top - env.base));
  }

  for (int m = 0; m < m_channels; ++m) {
    std::vector<double> row(lp.n_vars, 0.0);
    for (int n = 0; n < n_msgs; ++n) row[rate_var(n, m)] = duration_table(n, m);
    add_row(std::move(row), 1.0);
  }
  for (int n = 0; n < n_msgs; ++n)
    for (int m = 0; m < m_channels; ++m) {
      std::vector<double> row(lp.n_vars, 0.0);
      row[rate_var(n, m)] = 1.0;
      add_row(std::move(row), 1.0);
    }

  const LpSolution sol = solve_lp(lp);
  if (!sol.bounded) throw std::runtime_error("solve_p51: unbounded relaxation");

  BoundResult result;
  result.rate_matrix.rates = Grid<double>(n_msgs, m_channels, 0.0);
  for (int n = 0; n < n_msgs; ++n) {
    double aggregate = 0.0;
    for (int m = 0; m < m_channels; ++m) aggregate += sol.x[rate_var(n, m)];
    // trim excess beyond the curve's top rate (pure ties at V=0)
    const double scale =
        aggregate > envelopes[n].max_rate ? envelopes[n].max_rate / aggregate : 1.0;
    for (int m = 0; m < m_channels; ++m)
      result.rate_matrix.rates(n, m) = sol.x[rate_var(n, m)] * scale;
  }

  // The bound reports the LP's own optimum: the hypograph values, minus the
  // energy of the (trimmed) rate matrix. Trimming can only lower the energy.
  for (int n = 0; n < n_msgs; ++n) {
    result.latency_term += sol.x[phi_var(n)] + envelopes[n].base;
    for (int m = 0; m < m_channels; ++m)
      result.energy += energy(n, m) * result.rate_matrix.rates(n, m);
  }
  result.value = result.latency_term - tradeoff_v * result.energy;
  return result;
}

}  // namespace bound
}  // namespace mcsched
