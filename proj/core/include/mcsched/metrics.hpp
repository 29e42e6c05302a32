#pragma once

#include <deque>
#include <string>
#include <vector>

#include "mcsched/grid.hpp"

namespace mcsched {

struct MetricRow {
  long slot = 0;
  double avg_reward = 0.0;
  double avg_energy = 0.0;
  double avg_latency = 0.0;
  double win_reward = 0.0;          // mean over the trailing window
  std::vector<double> rates;        // multicast starts per slot, message x channel row-major
};

struct MetricTrace {
  int n_messages = 0;
  int n_channels = 0;
  std::vector<MetricRow> rows;

  std::string to_csv() const;
  void save_csv(const std::string& path) const;
};

// Accumulates per-slot reward/energy/latency and multicast starts. The first
// warmup_slots are excluded from the cumulative averages so snapshots
// approximate the stationary behaviour; the windowed mean is unconditional.
class MetricAccumulator {
 public:
  MetricAccumulator(int n_messages, int n_channels, long warmup_slots, int window = 1000);

  void record(double reward, double energy, double latency, const std::vector<int>& choices);
  MetricRow snapshot() const;

  long slots_seen() const { return slots_seen_; }
  double avg_reward() const;
  double avg_energy() const;
  double avg_latency() const;
  // Standard error of the mean reward from batch means (batches of the
  // window length), robust to the slot-to-slot autocorrelation.
  double reward_standard_error() const;

 private:
  int n_messages_;
  int n_channels_;
  long warmup_slots_;
  int window_;
  long slots_seen_ = 0;
  long counted_ = 0;
  double sum_reward_ = 0.0, sum_energy_ = 0.0, sum_latency_ = 0.0;
  Grid<long> start_counts_;
  std::deque<double> window_rewards_;
  // batch means over counted slots
  double batch_acc_ = 0.0;
  int batch_fill_ = 0;
  std::vector<double> batch_means_;
};

}  // namespace mcsched
