#include "mcsched/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mcsched {

namespace {
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

std::string MetricTrace::to_csv() const {
  std::string out = "slot,avg_reward,avg_energy,avg_latency,win_reward";
  for (int n = 1; n <= n_messages; ++n)
    for (int m = 1; m <= n_channels; ++m)
      out += ",rate_" + std::to_string(n) + "_" + std::to_string(m);
  out += "\n";
  for (const MetricRow& row : rows) {
    out += std::to_string(row.slot);
    out += "," + format_double(row.avg_reward);
    out += "," + format_double(row.avg_energy);
    out += "," + format_double(row.avg_latency);
    out += "," + format_double(row.win_reward);
    for (double r : row.rates) out += "," + format_double(r);
    out += "\n";
  }
  return out;
}

void MetricTrace::save_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write trace: " + path);
  f << to_csv();
}

MetricAccumulator::MetricAccumulator(int n_messages, int n_channels, long warmup_slots,
                                     int window)
    : n_messages_(n_messages),
      n_channels_(n_channels),
      warmup_slots_(warmup_slots),
      window_(window),
      start_counts_(n_messages, n_channels, 0) {}

void MetricAccumulator::record(double reward, double energy, double latency,
                               const std::vector<int>& choices) {
  ++slots_seen_;
  window_rewards_.push_back(reward);
  if (static_cast<int>(window_rewards_.size()) > window_) window_rewards_.pop_front();

  if (slots_seen_ <= warmup_slots_) return;
  ++counted_;
  sum_reward_ += reward;
  sum_energy_ += energy;
  sum_latency_ += latency;
  for (int m = 0; m < n_channels_; ++m)
    if (choices[m] > 0) start_counts_(choices[m] - 1, m) += 1;

  batch_acc_ += reward;
  if (++batch_fill_ == window_) {
    batch_means_.push_back(batch_acc_ / window_);
    batch_acc_ = 0.0;
    batch_fill_ = 0;
  }
}

double MetricAccumulator::avg_reward() const {
  return counted_ > 0 ? sum_reward_ / counted_ : 0.0;
}
double MetricAccumulator::avg_energy() const {
  return counted_ > 0 ? sum_energy_ / counted_ : 0.0;
}
double MetricAccumulator::avg_latency() const {
  return counted_ > 0 ? sum_latency_ / counted_ : 0.0;
}

double MetricAccumulator::reward_standard_error() const {
  const std::size_t k = batch_means_.size();
  if (k < 2) return 0.0;
  double mean = 0.0;
  for (double b : batch_means_) mean += b;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double b : batch_means_) var += (b - mean) * (b - mean);
  var /= static_cast<double>(k - 1);
  return std::sqrt(var / static_cast<double>(k));
}

MetricRow MetricAccumulator::snapshot() const {
  MetricRow row;
  row.slot = slots_seen_;
  row.avg_reward = avg_reward();
  row.avg_energy = avg_energy();
  row.avg_latency = avg_latency();
  double wsum = 0.0;
  for (double r : window_rewards_) wsum += r;
  row.win_reward = window_rewards_.empty() ? 0.0 : wsum / window_rewards_.size();
  row.rates.reserve(start_counts_.size());
  for (long c : start_counts_.data())
    row.rates.push_back(counted_ > 0 ? static_cast<double>(c) / counted_ : 0.0);
  return row;
}

}  // namespace mcsched
