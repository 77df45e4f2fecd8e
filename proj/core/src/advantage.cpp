#include "nco/advantage.hpp"

#include <cmath>
#include <string>

namespace nco {

namespace {

void check_dims(const std::vector<double>& rewards, int batch, int n_starts) {
  if (n_starts < 2) {
    throw ParameterError("advantage: N = " + std::to_string(n_starts) +
                         " degenerates the mean baseline (need N >= 2)");
  }
  if (batch < 1 || rewards.size() != static_cast<std::size_t>(batch) * n_starts) {
    throw ParameterError("advantage: reward matrix size " + std::to_string(rewards.size()) +
                         " != B*N = " + std::to_string(batch * n_starts));
  }
}

// Centers one row at its mean and returns the leader (ties to lowest j).
int center_row(const double* row, int n_starts, double* centered) {
  double mean = 0.0;
  for (int j = 0; j < n_starts; ++j) mean += row[j];
  mean /= n_starts;
  int leader = 0;
  for (int j = 0; j < n_starts; ++j) {
    centered[j] = row[j] - mean;
    if (centered[j] > centered[leader]) leader = j;
  }
  return leader;
}

}  // namespace

AdvantageMatrix compute_advantage_main(const std::vector<double>& rewards, int batch,
                                       int n_starts, double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw ParameterError("advantage: main phase requires finite alpha > 1, got " +
                         std::to_string(alpha));
  }
  check_dims(rewards, batch, n_starts);
  AdvantageMatrix m{batch, n_starts, std::vector<double>(rewards.size()),
                    std::vector<int>(batch)};
  std::vector<double> centered(n_starts);
  for (int i = 0; i < batch; ++i) {
    const int leader = center_row(&rewards[static_cast<std::size_t>(i) * n_starts], n_starts,
                                  centered.data());
    m.leader_index[i] = leader;
    for (int j = 0; j < n_starts; ++j) m.at(i, j) = centered[j] / alpha;
    m.at(i, leader) = centered[leader];
  }
  return m;
}

AdvantageMatrix compute_advantage_final(const std::vector<double>& rewards, int batch,
                                        int n_starts) {
  check_dims(rewards, batch, n_starts);
  AdvantageMatrix m{batch, n_starts, std::vector<double>(rewards.size(), 0.0),
                    std::vector<int>(batch)};
  std::vector<double> centered(n_starts);
  for (int i = 0; i < batch; ++i) {
    const int leader = center_row(&rewards[static_cast<std::size_t>(i) * n_starts], n_starts,
                                  centered.data());
    m.leader_index[i] = leader;
    m.at(i, leader) = centered[leader];
  }
  return m;
}

AdvantageMatrix compute_advantage_main_scaled(const std::vector<double>& rewards, int batch,
                                              int n_starts, double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw ParameterError("advantage: main phase requires finite alpha > 1, got " +
                         std::to_string(alpha));
  }
  check_dims(rewards, batch, n_starts);
  AdvantageMatrix m{batch, n_starts, std::vector<double>(rewards.size()),
                    std::vector<int>(batch)};
  std::vector<double> centered(n_starts);
  for (int i = 0; i < batch; ++i) {
    const int leader = center_row(&rewards[static_cast<std::size_t>(i) * n_starts], n_starts,
                                  centered.data());
    m.leader_index[i] = leader;
    for (int j = 0; j < n_starts; ++j) m.at(i, j) = centered[j];
    m.at(i, leader) = alpha * centered[leader];
  }
  return m;
}

}  // namespace nco
