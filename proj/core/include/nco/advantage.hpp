#pragma once

#include <vector>

#include "nco/errors.hpp"
#include "nco/tape.hpp"

namespace nco {

// B x N shaped advantages plus the per-instance leader (argmax of R - b,
// ties to the lowest index).
struct AdvantageMatrix {
  int batch = 0;
  int n_starts = 0;
  std::vector<double> values;  // row-major B x N
  std::vector<int> leader_index;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n_starts + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n_starts + j]; }
};

// Main-phase shaping: baseline is the row mean, every advantage is divided by
// alpha, then the leader entry is overwritten with its full R - b. Dividing
// non-leaders instead of multiplying the leader keeps the same update
// direction (the global 1/alpha factor washes out under Adam) while staying
// numerically tame for large alpha.
AdvantageMatrix compute_advantage_main(const std::vector<double>& rewards, int batch,
                                       int n_starts, double alpha);

// Final-phase shaping (the alpha = +infinity limit): only the leader keeps a
// nonzero advantage, equal to R_leader - b (always >= 0).
AdvantageMatrix compute_advantage_final(const std::vector<double>& rewards, int batch,
                                        int n_starts);

// The textbook form that multiplies the leader by alpha and leaves the rest
// at R - b. Same leader and sign pattern as the divided form; the two value
// matrices differ by exactly the factor alpha.
AdvantageMatrix compute_advantage_main_scaled(const std::vector<double>& rewards, int batch,
                                              int n_starts, double alpha);

// REINFORCE surrogate for one instance: loss = -(1/total) * sum_j adv_j *
// logprob_j, so that gradient descent on it ascends the shaped objective.
// Advantages enter as constants; no gradient flows through rewards or the
// baseline.
template <class T>
typename Tape<T>::Var surrogate_loss(Tape<T>& tape, typename Tape<T>::Var logprob,
                                     const std::vector<double>& adv_row, int total) {
  const Tensor<T>& lp = tape.val(logprob);
  if (lp.shape.size() != 2 || lp.shape[1] != 1 ||
      lp.shape[0] != static_cast<int>(adv_row.size())) {
    throw ShapeError("surrogate_loss: logprob " + lp.shape_str() + " vs " +
                     std::to_string(adv_row.size()) + " advantages");
  }
  Tensor<T> adv({static_cast<int>(adv_row.size()), 1});
  for (std::size_t j = 0; j < adv_row.size(); ++j) adv.data[j] = static_cast<T>(adv_row[j]);
  auto weighted = tape.mul(logprob, tape.constant(std::move(adv)));
  return tape.scale(tape.sum(weighted), T(-1) / static_cast<T>(total));
}

}  // namespace nco
