#pragma once

#include <vector>

namespace nco {

struct EntropyProbe {
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  double derivative = 0.0;  // closed-form dH/dz_leader = p* (-ln p* - H)
};

std::vector<double> softmax(const std::vector<double>& logits);
double entropy_of(const std::vector<double>& probs);

// Nudges the leader logit by step_size and reports the entropy before and
// after, together with the closed-form derivative of H with respect to that
// logit. With p* below the uniform level 1/n the derivative is positive and
// a small boost raises entropy; with a dominant leader it falls.
EntropyProbe entropy_probe(const std::vector<double>& logits, int leader_index,
                           double step_size);

}  // namespace nco
