#include "nco/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "nco/errors.hpp"

namespace nco {

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

double entropy_of(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

EntropyProbe entropy_probe(const std::vector<double>& logits, int leader_index,
                           double step_size) {
  if (logits.empty() || leader_index < 0 ||
      leader_index >= static_cast<int>(logits.size())) {
    throw ParameterError("entropy_probe: leader index out of range");
  }
  EntropyProbe r;
  const std::vector<double> p = softmax(logits);
  r.entropy_before = entropy_of(p);
  const double ps = p[leader_index];
  r.derivative = ps * (-std::log(ps) - r.entropy_before);

  std::vector<double> bumped = logits;
  bumped[leader_index] += step_size;
  r.entropy_after = entropy_of(softmax(bumped));
  return r;
}

}  // namespace nco
