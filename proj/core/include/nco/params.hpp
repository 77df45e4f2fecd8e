#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "nco/errors.hpp"
#include "nco/tape.hpp"
#include "nco/tensor.hpp"

namespace nco {

// Ordered set of named parameter tensors. Order is the serialization and
// gradient-reduction order, so it must be deterministic.
template <class T>
class ParamSet {
 public:
  int add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw ContractError("param '" + name + "' registered twice");
    t.requires_grad = true;
    index_[name] = static_cast<int>(tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(t));
    return static_cast<int>(tensors_.size()) - 1;
  }

  int size() const { return static_cast<int>(tensors_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  Tensor<T>& tensor(int i) { return tensors_[i]; }
  const Tensor<T>& tensor(int i) const { return tensors_[i]; }

  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  // Register every parameter on a tape. With grads=false the parameters enter
  // as constants (inference mode).
  std::vector<typename Tape<T>::Var> register_on(Tape<T>& tape, bool grads = true) const {
    std::vector<typename Tape<T>::Var> vars;
    vars.reserve(tensors_.size());
    for (const auto& t : tensors_) {
      Tensor<T> copy = t;
      copy.requires_grad = grads && t.requires_grad;
      vars.push_back(tape.leaf(std::move(copy)));
    }
    return vars;
  }

  // Gradients aligned with parameter order; zeros for untouched parameters.
  std::vector<Tensor<T>> collect_grads(const Tape<T>& tape,
                                       const std::vector<typename Tape<T>::Var>& vars) const {
    std::vector<Tensor<T>> grads;
    grads.reserve(tensors_.size());
    for (int i = 0; i < size(); ++i) grads.push_back(tape.grad(vars[i]));
    return grads;
  }

  void set_trainable_prefix(const std::string& prefix) {
    for (int i = 0; i < size(); ++i)
      tensors_[i].requires_grad = names_[i].rfind(prefix, 0) == 0;
  }

  void set_all_trainable() {
    for (auto& t : tensors_) t.requires_grad = true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace nco
