#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lexcd/tensor.hpp"

namespace lexcd {

// Named parameter tensors with stable iteration order (insertion sequence)
// plus per-parameter optimizer state slots.
template <typename T>
class ParamStore {
  public:
    struct Entry {
        std::string name;
        Tensor<T> tensor;
        std::vector<T> adam_m;
        std::vector<T> adam_v;
    };

    Tensor<T> add(const std::string& name, Tensor<T> tensor) {
        if (index_.count(name) != 0) {
            throw std::invalid_argument("duplicate parameter name: " + name);
        }
        index_[name] = entries_.size();
        entries_.push_back(Entry{name, std::move(tensor), {}, {}});
        return entries_.back().tensor;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor<T>& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
        return entries_[it->second].tensor;
    }

    size_t size() const { return entries_.size(); }
    long long scalar_count() const {
        long long total = 0;
        for (const auto& e : entries_) total += e.tensor.numel();
        return total;
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<Tensor<T>> tensors() const {
        std::vector<Tensor<T>> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.tensor);
        return out;
    }

    void zero_grads() {
        for (auto& e : entries_) e.tensor.zero_grad();
    }

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace lexcd
