#pragma once

#include <map>
#include <string>
#include <vector>

#include "prooflens/rng.hpp"
#include "prooflens/tensor.hpp"

namespace prooflens {

// Gradients keyed like the trainable entries of a ParamStore.
using Gradients = std::map<std::string, Tensor>;

// Named model tensors. Names are dotted paths (encoder.layer0.w1); iteration
// is always in sorted name order. Non-trainable entries hold running
// statistics and are ignored by the optimizer and by gradient checks.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value, bool trainable = true);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool trainable(const std::string& name) const;

  std::vector<std::string> names() const;
  std::vector<std::string> trainable_names() const;
  std::size_t size() const { return entries_.size(); }

  // Zero-filled gradient map covering every trainable entry.
  Gradients zero_gradients() const;

  struct Entry {
    Tensor value;
    bool trainable = true;
  };
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

// Glorot-uniform weight init in [-sqrt(6/(fan_in+fan_out)), +...].
Tensor glorot_init(int fan_in, int fan_out, Rng& rng);

// Entries named *.running_mean / *.running_var are batch-norm buffers.
bool is_buffer_name(const std::string& name);

// Checkpoint file: "PLCKPT 1" header, one manifest line per tensor
// ("name dim0 dim1 ..."), a blank line, then one line of values per tensor in
// manifest order. Values use the shortest decimal form that round-trips
// binary64, so save/load is bit-identical.
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace prooflens
