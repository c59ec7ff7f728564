#ifndef TGIC_LAYERS_H_
#define TGIC_LAYERS_H_

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgic/graph.h"
#include "tgic/rng.h"
#include "tgic/tensor.h"

namespace tgic {
namespace nn {

// A named trainable tensor with persistent gradient and Adam state. Graph
// leaves alias value/grad, so backward() accumulates straight into here.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m, v;  // Adam moments, sized on first optimizer step
  bool trainable = true;
};

class ParamSet {
 public:
  Param& add(const std::string& name, Tensor value, bool trainable = true);
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  std::vector<Param*> all();
  std::vector<Param*> with_prefix(const std::string& prefix);
  void zero_grad();
  void set_trainable(const std::string& prefix, bool trainable);
  // FNV-1a over the raw value bytes of every param whose name starts with
  // prefix (insertion order); used to verify frozen modules stay frozen.
  uint64_t value_hash(const std::string& prefix = "") const;

 private:
  std::deque<Param> params_;
  std::unordered_map<std::string, Param*> by_name_;
};

// Registers a parameter leaf on the tape (value/grad aliased).
graph::Var leaf(graph::Tape& t, Param& p);

// One Adam update over the given params from their accumulated grads.
// t is the 1-based step count used for bias correction.
void adam_step(const std::vector<Param*>& params, double lr, long t, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// --- initializers -----------------------------------------------------------
Tensor he_normal(Rng& rng, std::vector<int> shape, int fan_in);
Tensor uniform_init(Rng& rng, std::vector<int> shape, double bound);

// --- layers -----------------------------------------------------------------

class Conv2d {
 public:
  Conv2d() = default;
  // pad = k/2 ("same" at stride 1). bias_init fills the bias constant;
  // weight_scale shrinks the He init for layers that must start near linear.
  Conv2d(ParamSet& ps, const std::string& name, int in_c, int out_c, int k, int stride, Rng& rng,
         bool bias = true, double bias_init = 0.0, bool zero_weights = false,
         double weight_scale = 1.0);
  graph::Var operator()(graph::Tape& t, graph::Var x) const;
  int out_channels() const { return out_c_; }

 private:
  Param* w_ = nullptr;
  Param* b_ = nullptr;
  int out_c_ = 0, stride_ = 1, pad_ = 0;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamSet& ps, const std::string& name, int in_dim, int out_dim, Rng& rng,
         bool bias = true);
  // x is {I} or (B,I); result {O} or (B,O).
  graph::Var operator()(graph::Tape& t, graph::Var x) const;

 private:
  Param* w_ = nullptr;  // (O, I)
  Param* b_ = nullptr;  // {O}
  int in_dim_ = 0, out_dim_ = 0;
};

// conv3x3 -> relu -> conv3x3 with identity skip.
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(ParamSet& ps, const std::string& name, int channels, Rng& rng);
  graph::Var operator()(graph::Tape& t, graph::Var x) const;

 private:
  Conv2d c1_, c2_;
};

class ResModule {
 public:
  ResModule() = default;
  ResModule(ParamSet& ps, const std::string& name, int channels, int n_blocks, Rng& rng);
  graph::Var operator()(graph::Tape& t, graph::Var x) const;

 private:
  std::vector<ResBlock> blocks_;
};

}  // namespace nn
}  // namespace tgic

#endif  // TGIC_LAYERS_H_
