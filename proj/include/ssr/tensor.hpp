#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ssr::ad {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);

enum class Op : uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,        // elementwise; either side may be a scalar (broadcast)
  kScale,      // multiply by compile-time constant
  kMaskMul,    // (N,C,L) * per-channel vector (C)
  kConv1d,     // stride 1, configurable dilation, zero padding, same length
  kAvgPool,    // size s, stride s
  kUpsample,   // linear interpolation by integer factor
  kSigmoid,
  kRelu,
  kLog,
  kAbs,
  kClampMin,
  kSum,        // full reduce to scalar
  kNormalize,  // x_i / sum_j x_j over a rank-1 vector
  kPick,       // scalar = v[index]
  kCrossEntropy,  // mean cross-entropy with logits vs integer labels
};

const char* op_name(Op op);

struct Node {
  Op op = Op::kLeaf;
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  std::array<int, 3> in{-1, -1, -1};
  int iparam = 0;      // dilation / pool size / upsample factor / pick index
  double dparam = 0.0; // clamp floor / scale constant
  std::vector<double> aux;  // cross-entropy softmax cache
};

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Value {
  class Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape over dense double tensors. Nodes are appended in
// topological order and evaluated eagerly; recompute() re-runs the whole
// program against the current leaf values, backward() accumulates gradients.
// Single-threaded per tape; distinct tapes share nothing.
class Tape {
 public:
  Value leaf(Shape shape, std::vector<double> values);
  Value constant(Shape shape, std::vector<double> values);
  Value scalar_const(double v);

  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double c);
  Value mask_mul(Value x, Value channel_mask);
  Value conv1d(Value x, Value w, Value b, int dilation);
  Value avg_pool(Value x, int size);
  Value upsample_linear(Value x, int factor);
  Value sigmoid(Value x);
  Value relu(Value x);
  Value log(Value x);
  Value abs(Value x);
  Value clamp_min(Value x, double floor);
  Value sum(Value x);
  Value normalize(Value x);
  Value pick(Value x, int index);
  Value cross_entropy_logits(Value logits, Value labels);

  // Re-runs every non-leaf node in topological order from current leaf values.
  void recompute();
  // Accumulates d(output)/d(node) into each node's grad. Output must be scalar.
  void backward(Value output);
  void zero_grad();

  void set_leaf(Value leaf, std::span<const double> values);

  const Shape& shape(Value v) const { return node(v.id).shape; }
  std::span<const double> values(Value v) const { return node(v.id).values; }
  std::span<const double> grad(Value v) const { return node(v.id).grad; }
  double value_scalar(Value v) const;

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const;

  // Smallest |input| seen at a relu/abs kink (or distance to a clamp floor);
  // infinity when no such node exists. Finite-difference suites use this to
  // reject points sitting on a non-smooth ridge.
  double min_kink_margin() const;

 private:
  Node& node(int id);
  Value push(Node n);
  void eval(int id);
  void backprop(int id);
  int check_input(Value v, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace ssr::ad
