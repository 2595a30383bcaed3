#include "ssr/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssr::ad {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

[[noreturn]] void fail(Op op, int id, const std::string& msg) {
  throw std::invalid_argument(std::string(op_name(op)) + "(node " +
                              std::to_string(id) + "): " + msg);
}

bool is_scalar(const Shape& s) { return numel(s) == 1; }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kMaskMul: return "mask_mul";
    case Op::kConv1d: return "conv1d";
    case Op::kAvgPool: return "avg_pool";
    case Op::kUpsample: return "upsample_linear";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    case Op::kClampMin: return "clamp_min";
    case Op::kSum: return "sum";
    case Op::kNormalize: return "normalize";
    case Op::kPick: return "pick";
    case Op::kCrossEntropy: return "cross_entropy_logits";
  }
  return "?";
}

const Node& Tape::node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
Node& Tape::node(int id) { return nodes_.at(static_cast<size_t>(id)); }

int Tape::check_input(Value v, const char* op) const {
  if (v.tape != this || v.id < 0 || v.id >= size())
    throw std::invalid_argument(std::string(op) + ": input from another tape or invalid");
  return v.id;
}

Value Tape::push(Node n) {
  for (int d : n.shape)
    if (d <= 0) fail(n.op, size(), "non-positive extent in shape " + shape_str(n.shape));
  const int id = size();
  n.grad.assign(static_cast<size_t>(numel(n.shape)), 0.0);
  nodes_.push_back(std::move(n));
  if (nodes_.back().op != Op::kLeaf && nodes_.back().op != Op::kConst) eval(id);
  return Value{this, id};
}

Value Tape::leaf(Shape shape, std::vector<double> values) {
  if (static_cast<int64_t>(values.size()) != numel(shape))
    throw std::invalid_argument("leaf: values length " + std::to_string(values.size()) +
                                " != numel of shape " + shape_str(shape));
  Node n;
  n.op = Op::kLeaf;
  n.shape = std::move(shape);
  n.values = std::move(values);
  return push(std::move(n));
}

Value Tape::constant(Shape shape, std::vector<double> values) {
  Value v = leaf(std::move(shape), std::move(values));
  node(v.id).op = Op::kConst;
  return v;
}

Value Tape::scalar_const(double v) { return constant({}, {v}); }

#define BINARY_FRONT(OPK)                             \
  Node n;                                             \
  n.op = OPK;                                         \
  n.in[0] = check_input(a, op_name(OPK));             \
  n.in[1] = check_input(b, op_name(OPK));

Value Tape::add(Value a, Value b) {
  BINARY_FRONT(Op::kAdd)
  if (node(n.in[0]).shape != node(n.in[1]).shape)
    fail(n.op, size(), "shape mismatch " + shape_str(node(n.in[0]).shape) + " vs " +
                           shape_str(node(n.in[1]).shape));
  n.shape = node(n.in[0]).shape;
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  BINARY_FRONT(Op::kSub)
  if (node(n.in[0]).shape != node(n.in[1]).shape)
    fail(n.op, size(), "shape mismatch " + shape_str(node(n.in[0]).shape) + " vs " +
                           shape_str(node(n.in[1]).shape));
  n.shape = node(n.in[0]).shape;
  return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
  BINARY_FRONT(Op::kMul)
  const Shape& sa = node(n.in[0]).shape;
  const Shape& sb = node(n.in[1]).shape;
  if (sa == sb) {
    n.shape = sa;
  } else if (is_scalar(sa)) {
    n.shape = sb;
  } else if (is_scalar(sb)) {
    n.shape = sa;
  } else {
    fail(n.op, size(), "shape mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  return push(std::move(n));
}

#undef BINARY_FRONT

Value Tape::scale(Value a, double c) {
  Node n;
  n.op = Op::kScale;
  n.in[0] = check_input(a, "scale");
  n.shape = node(n.in[0]).shape;
  n.dparam = c;
  return push(std::move(n));
}

Value Tape::mask_mul(Value x, Value channel_mask) {
  Node n;
  n.op = Op::kMaskMul;
  n.in[0] = check_input(x, "mask_mul");
  n.in[1] = check_input(channel_mask, "mask_mul");
  const Shape& sx = node(n.in[0]).shape;
  const Shape& sm = node(n.in[1]).shape;
  if (sx.size() != 3 || sm.size() != 1 || sm[0] != sx[1])
    fail(n.op, size(), "expected (N,C,L) x (C), got " + shape_str(sx) + " x " + shape_str(sm));
  n.shape = sx;
  return push(std::move(n));
}

Value Tape::conv1d(Value x, Value w, Value b, int dilation) {
  Node n;
  n.op = Op::kConv1d;
  n.in[0] = check_input(x, "conv1d");
  n.in[1] = check_input(w, "conv1d");
  n.in[2] = check_input(b, "conv1d");
  const Shape& sx = node(n.in[0]).shape;
  const Shape& sw = node(n.in[1]).shape;
  const Shape& sb = node(n.in[2]).shape;
  if (dilation < 1) fail(n.op, size(), "dilation must be >= 1");
  if (sx.size() != 3) fail(n.op, size(), "input must be (N,C,L), got " + shape_str(sx));
  if (sw.size() != 3 || sw[1] != sx[1])
    fail(n.op, size(), "weight must be (Cout,Cin,K) with Cin=" + std::to_string(sx[1]) +
                           ", got " + shape_str(sw));
  if (sw[2] % 2 == 0) fail(n.op, size(), "kernel size must be odd for same-length padding");
  if (sb.size() != 1 || sb[0] != sw[0])
    fail(n.op, size(), "bias must be (Cout), got " + shape_str(sb));
  n.shape = {sx[0], sw[0], sx[2]};
  n.iparam = dilation;
  return push(std::move(n));
}

Value Tape::avg_pool(Value x, int pool) {
  Node n;
  n.op = Op::kAvgPool;
  n.in[0] = check_input(x, "avg_pool");
  const Shape& sx = node(n.in[0]).shape;
  if (sx.size() != 3) fail(n.op, size(), "input must be (N,C,L), got " + shape_str(sx));
  if (pool < 1 || sx[2] % pool != 0)
    fail(n.op, size(), "pool size " + std::to_string(pool) + " must divide length " +
                           std::to_string(sx[2]));
  n.shape = {sx[0], sx[1], sx[2] / pool};
  n.iparam = pool;
  return push(std::move(n));
}

Value Tape::upsample_linear(Value x, int factor) {
  Node n;
  n.op = Op::kUpsample;
  n.in[0] = check_input(x, "upsample_linear");
  const Shape& sx = node(n.in[0]).shape;
  if (sx.size() != 3) fail(n.op, size(), "input must be (N,C,L), got " + shape_str(sx));
  if (factor < 1) fail(n.op, size(), "factor must be >= 1");
  n.shape = {sx[0], sx[1], sx[2] * factor};
  n.iparam = factor;
  return push(std::move(n));
}

#define UNARY(METHOD, OPK)                       \
  Value Tape::METHOD(Value x) {                  \
    Node n;                                      \
    n.op = OPK;                                  \
    n.in[0] = check_input(x, op_name(OPK));      \
    n.shape = node(n.in[0]).shape;               \
    return push(std::move(n));                   \
  }

UNARY(sigmoid, Op::kSigmoid)
UNARY(relu, Op::kRelu)
UNARY(log, Op::kLog)
UNARY(abs, Op::kAbs)

#undef UNARY

Value Tape::clamp_min(Value x, double floor) {
  Node n;
  n.op = Op::kClampMin;
  n.in[0] = check_input(x, "clamp_min");
  n.shape = node(n.in[0]).shape;
  n.dparam = floor;
  return push(std::move(n));
}

Value Tape::sum(Value x) {
  Node n;
  n.op = Op::kSum;
  n.in[0] = check_input(x, "sum");
  n.shape = {};
  return push(std::move(n));
}

Value Tape::normalize(Value x) {
  Node n;
  n.op = Op::kNormalize;
  n.in[0] = check_input(x, "normalize");
  const Shape& sx = node(n.in[0]).shape;
  if (sx.size() != 1) fail(n.op, size(), "expected rank-1 vector, got " + shape_str(sx));
  n.shape = sx;
  return push(std::move(n));
}

Value Tape::pick(Value x, int index) {
  Node n;
  n.op = Op::kPick;
  n.in[0] = check_input(x, "pick");
  const Shape& sx = node(n.in[0]).shape;
  if (sx.size() != 1 || index < 0 || index >= sx[0])
    fail(n.op, size(), "index " + std::to_string(index) + " out of range for " + shape_str(sx));
  n.shape = {};
  n.iparam = index;
  return push(std::move(n));
}

Value Tape::cross_entropy_logits(Value logits, Value labels) {
  Node n;
  n.op = Op::kCrossEntropy;
  n.in[0] = check_input(logits, "cross_entropy_logits");
  n.in[1] = check_input(labels, "cross_entropy_logits");
  const Shape& sl = node(n.in[0]).shape;
  const Shape& sy = node(n.in[1]).shape;
  if (sl.size() != 3 || sy.size() != 2 || sy[0] != sl[0] || sy[1] != sl[2])
    fail(n.op, size(), "expected logits (N,K,L) with labels (N,L), got " + shape_str(sl) +
                           " / " + shape_str(sy));
  n.shape = {};
  return push(std::move(n));
}

double Tape::value_scalar(Value v) const {
  const Node& n = node(check_input(v, "value_scalar"));
  if (numel(n.shape) != 1)
    throw std::invalid_argument("value_scalar: node " + std::to_string(v.id) + " is not scalar");
  return n.values[0];
}

void Tape::set_leaf(Value leaf, std::span<const double> values) {
  Node& n = node(check_input(leaf, "set_leaf"));
  if (n.op != Op::kLeaf && n.op != Op::kConst)
    throw std::invalid_argument("set_leaf: node " + std::to_string(leaf.id) + " is not a leaf");
  if (static_cast<int64_t>(values.size()) != numel(n.shape))
    throw std::invalid_argument("set_leaf: size mismatch");
  n.values.assign(values.begin(), values.end());
}

void Tape::recompute() {
  for (int i = 0; i < size(); ++i) {
    if (nodes_[static_cast<size_t>(i)].op == Op::kLeaf ||
        nodes_[static_cast<size_t>(i)].op == Op::kConst)
      continue;
    eval(i);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.assign(n.grad.size(), 0.0);
}

void Tape::backward(Value output) {
  const int out = check_input(output, "backward");
  if (numel(node(out).shape) != 1)
    throw std::invalid_argument("backward: output node " + std::to_string(out) +
                                " is not scalar");
  node(out).grad[0] += 1.0;
  for (int i = out; i >= 0; --i) backprop(i);
}

void Tape::eval(int id) {
  Node& n = node(id);
  const auto in0 = [&]() -> const Node& { return node(n.in[0]); };
  const auto in1 = [&]() -> const Node& { return node(n.in[1]); };
  const int64_t count = numel(n.shape);
  n.values.resize(static_cast<size_t>(count));

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConst:
      break;
    case Op::kAdd: {
      const auto& a = in0().values;
      const auto& b = in1().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] + b[i];
      break;
    }
    case Op::kSub: {
      const auto& a = in0().values;
      const auto& b = in1().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] - b[i];
      break;
    }
    case Op::kMul: {
      const auto& a = in0().values;
      const auto& b = in1().values;
      if (a.size() == b.size()) {
        for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] * b[i];
      } else if (a.size() == 1) {
        for (int64_t i = 0; i < count; ++i) n.values[i] = a[0] * b[i];
      } else {
        for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] * b[0];
      }
      break;
    }
    case Op::kScale: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = n.dparam * a[i];
      break;
    }
    case Op::kMaskMul: {
      const auto& x = in0().values;
      const auto& m = in1().values;
      const int N = n.shape[0], C = n.shape[1], L = n.shape[2];
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          const int64_t base = (static_cast<int64_t>(b) * C + c) * L;
          for (int l = 0; l < L; ++l) n.values[base + l] = x[base + l] * m[c];
        }
      break;
    }
    case Op::kConv1d: {
      const Node& xn = in0();
      const Node& wn = in1();
      const Node& bn = node(n.in[2]);
      const int N = xn.shape[0], Cin = xn.shape[1], L = xn.shape[2];
      const int Cout = wn.shape[0], K = wn.shape[2];
      const int d = n.iparam, off = (K - 1) / 2;
      for (int b = 0; b < N; ++b)
        for (int co = 0; co < Cout; ++co) {
          double* out = n.values.data() + (static_cast<int64_t>(b) * Cout + co) * L;
          for (int l = 0; l < L; ++l) out[l] = bn.values[co];
          for (int ci = 0; ci < Cin; ++ci) {
            const double* x = xn.values.data() + (static_cast<int64_t>(b) * Cin + ci) * L;
            const double* w = wn.values.data() + (static_cast<int64_t>(co) * Cin + ci) * K;
            for (int t = 0; t < K; ++t) {
              const int shift = (t - off) * d;
              const int lo = std::max(0, -shift);
              const int hi = std::min(L, L - shift);
              const double wv = w[t];
              for (int l = lo; l < hi; ++l) out[l] += wv * x[l + shift];
            }
          }
        }
      break;
    }
    case Op::kAvgPool: {
      const Node& xn = in0();
      const int N = n.shape[0], C = n.shape[1], Lo = n.shape[2];
      const int s = n.iparam;
      const double inv = 1.0 / s;
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          const double* x = xn.values.data() + (static_cast<int64_t>(b) * C + c) * (Lo * s);
          double* out = n.values.data() + (static_cast<int64_t>(b) * C + c) * Lo;
          for (int o = 0; o < Lo; ++o) {
            double acc = 0.0;
            for (int k = 0; k < s; ++k) acc += x[o * s + k];
            out[o] = acc * inv;
          }
        }
      break;
    }
    case Op::kUpsample: {
      const Node& xn = in0();
      const int N = n.shape[0], C = n.shape[1], Lo = n.shape[2];
      const int s = n.iparam;
      const int Li = Lo / s;
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          const double* x = xn.values.data() + (static_cast<int64_t>(b) * C + c) * Li;
          double* out = n.values.data() + (static_cast<int64_t>(b) * C + c) * Lo;
          for (int o = 0; o < Lo; ++o) {
            const double src = (o + 0.5) / s - 0.5;
            int i0 = static_cast<int>(std::floor(src));
            double w1 = src - i0;
            if (i0 < 0) { i0 = 0; w1 = 0.0; }
            if (i0 >= Li - 1) { i0 = Li - 1; w1 = 0.0; }
            const int i1 = std::min(i0 + 1, Li - 1);
            out[o] = (1.0 - w1) * x[i0] + w1 * x[i1];
          }
        }
      break;
    }
    case Op::kSigmoid: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = stable_sigmoid(a[i]);
      break;
    }
    case Op::kRelu: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] > 0.0 ? a[i] : 0.0;
      break;
    }
    case Op::kLog: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) {
        if (a[i] <= 0.0)
          fail(Op::kLog, id, "non-positive argument " + std::to_string(a[i]) +
                                 "; callers must clamp first");
        n.values[i] = std::log(a[i]);
      }
      break;
    }
    case Op::kAbs: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = std::fabs(a[i]);
      break;
    }
    case Op::kClampMin: {
      const auto& a = in0().values;
      for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] < n.dparam ? n.dparam : a[i];
      break;
    }
    case Op::kSum: {
      const auto& a = in0().values;
      double acc = 0.0;
      for (double v : a) acc += v;
      n.values[0] = acc;
      break;
    }
    case Op::kNormalize: {
      const auto& a = in0().values;
      double s = 0.0;
      for (double v : a) s += v;
      if (s == 0.0) fail(Op::kNormalize, id, "zero sum");
      for (int64_t i = 0; i < count; ++i) n.values[i] = a[i] / s;
      break;
    }
    case Op::kPick: {
      n.values[0] = in0().values[static_cast<size_t>(n.iparam)];
      break;
    }
    case Op::kCrossEntropy: {
      const Node& zn = in0();
      const Node& yn = in1();
      const int N = zn.shape[0], K = zn.shape[1], L = zn.shape[2];
      n.aux.resize(zn.values.size());
      double loss = 0.0;
      for (int b = 0; b < N; ++b)
        for (int l = 0; l < L; ++l) {
          double zmax = -std::numeric_limits<double>::infinity();
          for (int k = 0; k < K; ++k)
            zmax = std::max(zmax, zn.values[(static_cast<int64_t>(b) * K + k) * L + l]);
          double denom = 0.0;
          for (int k = 0; k < K; ++k)
            denom += std::exp(zn.values[(static_cast<int64_t>(b) * K + k) * L + l] - zmax);
          const double lse = zmax + std::log(denom);
          for (int k = 0; k < K; ++k) {
            const int64_t idx = (static_cast<int64_t>(b) * K + k) * L + l;
            n.aux[idx] = std::exp(zn.values[idx] - lse);
          }
          const int y = static_cast<int>(yn.values[static_cast<int64_t>(b) * L + l]);
          if (y < 0 || y >= K)
            fail(Op::kCrossEntropy, id, "label " + std::to_string(y) + " out of range");
          loss -= zn.values[(static_cast<int64_t>(b) * K + y) * L + l] - lse;
        }
      n.values[0] = loss / (static_cast<double>(N) * L);
      break;
    }
  }
}

void Tape::backprop(int id) {
  Node& n = node(id);
  bool any = false;
  for (double g : n.grad)
    if (g != 0.0) { any = true; break; }
  if (!any || n.op == Op::kLeaf || n.op == Op::kConst) return;

  Node& a = node(n.in[0]);
  const int64_t count = numel(n.shape);

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConst:
      break;
    case Op::kAdd: {
      Node& b = node(n.in[1]);
      for (int64_t i = 0; i < count; ++i) {
        a.grad[i] += n.grad[i];
        b.grad[i] += n.grad[i];
      }
      break;
    }
    case Op::kSub: {
      Node& b = node(n.in[1]);
      for (int64_t i = 0; i < count; ++i) {
        a.grad[i] += n.grad[i];
        b.grad[i] -= n.grad[i];
      }
      break;
    }
    case Op::kMul: {
      Node& b = node(n.in[1]);
      if (a.values.size() == b.values.size()) {
        for (int64_t i = 0; i < count; ++i) {
          a.grad[i] += n.grad[i] * b.values[i];
          b.grad[i] += n.grad[i] * a.values[i];
        }
      } else if (a.values.size() == 1) {
        for (int64_t i = 0; i < count; ++i) {
          a.grad[0] += n.grad[i] * b.values[i];
          b.grad[i] += n.grad[i] * a.values[0];
        }
      } else {
        for (int64_t i = 0; i < count; ++i) {
          a.grad[i] += n.grad[i] * b.values[0];
          b.grad[0] += n.grad[i] * a.values[i];
        }
      }
      break;
    }
    case Op::kScale: {
      for (int64_t i = 0; i < count; ++i) a.grad[i] += n.dparam * n.grad[i];
      break;
    }
    case Op::kMaskMul: {
      Node& m = node(n.in[1]);
      const int N = n.shape[0], C = n.shape[1], L = n.shape[2];
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          const int64_t base = (static_cast<int64_t>(b) * C + c) * L;
          for (int l = 0; l < L; ++l) {
            a.grad[base + l] += n.grad[base + l] * m.values[c];
            m.grad[c] += n.grad[base + l] * a.values[base + l];
          }
        }
      break;
    }
    case Op::kConv1d: {
      Node& w = node(n.in[1]);
      Node& bias = node(n.in[2]);
      const int N = a.shape[0], Cin = a.shape[1], L = a.shape[2];
      const int Cout = w.shape[0], K = w.shape[2];
      const int d = n.iparam, off = (K - 1) / 2;
      for (int b = 0; b < N; ++b)
        for (int co = 0; co < Cout; ++co) {
          const double* g = n.grad.data() + (static_cast<int64_t>(b) * Cout + co) * L;
          for (int l = 0; l < L; ++l) bias.grad[co] += g[l];
          for (int ci = 0; ci < Cin; ++ci) {
            const double* x = a.values.data() + (static_cast<int64_t>(b) * Cin + ci) * L;
            double* gx = a.grad.data() + (static_cast<int64_t>(b) * Cin + ci) * L;
            const double* wv = w.values.data() + (static_cast<int64_t>(co) * Cin + ci) * K;
            double* gw = w.grad.data() + (static_cast<int64_t>(co) * Cin + ci) * K;
            for (int t = 0; t < K; ++t) {
              const int shift = (t - off) * d;
              const int lo = std::max(0, -shift);
              const int hi = std::min(L, L - shift);
              double acc = 0.0;
              for (int l = lo; l < hi; ++l) {
                gx[l + shift] += g[l] * wv[t];
                acc += g[l] * x[l + shift];
              }
              gw[t] += acc;
            }
          }
        }
      break;
    }
    case Op::kAvgPool: {
      const int N = n.shape[0], C = n.shape[1], Lo = n.shape[2];
      const int s = n.iparam;
      const double inv = 1.0 / s;
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          double* gx = a.grad.data() + (static_cast<int64_t>(b) * C + c) * (Lo * s);
          const double* g = n.grad.data() + (static_cast<int64_t>(b) * C + c) * Lo;
          for (int o = 0; o < Lo; ++o)
            for (int k = 0; k < s; ++k) gx[o * s + k] += g[o] * inv;
        }
      break;
    }
    case Op::kUpsample: {
      const int N = n.shape[0], C = n.shape[1], Lo = n.shape[2];
      const int s = n.iparam;
      const int Li = Lo / s;
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < C; ++c) {
          double* gx = a.grad.data() + (static_cast<int64_t>(b) * C + c) * Li;
          const double* g = n.grad.data() + (static_cast<int64_t>(b) * C + c) * Lo;
          for (int o = 0; o < Lo; ++o) {
            const double src = (o + 0.5) / s - 0.5;
            int i0 = static_cast<int>(std::floor(src));
            double w1 = src - i0;
            if (i0 < 0) { i0 = 0; w1 = 0.0; }
            if (i0 >= Li - 1) { i0 = Li - 1; w1 = 0.0; }
            const int i1 = std::min(i0 + 1, Li - 1);
            gx[i0] += (1.0 - w1) * g[o];
            gx[i1] += w1 * g[o];
          }
        }
      break;
    }
    case Op::kSigmoid: {
      for (int64_t i = 0; i < count; ++i)
        a.grad[i] += n.grad[i] * n.values[i] * (1.0 - n.values[i]);
      break;
    }
    case Op::kRelu: {
      for (int64_t i = 0; i < count; ++i)
        if (a.values[i] > 0.0) a.grad[i] += n.grad[i];
      break;
    }
    case Op::kLog: {
      for (int64_t i = 0; i < count; ++i) a.grad[i] += n.grad[i] / a.values[i];
      break;
    }
    case Op::kAbs: {
      for (int64_t i = 0; i < count; ++i)
        a.grad[i] += a.values[i] >= 0.0 ? n.grad[i] : -n.grad[i];
      break;
    }
    case Op::kClampMin: {
      for (int64_t i = 0; i < count; ++i)
        if (a.values[i] > n.dparam) a.grad[i] += n.grad[i];
      break;
    }
    case Op::kSum: {
      for (double& g : a.grad) g += n.grad[0];
      break;
    }
    case Op::kNormalize: {
      double s = 0.0;
      for (double v : a.values) s += v;
      double dot = 0.0;
      for (int64_t i = 0; i < count; ++i) dot += n.grad[i] * n.values[i];
      for (int64_t i = 0; i < count; ++i) a.grad[i] += (n.grad[i] - dot) / s;
      break;
    }
    case Op::kPick: {
      a.grad[static_cast<size_t>(n.iparam)] += n.grad[0];
      break;
    }
    case Op::kCrossEntropy: {
      const Node& y = node(n.in[1]);
      const int N = a.shape[0], K = a.shape[1], L = a.shape[2];
      const double g = n.grad[0] / (static_cast<double>(N) * L);
      for (int b = 0; b < N; ++b)
        for (int l = 0; l < L; ++l) {
          const int cls = static_cast<int>(y.values[static_cast<int64_t>(b) * L + l]);
          for (int k = 0; k < K; ++k) {
            const int64_t idx = (static_cast<int64_t>(b) * K + k) * L + l;
            a.grad[idx] += g * (n.aux[idx] - (k == cls ? 1.0 : 0.0));
          }
        }
      break;
    }
  }
}

double Tape::min_kink_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) {
    if (n.op == Op::kRelu || n.op == Op::kAbs) {
      for (double v : node(n.in[0]).values) margin = std::min(margin, std::fabs(v));
    } else if (n.op == Op::kClampMin) {
      for (double v : node(n.in[0]).values)
        margin = std::min(margin, std::fabs(v - n.dparam));
    }
  }
  return margin;
}

}  // namespace ssr::ad
