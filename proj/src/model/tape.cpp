#include "rig/model/tape.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rig::model {

namespace {

double sigmoid_of(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_of(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void Tape::bind(std::span<const double> params, std::span<double> grad) {
  if (!grad.empty() && grad.size() != params.size())
    throw std::invalid_argument("Tape::bind: gradient buffer size differs from parameters");
  params_ = params;
  param_grad_ = grad;
}

void Tape::clear() {
  nodes_.clear();
  val_.clear();
  grad_.clear();
  concat_parts_.clear();
}

Var Tape::push(Op op, std::size_t n, std::int32_t a, std::int32_t b, std::int32_t c) {
  Node nd{op, static_cast<std::uint32_t>(val_.size()), static_cast<std::uint32_t>(n), a, b, c};
  val_.resize(val_.size() + n, 0.0);
  nodes_.push_back(nd);
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

std::span<const double> Tape::value(Var v) const {
  const Node& nd = node(v);
  return {val_.data() + nd.off, nd.n};
}

std::span<const double> Tape::grad(Var v) const {
  const Node& nd = node(v);
  if (grad_.size() < val_.size()) throw std::logic_error("Tape::grad before backward");
  return {grad_.data() + nd.off, nd.n};
}

std::size_t Tape::size(Var v) const { return node(v).n; }

Var Tape::input(std::span<const double> values) {
  const Var v = push(Op::input, values.size());
  std::copy(values.begin(), values.end(), val(nodes_.back()));
  return v;
}

Var Tape::scalar(double x) { return input(std::span<const double>(&x, 1)); }

Var Tape::affine(Var x, std::size_t w_off, std::size_t b_off, std::size_t rows) {
  const std::size_t cols = size(x);
  if (w_off + rows * cols > params_.size() || b_off + rows > params_.size())
    throw std::out_of_range("Tape::affine: parameter block outside the bound vector");
  const Var y = push(Op::affine, rows, x.id);
  Node& nd = nodes_.back();
  nd.p0 = w_off;
  nd.p1 = b_off;
  const double* xv = val_.data() + node(x).off;
  double* yv = val(nd);
  const double* W = params_.data() + w_off;
  const double* bias = params_.data() + b_off;
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias[i];
    const double* wr = W + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * xv[j];
    yv[i] = acc;
  }
  return y;
}

#define RIG_BINARY(NAME, OP, EXPR)                                                              \
  Var Tape::NAME(Var a, Var b) {                                                                \
    if (size(a) != size(b)) throw std::invalid_argument("Tape::" #NAME ": size mismatch");      \
    const std::size_t n = size(a);                                                              \
    const Var y = push(Op::OP, n, a.id, b.id);                                                  \
    const double* av = val_.data() + node(a).off;                                               \
    const double* bv = val_.data() + node(b).off;                                               \
    double* yv = val(nodes_.back());                                                            \
    for (std::size_t i = 0; i < n; ++i) yv[i] = EXPR;                                           \
    return y;                                                                                   \
  }

RIG_BINARY(add, add, av[i] + bv[i])
RIG_BINARY(sub, sub, av[i] - bv[i])
RIG_BINARY(mul, mul, av[i] * bv[i])
#undef RIG_BINARY

#define RIG_UNARY(NAME, OP, EXPR)                          \
  Var Tape::NAME(Var a) {                                  \
    const std::size_t n = size(a);                         \
    const Var y = push(Op::OP, n, a.id);                   \
    const double* av = val_.data() + node(a).off;          \
    double* yv = val(nodes_.back());                       \
    for (std::size_t i = 0; i < n; ++i) yv[i] = EXPR;      \
    return y;                                              \
  }

RIG_UNARY(one_minus, one_minus, 1.0 - av[i])
RIG_UNARY(tanh, tanh, std::tanh(av[i]))
RIG_UNARY(sigmoid, sigmoid, sigmoid_of(av[i]))
RIG_UNARY(softplus, softplus, softplus_of(av[i]))
#undef RIG_UNARY

Var Tape::add_const(Var a, double c) {
  const std::size_t n = size(a);
  const Var y = push(Op::add_const, n, a.id);
  const double* av = val_.data() + node(a).off;
  double* yv = val(nodes_.back());
  for (std::size_t i = 0; i < n; ++i) yv[i] = av[i] + c;
  return y;
}

Var Tape::concat(std::span<const Var> parts) {
  std::size_t n = 0;
  for (Var p : parts) n += size(p);
  const Var y = push(Op::concat, n);
  Node& nd = nodes_.back();
  nd.p0 = concat_parts_.size();
  nd.p1 = parts.size();
  double* yv = val(nd);
  for (Var p : parts) {
    concat_parts_.push_back(p.id);
    const Node& pn = node(p);
    std::copy_n(val_.data() + pn.off, pn.n, yv);
    yv += pn.n;
  }
  return y;
}

Var Tape::slice(Var a, std::size_t begin, std::size_t count) {
  if (begin + count > size(a)) throw std::out_of_range("Tape::slice: range outside the vector");
  const Var y = push(Op::slice, count, a.id);
  nodes_.back().p0 = begin;
  std::copy_n(val_.data() + node(a).off + begin, count, val(nodes_.back()));
  return y;
}

Var Tape::gaussian_log_density(Var x, Var mu, Var sigma) {
  const std::size_t n = size(x);
  if (size(mu) != n || size(sigma) != n) throw std::invalid_argument("Tape::gaussian_log_density: size mismatch");
  const Var y = push(Op::gauss, 1, x.id, mu.id, sigma.id);
  const double* xv = val_.data() + node(x).off;
  const double* mv = val_.data() + node(mu).off;
  const double* sv = val_.data() + node(sigma).off;
  double acc = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    const double u = (xv[d] - mv[d]) / sv[d];
    acc += -kHalfLog2Pi - std::log(sv[d]) - 0.5 * u * u;
  }
  val(nodes_.back())[0] = acc;
  return y;
}

Var Tape::sum(Var a) {
  const std::size_t n = size(a);
  const Var y = push(Op::sum, 1, a.id);
  const double* av = val_.data() + node(a).off;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += av[i];
  val(nodes_.back())[0] = acc;
  return y;
}

void Tape::backward(Var root) {
  if (node(root).n != 1) throw std::invalid_argument("Tape::backward: root must be a scalar");
  grad_.assign(val_.size(), 0.0);
  grad_[node(root).off] = 1.0;
  const bool want_params = !param_grad_.empty();

  for (std::size_t k = static_cast<std::size_t>(root.id) + 1; k-- > 0;) {
    const Node& nd = nodes_[k];
    const double* gy = grad_.data() + nd.off;
    const double* yv = val_.data() + nd.off;
    const std::size_t n = nd.n;
    switch (nd.op) {
      case Op::input:
        break;
      case Op::affine: {
        const Node& xn = nodes_[static_cast<std::size_t>(nd.a)];
        const std::size_t cols = xn.n;
        const double* xv = val_.data() + xn.off;
        double* gx = grad_.data() + xn.off;
        const double* W = params_.data() + nd.p0;
        for (std::size_t i = 0; i < n; ++i) {
          const double g = gy[i];
          if (g == 0.0) continue;
          const double* wr = W + i * cols;
          for (std::size_t j = 0; j < cols; ++j) gx[j] += wr[j] * g;
        }
        if (want_params) {
          double* gW = param_grad_.data() + nd.p0;
          double* gb = param_grad_.data() + nd.p1;
          for (std::size_t i = 0; i < n; ++i) {
            const double g = gy[i];
            gb[i] += g;
            if (g == 0.0) continue;
            double* gr = gW + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += g * xv[j];
          }
        }
        break;
      }
      case Op::add:
      case Op::sub: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        double* gb = grad_.data() + nodes_[static_cast<std::size_t>(nd.b)].off;
        const double sign = nd.op == Op::add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += gy[i];
          gb[i] += sign * gy[i];
        }
        break;
      }
      case Op::mul: {
        const Node& an = nodes_[static_cast<std::size_t>(nd.a)];
        const Node& bn = nodes_[static_cast<std::size_t>(nd.b)];
        const double* av = val_.data() + an.off;
        const double* bv = val_.data() + bn.off;
        double* ga = grad_.data() + an.off;
        double* gb = grad_.data() + bn.off;
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += gy[i] * bv[i];
          gb[i] += gy[i] * av[i];
        }
        break;
      }
      case Op::one_minus: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        for (std::size_t i = 0; i < n; ++i) ga[i] -= gy[i];
        break;
      }
      case Op::add_const: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
        break;
      }
      case Op::tanh: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * (1.0 - yv[i] * yv[i]);
        break;
      }
      case Op::sigmoid: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * yv[i] * (1.0 - yv[i]);
        break;
      }
      case Op::softplus: {
        const Node& an = nodes_[static_cast<std::size_t>(nd.a)];
        const double* av = val_.data() + an.off;
        double* ga = grad_.data() + an.off;
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * sigmoid_of(av[i]);
        break;
      }
      case Op::concat: {
        const double* g = gy;
        for (std::size_t p = 0; p < nd.p1; ++p) {
          const Node& pn = nodes_[static_cast<std::size_t>(concat_parts_[nd.p0 + p])];
          double* gp = grad_.data() + pn.off;
          for (std::size_t i = 0; i < pn.n; ++i) gp[i] += g[i];
          g += pn.n;
        }
        break;
      }
      case Op::slice: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off + nd.p0;
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
        break;
      }
      case Op::gauss: {
        const Node& xn = nodes_[static_cast<std::size_t>(nd.a)];
        const Node& mn = nodes_[static_cast<std::size_t>(nd.b)];
        const Node& sn = nodes_[static_cast<std::size_t>(nd.c)];
        const double g = gy[0];
        for (std::size_t d = 0; d < xn.n; ++d) {
          const double s = val_[sn.off + d];
          const double r = val_[xn.off + d] - val_[mn.off + d];
          grad_[xn.off + d] += g * (-r / (s * s));
          grad_[mn.off + d] += g * (r / (s * s));
          grad_[sn.off + d] += g * (-1.0 / s + r * r / (s * s * s));
        }
        break;
      }
      case Op::sum: {
        double* ga = grad_.data() + nodes_[static_cast<std::size_t>(nd.a)].off;
        const std::size_t m = nodes_[static_cast<std::size_t>(nd.a)].n;
        for (std::size_t i = 0; i < m; ++i) ga[i] += gy[0];
        break;
      }
    }
  }
}

}  // namespace rig::model
