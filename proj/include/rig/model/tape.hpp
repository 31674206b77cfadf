#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rig::model {

/// Handle to a vector value recorded on a Tape.
struct Var {
  std::int32_t id = -1;
};

/// Define-by-run reverse-mode differentiation over small dense vectors.
/// Values are computed eagerly while recording; backward() then walks the
/// tape once in reverse. Parameters live outside the tape and are addressed
/// by offset into the bound parameter vector.
class Tape {
 public:
  /// Parameter storage used by affine(); `grad` may be empty when no
  /// parameter gradient is wanted.
  void bind(std::span<const double> params, std::span<double> grad);
  void clear();

  Var input(std::span<const double> values);
  Var scalar(double v);

  /// y = W x + b with W (rows x cols) row-major at params[w_off], b at params[b_off].
  Var affine(Var x, std::size_t w_off, std::size_t b_off, std::size_t rows);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var one_minus(Var a);
  Var add_const(Var a, double c);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, std::size_t begin, std::size_t count);
  /// Sum over d of log N(x_d; mu_d, sigma_d^2); a scalar.
  Var gaussian_log_density(Var x, Var mu, Var sigma);
  Var sum(Var a);

  std::span<const double> value(Var v) const;
  double scalar_value(Var v) const { return value(v)[0]; }
  std::span<const double> grad(Var v) const;
  std::size_t size(Var v) const;
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node
  /// and into the bound parameter gradient.
  void backward(Var root);

 private:
  enum class Op : std::uint8_t {
    input, affine, add, sub, mul, one_minus, add_const, tanh, sigmoid, softplus, concat, slice, gauss, sum
  };
  struct Node {
    Op op;
    std::uint32_t off;   // value / grad arena offset
    std::uint32_t n;     // length
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t c = -1;
    std::size_t p0 = 0;  // affine weight offset, slice begin, concat part offset
    std::size_t p1 = 0;  // affine bias offset, concat part count
  };

  Var push(Op op, std::size_t n, std::int32_t a = -1, std::int32_t b = -1, std::int32_t c = -1);
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  double* val(const Node& nd) { return val_.data() + nd.off; }
  double* grd(const Node& nd) { return grad_.data() + nd.off; }

  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> grad_;
  std::vector<std::int32_t> concat_parts_;
  std::span<const double> params_;
  std::span<double> param_grad_;
};

}  // namespace rig::model
