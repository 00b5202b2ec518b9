#pragma once

// Small reverse-mode tape over dense double tensors.
//
// Backward rules are themselves written with differentiable ops, so gradients
// can be differentiated again (create_graph). The toy GAN needs that for the
// R1 penalty (gradient of ||dD/dx||^2 wrt discriminator weights) and for the
// path-length penalty (gradient of ||J^T y|| wrt generator weights).
//
// The op set is closed under differentiation:
//   matmul/transpose, im2col3/col2im3, upsample2/sumpool2, roll,
//   add/sub/mul/scale/add_scalar, sum/expand, reshape,
//   leaky_relu (constant mask), sigmoid, reciprocal, sqrt, log_floor.

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace lp::ad {

using Shape = std::vector<int>;

struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> values);

    std::size_t size() const noexcept { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }
};

std::size_t shape_size(const Shape& shape);

struct Node;

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const;
    const Shape& shape() const { return value().shape; }
    std::size_t size() const { return value().size(); }
    bool requires_grad() const;
    bool defined() const noexcept { return static_cast<bool>(node_); }
    // Value of a one-element tensor.
    double item() const;

    Node* node() const noexcept { return node_.get(); }

private:
    std::shared_ptr<Node> node_;
};

using BackwardFn = std::function<std::vector<Var>(const std::vector<Var>& inputs, const Var& grad)>;

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Var> inputs;
    BackwardFn backward;
};

// Leaf that never receives a gradient.
Var constant(Tensor t);
// Leaf that receives a gradient.
Var parameter(Tensor t);

// While alive, new ops do not record their inputs.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool recording() noexcept;

// Gradients of scalar `output` wrt `wrt`. Inputs unreachable from the output
// get a zero tensor. With create_graph the returned Vars are differentiable.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph = false);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var sum(const Var& a);
Var mean(const Var& a);
// Broadcast a one-element tensor to `shape`.
Var expand(const Var& scalar, const Shape& shape);
Var reshape(const Var& a, const Shape& shape);
Var transpose(const Var& a);
Var matmul(const Var& a, const Var& b);
// [C,H,W] -> [C*9, H*W] patches of a zero-padded 3x3 neighbourhood.
Var im2col3(const Var& x);
// Adjoint of im2col3.
Var col2im3(const Var& cols, int channels, int height, int width);
// Nearest-neighbour 2x upsampling of [C,H,W].
Var upsample2(const Var& x);
// Sum over 2x2 blocks of [C,H,W]; adjoint of upsample2.
Var sumpool2(const Var& x);
Var avgpool2(const Var& x);
// Circular shift of [C,H,W] by (dy, dx).
Var roll(const Var& x, int dy, int dx);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var reciprocal(const Var& x);
Var sqrt(const Var& x);
// log(max(x, floor)); zero gradient where the floor is active.
Var log_floor(const Var& x, double floor);
// Mean softmax cross-entropy of [N,K] logits against integer labels.
// First-order only.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

// 3x3 same-padded convolution of x [Ci,H,W] with weight [Co, Ci*9] and bias [Co].
Var conv3x3(const Var& x, const Var& weight, const Var& bias);
// weight [Out, In] times vector x [In] plus bias [Out].
Var dense(const Var& x, const Var& weight, const Var& bias);

} // namespace lp::ad
