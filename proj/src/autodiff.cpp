#include "latentprog/autodiff.hpp"

#include "latentprog/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace lp::ad {

namespace {

thread_local bool g_recording = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) fail(ErrorKind::ShapeMismatch, std::string(op) + ": operand shapes differ");
}

Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    const bool needs = g_recording &&
        std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
    if (needs) {
        node->requires_grad = true;
        node->inputs = std::move(inputs);
        node->backward = std::move(backward);
    }
    return Var(std::move(node));
}

template <typename F>
Tensor map_unary(const Tensor& a, F f) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i]);
    return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

void check_chw(const Var& x, const char* op) {
    if (x.shape().size() != 3) fail(ErrorKind::ShapeMismatch, std::string(op) + ": expected [C,H,W]");
}

} // namespace

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_size(shape)) fail(ErrorKind::ShapeMismatch, "tensor data does not match shape");
}

const Tensor& Var::value() const { return node_->value; }

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

double Var::item() const {
    if (value().size() != 1) fail(ErrorKind::ShapeMismatch, "item() on a non-scalar tensor");
    return value().data[0];
}

Var constant(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    return Var(std::move(node));
}

Var parameter(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    node->requires_grad = true;
    return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

bool recording() noexcept { return g_recording; }

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph) {
    if (output.size() != 1) fail(ErrorKind::ShapeMismatch, "grad: output must be a scalar");

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    if (output.requires_grad()) {
        stack.emplace_back(output.node(), 0);
        seen.insert(output.node());
    }
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].node();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    std::unordered_set<Node*> targets;
    for (const Var& v : wrt) targets.insert(v.node());

    std::optional<NoGradGuard> guard;
    if (!create_graph) guard.emplace();

    std::unordered_map<Node*, Var> grads;
    if (output.requires_grad()) grads[output.node()] = constant(Tensor(output.shape(), 1.0));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (!node->backward) continue;
        auto found = grads.find(node);
        if (found == grads.end()) continue;
        const Var upstream = found->second;
        std::vector<Var> input_grads = node->backward(node->inputs, upstream);
        for (std::size_t i = 0; i < node->inputs.size(); ++i) {
            const Var& input = node->inputs[i];
            if (!input.requires_grad() || !input_grads[i].defined()) continue;
            auto [slot, inserted] = grads.try_emplace(input.node(), input_grads[i]);
            if (!inserted) slot->second = add(slot->second, input_grads[i]);
        }
        if (!targets.contains(node)) grads.erase(node);
    }

    std::vector<Var> result;
    result.reserve(wrt.size());
    for (const Var& v : wrt) {
        auto found = grads.find(v.node());
        if (found == grads.end()) {
            result.push_back(constant(Tensor(v.shape(), 0.0)));
        } else {
            result.push_back(found->second);
        }
    }
    return result;
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    return make_result(map_binary(a.value(), b.value(), std::plus<>{}), {a, b},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    return make_result(map_binary(a.value(), b.value(), std::minus<>{}), {a, b},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{g, scale(g, -1.0)}; });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    return make_result(map_binary(a.value(), b.value(), std::multiplies<>{}), {a, b},
                       [](const std::vector<Var>& in, const Var& g) {
                           return std::vector<Var>{mul(g, in[1]), mul(g, in[0])};
                       });
}

Var scale(const Var& a, double c) {
    return make_result(map_unary(a.value(), [c](double x) { return c * x; }), {a},
                       [c](const std::vector<Var>&, const Var& g) { return std::vector<Var>{scale(g, c)}; });
}

Var add_scalar(const Var& a, double c) {
    return make_result(map_unary(a.value(), [c](double x) { return x + c; }), {a},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{g}; });
}

Var sum(const Var& a) {
    const double total = std::accumulate(a.value().data.begin(), a.value().data.end(), 0.0);
    Shape shape = a.shape();
    return make_result(Tensor({1}, total), {a}, [shape](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{expand(g, shape)};
    });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Var expand(const Var& scalar, const Shape& shape) {
    if (scalar.size() != 1) fail(ErrorKind::ShapeMismatch, "expand: operand must have one element");
    return make_result(Tensor(shape, scalar.value().data[0]), {scalar},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{sum(g)}; });
}

Var reshape(const Var& a, const Shape& shape) {
    if (shape_size(shape) != a.size()) fail(ErrorKind::ShapeMismatch, "reshape: element count differs");
    Shape original = a.shape();
    return make_result(Tensor(shape, a.value().data), {a}, [original](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{reshape(g, original)};
    });
}

Var transpose(const Var& a) {
    if (a.shape().size() != 2) fail(ErrorKind::ShapeMismatch, "transpose: expected a matrix");
    const int rows = a.shape()[0];
    const int cols = a.shape()[1];
    Tensor out({cols, rows});
    const auto& src = a.value().data;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out.data[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
    return make_result(std::move(out), {a},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{transpose(g)}; });
}

Var matmul(const Var& a, const Var& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        fail(ErrorKind::ShapeMismatch, "matmul: incompatible shapes");
    const int m = a.shape()[0];
    const int k = a.shape()[1];
    const int n = b.shape()[1];
    Tensor out({m, n});
    Eigen::Map<const RowMatrix> ma(a.value().data.data(), m, k);
    Eigen::Map<const RowMatrix> mb(b.value().data.data(), k, n);
    Eigen::Map<RowMatrix> mo(out.data.data(), m, n);
    mo.noalias() = ma * mb;
    return make_result(std::move(out), {a, b}, [](const std::vector<Var>& in, const Var& g) {
        return std::vector<Var>{matmul(g, transpose(in[1])), matmul(transpose(in[0]), g)};
    });
}

Var im2col3(const Var& x) {
    check_chw(x, "im2col3");
    const int c = x.shape()[0];
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    Tensor out({c * 9, h * w});
    const auto& src = x.value().data;
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* row = out.data.data() + static_cast<std::size_t>((ch * 9 + ky * 3 + kx)) * h * w;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= w) continue;
                        row[y * w + xx] = src[(static_cast<std::size_t>(ch) * h + sy) * w + sx];
                    }
                }
            }
        }
    }
    return make_result(std::move(out), {x}, [c, h, w](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{col2im3(g, c, h, w)};
    });
}

Var col2im3(const Var& cols, int c, int h, int w) {
    if (cols.shape() != Shape{c * 9, h * w}) fail(ErrorKind::ShapeMismatch, "col2im3: unexpected shape");
    Tensor out({c, h, w});
    const auto& src = cols.value().data;
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* row = src.data() + static_cast<std::size_t>((ch * 9 + ky * 3 + kx)) * h * w;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= w) continue;
                        out.data[(static_cast<std::size_t>(ch) * h + sy) * w + sx] += row[y * w + xx];
                    }
                }
            }
        }
    }
    return make_result(std::move(out), {cols},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{im2col3(g)}; });
}

Var upsample2(const Var& x) {
    check_chw(x, "upsample2");
    const int c = x.shape()[0];
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    Tensor out({c, 2 * h, 2 * w});
    const auto& src = x.value().data;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out.data[(static_cast<std::size_t>(ch) * 2 * h + y) * 2 * w + xx] =
                    src[(static_cast<std::size_t>(ch) * h + y / 2) * w + xx / 2];
    return make_result(std::move(out), {x},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{sumpool2(g)}; });
}

Var sumpool2(const Var& x) {
    check_chw(x, "sumpool2");
    const int c = x.shape()[0];
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    if (h % 2 != 0 || w % 2 != 0) fail(ErrorKind::ShapeMismatch, "sumpool2: odd spatial size");
    Tensor out({c, h / 2, w / 2});
    const auto& src = x.value().data;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                out.data[(static_cast<std::size_t>(ch) * (h / 2) + y / 2) * (w / 2) + xx / 2] +=
                    src[(static_cast<std::size_t>(ch) * h + y) * w + xx];
    return make_result(std::move(out), {x},
                       [](const std::vector<Var>&, const Var& g) { return std::vector<Var>{upsample2(g)}; });
}

Var avgpool2(const Var& x) { return scale(sumpool2(x), 0.25); }

Var roll(const Var& x, int dy, int dx) {
    check_chw(x, "roll");
    const int c = x.shape()[0];
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    Tensor out(x.shape());
    const auto& src = x.value().data;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const int ty = ((y + dy) % h + h) % h;
                const int tx = ((xx + dx) % w + w) % w;
                out.data[(static_cast<std::size_t>(ch) * h + ty) * w + tx] = src[(static_cast<std::size_t>(ch) * h + y) * w + xx];
            }
    return make_result(std::move(out), {x}, [dy, dx](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{roll(g, -dy, -dx)};
    });
}

Var leaky_relu(const Var& x, double slope) {
    Tensor mask = map_unary(x.value(), [slope](double v) { return v > 0.0 ? 1.0 : slope; });
    Tensor out = map_binary(x.value(), mask, std::multiplies<>{});
    auto mask_var = constant(std::move(mask));
    return make_result(std::move(out), {x}, [mask_var](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{mul(g, mask_var)};
    });
}

Var sigmoid(const Var& x) {
    Tensor out = map_unary(x.value(), [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
    return make_result(std::move(out), {x}, [](const std::vector<Var>& in, const Var& g) {
        const Var s = sigmoid(in[0]);
        return std::vector<Var>{mul(g, mul(s, add_scalar(scale(s, -1.0), 1.0)))};
    });
}

Var reciprocal(const Var& x) {
    return make_result(map_unary(x.value(), [](double v) { return 1.0 / v; }), {x},
                       [](const std::vector<Var>& in, const Var& g) {
                           const Var r = reciprocal(in[0]);
                           return std::vector<Var>{scale(mul(g, mul(r, r)), -1.0)};
                       });
}

Var sqrt(const Var& x) {
    return make_result(map_unary(x.value(), [](double v) { return std::sqrt(v); }), {x},
                       [](const std::vector<Var>& in, const Var& g) {
                           return std::vector<Var>{mul(g, scale(reciprocal(sqrt(in[0])), 0.5))};
                       });
}

Var log_floor(const Var& x, double floor) {
    Tensor out = map_unary(x.value(), [floor](double v) { return std::log(std::max(v, floor)); });
    auto mask = constant(map_unary(x.value(), [floor](double v) { return v > floor ? 1.0 : 0.0; }));
    return make_result(std::move(out), {x}, [mask, floor](const std::vector<Var>& in, const Var& g) {
        // Masked entries divide by the floor instead so they stay finite.
        const Var denom = reciprocal(add(mul(in[0], mask), scale(add_scalar(scale(mask, -1.0), 1.0), floor)));
        return std::vector<Var>{mul(g, mul(mask, denom))};
    });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
    if (logits.shape().size() != 2 || static_cast<std::size_t>(logits.shape()[0]) != labels.size())
        fail(ErrorKind::ShapeMismatch, "softmax_cross_entropy: logits/labels mismatch");
    const int n = logits.shape()[0];
    const int k = logits.shape()[1];
    const auto& z = logits.value().data;
    Tensor delta({n, k});
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* row = z.data() + static_cast<std::size_t>(i) * k;
        const double peak = *std::max_element(row, row + k);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(row[j] - peak);
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= k) fail(ErrorKind::InvalidArgument, "softmax_cross_entropy: label out of range");
        loss += std::log(denom) + peak - row[label];
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - peak) / denom;
            delta.data[static_cast<std::size_t>(i) * k + j] = (p - (j == label ? 1.0 : 0.0)) / n;
        }
    }
    auto delta_var = constant(std::move(delta));
    return make_result(Tensor({1}, loss / n), {logits}, [delta_var](const std::vector<Var>&, const Var& g) {
        return std::vector<Var>{mul(expand(g, delta_var.shape()), delta_var)};
    });
}

Var conv3x3(const Var& x, const Var& weight, const Var& bias) {
    check_chw(x, "conv3x3");
    const int h = x.shape()[1];
    const int w = x.shape()[2];
    const int out_channels = weight.shape().at(0);
    if (weight.shape().at(1) != x.shape()[0] * 9 || bias.size() != static_cast<std::size_t>(out_channels))
        fail(ErrorKind::ShapeMismatch, "conv3x3: weight/bias shape mismatch");
    Var out = matmul(weight, im2col3(x));
    Var bias_plane = matmul(reshape(bias, {out_channels, 1}), constant(Tensor({1, h * w}, 1.0)));
    return reshape(add(out, bias_plane), {out_channels, h, w});
}

Var dense(const Var& x, const Var& weight, const Var& bias) {
    const int out = weight.shape().at(0);
    const int in = weight.shape().at(1);
    if (x.size() != static_cast<std::size_t>(in) || bias.size() != static_cast<std::size_t>(out))
        fail(ErrorKind::ShapeMismatch, "dense: weight/input shape mismatch");
    return reshape(add(matmul(weight, reshape(x, {in, 1})), reshape(bias, {out, 1})), {out});
}

} // namespace lp::ad
