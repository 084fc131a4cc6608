#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fgln/tensor.hpp"

namespace fgln {

enum class PoolMode { Max, Avg, GlobalAvg };
enum class Interp { Nearest, Bilinear };
enum class EwOp { Add, Mul, Relu, Sigmoid, Abs };

// Reverse-mode tape. Nodes are appended during the forward pass (inputs
// always precede outputs, so the graph is acyclic by construction) and
// backward() walks them in reverse creation order with a fixed accumulation
// order, which makes gradients deterministic.
//
// Single-threaded per instance; Tensor values are immutable once written.
class Graph {
  public:
    using NodeId = int;

    NodeId leaf(Tensor value);

    // --- differentiable primitives ---
    NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride, int padding, int dilation);
    NodeId matmul(NodeId a, NodeId b);               // 2D: RxK * KxS
    NodeId bmm(NodeId a, NodeId b);                  // 3D: NxPxQ * NxQxS
    NodeId transpose12(NodeId x);                    // swap last two dims of a 3D tensor
    NodeId linear_last(NodeId x, NodeId w, NodeId b);  // NxTxD * DxE + E
    NodeId softmax(NodeId x, int axis);
    NodeId pool2d(NodeId x, PoolMode mode, int k, int stride, int padding);
    NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, Tensor& running_mean,
                      Tensor& running_var, bool train, double eps, double momentum,
                      bool update_stats);
    NodeId elementwise(NodeId x, NodeId y, EwOp op);   // binary: Add, Mul
    NodeId elementwise(NodeId x, EwOp op);             // unary: Relu, Sigmoid, Abs
    NodeId add(NodeId x, NodeId y) { return elementwise(x, y, EwOp::Add); }
    NodeId mul(NodeId x, NodeId y) { return elementwise(x, y, EwOp::Mul); }
    NodeId relu(NodeId x) { return elementwise(x, EwOp::Relu); }
    NodeId sigmoid(NodeId x) { return elementwise(x, EwOp::Sigmoid); }
    NodeId abs(NodeId x) { return elementwise(x, EwOp::Abs); }
    NodeId scale(NodeId x, double c);                // multiply by a constant
    NodeId scale_by(NodeId x, NodeId s);             // multiply by a 1-element node
    NodeId concat_channels(const std::vector<NodeId>& parts);
    NodeId slice_channels(NodeId x, int c0, int c1); // [c0, c1)
    NodeId upsample(NodeId x, int out_h, int out_w, Interp mode);
    NodeId slice_batch(NodeId x, int n);
    NodeId concat_batch(const std::vector<NodeId>& parts);
    NodeId space_to_depth(NodeId x, int r);          // NxCxHxW -> Nx(HW/r^2)x(Cr^2)
    NodeId depth_to_space(NodeId x, int r, int c, int h, int w);
    NodeId index_elem(NodeId x, int i);              // flat element -> 1-element tensor
    NodeId sum_all(NodeId x);                        // scalar
    NodeId bce(NodeId pred, Tensor target);          // mean pixelwise BCE, clamp 1e-7
    NodeId sobel_mag(NodeId x);  // fixed depthwise Sobel magnitude, replicated borders

    // --- execution ---
    void backward(NodeId loss);
    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    // Gradient of the last backward() target w.r.t. node id; zeros if unreachable.
    Tensor grad_of(NodeId id) const;
    int size() const { return static_cast<int>(nodes_.size()); }
    const char* tag(NodeId id) const { return nodes_[static_cast<size_t>(id)].tag; }

    // First node (creation order) holding a non-finite value, or -1.
    NodeId first_nonfinite() const;

  private:
    struct Node {
        Tensor value;
        std::vector<NodeId> inputs;
        std::function<void(Graph&, NodeId)> back;  // null for leaves
        const char* tag = "leaf";
    };

    NodeId add_node(Tensor value, std::vector<NodeId> inputs,
                    std::function<void(Graph&, NodeId)> back, const char* tag);
    const Tensor& grad_ref(NodeId id) const { return grads_[static_cast<size_t>(id)]; }
    // Mutable gradient buffer for an input, zero-initialized on first touch.
    Tensor& grad_buf(NodeId id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;  // empty tensor == identically zero

    friend struct OpImpl;
};

}  // namespace fgln
