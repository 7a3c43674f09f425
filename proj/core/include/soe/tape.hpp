#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "soe/tensor.hpp"

namespace soe {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Reverse-mode differentiation tape over Tensor values.
///
/// Nodes are appended in topological order (parents always precede children),
/// so one linear reverse sweep computes all adjoints. Gradients only flow
/// through nodes on a tracked lineage: leaves created with tracked=true and
/// everything downstream of them. Constant subgraphs cost nothing in the
/// backward pass.
///
/// A tape is single-owner state: build a fresh one per optimization step.
class Tape {
  public:
    NodeId leaf(Tensor value, bool tracked);
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId softmax_rows(NodeId a, double scale);
    NodeId tanh(NodeId a);
    NodeId bilinear_resize(NodeId a, std::int64_t out_h, std::int64_t out_w);
    /// out[i] = in[indices[i]]; covers crops, column gathers and permutations.
    NodeId gather(NodeId a, std::vector<std::int64_t> indices, Shape out_shape);
    /// Flat concatenation of the parts' buffers, reinterpreted as out_shape.
    NodeId concat(const std::vector<NodeId>& parts, Shape out_shape);
    NodeId reshape(NodeId a, Shape out_shape);
    NodeId sum(NodeId a);
    NodeId sum_squares(NodeId a);
    /// sqrt(x + bias) on a scalar node; bias > 0 keeps the gradient finite at 0.
    NodeId sqrt_bias(NodeId a, double bias);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool tracked(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].tracked; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss; adjoints of all tracked nodes become
    /// available through grad(). Replaces the result of any earlier sweep.
    void backward(NodeId loss);

    /// Adjoint of `id` after backward(); zeros if the node is off every
    /// tracked path.
    Tensor grad(NodeId id) const;

    /// Gradient of a scalar loss with respect to a tracked leaf.
    Tensor backward_grad(NodeId loss, NodeId root);

  private:
    enum class Op : std::uint8_t {
        leaf,
        addv,
        subv,
        mulv,
        scalev,
        matmulv,
        transposev,
        softmaxv,
        tanhv,
        resizev,
        gatherv,
        concatv,
        reshapev,
        sumv,
        sumsqv,
        sqrtv,
    };

    struct Node {
        Op op = Op::leaf;
        bool tracked = false;
        std::array<NodeId, 2> parent{kNoNode, kNoNode};
        std::vector<NodeId> parts;          // concat only
        std::vector<std::int64_t> indices;  // gather only
        double param = 0.0;                 // scale factor / softmax scale / sqrt bias
        Tensor value;
    };

    NodeId push(Node node);
    const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    bool any_tracked(NodeId a, NodeId b = kNoNode) const;
    Tensor& grad_slot(NodeId id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

}  // namespace soe
