#include "soe/tape.hpp"

#include <cmath>

#include "soe/errors.hpp"

namespace soe {

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

bool Tape::any_tracked(NodeId a, NodeId b) const {
    if (a != kNoNode && node(a).tracked) return true;
    if (b != kNoNode && node(b).tracked) return true;
    return false;
}

NodeId Tape::leaf(Tensor value, bool tracked) {
    Node n;
    n.op = Op::leaf;
    n.tracked = tracked;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::addv;
    n.parent = {a, b};
    n.tracked = any_tracked(a, b);
    n.value = soe::add(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Node n;
    n.op = Op::subv;
    n.parent = {a, b};
    n.tracked = any_tracked(a, b);
    n.value = soe::sub(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::mulv;
    n.parent = {a, b};
    n.tracked = any_tracked(a, b);
    n.value = soe::mul(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
    Node n;
    n.op = Op::scalev;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.param = factor;
    n.value = soe::scale(value(a), factor);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::matmulv;
    n.parent = {a, b};
    n.tracked = any_tracked(a, b);
    n.value = soe::matmul(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
    Node n;
    n.op = Op::transposev;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.value = soe::transpose(value(a));
    return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId a, double scale) {
    Node n;
    n.op = Op::softmaxv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.param = scale;
    n.value = soe::softmax_rows(value(a), scale);
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    Node n;
    n.op = Op::tanhv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    const Tensor& x = value(a);
    std::vector<double> out(static_cast<std::size_t>(x.size()));
    for (std::int64_t i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = std::tanh(x[i]);
    n.value = Tensor(x.shape(), std::move(out));
    return push(std::move(n));
}

NodeId Tape::bilinear_resize(NodeId a, std::int64_t out_h, std::int64_t out_w) {
    Node n;
    n.op = Op::resizev;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.value = soe::bilinear_resize(value(a), out_h, out_w);
    return push(std::move(n));
}

NodeId Tape::gather(NodeId a, std::vector<std::int64_t> indices, Shape out_shape) {
    if (static_cast<std::int64_t>(indices.size()) != numel(out_shape)) {
        throw DimensionError("gather: index count does not match output shape");
    }
    const Tensor& src = value(a);
    std::vector<double> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::int64_t idx = indices[i];
        if (idx < 0 || idx >= src.size()) {
            throw DimensionError("gather: index out of range");
        }
        out[i] = src[idx];
    }
    Node n;
    n.op = Op::gatherv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.indices = std::move(indices);
    n.value = Tensor(std::move(out_shape), std::move(out));
    return push(std::move(n));
}

NodeId Tape::concat(const std::vector<NodeId>& parts, Shape out_shape) {
    if (parts.empty()) {
        throw UsageError("concat needs at least one part");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(numel(out_shape)));
    bool tracked = false;
    for (NodeId p : parts) {
        const Tensor& v = value(p);
        out.insert(out.end(), v.data().begin(), v.data().end());
        tracked = tracked || node(p).tracked;
    }
    Node n;
    n.op = Op::concatv;
    n.tracked = tracked;
    n.parts = parts;
    n.value = Tensor(std::move(out_shape), std::move(out));
    return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, Shape out_shape) {
    const Tensor& src = value(a);
    if (numel(out_shape) != src.size()) {
        throw DimensionError("reshape: element count mismatch");
    }
    Node n;
    n.op = Op::reshapev;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.value = Tensor(std::move(out_shape), std::vector<double>(src.data().begin(), src.data().end()));
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = Op::sumv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.value = Tensor::scalar(soe::sum(value(a)));
    return push(std::move(n));
}

NodeId Tape::sum_squares(NodeId a) {
    Node n;
    n.op = Op::sumsqv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.value = Tensor::scalar(soe::sum_squares(value(a)));
    return push(std::move(n));
}

NodeId Tape::sqrt_bias(NodeId a, double bias) {
    if (value(a).size() != 1) {
        throw DimensionError("sqrt_bias expects a scalar node");
    }
    if (bias <= 0.0) {
        throw UsageError("sqrt_bias needs a positive bias");
    }
    Node n;
    n.op = Op::sqrtv;
    n.parent = {a, kNoNode};
    n.tracked = any_tracked(a);
    n.param = bias;
    n.value = Tensor::scalar(std::sqrt(value(a).item() + bias));
    return push(std::move(n));
}

Tensor& Tape::grad_slot(NodeId id) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (!g.defined()) {
        g = Tensor::zeros(node(id).value.shape());
    }
    return g;
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size()) {
        throw UsageError("backward: loss node does not belong to this tape");
    }
    if (node(loss).value.size() != 1) {
        throw DimensionError("backward: loss must be a scalar, shape " +
                             shape_str(node(loss).value.shape()));
    }
    grads_.assign(nodes_.size(), Tensor());
    grad_slot(loss)[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        const Node& n = node(id);
        if (!n.tracked) continue;
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        if (!g.defined()) continue;

        const NodeId pa = n.parent[0];
        const NodeId pb = n.parent[1];
        const bool track_a = pa != kNoNode && node(pa).tracked;
        const bool track_b = pb != kNoNode && node(pb).tracked;

        switch (n.op) {
            case Op::leaf:
                break;
            case Op::addv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (track_b) {
                    Tensor& gb = grad_slot(pb);
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                }
                break;
            }
            case Op::subv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (track_b) {
                    Tensor& gb = grad_slot(pb);
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                }
                break;
            }
            case Op::mulv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    const Tensor& bv = node(pb).value;
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                }
                if (track_b) {
                    Tensor& gb = grad_slot(pb);
                    const Tensor& av = node(pa).value;
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                }
                break;
            }
            case Op::scalev: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.param;
                }
                break;
            }
            case Op::matmulv: {
                const Tensor& av = node(pa).value;
                const Tensor& bv = node(pb).value;
                if (track_a) {
                    Tensor da = soe::matmul(g, soe::transpose(bv));
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < da.size(); ++i) ga[i] += da[i];
                }
                if (track_b) {
                    Tensor db = soe::matmul(soe::transpose(av), g);
                    Tensor& gb = grad_slot(pb);
                    for (std::int64_t i = 0; i < db.size(); ++i) gb[i] += db[i];
                }
                break;
            }
            case Op::transposev: {
                if (track_a) {
                    Tensor da = soe::transpose(g);
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < da.size(); ++i) ga[i] += da[i];
                }
                break;
            }
            case Op::softmaxv: {
                if (track_a) {
                    // y = softmax(s*x): dx_j = s * y_j * (g_j - sum_k g_k y_k)
                    const Tensor& y = n.value;
                    const std::int64_t rows = y.extent(0), cols = y.extent(1);
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t r = 0; r < rows; ++r) {
                        double inner = 0.0;
                        for (std::int64_t c = 0; c < cols; ++c) inner += g.at(r, c) * y.at(r, c);
                        for (std::int64_t c = 0; c < cols; ++c) {
                            ga.at(r, c) += n.param * y.at(r, c) * (g.at(r, c) - inner);
                        }
                    }
                }
                break;
            }
            case Op::tanhv: {
                if (track_a) {
                    const Tensor& y = n.value;
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
                break;
            }
            case Op::resizev: {
                if (track_a) {
                    const Tensor& src = node(pa).value;
                    Tensor& ga = grad_slot(pa);
                    const bool chan = src.rank() == 3;
                    const std::int64_t c = chan ? src.extent(0) : 1;
                    const std::int64_t h = src.extent(chan ? 1 : 0);
                    const std::int64_t w = src.extent(chan ? 2 : 1);
                    const std::int64_t oh = n.value.extent(chan ? 1 : 0);
                    const std::int64_t ow = n.value.extent(chan ? 2 : 1);
                    const auto ty = detail::resize_taps(h, oh);
                    const auto tx = detail::resize_taps(w, ow);
                    for (std::int64_t ch = 0; ch < c; ++ch) {
                        const std::int64_t in_base = ch * h * w;
                        const std::int64_t out_base = ch * oh * ow;
                        for (std::int64_t i = 0; i < oh; ++i) {
                            const auto& ry = ty[static_cast<std::size_t>(i)];
                            for (std::int64_t j = 0; j < ow; ++j) {
                                const auto& rx = tx[static_cast<std::size_t>(j)];
                                const double gv = g[out_base + i * ow + j];
                                const double wy0 = 1.0 - ry.frac, wy1 = ry.frac;
                                const double wx0 = 1.0 - rx.frac, wx1 = rx.frac;
                                ga[in_base + ry.lo * w + rx.lo] += gv * wy0 * wx0;
                                ga[in_base + ry.lo * w + rx.hi] += gv * wy0 * wx1;
                                ga[in_base + ry.hi * w + rx.lo] += gv * wy1 * wx0;
                                ga[in_base + ry.hi * w + rx.hi] += gv * wy1 * wx1;
                            }
                        }
                    }
                }
                break;
            }
            case Op::gatherv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    for (std::size_t i = 0; i < n.indices.size(); ++i) {
                        ga[n.indices[i]] += g[static_cast<std::int64_t>(i)];
                    }
                }
                break;
            }
            case Op::concatv: {
                std::int64_t offset = 0;
                for (NodeId p : n.parts) {
                    const std::int64_t len = node(p).value.size();
                    if (node(p).tracked) {
                        Tensor& gp = grad_slot(p);
                        for (std::int64_t i = 0; i < len; ++i) gp[i] += g[offset + i];
                    }
                    offset += len;
                }
                break;
            }
            case Op::reshapev: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                break;
            }
            case Op::sumv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    const double gv = g[0];
                    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += gv;
                }
                break;
            }
            case Op::sumsqv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    const Tensor& av = node(pa).value;
                    const double gv = g[0];
                    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * gv * av[i];
                }
                break;
            }
            case Op::sqrtv: {
                if (track_a) {
                    Tensor& ga = grad_slot(pa);
                    ga[0] += g[0] * 0.5 / n.value.item();
                }
                break;
            }
        }
    }
}

Tensor Tape::grad(NodeId id) const {
    if (grads_.empty()) {
        throw UsageError("grad() queried before backward()");
    }
    const Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (!g.defined()) {
        return Tensor::zeros(node(id).value.shape());
    }
    return g;
}

Tensor Tape::backward_grad(NodeId loss, NodeId root) {
    if (root < 0 || static_cast<std::size_t>(root) >= nodes_.size() ||
        node(root).op != Op::leaf || !node(root).tracked) {
        throw UsageError("backward_grad: root must be a tracked leaf of this tape");
    }
    backward(loss);
    return grad(root);
}

}  // namespace soe
