#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "matf/tensor.hpp"

// Reverse-mode autodiff over Tensor. A forward pass builds a small dynamic
// graph; backward(root) walks it once in reverse topological order. Leaves
// created with leaf() keep their gradient across calls (parameters); call
// zero_grad between optimizer steps.

namespace matf::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily, same shape as val
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents

    Tensor& g() {
        if (grad.numel() == 0) grad = Tensor(val.shape());
        return grad;
    }
};

Var constant(Tensor v);
Var leaf(Tensor v);  // requires_grad = true
Var detach(const Var& a);

void backward(const Var& root);  // root must be a scalar (numel 1)

// --- elementwise / reductions ---
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var addc(const Var& a, double c);
Var tanh_(const Var& a);
Var sigmoid_(const Var& a);
Var log_(const Var& a);
Var abs_(const Var& a);
Var clamp_(const Var& a, double lo, double hi);  // zero gradient outside [lo,hi]
Var sum(const Var& a);                           // -> scalar
Var sumsq(const Var& a);                         // -> scalar
Var mean(const Var& a);                          // -> scalar

// --- linear algebra ---
Var matvec(const Var& W, const Var& x);                // [m,n] x [n] -> [m]
Var affine(const Var& W, const Var& b, const Var& x);  // Wx + b

// --- shape ---
Var slice1d(const Var& a, int start, int len);
// concatenates flattened inputs; result has the given shape
Var concat_flat(std::vector<Var> parts, std::vector<int> shape);

// --- spatial (HWC maps) ---
// kxk conv, padding k/2, given stride. W shape {Cout,k,k,Cin}, b {Cout}.
Var conv2d(const Var& x, const Var& W, const Var& b, int k, int stride);
Var avgpool2(const Var& x);
Var upsample2(const Var& x);
Var concat_channels(const Var& a, const Var& b);
// channel column at one cell -> [C]
Var grid_slice(const Var& map, int r, int c);
// Places agent vectors into an H x W x D map (zero background); co-located
// agents combine by elementwise max. cells[i] = (row, col).
Var scatter_max(const std::vector<Var>& vectors,
                const std::vector<std::pair<int, int>>& cells, int H, int W);

}  // namespace matf::ad
