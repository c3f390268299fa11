#include "matf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "matf/kernels.hpp"

namespace matf::ad {

namespace {

const kernels::Kernels& K() { return kernels::active(); }

Var make(Tensor val, std::vector<Var> parents, std::function<void(Node&)> bp) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    bool need = false;
    for (const auto& p : parents) need = need || p->requires_grad;
    n->requires_grad = need;
    if (need) {
        n->parents = std::move(parents);
        n->backprop = std::move(bp);
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->val.same_shape(b->val)) throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    return n;
}

Var leaf(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->grad = Tensor(n->val.shape());
    n->requires_grad = true;
    return n;
}

Var detach(const Var& a) { return constant(a->val); }

void backward(const Var& root) {
    if (root->val.numel() != 1) throw ShapeError("backward: root must be scalar");
    // postorder DFS, then process in reverse
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx].get();
            ++idx;
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    root->g()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) {
            n->g();  // ensure allocated even if untouched
            n->backprop(*n);
        }
    }
}

// --- elementwise ---

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->val.shape());
    K().add(a->val.data(), b->val.data(), out.data(), out.numel());
    return make(std::move(out), {a, b}, [](Node& n) {
        Node* a = n.parents[0].get();
        Node* b = n.parents[1].get();
        if (a->requires_grad) K().axpy(1.0, n.grad.data(), a->g().data(), n.grad.numel());
        if (b->requires_grad) K().axpy(1.0, n.grad.data(), b->g().data(), n.grad.numel());
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] - b->val[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        Node* a = n.parents[0].get();
        Node* b = n.parents[1].get();
        if (a->requires_grad) K().axpy(1.0, n.grad.data(), a->g().data(), n.grad.numel());
        if (b->requires_grad) K().axpy(-1.0, n.grad.data(), b->g().data(), n.grad.numel());
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] * b->val[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        Node* a = n.parents[0].get();
        Node* b = n.parents[1].get();
        if (a->requires_grad) K().madd(n.grad.data(), b->val.data(), a->g().data(), n.grad.numel());
        if (b->requires_grad) K().madd(n.grad.data(), a->val.data(), b->g().data(), n.grad.numel());
    });
}

Var scale(const Var& a, double s) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = s * a->val[i];
    return make(std::move(out), {a}, [s](Node& n) {
        K().axpy(s, n.grad.data(), n.parents[0]->g().data(), n.grad.numel());
    });
}

Var addc(const Var& a, double c) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] + c;
    return make(std::move(out), {a}, [](Node& n) {
        K().axpy(1.0, n.grad.data(), n.parents[0]->g().data(), n.grad.numel());
    });
}

Var tanh_(const Var& a) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->val[i]);
    return make(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->g();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            g[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
    });
}

Var sigmoid_(const Var& a) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a->val[i]));
    return make(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->g();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            g[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
    });
}

Var log_(const Var& a) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(a->val[i]);
    return make(std::move(out), {a}, [](Node& n) {
        Node* a = n.parents[0].get();
        Tensor& g = a->g();
        for (std::size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] / a->val[i];
    });
}

Var abs_(const Var& a) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::abs(a->val[i]);
    return make(std::move(out), {a}, [](Node& n) {
        Node* a = n.parents[0].get();
        Tensor& g = a->g();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            g[i] += n.grad[i] * (a->val[i] < 0.0 ? -1.0 : 1.0);
    });
}

Var clamp_(const Var& a, double lo, double hi) {
    Tensor out(a->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(a->val[i], lo, hi);
    return make(std::move(out), {a}, [lo, hi](Node& n) {
        Node* a = n.parents[0].get();
        Tensor& g = a->g();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            if (a->val[i] > lo && a->val[i] < hi) g[i] += n.grad[i];
    });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->val.numel(); ++i) s += a->val[i];
    return make(Tensor::scalar(s), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->g();
        double go = n.grad[0];
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += go;
    });
}

Var sumsq(const Var& a) {
    double s = K().dot(a->val.data(), a->val.data(), a->val.numel());
    return make(Tensor::scalar(s), {a}, [](Node& n) {
        Node* a = n.parents[0].get();
        K().axpy(2.0 * n.grad[0], a->val.data(), a->g().data(), a->val.numel());
    });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a->val.numel())); }

// --- linear algebra ---

Var matvec(const Var& W, const Var& x) {
    if (W->val.ndim() != 2 || x->val.ndim() != 1 || W->val.dim(1) != x->val.dim(0))
        throw ShapeError("matvec: incompatible shapes");
    const int m = W->val.dim(0), nn = W->val.dim(1);
    Tensor out({m});
    for (int i = 0; i < m; ++i)
        out[i] = K().dot(W->val.data() + static_cast<std::size_t>(i) * nn, x->val.data(), nn);
    return make(std::move(out), {W, x}, [m, nn](Node& n) {
        Node* W = n.parents[0].get();
        Node* x = n.parents[1].get();
        for (int i = 0; i < m; ++i) {
            const double gi = n.grad[i];
            if (gi == 0.0) continue;
            if (x->requires_grad)
                K().axpy(gi, W->val.data() + static_cast<std::size_t>(i) * nn,
                         x->g().data(), nn);
            if (W->requires_grad)
                K().axpy(gi, x->val.data(),
                         W->g().data() + static_cast<std::size_t>(i) * nn, nn);
        }
    });
}

Var affine(const Var& W, const Var& b, const Var& x) { return add(matvec(W, x), b); }

// --- shape ---

Var slice1d(const Var& a, int start, int len) {
    if (start < 0 || len < 0 || static_cast<std::size_t>(start + len) > a->val.numel())
        throw ShapeError("slice1d: out of range");
    Tensor out({len});
    std::copy_n(a->val.data() + start, len, out.data());
    return make(std::move(out), {a}, [start, len](Node& n) {
        K().axpy(1.0, n.grad.data(), n.parents[0]->g().data() + start, len);
    });
}

Var concat_flat(std::vector<Var> parts, std::vector<int> shape) {
    Tensor out(std::move(shape));
    std::size_t off = 0;
    for (const auto& p : parts) {
        if (off + p->val.numel() > out.numel()) throw ShapeError("concat_flat: overflow");
        std::copy_n(p->val.data(), p->val.numel(), out.data() + off);
        off += p->val.numel();
    }
    if (off != out.numel()) throw ShapeError("concat_flat: size mismatch");
    return make(std::move(out), std::move(parts), [](Node& n) {
        std::size_t off = 0;
        for (auto& p : n.parents) {
            if (p->requires_grad)
                K().axpy(1.0, n.grad.data() + off, p->g().data(), p->val.numel());
            off += p->val.numel();
        }
    });
}

// --- spatial ---

Var conv2d(const Var& x, const Var& W, const Var& b, int k, int stride) {
    if (x->val.ndim() != 3 || W->val.ndim() != 4) throw ShapeError("conv2d: bad ranks");
    const int H = x->val.dim(0), Wd = x->val.dim(1), Cin = x->val.dim(2);
    const int Cout = W->val.dim(0);
    if (W->val.dim(1) != k || W->val.dim(2) != k || W->val.dim(3) != Cin)
        throw ShapeError("conv2d: weight shape mismatch");
    if (b->val.numel() != static_cast<std::size_t>(Cout)) throw ShapeError("conv2d: bias shape");
    if (H % stride != 0 || Wd % stride != 0) throw ConfigError("conv2d: dims not divisible by stride");
    const int Ho = H / stride, Wo = Wd / stride, pad = k / 2;

    Tensor out({Ho, Wo, Cout});
    for (int r = 0; r < Ho; ++r)
        for (int c = 0; c < Wo; ++c) {
            double* o = &out.at(r, c, 0);
            for (int co = 0; co < Cout; ++co) o[co] = b->val[co];
            for (int kr = 0; kr < k; ++kr) {
                const int ri = r * stride + kr - pad;
                if (ri < 0 || ri >= H) continue;
                for (int kc = 0; kc < k; ++kc) {
                    const int ci = c * stride + kc - pad;
                    if (ci < 0 || ci >= Wd) continue;
                    const double* xi = &x->val.at(ri, ci, 0);
                    const double* wbase =
                        W->val.data() + (static_cast<std::size_t>(kr) * k + kc) * Cin;
                    const std::size_t wstride = static_cast<std::size_t>(k) * k * Cin;
                    for (int co = 0; co < Cout; ++co)
                        o[co] += K().dot(wbase + co * wstride, xi, Cin);
                }
            }
        }
    return make(std::move(out), {x, W, b},
                [H, Wd, Cin, Cout, k, stride, pad](Node& n) {
        Node* x = n.parents[0].get();
        Node* W = n.parents[1].get();
        Node* b = n.parents[2].get();
        const int Ho = H / stride, Wo = Wd / stride;
        const std::size_t wstride = static_cast<std::size_t>(k) * k * Cin;
        for (int r = 0; r < Ho; ++r)
            for (int c = 0; c < Wo; ++c) {
                const double* go = &n.grad.at(r, c, 0);
                if (b->requires_grad)
                    K().axpy(1.0, go, b->g().data(), Cout);
                for (int kr = 0; kr < k; ++kr) {
                    const int ri = r * stride + kr - pad;
                    if (ri < 0 || ri >= H) continue;
                    for (int kc = 0; kc < k; ++kc) {
                        const int ci = c * stride + kc - pad;
                        if (ci < 0 || ci >= Wd) continue;
                        const std::size_t woff = (static_cast<std::size_t>(kr) * k + kc) * Cin;
                        for (int co = 0; co < Cout; ++co) {
                            const double g = go[co];
                            if (g == 0.0) continue;
                            if (x->requires_grad)
                                K().axpy(g, W->val.data() + woff + co * wstride,
                                         &x->g().at(ri, ci, 0), Cin);
                            if (W->requires_grad)
                                K().axpy(g, &x->val.at(ri, ci, 0),
                                         W->g().data() + woff + co * wstride, Cin);
                        }
                    }
                }
            }
    });
}

Var avgpool2(const Var& x) {
    const int H = x->val.dim(0), W = x->val.dim(1), C = x->val.dim(2);
    if (H % 2 || W % 2) throw ConfigError("avgpool2: odd dims");
    Tensor out({H / 2, W / 2, C});
    for (int r = 0; r < H / 2; ++r)
        for (int c = 0; c < W / 2; ++c)
            for (int ch = 0; ch < C; ++ch)
                out.at(r, c, ch) = 0.25 * (x->val.at(2 * r, 2 * c, ch) +
                                           x->val.at(2 * r, 2 * c + 1, ch) +
                                           x->val.at(2 * r + 1, 2 * c, ch) +
                                           x->val.at(2 * r + 1, 2 * c + 1, ch));
    return make(std::move(out), {x}, [H, W, C](Node& n) {
        Tensor& g = n.parents[0]->g();
        for (int r = 0; r < H / 2; ++r)
            for (int c = 0; c < W / 2; ++c)
                for (int ch = 0; ch < C; ++ch) {
                    const double gv = 0.25 * n.grad.at(r, c, ch);
                    g.at(2 * r, 2 * c, ch) += gv;
                    g.at(2 * r, 2 * c + 1, ch) += gv;
                    g.at(2 * r + 1, 2 * c, ch) += gv;
                    g.at(2 * r + 1, 2 * c + 1, ch) += gv;
                }
    });
}

Var upsample2(const Var& x) {
    const int H = x->val.dim(0), W = x->val.dim(1), C = x->val.dim(2);
    Tensor out({2 * H, 2 * W, C});
    for (int r = 0; r < 2 * H; ++r)
        for (int c = 0; c < 2 * W; ++c)
            std::copy_n(&x->val.at(r / 2, c / 2, 0), C, &out.at(r, c, 0));
    return make(std::move(out), {x}, [H, W, C](Node& n) {
        Tensor& g = n.parents[0]->g();
        for (int r = 0; r < 2 * H; ++r)
            for (int c = 0; c < 2 * W; ++c)
                K().axpy(1.0, &n.grad.at(r, c, 0), &g.at(r / 2, c / 2, 0), C);
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const int H = a->val.dim(0), W = a->val.dim(1);
    if (b->val.dim(0) != H || b->val.dim(1) != W)
        throw ShapeError("concat_channels: spatial mismatch");
    const int Ca = a->val.dim(2), Cb = b->val.dim(2);
    Tensor out({H, W, Ca + Cb});
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            std::copy_n(&a->val.at(r, c, 0), Ca, &out.at(r, c, 0));
            std::copy_n(&b->val.at(r, c, 0), Cb, &out.at(r, c, Ca));
        }
    return make(std::move(out), {a, b}, [H, W, Ca, Cb](Node& n) {
        Node* a = n.parents[0].get();
        Node* b = n.parents[1].get();
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                if (a->requires_grad)
                    K().axpy(1.0, &n.grad.at(r, c, 0), &a->g().at(r, c, 0), Ca);
                if (b->requires_grad)
                    K().axpy(1.0, &n.grad.at(r, c, Ca), &b->g().at(r, c, 0), Cb);
            }
    });
}

Var grid_slice(const Var& map, int r, int c) {
    const int H = map->val.dim(0), W = map->val.dim(1), C = map->val.dim(2);
    if (r < 0 || r >= H || c < 0 || c >= W) throw PlacementError("grid_slice: cell out of bounds");
    Tensor out({C});
    std::copy_n(&map->val.at(r, c, 0), C, out.data());
    return make(std::move(out), {map}, [r, c, C](Node& n) {
        K().axpy(1.0, n.grad.data(), &n.parents[0]->g().at(r, c, 0), C);
    });
}

Var scatter_max(const std::vector<Var>& vectors,
                const std::vector<std::pair<int, int>>& cells, int H, int W) {
    if (vectors.empty() || vectors.size() != cells.size())
        throw InputError("scatter_max: need matching non-empty vectors/cells");
    const int D = vectors[0]->val.dim(0);
    for (const auto& [r, c] : cells)
        if (r < 0 || r >= H || c < 0 || c >= W)
            throw PlacementError("scatter_max: cell out of bounds");

    Tensor out({H, W, D});
    // winner[cell*D + d] = index of agent whose value is taken, -1 if empty
    std::vector<int> winner(static_cast<std::size_t>(H) * W * D, -1);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& [r, c] = cells[i];
        const Tensor& v = vectors[i]->val;
        const std::size_t base = (static_cast<std::size_t>(r) * W + c) * D;
        for (int d = 0; d < D; ++d) {
            if (winner[base + d] < 0 || v[d] > out[base + d]) {
                out[base + d] = v[d];
                winner[base + d] = static_cast<int>(i);
            }
        }
    }
    std::vector<Var> parents(vectors.begin(), vectors.end());
    return make(std::move(out), std::move(parents),
                [cells, winner, W, D](Node& n) {
        for (std::size_t i = 0; i < n.parents.size(); ++i) {
            Node* p = n.parents[i].get();
            if (!p->requires_grad) continue;
            const auto& [r, c] = cells[i];
            const std::size_t base = (static_cast<std::size_t>(r) * W + c) * D;
            Tensor& g = p->g();
            for (int d = 0; d < D; ++d)
                if (winner[base + d] == static_cast<int>(i)) g[d] += n.grad[base + d];
        }
    });
}

}  // namespace matf::ad
