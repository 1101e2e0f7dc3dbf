#pragma once

// Minimal reverse-mode autodiff over dense row-major matrices. One tape per
// forward pass; node creation order is the topological order used by
// backward(). Parameter gradients accumulate into an external store so a
// batch of tapes can share one gradient buffer.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace intersent {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
class Tape {
public:
    struct Node {
        Mat<S> val;
        const Mat<S>* ref = nullptr;  // set for parameter nodes (no copy)
        Mat<S> grad;
        std::function<void(Node&)> back;

        const Mat<S>& v() const { return ref ? *ref : val; }
    };

    /// param_grads, when non-null, receives parameter gradients by tensor id.
    explicit Tape(std::vector<Mat<S>>* param_grads = nullptr, bool record = true)
        : pgrads_(param_grads), record_(record) {}

    bool recording() const { return record_; }

    Node& constant(Mat<S> v) { return make(std::move(v), nullptr); }

    Node& param(int id, const Mat<S>& tensor) {
        Node& n = make_ref(tensor);
        if (record_ && pgrads_) {
            n.back = [this, id](Node& self) { (*pgrads_)[id] += self.grad; };
        }
        return n;
    }

    /// Gather rows of a parameter table (token / position embeddings).
    Node& rows(int id, const Mat<S>& table, const std::vector<int>& idx) {
        Mat<S> v(idx.size(), table.cols());
        for (std::size_t k = 0; k < idx.size(); ++k) v.row(k) = table.row(idx[k]);
        Node& n = make(std::move(v), nullptr);
        if (record_ && pgrads_) {
            n.back = [this, id, idx](Node& self) {
                auto& g = (*pgrads_)[id];
                for (std::size_t k = 0; k < idx.size(); ++k) {
                    g.row(idx[k]) += self.grad.row(k);
                }
            };
        }
        return n;
    }

    Node& add(Node& a, Node& b) {
        Node& n = make(a.v() + b.v(), nullptr);
        if (record_) {
            n.back = [&a, &b](Node& self) {
                a.grad += self.grad;
                b.grad += self.grad;
            };
        }
        return n;
    }

    /// Adds a 1 x C row vector to every row of a.
    Node& add_rowvec(Node& a, Node& b) {
        Node& n = make(a.v().rowwise() + b.v().row(0), nullptr);
        if (record_) {
            n.back = [&a, &b](Node& self) {
                a.grad += self.grad;
                b.grad.row(0) += self.grad.colwise().sum();
            };
        }
        return n;
    }

    Node& scale(Node& a, S c) {
        Node& n = make(a.v() * c, nullptr);
        if (record_) {
            n.back = [&a, c](Node& self) { a.grad += self.grad * c; };
        }
        return n;
    }

    Node& matmul(Node& a, Node& b) {
        Node& n = make(a.v() * b.v(), nullptr);
        if (record_) {
            n.back = [&a, &b](Node& self) {
                a.grad.noalias() += self.grad * b.v().transpose();
                b.grad.noalias() += a.v().transpose() * self.grad;
            };
        }
        return n;
    }

    /// a * b^T
    Node& matmul_nt(Node& a, Node& b) {
        Node& n = make(a.v() * b.v().transpose(), nullptr);
        if (record_) {
            n.back = [&a, &b](Node& self) {
                a.grad.noalias() += self.grad * b.v();
                b.grad.noalias() += self.grad.transpose() * a.v();
            };
        }
        return n;
    }

    Node& relu(Node& a) {
        Node& n = make(a.v().cwiseMax(S(0)), nullptr);
        if (record_) {
            n.back = [&a](Node& self) {
                a.grad.array() +=
                    self.grad.array() * (a.v().array() > S(0)).template cast<S>();
            };
        }
        return n;
    }

    /// Row-wise layer norm with learned gain/shift (1 x C each).
    Node& layer_norm(Node& x, Node& gamma, Node& beta, S eps = S(1e-5)) {
        const auto& v = x.v();
        const int rows = static_cast<int>(v.rows()), cols = static_cast<int>(v.cols());
        Mat<S> xhat(rows, cols);
        Mat<S> inv_std(rows, 1);
        for (int i = 0; i < rows; ++i) {
            const S mu = v.row(i).mean();
            const S var = (v.row(i).array() - mu).square().mean();
            inv_std(i, 0) = S(1) / std::sqrt(var + eps);
            xhat.row(i) = (v.row(i).array() - mu) * inv_std(i, 0);
        }
        Mat<S> out = (xhat.array().rowwise() * gamma.v().row(0).array()).rowwise() +
                     beta.v().row(0).array();
        Node& n = make(std::move(out), nullptr);
        if (record_) {
            n.back = [&x, &gamma, &beta, xhat, inv_std, cols](Node& self) {
                for (int i = 0; i < self.grad.rows(); ++i) {
                    Eigen::Array<S, 1, Eigen::Dynamic> gy =
                        self.grad.row(i).array() * gamma.v().row(0).array();
                    const S mean_gy = gy.mean();
                    const S mean_gy_xhat = (gy * xhat.row(i).array()).mean();
                    x.grad.row(i).array() +=
                        (gy - mean_gy - xhat.row(i).array() * mean_gy_xhat) *
                        inv_std(i, 0);
                    gamma.grad.row(0).array() +=
                        self.grad.row(i).array() * xhat.row(i).array();
                    beta.grad.row(0) += self.grad.row(i);
                }
            };
        }
        return n;
    }

    /// Row softmax; with causal=true, entries with col > row are masked out.
    Node& softmax_rows(Node& a, bool causal) {
        const auto& v = a.v();
        Mat<S> p(v.rows(), v.cols());
        for (int i = 0; i < v.rows(); ++i) {
            const int limit = causal ? i + 1 : static_cast<int>(v.cols());
            const S mx = v.row(i).head(limit).maxCoeff();
            S sum = 0;
            for (int j = 0; j < v.cols(); ++j) {
                p(i, j) = j < limit ? std::exp(v(i, j) - mx) : S(0);
                sum += p(i, j);
            }
            p.row(i) /= sum;
        }
        Node& n = make(std::move(p), nullptr);
        if (record_) {
            n.back = [&a](Node& self) {
                for (int i = 0; i < self.grad.rows(); ++i) {
                    const S dot = self.grad.row(i).dot(self.val.row(i));
                    a.grad.row(i).array() +=
                        self.val.row(i).array() * (self.grad.row(i).array() - dot);
                }
            };
        }
        return n;
    }

    Node& col_slice(Node& a, int j0, int n_cols) {
        Node& n = make(a.v().middleCols(j0, n_cols), nullptr);
        if (record_) {
            n.back = [&a, j0, n_cols](Node& self) {
                a.grad.middleCols(j0, n_cols) += self.grad;
            };
        }
        return n;
    }

    Node& col_concat(const std::vector<Node*>& parts) {
        int cols = 0;
        for (Node* p : parts) cols += static_cast<int>(p->v().cols());
        Mat<S> v(parts[0]->v().rows(), cols);
        int j = 0;
        for (Node* p : parts) {
            v.middleCols(j, p->v().cols()) = p->v();
            j += static_cast<int>(p->v().cols());
        }
        Node& n = make(std::move(v), nullptr);
        if (record_) {
            n.back = [parts](Node& self) {
                int j = 0;
                for (Node* p : parts) {
                    p->grad += self.grad.middleCols(j, p->v().cols());
                    j += static_cast<int>(p->v().cols());
                }
            };
        }
        return n;
    }

    Node& row(Node& a, int i) {
        Node& n = make(a.v().row(i), nullptr);
        if (record_) {
            n.back = [&a, i](Node& self) { a.grad.row(i) += self.grad.row(0); };
        }
        return n;
    }

    /// Repeats a 1 x C row vector over n rows.
    Node& broadcast_rows(Node& a, int n_rows) {
        Node& n = make(a.v().row(0).replicate(n_rows, 1), nullptr);
        if (record_) {
            n.back = [&a](Node& self) { a.grad.row(0) += self.grad.colwise().sum(); };
        }
        return n;
    }

    /// Inverted dropout; identity when rate == 0 or rng is null.
    Node& dropout(Node& a, S rate, std::mt19937_64* rng) {
        if (rate <= S(0) || rng == nullptr) return a;
        Mat<S> mask(a.v().rows(), a.v().cols());
        const S keep = S(1) - rate;
        const double thresh = static_cast<double>(keep);
        for (int i = 0; i < mask.rows(); ++i) {
            for (int j = 0; j < mask.cols(); ++j) {
                const double u = static_cast<double>((*rng)() >> 11) * 0x1.0p-53;
                mask(i, j) = u < thresh ? S(1) / keep : S(0);
            }
        }
        Node& n = make(a.v().cwiseProduct(mask), nullptr);
        if (record_) {
            n.back = [&a, mask](Node& self) {
                a.grad.array() += self.grad.array() * mask.array();
            };
        }
        return n;
    }

    /// Mean token NLL for a T x V logits matrix against T target ids (Eq. of
    /// the conditional generative objective, one instance). Returns a 1 x 1 node.
    Node& cross_entropy_mean(Node& logits, const std::vector<int>& targets) {
        const auto& v = logits.v();
        if (static_cast<int>(targets.size()) != v.rows()) {
            throw std::invalid_argument("cross_entropy_mean: length mismatch");
        }
        Mat<S> p(v.rows(), v.cols());
        double loss = 0;
        for (int i = 0; i < v.rows(); ++i) {
            const S mx = v.row(i).maxCoeff();
            p.row(i) = (v.row(i).array() - mx).exp();
            const S sum = p.row(i).sum();
            p.row(i) /= sum;
            loss -= static_cast<double>(v(i, targets[i]) - mx - std::log(sum));
        }
        Mat<S> val(1, 1);
        val(0, 0) = static_cast<S>(loss / v.rows());
        Node& n = make(std::move(val), nullptr);
        if (record_) {
            const S inv_t = S(1) / static_cast<S>(v.rows());
            n.back = [&logits, p, targets, inv_t](Node& self) {
                const S g = self.grad(0, 0) * inv_t;
                Mat<S> d = p * g;
                for (int i = 0; i < d.rows(); ++i) d(i, targets[i]) -= g;
                logits.grad += d;
            };
        }
        return n;
    }

    /// Reverse sweep in node-creation order. Seed grads on output nodes first.
    void backward() {
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (it->back && it->grad.size() > 0) it->back(*it);
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    Node& make(Mat<S> v, const Mat<S>*) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val = std::move(v);
        if (record_) n.grad = Mat<S>::Zero(n.val.rows(), n.val.cols());
        return n;
    }
    Node& make_ref(const Mat<S>& tensor) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.ref = &tensor;
        if (record_) n.grad = Mat<S>::Zero(tensor.rows(), tensor.cols());
        return n;
    }

    std::deque<Node> nodes_;
    std::vector<Mat<S>>* pgrads_;
    bool record_;
};

}  // namespace intersent
