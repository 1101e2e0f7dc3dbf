#pragma once

// Contrastive (in-batch InfoNCE over cosine similarity), generative, and
// combined objectives. The contrastive loss and its gradients w.r.t. the
// output and target embeddings are computed in closed form (double
// accumulation) and seeded into the per-instance tapes.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "intersent/autograd.hpp"

namespace intersent {

enum class TrainMode { Joint, ContrastiveOnly, GenerativeOnly };

template <class S>
struct ContrastiveResult {
    double loss = 0.0;
    std::vector<double> per_instance;  // each term is >= 0
    Mat<S> d_outputs;                  // dL/dV, N x d
    Mat<S> d_targets;                  // dL/dV+, N x d
};

/// Mean over i of -log softmax_j(sim(v_i, v+_j)/tau) at j == i, where sim is
/// cosine similarity and the negatives are the other instances' target
/// embeddings in the same batch.
template <class S>
ContrastiveResult<S> contrastive_loss(const Mat<S>& outputs, const Mat<S>& targets,
                                      double tau) {
    if (tau <= 0) throw std::invalid_argument("contrastive_loss: tau must be positive");
    if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
        throw std::invalid_argument("contrastive_loss: shape mismatch");
    }
    const int n = static_cast<int>(outputs.rows());
    if (n < 1) throw std::invalid_argument("contrastive_loss: empty batch");

    using MatD = Mat<double>;
    const MatD v = outputs.template cast<double>();
    const MatD vp = targets.template cast<double>();

    Eigen::VectorXd norm_v(n), norm_vp(n);
    for (int i = 0; i < n; ++i) {
        norm_v(i) = v.row(i).norm();
        norm_vp(i) = vp.row(i).norm();
        if (norm_v(i) == 0 || norm_vp(i) == 0) {
            throw std::invalid_argument(
                "contrastive_loss: zero-norm embedding (cosine undefined)");
        }
    }
    MatD vhat = v, vphat = vp;
    for (int i = 0; i < n; ++i) {
        vhat.row(i) /= norm_v(i);
        vphat.row(i) /= norm_vp(i);
    }
    const MatD sims = vhat * vphat.transpose();  // s_ij = cos(v_i, v+_j)

    // Row softmax of s/tau and per-instance -log p_ii.
    MatD p(n, n);
    ContrastiveResult<S> result;
    result.per_instance.resize(n);
    for (int i = 0; i < n; ++i) {
        const double mx = sims.row(i).maxCoeff() / tau;
        double sum = 0;
        for (int j = 0; j < n; ++j) {
            p(i, j) = std::exp(sims(i, j) / tau - mx);
            sum += p(i, j);
        }
        p.row(i) /= sum;
        result.per_instance[i] = -(sims(i, i) / tau - mx - std::log(sum));
        result.loss += result.per_instance[i];
    }
    result.loss /= n;

    // dL/ds_ij = (p_ij - delta_ij) / (N * tau); chain through the cosine.
    MatD g = p;
    g.diagonal().array() -= 1.0;
    g /= static_cast<double>(n) * tau;

    MatD dv = MatD::Zero(n, v.cols()), dvp = MatD::Zero(n, v.cols());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (g(i, j) == 0) continue;
            dv.row(i) += g(i, j) / norm_v(i) * (vphat.row(j) - sims(i, j) * vhat.row(i));
            dvp.row(j) += g(i, j) / norm_vp(j) * (vhat.row(i) - sims(i, j) * vphat.row(j));
        }
    }
    result.d_outputs = dv.template cast<S>();
    result.d_targets = dvp.template cast<S>();
    return result;
}

/// Per-instance mean NLL over non-PAD target tokens, averaged over the batch.
/// Standalone reference used by evaluation and tests; training computes the
/// same quantity through tape nodes.
template <class S>
double generative_loss(const std::vector<Mat<S>>& logits,
                       const std::vector<std::vector<int>>& targets, int pad_id = 0) {
    if (logits.size() != targets.size() || logits.empty()) {
        throw std::invalid_argument("generative_loss: shape mismatch");
    }
    double total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& lg = logits[i];
        const auto& tg = targets[i];
        if (static_cast<int>(tg.size()) != lg.rows()) {
            throw std::invalid_argument("generative_loss: length mismatch");
        }
        double inst = 0;
        int count = 0;
        for (int k = 0; k < lg.rows(); ++k) {
            if (tg[k] == pad_id) continue;
            const double mx = static_cast<double>(lg.row(k).maxCoeff());
            double sum = 0;
            for (int c = 0; c < lg.cols(); ++c) {
                sum += std::exp(static_cast<double>(lg(k, c)) - mx);
            }
            inst -= static_cast<double>(lg(k, tg[k])) - mx - std::log(sum);
            ++count;
        }
        if (count == 0) throw std::invalid_argument("generative_loss: all-PAD target");
        total += inst / count;
    }
    return total / static_cast<double>(logits.size());
}

/// Eq.-style combination: L_con + alpha * L_gen in joint mode; the single
/// active term in the ablation modes.
inline double combined_loss(double l_con, double l_gen, double alpha,
                            TrainMode mode = TrainMode::Joint) {
    if (alpha < 0) throw std::invalid_argument("combined_loss: alpha must be >= 0");
    switch (mode) {
        case TrainMode::Joint: return l_con + alpha * l_gen;
        case TrainMode::ContrastiveOnly: return l_con;
        case TrainMode::GenerativeOnly: return l_gen;
    }
    throw std::logic_error("bad TrainMode");
}

}  // namespace intersent
