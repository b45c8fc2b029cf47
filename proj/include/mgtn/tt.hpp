#pragma once

#include <vector>

#include "mgtn/tensor.hpp"

namespace mgtn {

// Tensor-train decomposition of an order-N tensor: cores G^(n) of shape
// (R_{n-1}, I_n, R_n) with boundary ranks R_0 = R_N = 1.
struct TTTensor {
    std::vector<DenseTensor> cores;

    TTTensor() = default;
    explicit TTTensor(std::vector<DenseTensor> cores);

    std::size_t order() const { return cores.size(); }
    // (R_0, ..., R_N)
    std::vector<std::size_t> ranks() const;
    // (I_1, ..., I_N)
    std::vector<std::size_t> mode_sizes() const;
    std::size_t core_param_count() const;
};

// TT-SVD with a per-bond rank cap. A cap of 0 means unconstrained.
TTTensor tt_svd(const DenseTensor& x, std::size_t max_rank);
TTTensor tt_svd(const DenseTensor& x, const std::vector<std::size_t>& max_ranks);

// TT-SVD in tolerance mode: relative Frobenius reconstruction error is at
// most `tolerance`, with the truncation budget split evenly across the N-1
// unfoldings (per-step discard <= tol * ||x||_F / sqrt(N-1)).
TTTensor tt_svd_tol(const DenseTensor& x, double tolerance);

// Contract the core chain back to a dense tensor of shape (I_1, ..., I_N).
DenseTensor tt_reconstruct(const TTTensor& t);

// Matrix in TT format: cores of shape (R_{k-1}, J_out_k, J_in_k, R_k).
// Represents a (prod J_out x prod J_in) matrix whose row/column indices are
// the Little-Endian composites of the output/input mode factorizations.
struct TTMatrix {
    std::vector<std::size_t> out_modes;
    std::vector<std::size_t> in_modes;
    std::vector<DenseTensor> cores;

    TTMatrix() = default;
    TTMatrix(std::vector<std::size_t> out_modes, std::vector<std::size_t> in_modes,
             std::vector<DenseTensor> cores);

    // Zero matrix with the given factorizations and ranks (length d+1,
    // boundary entries must be 1).
    static TTMatrix zeros(std::vector<std::size_t> out_modes,
                          std::vector<std::size_t> in_modes,
                          std::vector<std::size_t> ranks);

    // Identity; requires out_modes == in_modes. All ranks 1.
    static TTMatrix identity(const std::vector<std::size_t>& modes);

    std::size_t order() const { return cores.size(); }
    std::vector<std::size_t> ranks() const;
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t core_param_count() const;
};

// y = W vec(x) without materializing W. x must be shaped as the input mode
// factorization or be a flat vector of matching total length. The result is
// shaped by the output factorization.
DenseTensor tt_matvec(const TTMatrix& w, const DenseTensor& x);

// Dense (rows x cols) reconstruction; test oracle and inspection only.
DenseTensor tt_matrix_reconstruct(const TTMatrix& w);

// tt_matvec that records the running tensors T_0..T_d of the core sweep so
// the reverse pass can reuse them. steps[k] has modes
// (o_1..o_k, r_k, i_{k+1}..i_d); steps[d] is the (unshaped) output.
DenseTensor tt_matvec_cached(const TTMatrix& w, const DenseTensor& x,
                             std::vector<DenseTensor>& steps);

// Reverse-mode gradients of y = W vec(x) under upstream dy: per-core
// gradients (contracting dy against the left/right partial chains) and the
// input gradient dx (shaped like the input factorization).
void tt_matvec_backward(const TTMatrix& w, const std::vector<DenseTensor>& steps,
                        const DenseTensor& dy, std::vector<DenseTensor>& dcores,
                        DenseTensor& dx);

// Batched variants: a trailing batch mode rides through the sweep so each
// layer costs one GEMM for the whole batch. xb is (in_modes..., B), the
// result (out_modes..., B); the backward core gradients come out summed
// over the batch.
DenseTensor tt_matvec_batch(const TTMatrix& w, const DenseTensor& xb, std::size_t batch,
                            std::vector<DenseTensor>* steps = nullptr);
void tt_matvec_backward_batch(const TTMatrix& w, const std::vector<DenseTensor>& steps,
                              const DenseTensor& dyb, std::size_t batch,
                              std::vector<DenseTensor>& dcores, DenseTensor& dxb);

} // namespace mgtn
