#pragma once

#include <map>
#include <string>
#include <vector>

#include "mgtn/tensor.hpp"

namespace mgtn {

// Weighted graph adjacency: square, non-negative, finite, zero diagonal
// (self-influence enters through the +I of the filters, not loops).
struct Adjacency {
    DenseTensor weights; // (n x n)

    Adjacency() : weights(DenseTensor::shape_type{1, 1}) {}
    explicit Adjacency(DenseTensor w);
    static Adjacency zeros(std::size_t n) { return Adjacency(DenseTensor({n, n})); }

    std::size_t node_count() const { return weights.dim(0); }
    double operator()(std::size_t i, std::size_t j) const {
        return weights[i + j * node_count()];
    }
};

// Symmetric normalization D^{-1/2} A D^{-1/2}, degrees d_n = sum_m a_{n,m}.
// Errors on any zero-degree node.
Adjacency normalize(const Adjacency& a);

// Graph filter: either the order-2 shift form I + A, or the order-4
// multi-linear form tensorize(I + (A kron P)) with shape (J, I, J, I).
struct GraphFilter {
    enum class Kind { Shift, MultiLinear };

    Kind kind = Kind::Shift;
    DenseTensor op;

    std::size_t graph_dim() const {
        return kind == Kind::Shift ? op.dim(0) : op.dim(1);
    }
    std::size_t feature_dim() const {
        return kind == Kind::Shift ? 0 : op.dim(0);
    }
    // Matrix view: the shift matrix itself, or the (JI x JI) matricization
    // of the multi-linear tensor.
    DenseTensor matrix() const;
};

GraphFilter shift_filter(const Adjacency& a);

// Multi-linear filter from adjacency A (I x I) and propagation matrix
// P (J x J). J*I above `cap` is rejected to guard the (JI)^2 dense build.
GraphFilter multilinear_filter(const Adjacency& a, const DenseTensor& p,
                               std::size_t cap = 1024);

// Directed path over t steps: a_{k,k-1} = 1, information flowing from the
// past toward the present.
Adjacency time_graph(std::size_t t);

// Pairwise spot/forward rates keyed by 6-letter pair code, e.g. "EURGBP".
struct CarryTable {
    struct Rates {
        double spot = 0.0;
        double forward = 0.0;
    };
    std::map<std::string, Rates> pairs;
};

CarryTable load_carry_table(const std::string& path);
void save_carry_table(const std::string& path, const CarryTable& table);

// Carry graph over the ordered currency list: edge weight |1 - r_f / r_s|
// for every quoted pair, symmetric, zero elsewhere. With rescale_max the
// weights are divided by the largest entry (if any).
Adjacency carry_graph(const CarryTable& table, const std::vector<std::string>& currencies,
                      bool rescale_max = false);

} // namespace mgtn
