#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mgtn {

// Dense N-mode real array. Data is linearized Little-Endian: the first index
// varies fastest, so a matrix (I1 x I2) stored this way is column-major.
// Order 0 is a scalar holding exactly one value.
//
// Mode indices in this API are 0-based.
class DenseTensor {
public:
    using shape_type = std::vector<std::size_t>;

    // Scalar zero.
    DenseTensor();

    // Zero-filled tensor of the given shape.
    explicit DenseTensor(shape_type shape);

    // Tensor from explicit data (validated: length and finiteness).
    DenseTensor(shape_type shape, std::vector<double> data);

    static DenseTensor scalar(double v);

    // Identity matrix (n x n).
    static DenseTensor identity(std::size_t n);

    std::size_t order() const { return shape_.size(); }
    const shape_type& shape() const { return shape_; }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
    std::size_t size() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    double at(std::span<const std::size_t> idx) const;
    double& at(std::span<const std::size_t> idx);
    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }
    double& at(std::initializer_list<std::size_t> idx) {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }

    // Relabel the shape without moving data. The new shape must cover the
    // same number of elements. Under Little-Endian linearization a reshape
    // is a pure reinterpretation.
    DenseTensor reshaped(shape_type new_shape) const;

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }

private:
    shape_type shape_;
    std::vector<double> data_;
};

// --- index arithmetic (the single implementation point) ---

// Little-Endian strides: stride[0] = 1, stride[k] = stride[k-1] * shape[k-1].
std::vector<std::size_t> le_strides(std::span<const std::size_t> shape);

std::size_t le_linearize(std::span<const std::size_t> idx,
                         std::span<const std::size_t> shape);

void le_delinearize(std::size_t flat, std::span<const std::size_t> shape,
                    std::span<std::size_t> idx_out);

std::size_t shape_product(std::span<const std::size_t> shape);

// --- structural operations ---

// Axis permutation: out mode k is x's mode perm[k].
DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm);
DenseTensor permute(const DenseTensor& x, std::initializer_list<std::size_t> perm);

// Mode-n matricization: (I_n, prod of remaining modes), columns indexed
// Little-Endian over the remaining modes in ascending mode order.
DenseTensor matricize(const DenseTensor& x, std::size_t mode);

// Exact inverse of matricize(x, mode) for the given full shape.
DenseTensor tensorize(const DenseTensor& m, DenseTensor::shape_type full_shape,
                      std::size_t mode);

// --- multilinear algebra ---

// Contraction of a's modes_a with b's modes_b (pairwise, equal sizes).
// Result modes: a's surviving modes in original order, then b's. The
// single-pair case is the (m, n)-contraction a x^m_n b with n = modes_a[0]
// and m = modes_b[0].
DenseTensor contract(const DenseTensor& a, std::span<const std::size_t> modes_a,
                     const DenseTensor& b, std::span<const std::size_t> modes_b);
DenseTensor contract(const DenseTensor& a, std::initializer_list<std::size_t> modes_a,
                     const DenseTensor& b, std::initializer_list<std::size_t> modes_b);

// Left Kronecker product of two equal-order tensors. Composite index of
// mode n is j_n + i_n * J_n (0-based; b's index varies fastest).
DenseTensor kron(const DenseTensor& a, const DenseTensor& b);

// Matrix m (R x I_k) applied along mode k, preserving mode order:
// result = tensorize(m * matricize(x, k), k).
DenseTensor mode_product(const DenseTensor& x, std::size_t mode, const DenseTensor& m);

// --- elementwise helpers ---

DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor sub(const DenseTensor& a, const DenseTensor& b);
DenseTensor scale(const DenseTensor& a, double alpha);
// a += alpha * b
void axpy(DenseTensor& a, double alpha, const DenseTensor& b);

double frobenius_norm(const DenseTensor& x);
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);

// --- debug text dump (shape header + flat values), round-trip safe ---

std::string to_text(const DenseTensor& x);
DenseTensor from_text(const std::string& text);
void write_text(std::ostream& os, const DenseTensor& x);
DenseTensor read_text(std::istream& is);

} // namespace mgtn
