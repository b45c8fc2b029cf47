#include "mgtn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace mgtn {

namespace {

void check_finite(std::span<const double> data) {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("DenseTensor: non-finite value");
        }
    }
}

void check_mode_list(std::span<const std::size_t> modes, std::size_t order,
                     const char* who) {
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] >= order) {
            throw std::invalid_argument(std::string(who) + ": mode index out of range");
        }
        for (std::size_t j = i + 1; j < modes.size(); ++j) {
            if (modes[i] == modes[j]) {
                throw std::invalid_argument(std::string(who) + ": duplicate mode index");
            }
        }
    }
}

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMatMap = Eigen::Map<Eigen::MatrixXd>;

} // namespace

DenseTensor::DenseTensor() : shape_{}, data_(1, 0.0) {}

DenseTensor::DenseTensor(shape_type shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw std::invalid_argument("DenseTensor: zero mode size");
    }
}

DenseTensor::DenseTensor(shape_type shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw std::invalid_argument("DenseTensor: zero mode size");
    }
    if (data_.size() != shape_product(shape_)) {
        throw std::invalid_argument("DenseTensor: data length does not match shape");
    }
    check_finite(data_);
}

DenseTensor DenseTensor::scalar(double v) {
    return DenseTensor({}, std::vector<double>{v});
}

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) out[i + i * n] = 1.0;
    return out;
}

double DenseTensor::at(std::span<const std::size_t> idx) const {
    return data_[le_linearize(idx, shape_)];
}

double& DenseTensor::at(std::span<const std::size_t> idx) {
    return data_[le_linearize(idx, shape_)];
}

DenseTensor DenseTensor::reshaped(shape_type new_shape) const {
    if (shape_product(new_shape) != data_.size()) {
        throw std::invalid_argument("reshape: element count mismatch");
    }
    DenseTensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
}

std::vector<std::size_t> le_strides(std::span<const std::size_t> shape) {
    std::vector<std::size_t> s(shape.size());
    std::size_t acc = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        s[k] = acc;
        acc *= shape[k];
    }
    return s;
}

std::size_t le_linearize(std::span<const std::size_t> idx,
                         std::span<const std::size_t> shape) {
    if (idx.size() != shape.size()) {
        throw std::invalid_argument("linearize: index order mismatch");
    }
    std::size_t flat = 0, stride = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (idx[k] >= shape[k]) throw std::out_of_range("linearize: index out of range");
        flat += idx[k] * stride;
        stride *= shape[k];
    }
    return flat;
}

void le_delinearize(std::size_t flat, std::span<const std::size_t> shape,
                    std::span<std::size_t> idx_out) {
    for (std::size_t k = 0; k < shape.size(); ++k) {
        idx_out[k] = flat % shape[k];
        flat /= shape[k];
    }
}

std::size_t shape_product(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm) {
    const std::size_t n = x.order();
    if (perm.size() != n) throw std::invalid_argument("permute: wrong length");
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p]) throw std::invalid_argument("permute: not a permutation");
        seen[p] = true;
    }
    if (std::is_sorted(perm.begin(), perm.end())) return x;

    DenseTensor::shape_type out_shape(n);
    for (std::size_t k = 0; k < n; ++k) out_shape[k] = x.dim(perm[k]);

    DenseTensor out(out_shape);
    const auto in_strides = le_strides(x.shape());
    // Stride of in-buffer per unit step of each out axis.
    std::vector<std::size_t> step(n);
    for (std::size_t k = 0; k < n; ++k) step[k] = in_strides[perm[k]];

    // Tight strided gather over the innermost output axis; odometer only
    // for the outer axes.
    const std::size_t n0 = out_shape[0];
    const std::size_t s0 = step[0];
    std::vector<std::size_t> idx(n, 0);
    std::size_t in_off = 0;
    const std::size_t blocks = out.size() / n0;
    auto* dst = out.data().data();
    const auto* src = x.data().data();
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        std::size_t off = in_off;
        if (s0 == 1) {
            std::copy(src + off, src + off + n0, dst);
            dst += n0;
        } else {
            for (std::size_t i = 0; i < n0; ++i, off += s0) *dst++ = src[off];
        }
        for (std::size_t k = 1; k < n; ++k) {
            in_off += step[k];
            if (++idx[k] < out_shape[k]) break;
            in_off -= step[k] * out_shape[k];
            idx[k] = 0;
        }
    }
    return out;
}

DenseTensor permute(const DenseTensor& x, std::initializer_list<std::size_t> perm) {
    return permute(x, std::span<const std::size_t>(perm.begin(), perm.size()));
}

DenseTensor matricize(const DenseTensor& x, std::size_t mode) {
    if (mode >= x.order()) throw std::invalid_argument("matricize: mode out of range");
    std::vector<std::size_t> perm;
    perm.reserve(x.order());
    perm.push_back(mode);
    for (std::size_t k = 0; k < x.order(); ++k) {
        if (k != mode) perm.push_back(k);
    }
    DenseTensor moved = permute(x, perm);
    const std::size_t rows = x.dim(mode);
    return moved.reshaped({rows, x.size() / rows});
}

DenseTensor tensorize(const DenseTensor& m, DenseTensor::shape_type full_shape,
                      std::size_t mode) {
    if (m.order() != 2) throw std::invalid_argument("tensorize: input must be order 2");
    if (mode >= full_shape.size()) {
        throw std::invalid_argument("tensorize: mode out of range");
    }
    const std::size_t total = shape_product(full_shape);
    if (m.dim(0) != full_shape[mode] || m.size() != total) {
        throw std::invalid_argument("tensorize: shape inconsistent with target");
    }
    // Undo the permutation applied by matricize.
    DenseTensor::shape_type moved_shape;
    moved_shape.reserve(full_shape.size());
    moved_shape.push_back(full_shape[mode]);
    for (std::size_t k = 0; k < full_shape.size(); ++k) {
        if (k != mode) moved_shape.push_back(full_shape[k]);
    }
    DenseTensor moved = m.reshaped(moved_shape);
    std::vector<std::size_t> inv(full_shape.size());
    std::size_t pos = 1;
    for (std::size_t k = 0; k < full_shape.size(); ++k) {
        inv[k] = (k == mode) ? 0 : pos++;
    }
    return permute(moved, inv);
}

DenseTensor contract(const DenseTensor& a, std::span<const std::size_t> modes_a,
                     const DenseTensor& b, std::span<const std::size_t> modes_b) {
    if (modes_a.size() != modes_b.size()) {
        throw std::invalid_argument("contract: mode lists differ in length");
    }
    check_mode_list(modes_a, a.order(), "contract(a)");
    check_mode_list(modes_b, b.order(), "contract(b)");
    for (std::size_t k = 0; k < modes_a.size(); ++k) {
        if (a.dim(modes_a[k]) != b.dim(modes_b[k])) {
            throw std::invalid_argument("contract: paired mode sizes differ");
        }
    }

    auto survivors = [](const DenseTensor& t, std::span<const std::size_t> used) {
        std::vector<std::size_t> surv;
        for (std::size_t k = 0; k < t.order(); ++k) {
            if (std::find(used.begin(), used.end(), k) == used.end()) surv.push_back(k);
        }
        return surv;
    };
    const auto surv_a = survivors(a, modes_a);
    const auto surv_b = survivors(b, modes_b);

    // Permute-and-reshape to a single matrix product:
    //   A -> (surviving, contracted), B -> (contracted, surviving).
    std::vector<std::size_t> perm_a = surv_a;
    perm_a.insert(perm_a.end(), modes_a.begin(), modes_a.end());
    std::vector<std::size_t> perm_b(modes_b.begin(), modes_b.end());
    perm_b.insert(perm_b.end(), surv_b.begin(), surv_b.end());

    DenseTensor ap = permute(a, perm_a);
    DenseTensor bp = permute(b, perm_b);

    std::size_t contracted = 1;
    for (std::size_t m : modes_a) contracted *= a.dim(m);
    const std::size_t rows = a.size() / contracted;
    const std::size_t cols = b.size() / contracted;

    DenseTensor::shape_type out_shape;
    out_shape.reserve(surv_a.size() + surv_b.size());
    for (std::size_t m : surv_a) out_shape.push_back(a.dim(m));
    for (std::size_t m : surv_b) out_shape.push_back(b.dim(m));

    DenseTensor out(out_shape);
    // Little-Endian flat data is column-major for a (rows, cols) view.
    MatMap ma(ap.data().data(), static_cast<Eigen::Index>(rows),
              static_cast<Eigen::Index>(contracted));
    MatMap mb(bp.data().data(), static_cast<Eigen::Index>(contracted),
              static_cast<Eigen::Index>(cols));
    MutMatMap mc(out.data().data(), static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(cols));
    mc.noalias() = ma * mb;
    return out;
}

DenseTensor contract(const DenseTensor& a, std::initializer_list<std::size_t> modes_a,
                     const DenseTensor& b, std::initializer_list<std::size_t> modes_b) {
    return contract(a, std::span<const std::size_t>(modes_a.begin(), modes_a.size()),
                    b, std::span<const std::size_t>(modes_b.begin(), modes_b.size()));
}

DenseTensor kron(const DenseTensor& a, const DenseTensor& b) {
    if (a.order() != b.order()) throw std::invalid_argument("kron: order mismatch");
    const std::size_t n = a.order();
    DenseTensor::shape_type out_shape(n);
    for (std::size_t k = 0; k < n; ++k) out_shape[k] = a.dim(k) * b.dim(k);

    DenseTensor out(out_shape);
    const auto a_strides = le_strides(a.shape());
    const auto b_strides = le_strides(b.shape());

    std::vector<std::size_t> comp(n, 0);
    const std::size_t total = out.size();
    for (std::size_t lin = 0; lin < total; ++lin) {
        // Composite index per mode: comp = j + i * J  (b index j fastest).
        std::size_t ai = 0, bi = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t jn = comp[k] % b.dim(k);
            const std::size_t in = comp[k] / b.dim(k);
            ai += in * a_strides[k];
            bi += jn * b_strides[k];
        }
        out[lin] = a[ai] * b[bi];
        for (std::size_t k = 0; k < n; ++k) {
            if (++comp[k] < out_shape[k]) break;
            comp[k] = 0;
        }
    }
    return out;
}

DenseTensor mode_product(const DenseTensor& x, std::size_t mode, const DenseTensor& m) {
    if (m.order() != 2) throw std::invalid_argument("mode_product: matrix expected");
    if (mode >= x.order() || m.dim(1) != x.dim(mode)) {
        throw std::invalid_argument("mode_product: dimension mismatch");
    }
    // Every slice over the trailing modes is a contiguous column-major
    // (left x I_k) block, so the mode product is a GEMM per slice with no
    // data movement.
    const std::size_t rows = m.dim(0);
    const std::size_t cols = m.dim(1);
    std::size_t left = 1, right = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= x.dim(k);
    for (std::size_t k = mode + 1; k < x.order(); ++k) right *= x.dim(k);

    DenseTensor::shape_type out_shape = x.shape();
    out_shape[mode] = rows;
    DenseTensor out(out_shape);

    MatMap mm(m.data().data(), static_cast<Eigen::Index>(rows),
              static_cast<Eigen::Index>(cols));
    if (left == 1) {
        MatMap xs(x.data().data(), static_cast<Eigen::Index>(cols),
                  static_cast<Eigen::Index>(right));
        MutMatMap ys(out.data().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(right));
        ys.noalias() = mm * xs;
        return out;
    }
    for (std::size_t s = 0; s < right; ++s) {
        MatMap xs(x.data().data() + s * left * cols, static_cast<Eigen::Index>(left),
                  static_cast<Eigen::Index>(cols));
        MutMatMap ys(out.data().data() + s * left * rows,
                     static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(rows));
        ys.noalias() = xs * mm.transpose();
    }
    return out;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

DenseTensor sub(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

DenseTensor scale(const DenseTensor& a, double alpha) {
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i];
    return out;
}

void axpy(DenseTensor& a, double alpha, const DenseTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("axpy: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * b[i];
}

double frobenius_norm(const DenseTensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

void write_text(std::ostream& os, const DenseTensor& x) {
    os << "shape";
    for (std::size_t d : x.shape()) os << ' ' << d;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", x[i]);
        os << buf << (i + 1 == x.size() ? '\n' : ' ');
    }
}

DenseTensor read_text(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("tensor text: missing header");
    std::istringstream hs(header);
    std::string tag;
    hs >> tag;
    if (tag != "shape") throw std::runtime_error("tensor text: bad header");
    DenseTensor::shape_type shape;
    std::size_t d;
    while (hs >> d) shape.push_back(d);
    const std::size_t total = shape_product(shape);
    std::vector<double> data(total);
    for (std::size_t i = 0; i < total; ++i) {
        if (!(is >> data[i])) throw std::runtime_error("tensor text: truncated values");
    }
    return DenseTensor(std::move(shape), std::move(data));
}

std::string to_text(const DenseTensor& x) {
    std::ostringstream os;
    write_text(os, x);
    return os.str();
}

DenseTensor from_text(const std::string& text) {
    std::istringstream is(text);
    return read_text(is);
}

} // namespace mgtn
