#include "mgtn/tt.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace mgtn {

namespace {

void validate_tt_cores(const std::vector<DenseTensor>& cores, std::size_t core_order,
                       const char* who) {
    if (cores.empty()) throw std::invalid_argument(std::string(who) + ": no cores");
    for (const auto& c : cores) {
        if (c.order() != core_order) {
            throw std::invalid_argument(std::string(who) + ": core order wrong");
        }
    }
    if (cores.front().dim(0) != 1 || cores.back().dim(core_order - 1) != 1) {
        throw std::invalid_argument(std::string(who) + ": boundary ranks must be 1");
    }
    for (std::size_t n = 0; n + 1 < cores.size(); ++n) {
        if (cores[n].dim(core_order - 1) != cores[n + 1].dim(0)) {
            throw std::invalid_argument(std::string(who) + ": adjacent ranks disagree");
        }
    }
}

// Shared TT-SVD sweep. truncate(singular_values) returns the rank to keep.
template <typename TruncFn>
TTTensor tt_svd_impl(const DenseTensor& x, TruncFn truncate) {
    const std::size_t n = x.order();
    if (n == 0) throw std::invalid_argument("tt_svd: empty (order-0) tensor");

    std::vector<DenseTensor> cores;
    cores.reserve(n);
    if (n == 1) {
        cores.push_back(x.reshaped({1, x.dim(0), 1}));
        return TTTensor(std::move(cores));
    }

    // Remainder matrix C, stored column-major = Little-Endian flat.
    Eigen::MatrixXd c = Eigen::Map<const Eigen::MatrixXd>(
        x.data().data(), static_cast<Eigen::Index>(x.dim(0)),
        static_cast<Eigen::Index>(x.size() / x.dim(0)));
    std::size_t r_prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        // Unfold to (r_prev * I_k, rest); the first step is prepared above.
        if (k > 0) {
            const Eigen::Index rows = static_cast<Eigen::Index>(r_prev * x.dim(k));
            c = Eigen::Map<const Eigen::MatrixXd>(c.data(), rows, c.size() / rows).eval();
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const std::size_t rank = truncate(svd.singularValues());

        const Eigen::MatrixXd u = svd.matrixU().leftCols(static_cast<Eigen::Index>(rank));
        std::vector<double> core_data(u.data(), u.data() + u.size());
        cores.emplace_back(DenseTensor::shape_type{r_prev, x.dim(k), rank},
                           std::move(core_data));

        c = svd.singularValues().head(static_cast<Eigen::Index>(rank)).asDiagonal() *
            svd.matrixV().leftCols(static_cast<Eigen::Index>(rank)).transpose();
        r_prev = rank;
    }
    std::vector<double> last(c.data(), c.data() + c.size());
    cores.emplace_back(DenseTensor::shape_type{r_prev, x.dim(n - 1), 1}, std::move(last));
    return TTTensor(std::move(cores));
}

} // namespace

TTTensor::TTTensor(std::vector<DenseTensor> cores_in) : cores(std::move(cores_in)) {
    validate_tt_cores(cores, 3, "TTTensor");
}

std::vector<std::size_t> TTTensor::ranks() const {
    std::vector<std::size_t> r;
    r.reserve(cores.size() + 1);
    r.push_back(cores.front().dim(0));
    for (const auto& c : cores) r.push_back(c.dim(2));
    return r;
}

std::vector<std::size_t> TTTensor::mode_sizes() const {
    std::vector<std::size_t> m;
    m.reserve(cores.size());
    for (const auto& c : cores) m.push_back(c.dim(1));
    return m;
}

std::size_t TTTensor::core_param_count() const {
    std::size_t s = 0;
    for (const auto& c : cores) s += c.size();
    return s;
}

TTTensor tt_svd(const DenseTensor& x, std::size_t max_rank) {
    std::vector<std::size_t> caps(x.order() >= 1 ? x.order() - 1 : 0, max_rank);
    return tt_svd(x, caps);
}

TTTensor tt_svd(const DenseTensor& x, const std::vector<std::size_t>& max_ranks) {
    if (x.order() >= 2 && max_ranks.size() != x.order() - 1) {
        throw std::invalid_argument("tt_svd: need one rank cap per internal bond");
    }
    std::size_t bond = 0;
    return tt_svd_impl(x, [&](const Eigen::VectorXd& sv) {
        std::size_t rank = static_cast<std::size_t>(sv.size());
        const std::size_t cap = max_ranks.empty() ? 0 : max_ranks[bond++];
        if (cap > 0) rank = std::min(rank, cap);
        return std::max<std::size_t>(rank, 1);
    });
}

TTTensor tt_svd_tol(const DenseTensor& x, double tolerance) {
    if (!(tolerance > 0.0 && tolerance < 1.0)) {
        throw std::invalid_argument("tt_svd: tolerance must be in (0,1)");
    }
    const double norm = frobenius_norm(x);
    const double budget =
        x.order() >= 2 ? tolerance * norm / std::sqrt(double(x.order() - 1)) : 0.0;
    const double budget2 = budget * budget;
    return tt_svd_impl(x, [budget2](const Eigen::VectorXd& sv) {
        // Keep the smallest rank whose discarded tail satisfies the budget.
        std::size_t rank = static_cast<std::size_t>(sv.size());
        double tail = 0.0;
        while (rank > 1) {
            const double s = sv[static_cast<Eigen::Index>(rank - 1)];
            if (tail + s * s > budget2) break;
            tail += s * s;
            --rank;
        }
        return rank;
    });
}

DenseTensor tt_reconstruct(const TTTensor& t) {
    const auto& cores = t.cores;
    // (1, I_1, R_1) -> (I_1, R_1)
    DenseTensor cur = cores[0].reshaped({cores[0].dim(1), cores[0].dim(2)});
    for (std::size_t n = 1; n < cores.size(); ++n) {
        cur = contract(cur, {cur.order() - 1}, cores[n], {0});
    }
    // Drop the trailing unit rank.
    return cur.reshaped(t.mode_sizes());
}

TTMatrix::TTMatrix(std::vector<std::size_t> out_modes_in,
                   std::vector<std::size_t> in_modes_in,
                   std::vector<DenseTensor> cores_in)
    : out_modes(std::move(out_modes_in)), in_modes(std::move(in_modes_in)),
      cores(std::move(cores_in)) {
    validate_tt_cores(cores, 4, "TTMatrix");
    if (out_modes.size() != cores.size() || in_modes.size() != cores.size()) {
        throw std::invalid_argument("TTMatrix: mode factorization length mismatch");
    }
    for (std::size_t k = 0; k < cores.size(); ++k) {
        if (cores[k].dim(1) != out_modes[k] || cores[k].dim(2) != in_modes[k]) {
            throw std::invalid_argument("TTMatrix: core shape disagrees with modes");
        }
    }
}

TTMatrix TTMatrix::zeros(std::vector<std::size_t> out_modes,
                         std::vector<std::size_t> in_modes,
                         std::vector<std::size_t> ranks) {
    const std::size_t d = out_modes.size();
    if (in_modes.size() != d || ranks.size() != d + 1 || d == 0) {
        throw std::invalid_argument("TTMatrix::zeros: bad factorization");
    }
    if (ranks.front() != 1 || ranks.back() != 1) {
        throw std::invalid_argument("TTMatrix::zeros: boundary ranks must be 1");
    }
    std::vector<DenseTensor> cores;
    cores.reserve(d);
    for (std::size_t k = 0; k < d; ++k) {
        cores.emplace_back(
            DenseTensor::shape_type{ranks[k], out_modes[k], in_modes[k], ranks[k + 1]});
    }
    return TTMatrix(std::move(out_modes), std::move(in_modes), std::move(cores));
}

TTMatrix TTMatrix::identity(const std::vector<std::size_t>& modes) {
    std::vector<std::size_t> ranks(modes.size() + 1, 1);
    TTMatrix w = zeros(modes, modes, ranks);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        for (std::size_t i = 0; i < modes[k]; ++i) {
            w.cores[k].at({0, i, i, 0}) = 1.0;
        }
    }
    return w;
}

std::vector<std::size_t> TTMatrix::ranks() const {
    std::vector<std::size_t> r;
    r.reserve(cores.size() + 1);
    r.push_back(cores.front().dim(0));
    for (const auto& c : cores) r.push_back(c.dim(3));
    return r;
}

std::size_t TTMatrix::rows() const { return shape_product(out_modes); }
std::size_t TTMatrix::cols() const { return shape_product(in_modes); }

std::size_t TTMatrix::core_param_count() const {
    std::size_t s = 0;
    for (const auto& c : cores) s += c.size();
    return s;
}

namespace {

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMatMap = Eigen::Map<Eigen::MatrixXd>;

// Core k matricized as ((r_{k-1} i_k) x (o_k r_k)); original layout is
// (r, o, i, r').
DenseTensor matricized_core(const DenseTensor& core) {
    DenseTensor g = permute(core, {0, 2, 1, 3});
    return g.reshaped({core.dim(0) * core.dim(2), core.dim(1) * core.dim(3)});
}

// Layout of the running tensor T_k: (o_1..o_k, r_k, i_{k+1}..i_d[, B]).
DenseTensor::shape_type step_shape(const TTMatrix& w, std::size_t k, std::size_t batch) {
    DenseTensor::shape_type s;
    for (std::size_t j = 0; j < k; ++j) s.push_back(w.out_modes[j]);
    s.push_back(k == 0 ? 1 : w.cores[k - 1].dim(3));
    for (std::size_t j = k; j < w.order(); ++j) s.push_back(w.in_modes[j]);
    if (batch > 0) s.push_back(batch);
    return s;
}

// Shared core sweep for the single and batched matvec. A nonzero batch
// size appends one trailing batch mode that rides along untouched. Every
// step is a GEMM per trailing slice: T_k sliced over (i_{k+2}..i_d, B) is a
// contiguous column-major (prod o x (r_k i_{k+1})) block.
DenseTensor tt_sweep(const TTMatrix& w, const DenseTensor& x,
                     std::vector<DenseTensor>* steps, std::size_t batch) {
    const std::size_t copies = batch == 0 ? 1 : batch;
    if (x.size() != w.cols() * copies) {
        throw std::invalid_argument("tt_matvec: length mismatch");
    }
    if (batch == 0 && x.order() > 1 && x.shape() != w.in_modes) {
        throw std::invalid_argument("tt_matvec: input shape differs from factorization");
    }
    const std::size_t d = w.order();

    DenseTensor cur = x.reshaped(step_shape(w, 0, batch));
    if (steps) {
        steps->clear();
        steps->push_back(cur);
    }

    std::size_t o_prod = 1;
    for (std::size_t k = 0; k < d; ++k) {
        const DenseTensor gk = matricized_core(w.cores[k]);
        const std::size_t mid_in = gk.dim(0);
        const std::size_t mid_out = gk.dim(1);
        const std::size_t rest = cur.size() / (o_prod * mid_in);

        DenseTensor nxt(step_shape(w, k + 1, batch));
        MatMap gm(gk.data().data(), static_cast<Eigen::Index>(mid_in),
                  static_cast<Eigen::Index>(mid_out));
        if (o_prod == 1) {
            // Degenerate leading group: the whole step is one GEMM.
            MatMap xs(cur.data().data(), static_cast<Eigen::Index>(mid_in),
                      static_cast<Eigen::Index>(rest));
            MutMatMap ys(nxt.data().data(), static_cast<Eigen::Index>(mid_out),
                         static_cast<Eigen::Index>(rest));
            ys.noalias() = gm.transpose() * xs;
        } else {
            for (std::size_t s = 0; s < rest; ++s) {
                MatMap xs(cur.data().data() + s * o_prod * mid_in,
                          static_cast<Eigen::Index>(o_prod),
                          static_cast<Eigen::Index>(mid_in));
                MutMatMap ys(nxt.data().data() + s * o_prod * mid_out,
                             static_cast<Eigen::Index>(o_prod),
                             static_cast<Eigen::Index>(mid_out));
                ys.noalias() = xs * gm;
            }
        }
        cur = std::move(nxt);
        o_prod *= w.out_modes[k];
        if (steps) steps->push_back(cur);
    }
    DenseTensor::shape_type out_shape(w.out_modes);
    if (batch > 0) out_shape.push_back(batch);
    return cur.reshaped(out_shape);
}

void tt_backward_impl(const TTMatrix& w, const std::vector<DenseTensor>& steps,
                      const DenseTensor& dy, std::vector<DenseTensor>& dcores,
                      DenseTensor& dx, std::size_t batch) {
    const std::size_t d = w.order();
    const std::size_t copies = batch == 0 ? 1 : batch;
    if (steps.size() != d + 1) {
        throw std::invalid_argument("tt_matvec_backward: missing forward cache");
    }
    if (dy.size() != w.rows() * copies) {
        throw std::invalid_argument("tt_matvec_backward: upstream size mismatch");
    }
    dcores.assign(d, DenseTensor());

    // B_k = dLoss/dT_k shares T_k's layout; sweep right to left. The same
    // slicing as the forward gives the core gradient as an accumulated
    // GEMM (environment of the core against the left chain and upstream),
    // with the batch slices summing in place.
    DenseTensor b = dy.reshaped(step_shape(w, d, batch));

    std::size_t o_prod = shape_product(w.out_modes);
    for (std::size_t k = d; k >= 1; --k) {
        const DenseTensor& t_prev = steps[k - 1];
        const DenseTensor gk = matricized_core(w.cores[k - 1]);
        const std::size_t mid_t = gk.dim(0); // r_{k-1} * i_k
        const std::size_t mid_b = gk.dim(1); // o_k * r_k
        o_prod /= w.out_modes[k - 1];
        const std::size_t rest = b.size() / (o_prod * mid_b);

        Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mid_t),
                                                   static_cast<Eigen::Index>(mid_b));
        DenseTensor b_prev(step_shape(w, k - 1, batch));
        MatMap gm(gk.data().data(), static_cast<Eigen::Index>(mid_t),
                  static_cast<Eigen::Index>(mid_b));
        if (o_prod == 1) {
            MatMap ts(t_prev.data().data(), static_cast<Eigen::Index>(mid_t),
                      static_cast<Eigen::Index>(rest));
            MatMap bs(b.data().data(), static_cast<Eigen::Index>(mid_b),
                      static_cast<Eigen::Index>(rest));
            dg.noalias() = ts * bs.transpose();
            MutMatMap ps(b_prev.data().data(), static_cast<Eigen::Index>(mid_t),
                         static_cast<Eigen::Index>(rest));
            ps.noalias() = gm * bs;
        } else {
            for (std::size_t s = 0; s < rest; ++s) {
                MatMap ts(t_prev.data().data() + s * o_prod * mid_t,
                          static_cast<Eigen::Index>(o_prod),
                          static_cast<Eigen::Index>(mid_t));
                MatMap bs(b.data().data() + s * o_prod * mid_b,
                          static_cast<Eigen::Index>(o_prod),
                          static_cast<Eigen::Index>(mid_b));
                dg.noalias() += ts.transpose() * bs;
                MutMatMap ps(b_prev.data().data() + s * o_prod * mid_t,
                             static_cast<Eigen::Index>(o_prod),
                             static_cast<Eigen::Index>(mid_t));
                ps.noalias() = bs * gm.transpose();
            }
        }
        // dg is ((r_{k-1} i_k) x (o_k r_k)) = tensor (r, i, o, r').
        const auto& core = w.cores[k - 1];
        DenseTensor dg_t(
            DenseTensor::shape_type{core.dim(0), core.dim(2), core.dim(1), core.dim(3)},
            std::vector<double>(dg.data(), dg.data() + dg.size()));
        dcores[k - 1] = permute(dg_t, {0, 2, 1, 3});
        b = std::move(b_prev);
    }
    DenseTensor::shape_type dx_shape(w.in_modes);
    if (batch > 0) dx_shape.push_back(batch);
    dx = b.reshaped(dx_shape);
}

} // namespace

DenseTensor tt_matvec(const TTMatrix& w, const DenseTensor& x) {
    return tt_sweep(w, x, nullptr, 0);
}

DenseTensor tt_matvec_cached(const TTMatrix& w, const DenseTensor& x,
                             std::vector<DenseTensor>& steps) {
    return tt_sweep(w, x, &steps, 0);
}

DenseTensor tt_matvec_batch(const TTMatrix& w, const DenseTensor& xb, std::size_t batch,
                            std::vector<DenseTensor>* steps) {
    if (batch == 0) throw std::invalid_argument("tt_matvec_batch: empty batch");
    return tt_sweep(w, xb, steps, batch);
}

void tt_matvec_backward(const TTMatrix& w, const std::vector<DenseTensor>& steps,
                        const DenseTensor& dy, std::vector<DenseTensor>& dcores,
                        DenseTensor& dx) {
    tt_backward_impl(w, steps, dy, dcores, dx, 0);
}

void tt_matvec_backward_batch(const TTMatrix& w, const std::vector<DenseTensor>& steps,
                              const DenseTensor& dyb, std::size_t batch,
                              std::vector<DenseTensor>& dcores, DenseTensor& dxb) {
    if (batch == 0) throw std::invalid_argument("tt_matvec_backward_batch: empty batch");
    tt_backward_impl(w, steps, dyb, dcores, dxb, batch);
}

DenseTensor tt_matrix_reconstruct(const TTMatrix& w) {
    const std::size_t d = w.order();
    // Accumulate as tensor with modes (o_1..o_k, i_1..i_k, r_k).
    DenseTensor cur = w.cores[0].reshaped(
        {w.cores[0].dim(1), w.cores[0].dim(2), w.cores[0].dim(3)});
    for (std::size_t k = 1; k < d; ++k) {
        DenseTensor c = contract(cur, {cur.order() - 1}, w.cores[k], {0});
        // c: (o_1..o_k-1.., i_1..i_{k}-1.., o_k, i_k, r_k) -> interleave groups.
        std::vector<std::size_t> perm;
        perm.reserve(c.order());
        for (std::size_t j = 0; j < k; ++j) perm.push_back(j);             // o_1..o_{k-1}
        perm.push_back(2 * k);                                             // o_k
        for (std::size_t j = 0; j < k; ++j) perm.push_back(k + j);         // i_1..i_{k-1}
        perm.push_back(2 * k + 1);                                         // i_k
        perm.push_back(2 * k + 2);                                         // r_k
        cur = permute(c, perm);
    }
    // (o_1..o_d, i_1..i_d, 1) -> (rows, cols)
    return cur.reshaped({w.rows(), w.cols()});
}

} // namespace mgtn
