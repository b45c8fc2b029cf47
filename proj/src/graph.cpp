#include "mgtn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mgtn {

Adjacency::Adjacency(DenseTensor w) : weights(std::move(w)) {
    if (weights.order() != 2 || weights.dim(0) != weights.dim(1)) {
        throw std::invalid_argument("Adjacency: square matrix required");
    }
    const std::size_t n = weights.dim(0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = weights[i + j * n];
            if (v < 0.0) throw std::invalid_argument("Adjacency: negative weight");
            if (i == j && v != 0.0) {
                throw std::invalid_argument("Adjacency: nonzero diagonal");
            }
        }
    }
}

Adjacency normalize(const Adjacency& a) {
    const std::size_t n = a.node_count();
    std::vector<double> dinv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg <= 0.0) {
            throw std::invalid_argument("normalize: zero-degree node " + std::to_string(i));
        }
        dinv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    DenseTensor w({n, n});
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i + j * n] = dinv_sqrt[i] * a(i, j) * dinv_sqrt[j];
        }
    }
    return Adjacency(std::move(w));
}

DenseTensor GraphFilter::matrix() const {
    if (kind == Kind::Shift) return op;
    const std::size_t ji = op.dim(0) * op.dim(1);
    return op.reshaped({ji, ji});
}

GraphFilter shift_filter(const Adjacency& a) {
    GraphFilter f;
    f.kind = GraphFilter::Kind::Shift;
    f.op = add(DenseTensor::identity(a.node_count()), a.weights);
    return f;
}

GraphFilter multilinear_filter(const Adjacency& a, const DenseTensor& p,
                               std::size_t cap) {
    if (p.order() != 2 || p.dim(0) != p.dim(1)) {
        throw std::invalid_argument("multilinear_filter: P must be square");
    }
    const std::size_t i_dim = a.node_count();
    const std::size_t j_dim = p.dim(0);
    if (j_dim * i_dim > cap) {
        throw std::invalid_argument("multilinear_filter: J*I exceeds cap");
    }
    // F = tensorize(I + (A kron P)); the composite row index j + i*J matches
    // the Little-Endian flattening of a (J, I) signal, so the tensorize is a
    // pure reshape to (J, I, J, I).
    DenseTensor m = add(DenseTensor::identity(j_dim * i_dim), kron(a.weights, p));
    GraphFilter f;
    f.kind = GraphFilter::Kind::MultiLinear;
    f.op = m.reshaped({j_dim, i_dim, j_dim, i_dim});
    return f;
}

Adjacency time_graph(std::size_t t) {
    if (t < 1) throw std::invalid_argument("time_graph: t must be >= 1");
    DenseTensor w({t, t});
    for (std::size_t k = 1; k < t; ++k) {
        w[k + (k - 1) * t] = 1.0; // a_{k, k-1} = 1
    }
    return Adjacency(std::move(w));
}

CarryTable load_carry_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("carry table: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("carry table: parse error in " + path + ": " + e.what());
    }
    CarryTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& entry = it.value();
        if (!entry.contains("spot") || !entry.contains("forward")) {
            throw std::runtime_error("carry table: pair " + it.key() +
                                     " needs spot and forward");
        }
        table.pairs[it.key()] = {entry["spot"].get<double>(),
                                 entry["forward"].get<double>()};
    }
    return table;
}

void save_carry_table(const std::string& path, const CarryTable& table) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [pair, rates] : table.pairs) {
        j[pair] = {{"spot", rates.spot}, {"forward", rates.forward}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("carry table: cannot write " + path);
    out << j.dump(2) << '\n';
}

Adjacency carry_graph(const CarryTable& table, const std::vector<std::string>& currencies,
                      bool rescale_max) {
    const std::size_t n = currencies.size();
    auto index_of = [&](const std::string& code) {
        auto it = std::find(currencies.begin(), currencies.end(), code);
        if (it == currencies.end()) {
            throw std::invalid_argument("carry_graph: unknown currency symbol " + code);
        }
        return static_cast<std::size_t>(it - currencies.begin());
    };

    DenseTensor w({n, n});
    for (const auto& [pair, rates] : table.pairs) {
        if (pair.size() != 6) {
            throw std::invalid_argument("carry_graph: bad pair code " + pair);
        }
        const std::size_t i = index_of(pair.substr(0, 3));
        const std::size_t j = index_of(pair.substr(3, 3));
        if (i == j) throw std::invalid_argument("carry_graph: degenerate pair " + pair);
        if (rates.spot <= 0.0 || rates.forward <= 0.0) {
            throw std::invalid_argument("carry_graph: nonpositive rate for " + pair);
        }
        const double c = 1.0 - rates.forward / rates.spot;
        const double weight = std::abs(c);
        w[i + j * n] = weight;
        w[j + i * n] = weight;
    }
    if (rescale_max) {
        double m = 0.0;
        for (double v : w.data()) m = std::max(m, v);
        if (m > 0.0) {
            for (double& v : w.data()) v /= m;
        }
    }
    return Adjacency(std::move(w));
}

} // namespace mgtn
