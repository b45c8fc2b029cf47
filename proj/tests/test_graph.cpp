#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mgtn/graph.hpp"
#include "mgtn/rng.hpp"
#include "oracles.hpp"

using namespace mgtn;

namespace {

Adjacency random_adjacency(std::size_t n, Rng& rng) {
    DenseTensor w({n, n});
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            const double v = rng.uniform(0.0, 1.0);
            w[i + j * n] = v;
            w[j + i * n] = v;
        }
    }
    return Adjacency(std::move(w));
}

} // namespace

TEST_CASE("adjacency invariants are enforced") {
    CHECK_THROWS_AS(Adjacency(DenseTensor({2, 3})), std::invalid_argument);
    CHECK_THROWS_AS(Adjacency(DenseTensor({2, 2}, {0, -1, -1, 0})), std::invalid_argument);
    CHECK_THROWS_AS(Adjacency(DenseTensor({2, 2}, {1, 0, 0, 0})), std::invalid_argument);
}

TEST_CASE("normalize leaves the unit-degree complete 2-graph unchanged") {
    Adjacency a(DenseTensor({2, 2}, {0, 1, 1, 0}));
    Adjacency n = normalize(a);
    CHECK(n(0, 1) == doctest::Approx(1.0));
    CHECK(n(1, 0) == doctest::Approx(1.0));
    CHECK(n(0, 0) == 0.0);
}

TEST_CASE("normalize of the 3-star matches direct arithmetic") {
    // Node 0 is the center: degree 2; leaves have degree 1.
    DenseTensor w({3, 3});
    w.at({0, 1}) = w.at({1, 0}) = 1.0;
    w.at({0, 2}) = w.at({2, 0}) = 1.0;
    Adjacency n = normalize(Adjacency(w));
    const double want = 1.0 / std::sqrt(2.0);
    CHECK(n(0, 1) == doctest::Approx(want).epsilon(1e-14));
    CHECK(n(1, 0) == doctest::Approx(want).epsilon(1e-14));
    CHECK(n(0, 2) == doctest::Approx(want).epsilon(1e-14));
    CHECK(n(1, 2) == 0.0);
}

TEST_CASE("normalize is not idempotent on unnormalized graphs") {
    Rng rng(211);
    Adjacency a = random_adjacency(4, rng);
    Adjacency once = normalize(a);
    Adjacency twice = normalize(once);
    CHECK(max_abs_diff(once.weights, a.weights) > 1e-6);
    CHECK(max_abs_diff(twice.weights, once.weights) > 1e-9);
    // Symmetry and zero diagonal survive.
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(once(i, i) == 0.0);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(once(i, j) == doctest::Approx(once(j, i)));
        }
    }
}

TEST_CASE("normalize rejects isolated nodes") {
    CHECK_THROWS_AS(normalize(Adjacency::zeros(3)), std::invalid_argument);
}

TEST_CASE("empty-graph shift filter is the identity") {
    GraphFilter f = shift_filter(Adjacency::zeros(3));
    Rng rng(223);
    DenseTensor signal = oracle::random_tensor({3, 4}, rng);
    DenseTensor out = contract(f.matrix(), {1}, signal, {0});
    CHECK(max_abs_diff(out, signal) == 0.0);
}

TEST_CASE("2-node shift filter does a 1-hop sum") {
    Adjacency a(DenseTensor({2, 2}, {0, 1, 1, 0}));
    GraphFilter f = shift_filter(a);
    DenseTensor signal({2}, {1, 0});
    DenseTensor out = contract(f.matrix(), {1}, signal, {0});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("shift filter is linear") {
    Rng rng(227);
    Adjacency a = random_adjacency(5, rng);
    GraphFilter filter = shift_filter(a);
    DenseTensor f = oracle::random_tensor({5}, rng);
    DenseTensor h = oracle::random_tensor({5}, rng);
    const double alpha = 1.7, beta = -0.4;
    DenseTensor lhs =
        contract(filter.matrix(), {1}, add(scale(f, alpha), scale(h, beta)), {0});
    DenseTensor rhs = add(scale(contract(filter.matrix(), {1}, f, {0}), alpha),
                          scale(contract(filter.matrix(), {1}, h, {0}), beta));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("multilinear filter with zero adjacency matricizes to identity") {
    Rng rng(229);
    DenseTensor p = oracle::random_tensor({3, 3}, rng);
    GraphFilter f = multilinear_filter(Adjacency::zeros(2), p);
    CHECK(f.op.shape() == DenseTensor::shape_type{3, 2, 3, 2});
    CHECK(max_abs_diff(f.matrix(), DenseTensor::identity(6)) == 0.0);
}

TEST_CASE("multilinear filter equals I + A kron P by the entry formula") {
    Rng rng(233);
    for (int rep = 0; rep < 10; ++rep) {
        Adjacency a = random_adjacency(2, rng);
        DenseTensor p = oracle::random_tensor({2, 2}, rng);
        GraphFilter f = multilinear_filter(a, p);
        DenseTensor m = f.matrix();
        const auto am = oracle::mat_from(a.weights);
        const auto pm = oracle::mat_from(p);
        const auto k = oracle::mat_kron(am, pm);
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                const double want = (r == c ? 1.0 : 0.0) + k[r][c];
                CHECK(std::abs(m.at({r, c}) - want) <= 1e-15);
            }
        }
    }
}

TEST_CASE("multilinear filter at P=I acts as the shift filter on signals") {
    Rng rng(239);
    Adjacency a = random_adjacency(4, rng);
    const std::size_t j_dim = 3;
    GraphFilter ml = multilinear_filter(a, DenseTensor::identity(j_dim));
    GraphFilter sh = shift_filter(a);

    DenseTensor y = oracle::random_tensor({j_dim, 4}, rng);
    // Contract the order-4 filter against the (feature, node) signal.
    DenseTensor via_ml = contract(ml.op, {2, 3}, y, {0, 1});
    // Shift along the node mode only.
    DenseTensor via_sh = mode_product(y, 1, sh.matrix());
    CHECK(max_abs_diff(via_ml, via_sh) <= 1e-12);
}

TEST_CASE("multilinear filter enforces the size cap") {
    Adjacency a = Adjacency::zeros(100);
    DenseTensor p = DenseTensor::identity(20);
    CHECK_THROWS_AS(multilinear_filter(a, p, 1024), std::invalid_argument);
}

TEST_CASE("time graph is a directed past-to-present path") {
    CHECK_THROWS_AS(time_graph(0), std::invalid_argument);

    Adjacency t1 = time_graph(1);
    CHECK(frobenius_norm(t1.weights) == 0.0);

    Adjacency t3 = time_graph(3);
    std::size_t nonzero = 0;
    for (double v : t3.weights.data()) nonzero += (v != 0.0);
    CHECK(nonzero == 2);
    CHECK(t3(1, 0) == 1.0);
    CHECK(t3(2, 1) == 1.0);

    // One-hot at step k propagates to steps k and k+1.
    GraphFilter f = shift_filter(time_graph(4));
    DenseTensor e({4}, {0, 1, 0, 0});
    DenseTensor g = contract(f.matrix(), {1}, e, {0});
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 1.0);
    CHECK(g[2] == 1.0);
    CHECK(g[3] == 0.0);
}

TEST_CASE("carry graph from spot/forward rates") {
    CarryTable table;
    table.pairs["EURGBP"] = {1.25, 1.20};
    const std::vector<std::string> ccy{"EUR", "GBP", "JPY"};

    Adjacency a = carry_graph(table, ccy);
    CHECK(a(0, 1) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(a(1, 0) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(a(0, 2) == 0.0); // missing pair stays absent
    CHECK(a(2, 2) == 0.0);

    // Parity: forward == spot means zero carry everywhere.
    CarryTable flat;
    flat.pairs["EURGBP"] = {1.25, 1.25};
    flat.pairs["GBPJPY"] = {180.0, 180.0};
    CHECK(frobenius_norm(carry_graph(flat, ccy).weights) == 0.0);

    // Unknown currency and nonpositive rates are rejected.
    CarryTable bad;
    bad.pairs["EURUSD"] = {1.1, 1.1};
    CHECK_THROWS_AS(carry_graph(bad, ccy), std::invalid_argument);
    CarryTable neg;
    neg.pairs["EURGBP"] = {-1.0, 1.0};
    CHECK_THROWS_AS(carry_graph(neg, ccy), std::invalid_argument);
}

TEST_CASE("carry graph rescaling maps the max weight to 1") {
    CarryTable table;
    table.pairs["EURGBP"] = {1.0, 0.9};  // |c| = 0.1
    table.pairs["GBPJPY"] = {1.0, 0.95}; // |c| = 0.05
    const std::vector<std::string> ccy{"EUR", "GBP", "JPY"};
    Adjacency a = carry_graph(table, ccy, true);
    CHECK(a(0, 1) == doctest::Approx(1.0));
    CHECK(a(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("carry table round-trips through its file format") {
    CarryTable table;
    table.pairs["EURGBP"] = {1.25, 1.2};
    table.pairs["GBPJPY"] = {182.5, 181.75};
    const std::string path = "carry_roundtrip_test.json";
    save_carry_table(path, table);
    CarryTable back = load_carry_table(path);
    REQUIRE(back.pairs.size() == 2);
    CHECK(back.pairs["EURGBP"].spot == doctest::Approx(1.25));
    CHECK(back.pairs["GBPJPY"].forward == doctest::Approx(181.75));
    std::remove(path.c_str());
}
