#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mgtn/env.hpp"
#include "oracles.hpp"

using namespace mgtn;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

PriceSeries tiny_series(std::size_t rows, const std::vector<std::string>& symbols,
                        double base = 1.0) {
    PriceSeries s;
    s.symbols = symbols;
    s.fill_counts.assign(symbols.size(), 0);
    for (std::size_t t = 0; t < rows; ++t) s.timestamps.push_back(1569888000 + 60 * t);
    s.prices.assign(symbols.size(), {});
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        double p = base + 0.1 * double(i);
        for (std::size_t t = 0; t < rows; ++t) {
            p *= std::exp(0.001 * ((t + i) % 3 == 0 ? 1.0 : -1.0));
            s.prices[i].push_back({p, p * 1.0001, p * 0.9999, p});
        }
    }
    return s;
}

} // namespace

TEST_CASE("timestamps format and parse round-trip") {
    const std::int64_t ts = 1569888060;
    CHECK(format_timestamp(ts) == "2019-10-01T00:01:00Z");
    CHECK(parse_timestamp("2019-10-01T00:01:00Z") == ts);
    CHECK_THROWS(parse_timestamp("yesterday"));
}

TEST_CASE("price CSV round-trips losslessly") {
    PriceSeries s = tiny_series(4, {"EURUSD", "GBPUSD"});
    TempFile f("test_prices_roundtrip.csv");
    write_prices_csv(f.path, s);
    PriceSeries back = load_prices(f.path, s.symbols);
    REQUIRE(back.rows() == s.rows());
    CHECK(back.timestamps == s.timestamps);
    for (std::size_t i = 0; i < s.symbols.size(); ++i) {
        for (std::size_t t = 0; t < s.rows(); ++t) {
            for (int k = 0; k < 4; ++k) {
                CHECK(back.prices[i][t][k] == s.prices[i][t][k]);
            }
        }
    }
    CHECK(back.total_fills() == 0);
}

TEST_CASE("minimal two-row file loads as a length-2 series") {
    TempFile f("test_prices_minimal.csv");
    {
        std::ofstream out(f.path);
        out << "timestamp,symbol,open,high,low,close\n";
        out << "2019-10-01T00:00:00Z,EURUSD,1.0,1.1,0.9,1.05\n";
        out << "2019-10-01T00:01:00Z,EURUSD,1.1,1.2,1.0,1.15\n";
    }
    PriceSeries s = load_prices(f.path, {"EURUSD"});
    CHECK(s.rows() == 2);
    CHECK(s.prices[0][1][3] == doctest::Approx(1.15));
}

TEST_CASE("load_prices validates structure") {
    TempFile f("test_prices_bad.csv");
    {
        std::ofstream out(f.path);
        out << "timestamp,symbol,open,high,low,close\n";
        out << "2019-10-01T00:00:00Z,EURUSD,1.0,1.0,1.0,1.0\n";
        out << "2019-10-01T00:01:00Z,EURUSD,-1.0,1.0,1.0,1.0\n";
    }
    CHECK_THROWS_WITH_AS(load_prices(f.path, {"EURUSD"}),
                         doctest::Contains("row 3"), std::runtime_error);
    {
        std::ofstream out(f.path);
        out << "time,symbol,open,high,low,close\n";
    }
    CHECK_THROWS_AS(load_prices(f.path, {"EURUSD"}), std::runtime_error);
    {
        std::ofstream out(f.path);
        out << "timestamp,symbol,open,high,low,close\n";
        out << "2019-10-01T00:00:00Z,EURUSD,1.0,1.0,1.0,1.0\n";
    }
    CHECK_THROWS_WITH_AS(load_prices(f.path, {"EURUSD", "GBPUSD"}),
                         doctest::Contains("GBPUSD"), std::runtime_error);
    {
        std::ofstream out(f.path);
        out << "timestamp,symbol,open,high,low,close\n";
        out << "2019-10-01T00:01:00Z,EURUSD,1.0,1.0,1.0,1.0\n";
        out << "2019-10-01T00:00:00Z,EURUSD,1.0,1.0,1.0,1.0\n";
    }
    CHECK_THROWS_WITH_AS(load_prices(f.path, {"EURUSD"}),
                         doctest::Contains("nonmonotone"), std::runtime_error);
}

TEST_CASE("missing minutes are forward-filled and counted") {
    TempFile f("test_prices_fill.csv");
    {
        std::ofstream out(f.path);
        out << "timestamp,symbol,open,high,low,close\n";
        out << "2019-10-01T00:00:00Z,EURUSD,1.0,1.1,0.9,1.05\n";
        out << "2019-10-01T00:00:00Z,GBPUSD,2.0,2.1,1.9,2.05\n";
        out << "2019-10-01T00:01:00Z,EURUSD,1.1,1.2,1.0,1.15\n";
        // GBPUSD missing at 00:01
        out << "2019-10-01T00:02:00Z,EURUSD,1.2,1.3,1.1,1.25\n";
        out << "2019-10-01T00:02:00Z,GBPUSD,2.2,2.3,2.1,2.25\n";
    }
    PriceSeries s = load_prices(f.path, {"EURUSD", "GBPUSD"}, 0.5);
    REQUIRE(s.rows() == 3);
    CHECK(s.fill_counts[0] == 0);
    CHECK(s.fill_counts[1] == 1);
    CHECK(s.prices[1][1][3] == doctest::Approx(2.05)); // carried forward
    // Tight threshold aborts.
    CHECK_THROWS_WITH_AS(load_prices(f.path, {"EURUSD", "GBPUSD"}, 0.1),
                         doctest::Contains("forward-fill"), std::runtime_error);
}

TEST_CASE("log returns match the direct formula") {
    PriceSeries s = tiny_series(20, {"EURUSD", "GBPUSD", "JPYUSD"});
    ReturnSeries r = log_returns(s);
    REQUIRE(r.rows() == 19);
    CHECK(r.timestamps.front() == s.timestamps[1]);
    Rng unused(0);
    for (std::size_t i = 0; i < s.symbols.size(); ++i) {
        for (std::size_t t = 0; t < r.rows(); ++t) {
            for (std::size_t f = 0; f < 4; ++f) {
                const double want =
                    std::log(s.prices[i][t + 1][f]) - std::log(s.prices[i][t][f]);
                CHECK(std::abs(r.values[i][t][f] - want) <= 1e-15);
            }
        }
    }
}

TEST_CASE("log returns of a constant price are zero and ln(e)=1 is exact") {
    PriceSeries s;
    s.symbols = {"EURUSD"};
    s.timestamps = {0, 60, 120};
    s.prices = {{{1.0, 1.0, 1.0, 1.0},
                 {1.0, 1.0, 1.0, 1.0},
                 {std::exp(1.0), std::exp(1.0), std::exp(1.0), std::exp(1.0)}}};
    s.fill_counts = {0};
    ReturnSeries r = log_returns(s);
    CHECK(r.values[0][0][3] == 0.0);
    CHECK(r.values[0][1][3] == doctest::Approx(1.0).epsilon(1e-15));

    PriceSeries too_short;
    too_short.symbols = {"EURUSD"};
    too_short.timestamps = {0};
    too_short.prices = {{{1, 1, 1, 1}}};
    too_short.fill_counts = {0};
    CHECK_THROWS_AS(log_returns(too_short), std::invalid_argument);
}

TEST_CASE("build_stream lays out windows entrywise as specified") {
    // Hand-built 4-row return table, 2 lags, 2 symbols.
    ReturnSeries r;
    r.symbols = {"AAAUSD", "BBBUSD"};
    r.timestamps = {60, 120, 180, 240};
    r.values = {
        {{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}, {13, 14, 15, 16}},
        {{-1, -2, -3, -4}, {-5, -6, -7, -8}, {-9, -10, -11, -12}, {-13, -14, -15, -16}},
    };
    ReturnTensorStream stream = build_stream(r, 2, "BBBUSD");
    REQUIRE(stream.samples.size() == 3);    // t = 1, 2, 3
    CHECK(stream.transition_count() == 2);  // = return rows - lags
    CHECK(stream.target_index == 1);

    // First sample: rows 0..1; lag axis oldest -> newest.
    const DenseTensor& s0 = stream.samples[0].state;
    REQUIRE(s0.shape() == DenseTensor::shape_type{4, 2, 2});
    CHECK(s0.at({0, 0, 0}) == 1);  // feature open, oldest lag, symbol 0
    CHECK(s0.at({3, 0, 0}) == 4);
    CHECK(s0.at({0, 1, 0}) == 5);  // newest lag
    CHECK(s0.at({3, 1, 1}) == -8); // symbol 1
    CHECK(stream.samples[0].has_reward);
    CHECK(stream.samples[0].next_return == -12); // close of row 2, symbol 1
    CHECK(stream.samples[0].state_last_ts == 120);
    CHECK(stream.samples[0].reward_ts == 180);

    // Final sample is terminal: no next return.
    CHECK_FALSE(stream.samples[2].has_reward);

    CHECK_THROWS_AS(build_stream(r, 4, "BBBUSD"), std::invalid_argument);
    CHECK_THROWS_AS(build_stream(r, 2, "ZZZUSD"), std::invalid_argument);
}

TEST_CASE("no-lookahead: state timestamps precede reward timestamps") {
    PriceSeries s = synth_series(SynthKind::RandomWalk, 120, 5, 0.0005);
    ReturnTensorStream stream = build_stream(log_returns(s), 30, "EURUSD");
    for (const auto& sample : stream.samples) {
        if (sample.has_reward) {
            CHECK(sample.state_last_ts < sample.reward_ts);
        }
    }
    CHECK(stream.transition_count() == 119 - 30);
}

TEST_CASE("permuting the symbol order permutes the currency mode") {
    PriceSeries s = tiny_series(10, {"AAAUSD", "BBBUSD", "CCCUSD"});
    ReturnSeries r = log_returns(s);
    ReturnTensorStream s1 = build_stream(r, 3, "AAAUSD");

    PriceSeries swapped = s;
    std::swap(swapped.symbols[0], swapped.symbols[2]);
    std::swap(swapped.prices[0], swapped.prices[2]);
    ReturnTensorStream s2 = build_stream(log_returns(swapped), 3, "AAAUSD");

    REQUIRE(s1.samples.size() == s2.samples.size());
    for (std::size_t k = 0; k < s1.samples.size(); ++k) {
        // Swapping symbols 0 and 2 must swap exactly those currency slices.
        for (std::size_t f = 0; f < 4; ++f) {
            for (std::size_t l = 0; l < 3; ++l) {
                CHECK(s2.samples[k].state.at({f, l, 0}) ==
                      s1.samples[k].state.at({f, l, 2}));
                CHECK(s2.samples[k].state.at({f, l, 1}) ==
                      s1.samples[k].state.at({f, l, 1}));
                CHECK(s2.samples[k].state.at({f, l, 2}) ==
                      s1.samples[k].state.at({f, l, 0}));
            }
        }
        CHECK(s2.samples[k].next_return == s1.samples[k].next_return);
    }
}

TEST_CASE("env rewards follow the stateless directional-bet convention") {
    PriceSeries s = synth_series(SynthKind::Alternating, 40, 0);
    auto stream = std::make_shared<const ReturnTensorStream>(
        build_stream(log_returns(s), 5, "EURUSD"));
    TradingEnv env(stream, 0, stream->transition_count());

    env.reset();
    const double r0 = stream->samples[0].next_return;
    auto step = env.step(Action::Buy);
    CHECK(step.reward == doctest::Approx(r0));
    env.reset();
    step = env.step(Action::Sell);
    CHECK(step.reward == doctest::Approx(-r0));

    // Always-Buy cumulative reward telescopes to the total close log-return
    // over the rewarded span.
    env.reset();
    double total = 0.0;
    while (!env.terminal()) total += env.step(Action::Buy).reward;
    const auto returns = log_returns(s);
    double want = 0.0;
    for (std::size_t t = 5; t < returns.rows(); ++t) {
        want += returns.values[0][t][kCloseFeature];
    }
    CHECK(total == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(env.step(Action::Buy), std::logic_error);
}

TEST_CASE("reward antisymmetry holds stepwise") {
    PriceSeries s = synth_series(SynthKind::RandomWalk, 60, 9, 0.0003);
    auto stream = std::make_shared<const ReturnTensorStream>(
        build_stream(log_returns(s), 10, "GBPUSD"));
    TradingEnv buy_env(stream, 0, stream->transition_count());
    TradingEnv sell_env(stream, 0, stream->transition_count());
    while (!buy_env.terminal()) {
        const double rb = buy_env.step(Action::Buy).reward;
        const double rs = sell_env.step(Action::Sell).reward;
        CHECK(rb == doctest::Approx(-rs));
    }
}

TEST_CASE("split is chronological with no leakage") {
    PriceSeries s = synth_series(SynthKind::RandomWalk, 9 * 24, 3);
    auto stream = std::make_shared<const ReturnTensorStream>(
        build_stream(log_returns(s), 12, "EURUSD"));
    auto [train, test] = split(stream, 7.0 / 9.0);
    CHECK(train.transition_count() + test.transition_count() ==
          stream->transition_count());
    const std::size_t want_train =
        std::size_t(std::floor(7.0 / 9.0 * double(stream->transition_count())));
    CHECK(train.transition_count() == want_train);

    // Last train reward strictly precedes the first test reward.
    const std::int64_t last_train_reward = train.reward_timestamp(want_train - 1);
    const std::int64_t first_test_reward = test.reward_timestamp(0);
    CHECK(last_train_reward < first_test_reward);

    // Every train state's data also precedes the first test reward.
    for (std::size_t k = 0; k < want_train; ++k) {
        CHECK(stream->samples[k].state_last_ts < first_test_reward);
    }

    CHECK_THROWS_AS(split(stream, 0.0), std::invalid_argument);
    auto tiny = std::make_shared<const ReturnTensorStream>(
        build_stream(log_returns(synth_series(SynthKind::RandomWalk, 15, 1)), 12,
                     "EURUSD"));
    CHECK_THROWS_AS(split(tiny, 0.01), std::invalid_argument);
}

TEST_CASE("synthetic kinds behave as constructed") {
    // Alternating: symbol 0 close returns are exactly +/-0.001.
    PriceSeries alt = synth_series(SynthKind::Alternating, 50, 7);
    ReturnSeries r = log_returns(alt);
    for (std::size_t t = 0; t < r.rows(); ++t) {
        const double want = (t % 2 == 0) ? 0.001 : -0.001;
        CHECK(r.values[0][t][kCloseFeature] == doctest::Approx(want).epsilon(1e-12));
    }

    // Determinism.
    PriceSeries a = synth_series(SynthKind::RandomWalk, 64, 11, 0.0005);
    PriceSeries b = synth_series(SynthKind::RandomWalk, 64, 11, 0.0005);
    for (std::size_t i = 0; i < a.symbols.size(); ++i) {
        for (std::size_t t = 0; t < a.rows(); ++t) {
            CHECK(a.prices[i][t][3] == b.prices[i][t][3]);
        }
    }

    // Momentum: sign persistence approximately 0.9 over 10^4 steps (3 sigma).
    PriceSeries mom = synth_series(SynthKind::Momentum, 10001, 13);
    ReturnSeries mr = log_returns(mom);
    std::size_t same = 0;
    for (std::size_t t = 1; t < mr.rows(); ++t) {
        same += (mr.values[0][t][3] > 0) == (mr.values[0][t - 1][3] > 0);
    }
    const double n = double(mr.rows() - 1);
    const double sigma = std::sqrt(n * 0.9 * 0.1);
    CHECK(std::abs(double(same) - 0.9 * n) <= 3.0 * sigma);

    CHECK_THROWS_AS(synth_series(SynthKind::RandomWalk, 1, 0), std::invalid_argument);
    CHECK(parse_synth_kind("momentum") == SynthKind::Momentum);
    CHECK_THROWS_AS(parse_synth_kind("trending"), std::invalid_argument);
}
