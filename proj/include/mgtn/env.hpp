#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgtn/tensor.hpp"

namespace mgtn {

enum class Action : int { Buy = 0, Sell = 1 };

// OHLC feature order inside every state tensor and return row.
inline constexpr std::size_t kFeatureCount = 4; // open, high, low, close
inline constexpr std::size_t kCloseFeature = 3;

// Timestamp-aligned OHLC series for a set of currency pairs. After loading,
// all symbols share one strictly increasing minute timeline; gaps were
// forward-filled and counted.
struct PriceSeries {
    std::vector<std::string> symbols;
    std::vector<std::int64_t> timestamps; // unix seconds, strictly increasing
    // prices[symbol][row] = {open, high, low, close}, all positive
    std::vector<std::vector<std::array<double, 4>>> prices;
    std::vector<std::size_t> fill_counts; // forward-filled rows per symbol

    std::size_t rows() const { return timestamps.size(); }
    std::size_t total_fills() const;
};

// Long-format CSV, header exactly: timestamp,symbol,open,high,low,close
// with ISO-8601 UTC timestamps. Aborts when the forward-fill fraction
// exceeds max_fill_fraction.
PriceSeries load_prices(const std::string& path, const std::vector<std::string>& symbols,
                        double max_fill_fraction = 0.05);
void write_prices_csv(const std::string& path, const PriceSeries& series);

std::string format_timestamp(std::int64_t unix_seconds);
std::int64_t parse_timestamp(const std::string& iso);

// Per-pair OHLC log-returns r_t = ln(p_t) - ln(p_{t-1}); one row shorter
// than the prices, stamped at the later minute.
struct ReturnSeries {
    std::vector<std::string> symbols;
    std::vector<std::int64_t> timestamps;
    // values[symbol][row] = {open, high, low, close} log-returns
    std::vector<std::vector<std::array<double, 4>>> values;

    std::size_t rows() const { return timestamps.size(); }
};

ReturnSeries log_returns(const PriceSeries& series);

// One emitted state: the (J_0, I_1, I_2) window tensor ending at a return
// row, plus the target pair's next-step close return when it exists. The
// final state of a stream carries no reward and is terminal.
struct StreamSample {
    DenseTensor state;
    double next_return = 0.0;
    bool has_reward = false;
    std::int64_t state_last_ts = 0; // newest return row inside the state
    std::int64_t reward_ts = 0;     // timestamp of the rewarded return row
};

struct ReturnTensorStream {
    std::vector<StreamSample> samples;
    std::size_t lags = 0;
    std::size_t target_index = 0;
    double state_scale = 1.0;
    std::vector<std::string> symbols;

    // Samples that carry a reward (all but the last).
    std::size_t transition_count() const {
        return samples.empty() ? 0 : samples.size() - 1;
    }
};

// state_scale multiplies the state features only (conditioning for the
// network); rewards stay in raw log-return units.
ReturnTensorStream build_stream(const ReturnSeries& returns, std::size_t lags,
                                const std::string& target_symbol,
                                double state_scale = 1.0);

// Single-consumer trading episode over a contiguous slice of a stream.
// Each action is a fresh one-minute directional bet: reward is +return for
// Buy and -return for Sell on the target pair's next close log-return.
class TradingEnv {
public:
    TradingEnv() = default;
    TradingEnv(std::shared_ptr<const ReturnTensorStream> stream, std::size_t first,
               std::size_t transitions);

    void reset() { cursor_ = 0; }
    bool terminal() const { return cursor_ >= transitions_; }
    // Number of actionable steps in a full episode.
    std::size_t transition_count() const { return transitions_; }

    const DenseTensor& state() const;

    struct StepResult {
        double reward = 0.0;
        const DenseTensor* next_state = nullptr;
        bool terminal = false;
    };
    StepResult step(Action action);

    const ReturnTensorStream& stream() const { return *stream_; }
    std::size_t first_sample() const { return first_; }
    // Timestamp of the reward emitted by step number k (0-based).
    std::int64_t reward_timestamp(std::size_t k) const;

private:
    std::shared_ptr<const ReturnTensorStream> stream_;
    std::size_t first_ = 0;
    std::size_t transitions_ = 0;
    std::size_t cursor_ = 0;
};

// Chronological split: train keeps the leading fraction of transitions,
// test the rest; a window straddling the boundary belongs to test only.
std::pair<TradingEnv, TradingEnv> split(std::shared_ptr<const ReturnTensorStream> stream,
                                        double train_fraction);

enum class SynthKind { Momentum, Alternating, RandomWalk };
SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

// Deterministic synthetic OHLC generator covering all nine pair slots.
// Symbol 0 follows the exact +/-0.001 log-return pattern of its kind; the
// other slots are correlated copies with independent Gaussian noise of the
// given scale.
PriceSeries synth_series(SynthKind kind, std::size_t length, std::uint64_t seed,
                         double noise = 0.0);

const std::vector<std::string>& synth_symbols();

} // namespace mgtn
