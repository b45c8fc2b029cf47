#include "mgtn/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mgtn/rng.hpp"

namespace mgtn {

std::size_t PriceSeries::total_fills() const {
    std::size_t s = 0;
    for (std::size_t c : fill_counts) s += c;
    return s;
}

std::string format_timestamp(std::int64_t unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::int64_t parse_timestamp(const std::string& iso) {
    std::tm tm{};
    int y, mo, d, h, mi, s;
    if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &s) != 6) {
        throw std::runtime_error("bad timestamp: " + iso);
    }
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    return static_cast<std::int64_t>(timegm(&tm));
}

PriceSeries load_prices(const std::string& path, const std::vector<std::string>& symbols,
                        double max_fill_fraction) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_prices: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_prices: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,symbol,open,high,low,close") {
        throw std::runtime_error("load_prices: unexpected header '" + line + "'");
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < symbols.size(); ++i) index[symbols[i]] = i;

    // Raw rows per symbol, in file order.
    std::vector<std::vector<std::pair<std::int64_t, std::array<double, 4>>>> raw(
        symbols.size());

    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string ts_str, sym, field;
        if (!std::getline(ls, ts_str, ',') || !std::getline(ls, sym, ',')) {
            throw std::runtime_error("load_prices: unparseable row " +
                                     std::to_string(row_no));
        }
        std::array<double, 4> ohlc{};
        for (int f = 0; f < 4; ++f) {
            if (!std::getline(ls, field, ',')) {
                throw std::runtime_error("load_prices: unparseable row " +
                                         std::to_string(row_no));
            }
            try {
                ohlc[f] = std::stod(field);
            } catch (const std::exception&) {
                throw std::runtime_error("load_prices: unparseable row " +
                                         std::to_string(row_no));
            }
            if (!(ohlc[f] > 0.0) || !std::isfinite(ohlc[f])) {
                throw std::runtime_error("load_prices: nonpositive price at row " +
                                         std::to_string(row_no));
            }
        }
        auto it = index.find(sym);
        if (it == index.end()) continue; // unrequested symbol
        const std::int64_t ts = parse_timestamp(ts_str);
        auto& rows = raw[it->second];
        if (!rows.empty() && ts <= rows.back().first) {
            throw std::runtime_error("load_prices: nonmonotone timestamps for " + sym +
                                     " at row " + std::to_string(row_no));
        }
        rows.emplace_back(ts, ohlc);
    }

    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (raw[i].empty()) {
            throw std::runtime_error("load_prices: missing symbol " + symbols[i]);
        }
    }

    // Shared timeline: union of timestamps from the latest common start on.
    std::int64_t start = raw[0].front().first;
    for (const auto& rows : raw) start = std::max(start, rows.front().first);
    std::set<std::int64_t> stamp_set;
    for (const auto& rows : raw) {
        for (const auto& [ts, ohlc] : rows) {
            if (ts >= start) stamp_set.insert(ts);
        }
    }
    std::vector<std::int64_t> timeline(stamp_set.begin(), stamp_set.end());

    PriceSeries out;
    out.symbols = symbols;
    out.timestamps = timeline;
    out.prices.assign(symbols.size(), {});
    out.fill_counts.assign(symbols.size(), 0);

    for (std::size_t i = 0; i < symbols.size(); ++i) {
        auto& dst = out.prices[i];
        dst.reserve(timeline.size());
        std::size_t pos = 0;
        const auto& rows = raw[i];
        std::array<double, 4> last{};
        bool have_last = false;
        // Skip rows before the common start, remembering the newest.
        while (pos < rows.size() && rows[pos].first < start) {
            last = rows[pos].second;
            have_last = true;
            ++pos;
        }
        for (std::int64_t ts : timeline) {
            if (pos < rows.size() && rows[pos].first == ts) {
                last = rows[pos].second;
                have_last = true;
                ++pos;
                dst.push_back(last);
            } else {
                if (!have_last) {
                    throw std::runtime_error("load_prices: no data to forward-fill " +
                                             symbols[i]);
                }
                ++out.fill_counts[i];
                dst.push_back(last);
            }
        }
    }

    const double denom = double(timeline.size() * symbols.size());
    if (denom > 0.0 && double(out.total_fills()) / denom > max_fill_fraction) {
        throw std::runtime_error(
            "load_prices: forward-fill fraction " +
            std::to_string(double(out.total_fills()) / denom) + " exceeds limit " +
            std::to_string(max_fill_fraction));
    }
    return out;
}

void write_prices_csv(const std::string& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_prices_csv: cannot write " + path);
    out << "timestamp,symbol,open,high,low,close\n";
    char buf[128];
    for (std::size_t t = 0; t < series.rows(); ++t) {
        const std::string ts = format_timestamp(series.timestamps[t]);
        for (std::size_t s = 0; s < series.symbols.size(); ++s) {
            const auto& p = series.prices[s][t];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", p[0], p[1], p[2],
                          p[3]);
            out << ts << ',' << series.symbols[s] << ',' << buf << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_prices_csv: write failure on " + path);
}

ReturnSeries log_returns(const PriceSeries& series) {
    if (series.rows() < 2) {
        throw std::invalid_argument("log_returns: need at least two rows");
    }
    ReturnSeries out;
    out.symbols = series.symbols;
    out.timestamps.assign(series.timestamps.begin() + 1, series.timestamps.end());
    out.values.assign(series.symbols.size(), {});
    for (std::size_t s = 0; s < series.symbols.size(); ++s) {
        auto& dst = out.values[s];
        dst.reserve(series.rows() - 1);
        for (std::size_t t = 1; t < series.rows(); ++t) {
            std::array<double, 4> r{};
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                r[f] = std::log(series.prices[s][t][f]) -
                       std::log(series.prices[s][t - 1][f]);
            }
            dst.push_back(r);
        }
    }
    return out;
}

ReturnTensorStream build_stream(const ReturnSeries& returns, std::size_t lags,
                                const std::string& target_symbol, double state_scale) {
    const std::size_t t_total = returns.rows();
    if (lags < 1) throw std::invalid_argument("build_stream: lags must be >= 1");
    if (!(state_scale > 0.0)) {
        throw std::invalid_argument("build_stream: state scale must be positive");
    }
    if (t_total < lags + 1) {
        throw std::invalid_argument("build_stream: insufficient history (need >= " +
                                    std::to_string(lags + 1) + " return rows)");
    }
    auto target_it =
        std::find(returns.symbols.begin(), returns.symbols.end(), target_symbol);
    if (target_it == returns.symbols.end()) {
        throw std::invalid_argument("build_stream: unknown target pair " + target_symbol);
    }
    const std::size_t target = std::size_t(target_it - returns.symbols.begin());
    const std::size_t n_sym = returns.symbols.size();

    ReturnTensorStream stream;
    stream.lags = lags;
    stream.target_index = target;
    stream.state_scale = state_scale;
    stream.symbols = returns.symbols;
    stream.samples.reserve(t_total - lags + 1);

    for (std::size_t t = lags - 1; t < t_total; ++t) {
        StreamSample sample;
        DenseTensor state({kFeatureCount, lags, n_sym});
        auto* data = state.data().data();
        std::size_t pos = 0;
        // Little-Endian fill: feature fastest, then lag (oldest first),
        // then currency.
        for (std::size_t s = 0; s < n_sym; ++s) {
            for (std::size_t l = 0; l < lags; ++l) {
                const auto& row = returns.values[s][t - lags + 1 + l];
                for (std::size_t f = 0; f < kFeatureCount; ++f) {
                    data[pos++] = state_scale * row[f];
                }
            }
        }
        sample.state = std::move(state);
        sample.state_last_ts = returns.timestamps[t];
        if (t + 1 < t_total) {
            sample.has_reward = true;
            sample.next_return = returns.values[target][t + 1][kCloseFeature];
            sample.reward_ts = returns.timestamps[t + 1];
        }
        stream.samples.push_back(std::move(sample));
    }
    return stream;
}

TradingEnv::TradingEnv(std::shared_ptr<const ReturnTensorStream> stream,
                       std::size_t first, std::size_t transitions)
    : stream_(std::move(stream)), first_(first), transitions_(transitions) {
    // The slice needs one sample past the last transition as terminal s'.
    if (!stream_ || transitions_ == 0 ||
        first_ + transitions_ >= stream_->samples.size()) {
        throw std::invalid_argument("TradingEnv: slice out of range");
    }
}

const DenseTensor& TradingEnv::state() const {
    return stream_->samples[first_ + cursor_].state;
}

TradingEnv::StepResult TradingEnv::step(Action action) {
    if (terminal()) throw std::logic_error("TradingEnv: step on terminal env");
    const StreamSample& sample = stream_->samples[first_ + cursor_];
    StepResult r;
    r.reward = (action == Action::Buy ? 1.0 : -1.0) * sample.next_return;
    ++cursor_;
    r.next_state = &stream_->samples[first_ + cursor_].state;
    r.terminal = terminal();
    return r;
}

std::int64_t TradingEnv::reward_timestamp(std::size_t k) const {
    return stream_->samples[first_ + k].reward_ts;
}

std::pair<TradingEnv, TradingEnv> split(std::shared_ptr<const ReturnTensorStream> stream,
                                        double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: fraction must be in (0,1)");
    }
    const std::size_t transitions = stream->transition_count();
    const std::size_t train_n =
        static_cast<std::size_t>(std::floor(train_fraction * double(transitions)));
    const std::size_t test_n = transitions - train_n;
    if (train_n == 0 || test_n == 0) {
        throw std::invalid_argument("split: degenerate split (side has no transitions)");
    }
    TradingEnv train(stream, 0, train_n);
    TradingEnv test(stream, train_n, test_n);
    return {std::move(train), std::move(test)};
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "momentum") return SynthKind::Momentum;
    if (name == "alternating") return SynthKind::Alternating;
    if (name == "random-walk") return SynthKind::RandomWalk;
    throw std::invalid_argument("unknown synthetic kind: " + name);
}

std::string synth_kind_name(SynthKind kind) {
    switch (kind) {
        case SynthKind::Momentum: return "momentum";
        case SynthKind::Alternating: return "alternating";
        case SynthKind::RandomWalk: return "random-walk";
    }
    return "?";
}

const std::vector<std::string>& synth_symbols() {
    static const std::vector<std::string> symbols{
        "EURUSD", "GBPUSD", "AUDUSD", "NZDUSD", "CADUSD",
        "CHFUSD", "JPYUSD", "SEKUSD", "NOKUSD"};
    return symbols;
}

PriceSeries synth_series(SynthKind kind, std::size_t length, std::uint64_t seed,
                         double noise) {
    if (length < 2) throw std::invalid_argument("synth_series: length must be >= 2");
    constexpr double kMagnitude = 0.001;
    constexpr std::int64_t kStart = 1569888000; // 2019-10-01T00:00:00Z
    const auto& symbols = synth_symbols();
    const std::size_t n_sym = symbols.size();

    Rng rng(seed);
    // Shared sign sequence for the correlated copies.
    std::vector<double> signs(length - 1);
    switch (kind) {
        case SynthKind::Alternating:
            for (std::size_t t = 0; t < signs.size(); ++t) {
                signs[t] = (t % 2 == 0) ? 1.0 : -1.0;
            }
            break;
        case SynthKind::Momentum: {
            double s = rng.uniform01() < 0.5 ? 1.0 : -1.0;
            for (std::size_t t = 0; t < signs.size(); ++t) {
                if (t > 0 && rng.uniform01() >= 0.9) s = -s;
                signs[t] = s;
            }
            break;
        }
        case SynthKind::RandomWalk:
            for (std::size_t t = 0; t < signs.size(); ++t) {
                signs[t] = rng.uniform01() < 0.5 ? 1.0 : -1.0;
            }
            break;
    }

    PriceSeries out;
    out.symbols = symbols;
    out.timestamps.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        out.timestamps[t] = kStart + std::int64_t(t) * 60;
    }
    out.prices.assign(n_sym, {});
    out.fill_counts.assign(n_sym, 0);

    for (std::size_t s = 0; s < n_sym; ++s) {
        const double base = 1.0 + 0.05 * double(s);
        auto& dst = out.prices[s];
        dst.resize(length);
        double close = base;
        dst[0] = {base, base, base, base};
        for (std::size_t t = 1; t < length; ++t) {
            double r = signs[t - 1] * kMagnitude;
            if (s > 0 && noise > 0.0) r += noise * rng.normal();
            const double open = close;
            close = close * std::exp(r);
            const double high = std::max(open, close);
            const double low = std::min(open, close);
            dst[t] = {open, high, low, close};
        }
    }
    return out;
}

} // namespace mgtn
