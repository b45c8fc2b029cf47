#pragma once

#include <optional>
#include <span>
#include <vector>

namespace mgtn {

// Equity path from per-step log-returns: e_t = e_0 * exp(sum_{k<=t} r_k).
struct EquityCurve {
    double initial_capital = 1000.0;
    std::vector<double> log_returns;

    explicit EquityCurve(std::vector<double> returns, double initial = 1000.0);

    // length = returns + 1, starting at the initial capital
    std::vector<double> equity() const;
};

// Total percentage return 100 * (e_T / e_0 - 1).
double total_return_pct(const EquityCurve& curve);

// Per-step (non-annualized) mean / population standard deviation. Undefined
// (nullopt) when the deviation is zero.
std::optional<double> sharpe(std::span<const double> returns);

// Mean return over the population standard deviation of the strictly
// negative returns; undefined when there are none or they are constant.
std::optional<double> sortino(std::span<const double> returns);

// Largest peak-to-trough relative equity loss, in percent.
double max_drawdown_pct(const EquityCurve& curve);

// 100 * #{r > 0} / #{r != 0}; zero-reward steps are not resolved trades and
// are excluded from both counts. Undefined when every reward is zero.
std::optional<double> hit_rate_pct(std::span<const double> rewards);

struct MetricReport {
    double total_return_pct = 0.0;
    std::optional<double> sharpe;
    std::optional<double> sortino;
    double max_drawdown_pct = 0.0;
    std::optional<double> hit_rate_pct;
};

MetricReport compute_metrics(const EquityCurve& curve);

} // namespace mgtn
