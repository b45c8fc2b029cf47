#include "mgtn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgtn {

namespace {

double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / double(xs.size());
}

double population_stddev(std::span<const double> xs) {
    const double mu = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return std::sqrt(s / double(xs.size()));
}

} // namespace

EquityCurve::EquityCurve(std::vector<double> returns, double initial)
    : initial_capital(initial), log_returns(std::move(returns)) {
    if (!(initial_capital > 0.0)) {
        throw std::invalid_argument("EquityCurve: initial capital must be positive");
    }
}

std::vector<double> EquityCurve::equity() const {
    std::vector<double> e;
    e.reserve(log_returns.size() + 1);
    e.push_back(initial_capital);
    double acc = 0.0;
    for (double r : log_returns) {
        acc += r;
        e.push_back(initial_capital * std::exp(acc));
    }
    return e;
}

double total_return_pct(const EquityCurve& curve) {
    double acc = 0.0;
    for (double r : curve.log_returns) acc += r;
    return 100.0 * (std::exp(acc) - 1.0);
}

std::optional<double> sharpe(std::span<const double> returns) {
    if (returns.size() < 2) return std::nullopt;
    const double sigma = population_stddev(returns);
    if (sigma == 0.0) return std::nullopt;
    return mean(returns) / sigma;
}

std::optional<double> sortino(std::span<const double> returns) {
    if (returns.empty()) return std::nullopt;
    std::vector<double> negatives;
    for (double r : returns) {
        if (r < 0.0) negatives.push_back(r);
    }
    if (negatives.empty()) return std::nullopt;
    const double sigma_d = population_stddev(negatives);
    if (sigma_d == 0.0) return std::nullopt;
    return mean(returns) / sigma_d;
}

double max_drawdown_pct(const EquityCurve& curve) {
    const auto e = curve.equity();
    double peak = e.front();
    double worst = 0.0;
    for (double v : e) {
        peak = std::max(peak, v);
        worst = std::max(worst, (peak - v) / peak);
    }
    return 100.0 * worst;
}

std::optional<double> hit_rate_pct(std::span<const double> rewards) {
    if (rewards.empty()) {
        throw std::invalid_argument("hit_rate: empty reward sequence");
    }
    std::size_t wins = 0, resolved = 0;
    for (double r : rewards) {
        if (r > 0.0) ++wins;
        if (r != 0.0) ++resolved;
    }
    if (resolved == 0) return std::nullopt;
    return 100.0 * double(wins) / double(resolved);
}

MetricReport compute_metrics(const EquityCurve& curve) {
    MetricReport rep;
    rep.total_return_pct = total_return_pct(curve);
    rep.sharpe = sharpe(curve.log_returns);
    rep.sortino = sortino(curve.log_returns);
    rep.max_drawdown_pct = max_drawdown_pct(curve);
    rep.hit_rate_pct =
        curve.log_returns.empty() ? std::nullopt : hit_rate_pct(curve.log_returns);
    return rep;
}

} // namespace mgtn
