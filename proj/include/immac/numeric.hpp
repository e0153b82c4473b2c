#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace immac {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Neumaier-compensated running sum. Terms should be added smallest-first
/// where the caller controls the order.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    void scale(double s) {
        sum_ *= s;
        comp_ *= s;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Streaming log-sum-exp: accumulates exp(l_i) without ever forming the
/// individual exponentials at their natural scale.
class LogSumAccumulator {
public:
    void add(double log_term) {
        if (log_term == kNegInf) return;
        if (max_ == kNegInf) {
            max_ = log_term;
            sum_.add(1.0);
            return;
        }
        if (log_term > max_) {
            sum_.scale(std::exp(max_ - log_term));
            max_ = log_term;
            sum_.add(1.0);
        } else {
            sum_.add(std::exp(log_term - max_));
        }
    }
    /// log of the accumulated sum; -inf when nothing positive was added.
    double log_value() const {
        if (max_ == kNegInf) return kNegInf;
        return max_ + std::log(sum_.value());
    }
    double value() const { return std::exp(log_value()); }
    double max_log_term() const { return max_; }

private:
    double max_ = kNegInf;
    CompensatedSum sum_;
};

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// k * log(x) with the convention 0 * log(0) = 0.
inline double power_log(double x, double k) {
    if (k == 0.0) return 0.0;
    if (x == 0.0) return kNegInf;
    return k * std::log(x);
}

double log_sum_exp(std::span<const double> log_terms);

}  // namespace immac
