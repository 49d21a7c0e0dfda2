#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <ostream>

namespace orbk {

using cplx = std::complex<double>;

/// Neumaier compensated accumulator.
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
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  CompensatedComplexSum& operator+=(cplx x) {
    re_.add(x.real());
    im_.add(x.imag());
    return *this;
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

/// Exact rational phase p/q reduced into [0, 1).
class Phase {
 public:
  constexpr Phase() = default;
  Phase(std::int64_t num, std::int64_t den) {
    if (den <= 0) {
      num = -num;
      den = -den;
    }
    num %= den;
    if (num < 0) num += den;
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }

  Phase operator+(const Phase& o) const { return {num_ * o.den_ + o.num_ * den_, den_ * o.den_}; }
  Phase operator-() const { return {-num_, den_}; }
  Phase operator-(const Phase& o) const { return *this + (-o); }
  Phase scaled(std::int64_t k) const { return {num_ * k, den_}; }

  friend bool operator==(const Phase&, const Phase&) = default;
  friend auto operator<=>(const Phase& a, const Phase& b) {
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }
  friend std::ostream& operator<<(std::ostream& os, const Phase& p) {
    return os << p.num_ << '/' << p.den_;
  }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// e^{2 pi i p/q}; quarter turns are returned exactly.
  cplx unit_root() const {
    if (num_ == 0) return {1.0, 0.0};
    if (den_ == 2) return {-1.0, 0.0};
    if (den_ == 4) return num_ == 1 ? cplx{0.0, 1.0} : cplx{0.0, -1.0};
    const double angle = 2.0 * std::numbers::pi * to_double();
    return {std::cos(angle), std::sin(angle)};
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Integer power by repeated squaring.
template <typename T>
T ipow(T base, unsigned exponent) {
  T result{1};
  while (exponent != 0) {
    if (exponent & 1U) result *= base;
    base *= base;
    exponent >>= 1U;
  }
  return result;
}

}  // namespace orbk
