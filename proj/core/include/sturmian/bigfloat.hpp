#pragma once

#include <mpfr.h>

#include <string>

namespace sturmian {

/// Minimal RAII wrapper around an MPFR value with per-object precision.
///
/// Only the operations needed by transfer-matrix evaluation and bisection are
/// provided. The precision of a result is the larger of the operand
/// precisions, so mixed-precision expressions never silently truncate.
class BigFloat {
 public:
  explicit BigFloat(int bits = 53);
  BigFloat(double value, int bits);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  int bits() const { return static_cast<int>(mpfr_get_prec(value_)); }
  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  std::string to_string(int digits) const;

  BigFloat& operator+=(const BigFloat& rhs);
  BigFloat& operator-=(const BigFloat& rhs);
  BigFloat& operator*=(const BigFloat& rhs);
  BigFloat& operator/=(const BigFloat& rhs);
  BigFloat operator-() const;

  friend BigFloat operator+(BigFloat lhs, const BigFloat& rhs) { return lhs += rhs; }
  friend BigFloat operator-(BigFloat lhs, const BigFloat& rhs) { return lhs -= rhs; }
  friend BigFloat operator*(BigFloat lhs, const BigFloat& rhs) { return lhs *= rhs; }
  friend BigFloat operator/(BigFloat lhs, const BigFloat& rhs) { return lhs /= rhs; }

  friend int compare(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.value_, b.value_); }
  friend bool operator<(const BigFloat& a, const BigFloat& b) { return compare(a, b) < 0; }
  friend bool operator>(const BigFloat& a, const BigFloat& b) { return compare(a, b) > 0; }
  friend bool operator<=(const BigFloat& a, const BigFloat& b) { return compare(a, b) <= 0; }
  friend bool operator>=(const BigFloat& a, const BigFloat& b) { return compare(a, b) >= 0; }
  friend bool operator==(const BigFloat& a, const BigFloat& b) { return compare(a, b) == 0; }

  mpfr_ptr raw() { return value_; }
  mpfr_srcptr raw() const { return value_; }

 private:
  void grow_to(int bits);

  mpfr_t value_;
};

BigFloat abs(const BigFloat& x);

/// Midpoint of [a, b] at the larger operand precision.
BigFloat midpoint(const BigFloat& a, const BigFloat& b);

}  // namespace sturmian
