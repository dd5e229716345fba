#include "sturmian/bigfloat.hpp"

#include <algorithm>
#include <vector>

namespace sturmian {

BigFloat::BigFloat(int bits) {
  mpfr_init2(value_, std::max(bits, MPFR_PREC_MIN));
  mpfr_set_zero(value_, 1);
}

BigFloat::BigFloat(double value, int bits) {
  mpfr_init2(value_, std::max(bits, 53));
  mpfr_set_d(value_, value, MPFR_RNDN);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this != &other) {
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(value_); }

void BigFloat::grow_to(int bits) {
  if (bits > this->bits()) mpfr_prec_round(value_, bits, MPFR_RNDN);
}

std::string BigFloat::to_string(int digits) const {
  std::vector<char> buf(static_cast<std::size_t>(digits) + 32);
  mpfr_snprintf(buf.data(), buf.size(), "%.*Rg", digits, value_);
  return std::string(buf.data());
}

BigFloat& BigFloat::operator+=(const BigFloat& rhs) {
  grow_to(rhs.bits());
  mpfr_add(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigFloat& BigFloat::operator-=(const BigFloat& rhs) {
  grow_to(rhs.bits());
  mpfr_sub(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigFloat& BigFloat::operator*=(const BigFloat& rhs) {
  grow_to(rhs.bits());
  mpfr_mul(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigFloat& BigFloat::operator/=(const BigFloat& rhs) {
  grow_to(rhs.bits());
  mpfr_div(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigFloat BigFloat::operator-() const {
  BigFloat out(*this);
  mpfr_neg(out.value_, out.value_, MPFR_RNDN);
  return out;
}

BigFloat abs(const BigFloat& x) {
  BigFloat out(x);
  mpfr_abs(out.raw(), out.raw(), MPFR_RNDN);
  return out;
}

BigFloat midpoint(const BigFloat& a, const BigFloat& b) {
  BigFloat out(std::max(a.bits(), b.bits()));
  mpfr_add(out.raw(), a.raw(), b.raw(), MPFR_RNDN);
  mpfr_div_2ui(out.raw(), out.raw(), 1, MPFR_RNDN);
  return out;
}

}  // namespace sturmian
