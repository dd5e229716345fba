#include "sturmian/contfrac.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "sturmian/error.hpp"

namespace sturmian {

namespace {

constexpr int kMaxCompareLevels = 20000;

int sign(const mpz_class& x) { return sgn(x); }

// Linear form a * alpha + b with integer coefficients.
struct LinearForm {
  mpz_class a;
  mpz_class b;

  LinearForm& operator+=(const LinearForm& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  LinearForm& operator-=(const LinearForm& o) {
    a -= o.a;
    b -= o.b;
    return *this;
  }
  friend LinearForm operator+(LinearForm l, const LinearForm& r) { return l += r; }
  friend LinearForm operator-(LinearForm l, const LinearForm& r) { return l -= r; }
  friend LinearForm operator*(long s, const LinearForm& f) { return {s * f.a, s * f.b}; }

  bool is_zero() const { return a == 0 && b == 0; }
  mpq_class at(const mpq_class& x) const { return mpq_class(a) * x + mpq_class(b); }
};

// Incremental generator of convergents p_k / q_k.
class ConvergentWalker {
 public:
  explicit ConvergentWalker(const ContinuedFraction& cf) : cf_(cf) {}

  int k() const { return k_; }
  const mpz_class& p() const { return p_; }
  const mpz_class& q() const { return q_; }
  const mpz_class& p_prev() const { return p_prev_; }
  const mpz_class& q_prev() const { return q_prev_; }

  bool can_advance() const { return cf_.has_quotient(k_ + 1); }

  void advance() {
    const int a = cf_.quotient(k_ + 1);
    mpz_class p_next = a * p_ + p_prev_;
    mpz_class q_next = a * q_ + q_prev_;
    p_prev_ = std::move(p_);
    q_prev_ = std::move(q_);
    p_ = std::move(p_next);
    q_ = std::move(q_next);
    ++k_;
  }

 private:
  const ContinuedFraction& cf_;
  int k_ = 0;
  mpz_class p_prev_ = 1;
  mpz_class q_prev_ = 0;
  mpz_class p_ = 0;
  mpz_class q_ = 1;
};

// sign(alpha - r), exact.
int compare_alpha(const ContinuedFraction& cf, const mpq_class& r) {
  if (r <= 0) return 1;
  ConvergentWalker w(cf);
  for (int guard = 0; guard < kMaxCompareLevels; ++guard) {
    const mpq_class c(w.p(), w.q());
    const bool last = !w.can_advance();
    if (c == r) {
      if (last) return 0;
      return (w.k() % 2 == 0) ? 1 : -1;
    }
    if (last) return c > r ? 1 : -1;
    w.advance();
    const mpq_class c_next(w.p(), w.q());
    // alpha lies in the closed interval spanned by consecutive convergents.
    const mpq_class lo = std::min(c, c_next);
    const mpq_class hi = std::max(c, c_next);
    if (r < lo) return 1;
    if (r > hi) return -1;
  }
  throw NumericError("alpha comparison did not resolve within the convergent budget");
}

int sign_of(const ContinuedFraction& cf, const LinearForm& f) {
  return sign_of_linear(cf, f.a, f.b);
}

// beta_k as a linear form: (-1)^k (q_k alpha - p_k).
LinearForm beta_form(const Convergent& c) {
  const long s = (c.k % 2 == 0) ? 1 : -1;
  return {s * c.q, -s * c.p};
}

int parse_int(std::string_view token) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
  int value = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc{} || ptr != last) {
    throw InvalidInput("invalid continued-fraction quotient '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

void PrecisionBudget::validate() const {
  if (bits < 53) throw InvalidInput("precision must be at least 53 bits");
  if (!(abs_tol > 0.0) || !std::isfinite(abs_tol)) throw InvalidInput("abs_tol must be positive");
}

double RationalInterval::mid_double() const {
  const mpq_class mid = (lo + hi) / 2;
  return mid.get_d();
}

ContinuedFraction::ContinuedFraction(std::vector<int> quotients, std::vector<int> periodic_tail)
    : prefix_(std::move(quotients)), tail_(std::move(periodic_tail)) {
  if (prefix_.empty() && tail_.empty()) throw InvalidInput("continued fraction has no quotients");
  auto positive = [](int a) { return a >= 1; };
  if (!std::all_of(prefix_.begin(), prefix_.end(), positive) ||
      !std::all_of(tail_.begin(), tail_.end(), positive)) {
    throw InvalidInput("partial quotients must be >= 1");
  }
  if (tail_.empty() && prefix_.size() == 1 && prefix_[0] == 1) {
    throw InvalidInput("[0;1] represents 1, which is outside (0,1)");
  }
}

ContinuedFraction ContinuedFraction::golden_mean() { return ContinuedFraction({}, {1}); }

ContinuedFraction ContinuedFraction::parse(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s == "golden" || s == "fibonacci") return golden_mean();
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::replace(s.begin(), s.end(), ';', ',');
  if (s.empty()) throw InvalidInput("empty continued fraction");

  std::string head = s;
  std::string periodic;
  if (const auto open = s.find('('); open != std::string::npos) {
    const auto close = s.find(')', open);
    if (close == std::string::npos || close != s.size() - 1) {
      throw InvalidInput("periodic block must be a final '(...)' group");
    }
    periodic = s.substr(open + 1, close - open - 1);
    head = s.substr(0, open);
    if (periodic.empty()) throw InvalidInput("empty periodic block");
  }
  auto split = [](const std::string& str) {
    std::vector<int> out;
    std::string_view view(str);
    while (!view.empty()) {
      const auto comma = view.find(',');
      const auto token = view.substr(0, comma);
      if (!token.empty()) out.push_back(parse_int(token));
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    return out;
  };
  std::vector<int> q = split(head);
  if (q.empty() || q.front() != 0) throw InvalidInput("continued fraction must start with a_0 = 0");
  q.erase(q.begin());
  return ContinuedFraction(std::move(q), split(periodic));
}

bool ContinuedFraction::has_quotient(int k) const {
  if (k < 1) return false;
  return !tail_.empty() || k <= prefix_length();
}

int ContinuedFraction::quotient(int k) const {
  if (k < 1) throw InvalidInput("quotient index must be >= 1");
  if (k <= prefix_length()) return prefix_[static_cast<std::size_t>(k - 1)];
  if (tail_.empty()) {
    throw InvalidInput("quotient a_" + std::to_string(k) + " requested beyond a finite expansion of length " +
                       std::to_string(prefix_length()));
  }
  const auto offset = static_cast<std::size_t>(k - prefix_length() - 1);
  return tail_[offset % tail_.size()];
}

std::string ContinuedFraction::to_string() const {
  std::ostringstream os;
  os << 0;
  for (int a : prefix_) os << ',' << a;
  if (!tail_.empty()) {
    os << ",(";
    for (std::size_t i = 0; i < tail_.size(); ++i) os << (i ? "," : "") << tail_[i];
    os << ')';
  }
  return os.str();
}

std::vector<Convergent> convergents(const ContinuedFraction& cf, int k_max) {
  if (k_max < 0) throw InvalidInput("k_max must be >= 0");
  if (cf.is_finite() && k_max > cf.prefix_length()) {
    throw InvalidInput("convergent k = " + std::to_string(k_max) + " requested beyond a finite expansion of length " +
                       std::to_string(cf.prefix_length()));
  }
  std::vector<Convergent> out;
  out.reserve(static_cast<std::size_t>(k_max) + 2);
  out.push_back({-1, 1, 0});
  ConvergentWalker w(cf);
  out.push_back({0, w.p(), w.q()});
  while (w.k() < k_max) {
    w.advance();
    out.push_back({w.k(), w.p(), w.q()});
  }
  return out;
}

SmallConvergent small_convergent(const ContinuedFraction& cf, int k) {
  const auto c = convergents(cf, std::max(k, 0));
  const Convergent& ck = c.at(static_cast<std::size_t>(k + 1));
  if (!ck.p.fits_slong_p() || !ck.q.fits_slong_p()) {
    throw InvalidInput("convergent " + std::to_string(k) + " does not fit a machine integer");
  }
  return {ck.p.get_si(), ck.q.get_si()};
}

RationalInterval alpha_value(const ContinuedFraction& cf, const PrecisionBudget& budget) {
  budget.validate();
  const mpq_class tol(budget.abs_tol);
  ConvergentWalker w(cf);
  for (int guard = 0; guard < kMaxCompareLevels; ++guard) {
    const mpq_class c(w.p(), w.q());
    if (!w.can_advance()) return {c, c};
    w.advance();
    const mpq_class next(w.p(), w.q());
    RationalInterval enc{std::min(c, next), std::max(c, next)};
    if (!w.can_advance()) return {next, next};
    if (enc.width() <= tol) return enc;
  }
  throw NumericError("insufficient quotients to enclose alpha at the requested tolerance");
}

int sign_of_linear(const ContinuedFraction& cf, const mpz_class& a, const mpz_class& b) {
  if (a == 0) return sign(b);
  const mpq_class r(-b, a);
  mpq_class rr = r;
  rr.canonicalize();
  return sign(a) * compare_alpha(cf, rr);
}

mpz_class floor_n_alpha(const ContinuedFraction& cf, long n) {
  PrecisionBudget coarse;
  coarse.abs_tol = 1e-3 / static_cast<double>(std::max(1L, std::labs(n)));
  const RationalInterval enc = alpha_value(cf, coarse);
  mpq_class approx = mpq_class(n) * enc.lo;
  mpz_class t;
  mpz_fdiv_q(t.get_mpz_t(), approx.get_num_mpz_t(), approx.get_den_mpz_t());
  const mpz_class nn(n);
  while (sign_of_linear(cf, nn, -(t + 1)) >= 0) ++t;
  while (sign_of_linear(cf, nn, -t) < 0) --t;
  return t;
}

RationalInterval frac_n_alpha(const ContinuedFraction& cf, long n, const PrecisionBudget& budget) {
  budget.validate();
  if (n == 0) throw InvalidInput("{n alpha} requires n != 0");
  const mpz_class m = floor_n_alpha(cf, n);
  if (sign_of_linear(cf, mpz_class(n), -m) == 0) {
    throw InvalidInput("n alpha is an integer; its fractional part is not separated from 0");
  }
  PrecisionBudget fine = budget;
  fine.abs_tol = budget.abs_tol / static_cast<double>(std::labs(n));
  for (int guard = 0; guard < 200; ++guard) {
    const RationalInterval a = alpha_value(cf, fine);
    mpq_class x = mpq_class(n) * a.lo - mpq_class(m);
    mpq_class y = mpq_class(n) * a.hi - mpq_class(m);
    if (x > y) std::swap(x, y);
    if (x > 0 && y < 1) return {x, y};
    fine.abs_tol /= 16.0;
  }
  throw NumericError("could not separate n alpha from an integer");
}

RationalInterval beta_value(const ContinuedFraction& cf, int k, const PrecisionBudget& budget) {
  if (k < -1) throw InvalidInput("beta index must be >= -1");
  const auto c = convergents(cf, std::max(k, 0));
  const LinearForm f = beta_form(c.at(static_cast<std::size_t>(k + 1)));
  const RationalInterval a = alpha_value(cf, budget);
  mpq_class x = f.at(a.lo);
  mpq_class y = f.at(a.hi);
  if (x > y) std::swap(x, y);
  return {x, y};
}

int digit_bound(const ContinuedFraction& cf, int k) {
  if (k < -1) throw InvalidInput("digit index must be >= -1");
  if (k == -1) return 1;
  return cf.has_quotient(k + 1) ? cf.quotient(k + 1) : 0;
}

mpq_class series_tail_bound(const ContinuedFraction& cf, int k_max) {
  if (cf.is_finite()) {
    const int last = cf.prefix_length();
    if (k_max + 1 > last - 1) return 0;
    const auto c = convergents(cf, last);
    const RationalInterval a = alpha_value(cf, PrecisionBudget{});
    mpq_class sum = 0;
    for (int k = k_max + 1; k <= last - 1; ++k) {
      sum += cf.quotient(k + 1) * beta_form(c.at(static_cast<std::size_t>(k + 1))).at(a.lo);
    }
    return sum;
  }
  const auto c = convergents(cf, k_max + 2);
  const mpz_class& q1 = c.at(static_cast<std::size_t>(k_max + 2)).q;
  const mpz_class& q2 = c.at(static_cast<std::size_t>(k_max + 3)).q;
  return mpq_class(1, q1) + mpq_class(1, q2);
}

OstrowskiDigits ostrowski_digits(const ContinuedFraction& cf, long n, int k_max) {
  if (n == 0) throw InvalidInput("Ostrowski digits require n != 0");
  if (k_max < -1) throw InvalidInput("k_max must be >= -1");

  const int available = cf.is_finite() ? cf.prefix_length() : k_max + 2;
  const auto conv = convergents(cf, std::max(0, std::min(available, k_max + 2)));
  auto conv_at = [&](int k) -> const Convergent* {
    const auto idx = static_cast<std::size_t>(k + 1);
    return idx < conv.size() ? &conv[idx] : nullptr;
  };
  // beta_k for indices past the end of a finite expansion vanish.
  auto beta = [&](int k) -> LinearForm {
    const Convergent* c = conv_at(k);
    return c ? beta_form(*c) : LinearForm{0, 0};
  };
  // Largest value the digits from index k onward can contribute.
  auto tail = [&](int k) -> LinearForm {
    if (!cf.is_finite()) return beta(k - 1) + beta(k);
    LinearForm sum{0, 0};
    for (int j = k; j <= cf.prefix_length() - 1; ++j) sum += static_cast<long>(cf.quotient(j + 1)) * beta(j);
    return sum;
  };

  PrecisionBudget tight;
  tight.abs_tol = 1e-30;
  const mpq_class alpha_mid = [&] {
    const RationalInterval a = alpha_value(cf, tight);
    return mpq_class((a.lo + a.hi) / 2);
  }();

  const mpz_class m = floor_n_alpha(cf, n);
  // Target {n alpha} + alpha = (n + 1) alpha - m.
  const LinearForm target{mpz_class(n + 1), -m};

  OstrowskiDigits out;
  out.k_max = k_max;
  out.digits.assign(static_cast<std::size_t>(k_max + 2), 0);

  std::function<bool(int, const LinearForm&)> search = [&](int k, const LinearForm& r) -> bool {
    if (sign_of(cf, r) == 0) {
      std::fill(out.digits.begin() + (k + 1), out.digits.end(), 0);
      out.exact = true;
      return true;
    }
    if (k > k_max) {
      out.exact = false;
      return sign_of(cf, r) >= 0 && sign_of(cf, tail(k) - r) >= 0;
    }
    const LinearForm b = beta(k);
    const int bound = digit_bound(cf, k);
    long t = 0;
    if (!b.is_zero() && bound > 0) {
      const mpq_class ratio = r.at(alpha_mid) / b.at(alpha_mid);
      mpz_class f;
      mpz_fdiv_q(f.get_mpz_t(), ratio.get_num_mpz_t(), ratio.get_den_mpz_t());
      t = f.fits_slong_p() ? std::clamp(f.get_si(), 0L, static_cast<long>(bound)) : (sgn(f) < 0 ? 0 : bound);
      while (t < bound && sign_of(cf, r - (t + 1) * b) >= 0) ++t;
      while (t > 0 && sign_of(cf, r - t * b) < 0) --t;
    }
    for (long d = t; d >= 0; --d) {
      const LinearForm rest = r - d * b;
      if (sign_of(cf, rest) < 0) continue;
      if (sign_of(cf, tail(k + 1) - rest) < 0) continue;
      out.digits[static_cast<std::size_t>(k + 1)] = static_cast<int>(d);
      if (search(k + 1, rest)) return true;
    }
    out.digits[static_cast<std::size_t>(k + 1)] = 0;
    return false;
  };

  if (!search(-1, target)) {
    throw NumericError("no admissible Ostrowski digit sequence for n = " + std::to_string(n) + " up to k = " +
                       std::to_string(k_max));
  }
  return out;
}

std::vector<Fraction> rational_grid(long q_max) {
  if (q_max < 1) throw InvalidInput("q_max must be >= 1");
  std::vector<Fraction> out;
  long a = 0, b = 1, c = 1, d = q_max;
  while (c <= q_max) {
    const long k = (q_max + b) / d;
    const long next_c = k * c - a;
    const long next_d = k * d - b;
    a = c;
    b = d;
    c = next_c;
    d = next_d;
    out.push_back({a, b});
  }
  return out;
}

Fraction parse_fraction(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw InvalidInput("expected p/q, got '" + std::string(text) + "'");
  long p = 0, q = 0;
  const auto num = text.substr(0, slash);
  const auto den = text.substr(slash + 1);
  auto r1 = std::from_chars(num.data(), num.data() + num.size(), p);
  auto r2 = std::from_chars(den.data(), den.data() + den.size(), q);
  if (r1.ec != std::errc{} || r1.ptr != num.data() + num.size() || r2.ec != std::errc{} ||
      r2.ptr != den.data() + den.size() || num.empty() || den.empty()) {
    throw InvalidInput("expected p/q, got '" + std::string(text) + "'");
  }
  return {p, q};
}

}  // namespace sturmian
