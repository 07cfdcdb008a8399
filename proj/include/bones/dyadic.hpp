#pragma once

#include <bones/errors.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>

namespace bones {

using i128 = __int128;

namespace detail {

inline constexpr i128 kNumLimit = (i128(1) << 124);

inline bool fits(i128 x) { return x < kNumLimit && x > -kNumLimit; }

inline i128 shl_checked(i128 x, int k) {
  for (int i = 0; i < k; ++i) {
    x *= 2;
    if (!fits(x)) throw std::overflow_error("dyadic numerator overflow");
  }
  return x;
}

inline std::string i128_to_string(i128 x) {
  if (x == 0) return "0";
  bool neg = x < 0;
  std::string s;
  // handle negative without overflow (values are bounded well inside range)
  if (neg) x = -x;
  while (x > 0) {
    s.push_back(char('0' + int(x % 10)));
    x /= 10;
  }
  if (neg) s.push_back('-');
  return {s.rbegin(), s.rend()};
}

inline i128 parse_i128(std::string_view s) {
  if (s.empty()) throw domain_error("empty integer");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) throw domain_error("bad integer");
  i128 x = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw domain_error("bad integer");
    x = x * 10 + (s[i] - '0');
    if (!fits(x)) throw std::overflow_error("integer too large");
  }
  return neg ? -x : x;
}

inline i128 abs128(i128 x) { return x < 0 ? -x : x; }

inline i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace detail

// num / 2^exp, normalized so that num is odd unless exp == 0.
class Dyadic {
 public:
  constexpr Dyadic() = default;
  Dyadic(std::int64_t n) : num_(n), exp_(0) {}  // NOLINT(implicit)
  Dyadic(i128 n, int e) : num_(n), exp_(e) {
    if (e < 0) {
      num_ = detail::shl_checked(n, -e);
      exp_ = 0;
    }
    normalize();
  }

  static Dyadic from_double(double x) {
    if (!std::isfinite(x)) throw domain_error("non-finite value");
    if (x == 0.0) return {};
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, 0.5 <= |m| < 1
    auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    return Dyadic(i128(mant), 53 - e);
  }

  // Accepts "n", "n/2^k" or "n/d" with d a power of two.
  static Dyadic parse(std::string_view s) {
    auto slash = s.find('/');
    if (slash == std::string_view::npos) return Dyadic(detail::parse_i128(s), 0);
    i128 n = detail::parse_i128(s.substr(0, slash));
    auto den = s.substr(slash + 1);
    if (den.rfind("2^", 0) == 0) {
      i128 k = detail::parse_i128(den.substr(2));
      if (k < 0 || k > 120) throw domain_error("bad dyadic exponent");
      return Dyadic(n, int(k));
    }
    i128 d = detail::parse_i128(den);
    int k = 0;
    while (d > 1 && d % 2 == 0) {
      d /= 2;
      ++k;
    }
    if (d != 1) throw domain_error("denominator is not a power of two");
    return Dyadic(n, k);
  }

  i128 num() const { return num_; }
  int exp() const { return exp_; }

  double to_double() const { return std::ldexp(static_cast<double>(num_), -exp_); }

  std::string str() const {
    if (exp_ == 0) return detail::i128_to_string(num_);
    return detail::i128_to_string(num_) + "/2^" + std::to_string(exp_);
  }

  // Multiply by 2^k (k may be negative).
  Dyadic scaled(int k) const {
    if (num_ == 0) return {};
    if (k >= 0 && exp_ >= k) return Dyadic(num_, exp_ - k);
    if (k >= 0) return Dyadic(detail::shl_checked(num_, k - exp_), 0);
    return Dyadic(num_, exp_ - k);
  }
  Dyadic half() const { return scaled(-1); }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    int e = std::max(a.exp_, b.exp_);
    i128 x = detail::shl_checked(a.num_, e - a.exp_);
    i128 y = detail::shl_checked(b.num_, e - b.exp_);
    i128 s = x + y;
    if (!detail::fits(s)) throw std::overflow_error("dyadic sum overflow");
    return Dyadic(s, e);
  }
  friend Dyadic operator-(const Dyadic& a) { return Dyadic(-a.num_, a.exp_); }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    i128 p = a.num_ * b.num_;
    if (a.num_ != 0 && (p / a.num_ != b.num_ || !detail::fits(p)))
      throw std::overflow_error("dyadic product overflow");
    return Dyadic(p, a.exp_ + b.exp_);
  }
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }

  // Exact a / b when b is plus or minus a power of two.
  friend Dyadic divide_exact(const Dyadic& a, const Dyadic& b) {
    if (detail::abs128(b.num_) != 1 && b.exp_ != 0)
      throw domain_error("divisor is not a signed power of two");
    i128 m = detail::abs128(b.num_);
    int k = 0;
    while (m > 1) {
      if (m % 2 != 0) throw domain_error("divisor is not a signed power of two");
      m /= 2;
      ++k;
    }
    Dyadic q = a.scaled(b.exp_ - k);
    return b.num_ < 0 ? -q : q;
  }

  friend bool operator==(const Dyadic& a, const Dyadic& b) = default;
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    int e = std::max(a.exp_, b.exp_);
    i128 x = detail::shl_checked(a.num_, e - a.exp_);
    i128 y = detail::shl_checked(b.num_, e - b.exp_);
    return x < y ? std::strong_ordering::less
                 : (x > y ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::size_t hash() const {
    auto lo = static_cast<std::uint64_t>(num_);
    auto hi = static_cast<std::uint64_t>(num_ >> 64);
    return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9e3779b97f4a7c15ULL) ^ (std::uint64_t(exp_) << 56));
  }

 private:
  void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    while (exp_ > 0 && num_ % 2 == 0) {
      num_ /= 2;
      --exp_;
    }
    if (exp_ > 120) throw std::overflow_error("dyadic exponent overflow");
  }

  i128 num_ = 0;
  int exp_ = 0;
};

inline double to_double(const Dyadic& d) { return d.to_double(); }
inline double to_double(double d) { return d; }

// Small exact rational, used for parameters along a segment where
// plateau-edge crossings land on non-dyadic values.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
  Rational(i128 n, i128 d) : num_(n), den_(d) { normalize(); }
  Rational(const Dyadic& d)  // NOLINT(implicit)
      : num_(d.num()), den_(detail::shl_checked(1, d.exp())) {}

  i128 num() const { return num_; }
  i128 den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  bool is_dyadic() const {
    i128 d = den_;
    while (d % 2 == 0) d /= 2;
    return d == 1;
  }
  Dyadic to_dyadic() const {
    if (!is_dyadic()) throw domain_error("rational is not dyadic");
    int k = 0;
    for (i128 d = den_; d > 1; d /= 2) ++k;
    return Dyadic(num_, k);
  }
  std::string str() const {
    if (is_dyadic()) return to_dyadic().str();
    return detail::i128_to_string(num_) + "/" + detail::i128_to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    i128 g = detail::gcd128(a.den_, b.den_);
    i128 da = a.den_ / g;
    return Rational(mul(a.num_, b.den_ / g) + mul(b.num_, da), mul(da, b.den_));
  }
  friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    i128 g1 = detail::gcd128(a.num_, b.den_);
    i128 g2 = detail::gcd128(b.num_, a.den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational(mul(a.num_ / g1, b.num_ / g2), mul(a.den_ / g2, b.den_ / g1));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw domain_error("division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational half() const { return *this * Rational(1, 2); }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    i128 x = mul(a.num_, b.den_);
    i128 y = mul(b.num_, a.den_);
    return x < y ? std::strong_ordering::less
                 : (x > y ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  static i128 mul(i128 a, i128 b) {
    if (a == 0 || b == 0) return 0;
    i128 p = a * b;
    if (p / b != a || !detail::fits(p)) throw std::overflow_error("rational overflow");
    return p;
  }
  void normalize() {
    if (den_ == 0) throw domain_error("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    i128 g = detail::gcd128(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  i128 num_ = 0;
  i128 den_ = 1;
};

}  // namespace bones

template <>
struct std::hash<bones::Dyadic> {
  std::size_t operator()(const bones::Dyadic& d) const noexcept { return d.hash(); }
};
