#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scorelint {

class RationalOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Exact rational with 64-bit terms, always normalized (gcd 1, positive denominator).
/// Intermediates are computed in 128 bits; results that do not fit throw RationalOverflow.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(implicit)
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }

  Rational operator-() const { return make(-static_cast<__int128>(num_), den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 l = static_cast<__int128>(a.num_) * b.den_;
    __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
    os << r.num_;
    if (r.den_ != 1) os << '/' << r.den_;
    return os;
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 kMax = INT64_MAX;
    if (n > kMax || n < -kMax || d > kMax) throw RationalOverflow("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline Rational abs(const Rational& r) { return r < 0 ? -r : r; }

/// Largest integer not greater than r.
inline std::int64_t floor(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

inline bool is_integer(const Rational& r) { return r.denominator() == 1; }

/// True when r is an integer multiple of step (step > 0).
inline bool is_multiple_of(const Rational& r, const Rational& step) {
  return is_integer(r / step);
}

inline bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

/// Round to the nearest integer, halves toward the even neighbour.
inline std::int64_t round_half_even(const Rational& r) {
  std::int64_t f = floor(r);
  Rational frac = r - f;
  if (frac < Rational(1, 2)) return f;
  if (frac > Rational(1, 2)) return f + 1;
  return (f % 2 == 0) ? f : f + 1;
}

/// Round to the nearest integer, halves toward negative infinity.
inline std::int64_t round_half_down(const Rational& r) {
  std::int64_t f = floor(r);
  return (r - f) > Rational(1, 2) ? f + 1 : f;
}

/// Fixed-point decimal rendering with round-half-even ("66.67", "80.00").
inline std::string format_fixed(const Rational& r, int places = 2) {
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  std::int64_t scaled = round_half_even(r * scale);
  bool negative = scaled < 0;
  std::uint64_t mag = negative ? static_cast<std::uint64_t>(-scaled) : static_cast<std::uint64_t>(scaled);
  std::string whole = std::to_string(mag / static_cast<std::uint64_t>(scale));
  std::string out = negative ? "-" + whole : whole;
  if (places > 0) {
    std::string frac = std::to_string(mag % static_cast<std::uint64_t>(scale));
    out += '.' + std::string(static_cast<std::size_t>(places) - frac.size(), '0') + frac;
  }
  return out;
}

/// Rounded double, for JSON output at a fixed number of decimal places.
inline double rounded_double(const Rational& r, int places = 2) {
  return std::stod(format_fixed(r, places));
}

/// Best rational approximation of v with denominator <= max_den (continued fractions).
inline Rational rational_from_double(double v, std::int64_t max_den = 10000) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  bool negative = v < 0;
  double x = std::fabs(v);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double rem = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a_d = std::floor(rem);
    if (a_d > 9.0e15) break;
    auto a = static_cast<std::int64_t>(a_d);
    std::int64_t q2 = q0 + a * q1;
    if (q2 > max_den) break;
    std::int64_t p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = rem - a_d;
    if (frac < 1e-12) break;
    rem = 1.0 / frac;
  }
  if (q1 == 0) return Rational(0);
  Rational r(p1, q1);
  return negative ? -r : r;
}

/// Parses "3", "3/4" or a decimal like "75.5".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::int64_t n = std::stoll(s.substr(0, slash));
    std::int64_t d = std::stoll(s.substr(slash + 1));
    if (d == 0) throw std::invalid_argument("zero denominator");
    return Rational(n, d);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    return Rational(std::stoll(digits), den);
  }
  return Rational(std::stoll(s));
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace scorelint
