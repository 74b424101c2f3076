#include "nodal/harmonic.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace nodal {
namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip();
    return pos_ >= s_.size();
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  bool accept_word(std::string_view w) {
    skip();
    if (s_.substr(pos_, w.size()) != w) return false;
    const std::size_t end = pos_ + w.size();
    if (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) return false;
    pos_ = end;
    return true;
  }
  bool number_ahead() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }
  double number() {
    skip();
    std::size_t end = pos_;
    while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                               s_[end] == 'e' || s_[end] == 'E' ||
                               ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
                                (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
      ++end;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, v);
    if (ec != std::errc() || ptr != s_.data() + end) fail("bad number");
    pos_ = end;
    return v;
  }
  int integer() {
    const double v = number();
    if (v != static_cast<int>(v) || v < 0) fail("exponent must be a nonnegative integer");
    return static_cast<int>(v);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" +
                                           std::string(s_) + "'");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

// z or z^k inside re(...) / im(...)
int parse_power(Lexer& lx) {
  if (!lx.accept('z')) lx.fail("expected z");
  if (lx.accept('^')) return lx.integer();
  return 1;
}

HarmonicPolynomial2d parse_atom(Lexer& lx) {
  using C = std::complex<double>;
  if (lx.accept_word("re")) {
    lx.expect('(');
    const int k = parse_power(lx);
    lx.expect(')');
    return HarmonicPolynomial2d::monomial(k, C(1));
  }
  if (lx.accept_word("im")) {
    lx.expect('(');
    const int k = parse_power(lx);
    lx.expect(')');
    return HarmonicPolynomial2d::monomial(k, C(0, -1));
  }
  if (lx.accept_word("x")) return HarmonicPolynomial2d::monomial(1, C(1));
  if (lx.accept_word("y")) return HarmonicPolynomial2d::monomial(1, C(0, -1));
  if (lx.number_ahead()) return HarmonicPolynomial2d::constant(lx.number());
  lx.fail("expected term");
}

}  // namespace

HarmonicPolynomial2d parse_polynomial(std::string_view text) {
  Lexer lx(text);
  HarmonicPolynomial2d out;
  if (lx.done()) lx.fail("empty polynomial");
  bool first = true;
  while (!lx.done()) {
    double sign = 1;
    if (lx.accept('+')) {
    } else if (lx.accept('-')) {
      sign = -1;
    } else if (!first) {
      lx.fail("expected + or -");
    }
    first = false;
    double factor = sign;
    HarmonicPolynomial2d term;
    if (lx.number_ahead()) {
      const double c = lx.number();
      if (lx.accept('*')) {
        term = parse_atom(lx);
        factor *= c;
      } else {
        term = HarmonicPolynomial2d::constant(c);
      }
    } else {
      term = parse_atom(lx);
    }
    out += term * factor;
  }
  return out;
}

std::string format_polynomial(const HarmonicPolynomial2d& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  char buf[64];
  auto emit = [&](double c, const std::string& atom) {
    if (c == 0) return;
    const bool neg = c < 0;
    if (!first) os << (neg ? " - " : " + ");
    else if (neg) os << "-";
    first = false;
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
    if (atom.empty()) os << buf;
    else if (std::abs(c) == 1.0) os << atom;
    else os << buf << "*" << atom;
  };
  for (int k = 0; k <= p.degree(); ++k) {
    const auto c = p.coeff(k);
    // Re(c z^k) = Re c * Re z^k - Im c * Im z^k
    if (k == 0) {
      emit(c.real(), "");
      continue;
    }
    const std::string pw = "(z^" + std::to_string(k) + ")";
    emit(c.real(), "re" + pw);
    emit(-c.imag(), "im" + pw);
  }
  return first ? "0" : os.str();
}

}  // namespace nodal
