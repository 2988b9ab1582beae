#include "fincot/common/timeutil.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include <fmt/core.h>

#include "fincot/common/error.hpp"

namespace fincot {
namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  int digits(std::size_t count) {
    if (pos_ + count > s_.size()) fail();
    int v = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const char c = s_[pos_ + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) fail();
      v = v * 10 + (c - '0');
    }
    pos_ += count;
    return v;
  }
  void expect(char c) {
    if (!accept(c)) fail();
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool done() const { return pos_ == s_.size(); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_fraction() {
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail() const {
    throw ValidationError(fmt::format("unparseable timestamp: '{}'", s_));
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  Cursor c(text);
  const int y = c.digits(4);
  c.expect('-');
  const int mo = c.digits(2);
  c.expect('-');
  const int d = c.digits(2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) c.fail();
  seconds tod{0};
  seconds offset{0};
  if (!c.done()) {
    if (!c.accept('T') && !c.accept(' ')) c.fail();
    const int hh = c.digits(2);
    c.expect(':');
    const int mm = c.digits(2);
    int ss = 0;
    if (c.accept(':')) {
      ss = c.digits(2);
      if (c.accept('.')) c.skip_fraction();
    }
    if (hh > 23 || mm > 59 || ss > 60) c.fail();
    tod = hours{hh} + minutes{mm} + seconds{ss};
    if (c.accept('Z')) {
    } else if (c.peek() == '+' || c.peek() == '-') {
      const bool neg = c.peek() == '-';
      c.accept(c.peek());
      const int oh = c.digits(2);
      c.accept(':');
      const int om = c.digits(2);
      offset = hours{oh} + minutes{om};
      if (neg) offset = -offset;
    }
    if (!c.done()) c.fail();
  }
  return sys_days{ymd} + tod - offset;
}

Timestamp parse_timestamp_value(const nlohmann::json& value) {
  if (value.is_string()) return parse_timestamp(std::string_view(value.get_ref<const std::string&>()));
  if (value.is_number()) {
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw ValidationError("non-finite epoch timestamp");
    return Timestamp{std::chrono::seconds{static_cast<long long>(std::floor(v))}};
  }
  throw ValidationError("timestamp must be a string or epoch number");
}

std::string format_utc(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{t - day_point};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

}  // namespace fincot
