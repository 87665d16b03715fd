#include "raincast/dates.hpp"

#include <cstdio>

#include "raincast/errors.hpp"

namespace raincast {

namespace {
// Cumulative days before each month in a non-leap year.
constexpr int kCumDays[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
}  // namespace

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
  static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return lengths[month - 1];
}

Date Date::parse(const std::string& iso) {
  Date d;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &tail) != 3 ||
      iso.size() != 10) {
    throw ValidationError("bad date \"" + iso + "\", expected YYYY-MM-DD");
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
    throw ValidationError("invalid calendar date \"" + iso + "\"");
  }
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

int Date::day_of_year_365() const {
  if (month == 2 && day == 29) return 59;
  int doy = kCumDays[month - 1] + day;
  return doy;
}

Date Date::next_day() const {
  Date d = *this;
  if (d.day < days_in_month(d.year, d.month)) {
    ++d.day;
  } else if (d.month < 12) {
    ++d.month;
    d.day = 1;
  } else {
    ++d.year;
    d.month = 1;
    d.day = 1;
  }
  return d;
}

int doy_circular_distance(int a, int b) {
  int diff = a - b;
  if (diff < 0) diff = -diff;
  diff %= 365;
  return diff <= 365 - diff ? diff : 365 - diff;
}

}  // namespace raincast
