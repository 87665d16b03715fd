#pragma once

#include <string>

namespace raincast {

// Calendar date with ISO-8601 (YYYY-MM-DD) text form. Ordering is
// chronological.
struct Date {
  int year = 2000;
  int month = 1;
  int day = 1;

  static Date parse(const std::string& iso);
  std::string to_string() const;

  // Day of the year in {1,...,365}. Feb 29 maps to day 59 (merged with
  // Feb 28) so the 365-day seasonal cycle is well defined on leap years.
  int day_of_year_365() const;

  Date next_day() const;

  auto operator<=>(const Date&) const = default;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

// Circular distance between two day-of-year values on the 365-day wheel.
int doy_circular_distance(int a, int b);

}  // namespace raincast
