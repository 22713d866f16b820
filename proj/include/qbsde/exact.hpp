#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace qbsde {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

}  // namespace qbsde
