//------------------------------------------------------------------------------
//
//   Copyright 2026 The iosim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <array>
#include <cstddef>

namespace iosim::testing {

/// Jensen-Shannon divergence (base 2) evaluated in 50-digit decimal arithmetic.
template <std::size_t N>
double jsd_oracle(std::array<double, N> const &p, std::array<double, N> const &q)
{
  using big = boost::multiprecision::cpp_dec_float_50;
  big const ln2 = boost::multiprecision::log(big(2));
  big sum       = 0;
  for (std::size_t i = 0; i < N; ++i)
  {
    big const pi = p[i];
    big const qi = q[i];
    big const m  = (pi + qi) / 2;
    if (pi > 0)
    {
      sum += pi * boost::multiprecision::log(pi / m);
    }
    if (qi > 0)
    {
      sum += qi * boost::multiprecision::log(qi / m);
    }
  }
  return static_cast<double>(sum / (2 * ln2));
}

}  // namespace iosim::testing
