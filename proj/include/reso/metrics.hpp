#pragma once

#include <vector>

#include "reso/errors.hpp"

namespace reso {

// (1/n) * sum |y_i - yhat_i|
double mae(const std::vector<float>& y, const std::vector<float>& yhat);

// (1/n) * sum (y_i - yhat_i)^2
double mse(const std::vector<float>& y, const std::vector<float>& yhat);

} // namespace reso
