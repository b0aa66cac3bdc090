#include "reso/metrics.hpp"

#include <cmath>
#include <string>

namespace reso {

namespace {

void check_lengths(const std::vector<float>& y, const std::vector<float>& yhat) {
    if (y.empty()) throw DimensionError("metrics need at least one element");
    if (y.size() != yhat.size())
        throw DimensionError("metric length mismatch: " + std::to_string(y.size()) + " vs " +
                             std::to_string(yhat.size()));
}

} // namespace

double mae(const std::vector<float>& y, const std::vector<float>& yhat) {
    check_lengths(y, yhat);
    double acc = 0;
    for (size_t i = 0; i < y.size(); ++i) acc += std::abs(double(y[i]) - double(yhat[i]));
    return acc / y.size();
}

double mse(const std::vector<float>& y, const std::vector<float>& yhat) {
    check_lengths(y, yhat);
    double acc = 0;
    for (size_t i = 0; i < y.size(); ++i) {
        double d = double(y[i]) - double(yhat[i]);
        acc += d * d;
    }
    return acc / y.size();
}

} // namespace reso
