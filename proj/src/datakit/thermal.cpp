#include "glasseg/datakit/thermal.hpp"

#include <cmath>

#include "glasseg/core/errors.hpp"

namespace glasseg::datakit {

cv::Mat1f normalize_thermal(const RawThermal& raw) {
    const cv::Mat1f& values = raw.values;
    if (values.empty()) throw InputError("normalize_thermal: empty thermal image");
    if (!cv::checkRange(values, true)) {
        throw InputError("normalize_thermal: thermal image contains non-finite readings");
    }

    double lo = 0.0;
    double hi = 0.0;
    cv::minMaxLoc(values, &lo, &hi);
    if (hi == lo) return cv::Mat1f::zeros(values.size());

    cv::Mat1f out(values.size());
    const double span = hi - lo;
    for (int r = 0; r < values.rows; ++r) {
        const float* src = values.ptr<float>(r);
        float* dst = out.ptr<float>(r);
        for (int c = 0; c < values.cols; ++c) {
            dst[c] = static_cast<float>((static_cast<double>(src[c]) - lo) / span);
        }
    }
    return out;
}

}  // namespace glasseg::datakit
