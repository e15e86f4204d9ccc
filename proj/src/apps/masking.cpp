#include "glasseg/apps/masking.hpp"

namespace glasseg::apps {

cv::Mat mask_out_glass(const cv::Mat& rgb, const BinaryMask& glass_mask) {
    require_same_size(rgb, glass_mask, "mask_out_glass");
    require_binary(glass_mask, "mask_out_glass");
    cv::Mat out = rgb.clone();
    out.setTo(cv::Scalar::all(0), glass_mask);
    return out;
}

}  // namespace glasseg::apps
