#include "camoseg/data/rle.hpp"

namespace camoseg::data {

Rle rle_encode(const Tensor& mask) {
    check_contract(mask.rank() == 2, "rle_encode expects [H,W]");
    Rle r;
    r.h = mask.dim(0);
    r.w = mask.dim(1);
    int run = 0;
    int current = 0;  // runs start with background
    for (int x = 0; x < r.w; ++x) {
        for (int y = 0; y < r.h; ++y) {
            const int v = mask.at(y, x) >= 0.5 ? 1 : 0;
            if (v == current) {
                ++run;
            } else {
                r.counts.push_back(run);
                current = v;
                run = 1;
            }
        }
    }
    r.counts.push_back(run);
    return r;
}

Tensor rle_decode(const Rle& rle) {
    Tensor mask({rle.h, rle.w});
    int64_t pos = 0;
    int value = 0;
    for (int c : rle.counts) {
        check_input(c >= 0, "rle_decode: negative run");
        for (int i = 0; i < c; ++i, ++pos) {
            check_input(pos < static_cast<int64_t>(rle.h) * rle.w, "rle_decode: runs exceed mask size");
            const int y = static_cast<int>(pos % rle.h);
            const int x = static_cast<int>(pos / rle.h);
            mask.at(y, x) = value;
        }
        value = 1 - value;
    }
    check_input(pos == static_cast<int64_t>(rle.h) * rle.w, "rle_decode: runs do not cover the mask");
    return mask;
}

}  // namespace camoseg::data
