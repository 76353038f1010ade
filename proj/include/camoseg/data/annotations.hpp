#pragma once

#include <string>
#include <vector>

#include "camoseg/data/rle.hpp"

namespace camoseg::data {

// Binary instance mask with its derived boundary band.
struct InstanceAnnotation {
    Tensor mask;      // [H,W] binary, non-empty
    Tensor boundary;  // [H,W] binary, interior edge band
    std::string image_id;
};

struct ImageRecord {
    std::string image_id;
    int height = 0, width = 0;
    std::vector<InstanceAnnotation> instances;
};

// Interior boundary band: mask XOR erosion(mask, (2*width+1) square), with
// out-of-image pixels treated as background so border pixels count as edge.
Tensor gt_boundary_from_mask(const Tensor& mask, int width);

// Annotation file: one JSON object with image records and per-instance RLE
// masks (COCO-compatible field naming accepted on load). Boundaries are
// re-derived on load.
void save_annotations(const std::string& path, const std::vector<ImageRecord>& records);
std::vector<ImageRecord> load_annotations(const std::string& path, int boundary_width = 2);

// Serialized predictions (scored RLE masks) share the same container.
struct PredictionRecord {
    std::string image_id;
    double score = 0.0;
    Rle rle;
};
void save_predictions(const std::string& path, const std::vector<PredictionRecord>& preds);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace camoseg::data
