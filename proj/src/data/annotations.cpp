#include "camoseg/data/annotations.hpp"

#include <fstream>

#include "json.hpp"

namespace camoseg::data {

using nlohmann::json;

Tensor gt_boundary_from_mask(const Tensor& mask, int width) {
    check_input(width >= 1, "boundary width must be >= 1");
    const int H = mask.dim(0), W = mask.dim(1);
    Tensor boundary({H, W});
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (mask.at(y, x) < 0.5) continue;
            // Eroded pixel: the full (2w+1)^2 window stays inside the mask;
            // anything outside the image counts as background.
            bool eroded = true;
            for (int dy = -width; dy <= width && eroded; ++dy)
                for (int dx = -width; dx <= width && eroded; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= H || xx < 0 || xx >= W || mask.at(yy, xx) < 0.5) eroded = false;
                }
            if (!eroded) boundary.at(y, x) = 1.0;
        }
    }
    return boundary;
}

namespace {
json rle_to_json(const Rle& r) {
    return json{{"rle_counts", r.counts}, {"rle_size", {r.h, r.w}}};
}

Rle rle_from_json(const json& j) {
    Rle r;
    // Accept both our field names and COCO "segmentation" style.
    const json& counts = j.contains("rle_counts") ? j.at("rle_counts") : j.at("counts");
    const json& size = j.contains("rle_size") ? j.at("rle_size") : j.at("size");
    r.counts = counts.get<std::vector<int>>();
    r.h = size.at(0).get<int>();
    r.w = size.at(1).get<int>();
    return r;
}
}  // namespace

void save_annotations(const std::string& path, const std::vector<ImageRecord>& records) {
    json root;
    root["images"] = json::array();
    for (const auto& rec : records) {
        json jr;
        jr["image_id"] = rec.image_id;
        jr["height"] = rec.height;
        jr["width"] = rec.width;
        jr["instances"] = json::array();
        for (const auto& inst : rec.instances) jr["instances"].push_back(rle_to_json(rle_encode(inst.mask)));
        root["images"].push_back(std::move(jr));
    }
    std::ofstream f(path, std::ios::trunc);
    check_input(f.good(), "cannot write annotations: " + path);
    f << root.dump(1) << "\n";
}

std::vector<ImageRecord> load_annotations(const std::string& path, int boundary_width) {
    std::ifstream f(path);
    check_input(f.good(), "cannot open annotations: " + path);
    json root;
    try {
        f >> root;
    } catch (const json::exception& e) {
        throw InvalidInputError("malformed annotation file " + path + ": " + e.what());
    }
    std::vector<ImageRecord> out;
    for (const auto& jr : root.at("images")) {
        ImageRecord rec;
        rec.image_id = jr.at("image_id").get<std::string>();
        rec.height = jr.at("height").get<int>();
        rec.width = jr.at("width").get<int>();
        for (const auto& ji : jr.at("instances")) {
            const json& seg = ji.contains("segmentation") ? ji.at("segmentation") : ji;
            InstanceAnnotation inst;
            inst.image_id = rec.image_id;
            inst.mask = rle_decode(rle_from_json(seg));
            check_input(inst.mask.dim(0) == rec.height && inst.mask.dim(1) == rec.width,
                        "annotation mask size mismatch in " + rec.image_id);
            inst.boundary = gt_boundary_from_mask(inst.mask, boundary_width);
            rec.instances.push_back(std::move(inst));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void save_predictions(const std::string& path, const std::vector<PredictionRecord>& preds) {
    json root;
    root["predictions"] = json::array();
    for (const auto& p : preds) {
        json jp = rle_to_json(p.rle);
        jp["image_id"] = p.image_id;
        jp["score"] = p.score;
        root["predictions"].push_back(std::move(jp));
    }
    std::ofstream f(path, std::ios::trunc);
    check_input(f.good(), "cannot write predictions: " + path);
    f << root.dump(1) << "\n";
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream f(path);
    check_input(f.good(), "cannot open predictions: " + path);
    json root;
    f >> root;
    std::vector<PredictionRecord> out;
    for (const auto& jp : root.at("predictions")) {
        PredictionRecord p;
        p.image_id = jp.at("image_id").get<std::string>();
        p.score = jp.at("score").get<double>();
        p.rle = rle_from_json(jp);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace camoseg::data
