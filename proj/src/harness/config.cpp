#include "camoseg/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace camoseg::harness {

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        out.push_back(std::stoi(part));
    }
    return out;
}

std::string join_int_list(const std::vector<int>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
        {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
        {"model.embed_dim", [](RunConfig& c, const std::string& v) { c.model.embed_dim = std::stoi(v); }},
        {"model.num_heads", [](RunConfig& c, const std::string& v) { c.model.num_heads = std::stoi(v); }},
        {"model.num_queries", [](RunConfig& c, const std::string& v) { c.model.num_queries = std::stoi(v); }},
        {"model.encoder_layers", [](RunConfig& c, const std::string& v) { c.model.encoder_layers = std::stoi(v); }},
        {"model.encoder_points", [](RunConfig& c, const std::string& v) { c.model.encoder_points = std::stoi(v); }},
        {"model.ffn_multiplier", [](RunConfig& c, const std::string& v) { c.model.ffn_multiplier = std::stoi(v); }},
        {"model.backbone_channels", [](RunConfig& c, const std::string& v) { c.model.backbone_channels = parse_int_list(v); }},
        {"model.scales", [](RunConfig& c, const std::string& v) { c.model.scales = parse_int_list(v); }},
        {"model.mask_ca_layers", [](RunConfig& c, const std::string& v) { c.model.mask_ca_layers = std::stoi(v); }},
        {"model.boundary_ca_layers", [](RunConfig& c, const std::string& v) { c.model.boundary_ca_layers = std::stoi(v); }},
        {"model.update_strategy", [](RunConfig& c, const std::string& v) { c.model.update_strategy = model::update_strategy_from_string(v); }},
        {"model.init_mask", [](RunConfig& c, const std::string& v) { c.model.init_mask = model::init_strategy_from_string(v); }},
        {"model.init_boundary", [](RunConfig& c, const std::string& v) { c.model.init_boundary = model::init_strategy_from_string(v); }},
        {"model.salient_oversample", [](RunConfig& c, const std::string& v) { c.model.salient_oversample = std::stod(v); }},
        {"model.salient_importance", [](RunConfig& c, const std::string& v) { c.model.salient_importance = std::stod(v); }},
        {"model.score_threshold", [](RunConfig& c, const std::string& v) { c.model.score_threshold = std::stod(v); }},
        {"model.mask_threshold", [](RunConfig& c, const std::string& v) { c.model.mask_threshold = std::stod(v); }},
        {"optimizer.lr", [](RunConfig& c, const std::string& v) { c.optimizer.lr = std::stod(v); }},
        {"optimizer.iterations", [](RunConfig& c, const std::string& v) { c.optimizer.iterations = std::stoi(v); }},
        {"optimizer.batch_size", [](RunConfig& c, const std::string& v) { c.optimizer.batch_size = std::stoi(v); }},
        {"optimizer.log_every", [](RunConfig& c, const std::string& v) { c.optimizer.log_every = std::stoi(v); }},
        {"optimizer.checkpoint_every", [](RunConfig& c, const std::string& v) { c.optimizer.checkpoint_every = std::stoi(v); }},
        {"optimizer.weight_decay", [](RunConfig& c, const std::string& v) { c.optimizer.weight_decay = std::stod(v); }},
        {"optimizer.max_grad_norm", [](RunConfig& c, const std::string& v) { c.optimizer.max_grad_norm = std::stod(v); }},
        {"loss.lambda", [](RunConfig& c, const std::string& v) { c.loss.weights.lambda = std::stod(v); }},
        {"loss.lambda_loc", [](RunConfig& c, const std::string& v) { c.loss.weights.lambda_loc = std::stod(v); }},
        {"loss.alpha", [](RunConfig& c, const std::string& v) { c.loss.weights.alpha = std::stod(v); }},
        {"loss.beta", [](RunConfig& c, const std::string& v) { c.loss.weights.beta = std::stod(v); }},
        {"loss.point_count", [](RunConfig& c, const std::string& v) { c.loss.point_count = std::stoi(v); }},
        {"loss.oversample", [](RunConfig& c, const std::string& v) { c.loss.oversample = std::stod(v); }},
        {"loss.importance_fraction", [](RunConfig& c, const std::string& v) { c.loss.importance_fraction = std::stod(v); }},
        {"data.kind", [](RunConfig& c, const std::string& v) { c.data.kind = v; }},
        {"data.image_size", [](RunConfig& c, const std::string& v) { c.data.image_size = std::stoi(v); }},
        {"data.train_images", [](RunConfig& c, const std::string& v) { c.data.train_images = std::stoi(v); }},
        {"data.val_images", [](RunConfig& c, const std::string& v) { c.data.val_images = std::stoi(v); }},
        {"data.min_instances", [](RunConfig& c, const std::string& v) { c.data.min_instances = std::stoi(v); }},
        {"data.max_instances", [](RunConfig& c, const std::string& v) { c.data.max_instances = std::stoi(v); }},
        {"data.contrast_bound", [](RunConfig& c, const std::string& v) { c.data.contrast_bound = std::stod(v); }},
        {"data.min_radius", [](RunConfig& c, const std::string& v) { c.data.min_radius = std::stod(v); }},
        {"data.max_radius", [](RunConfig& c, const std::string& v) { c.data.max_radius = std::stod(v); }},
        {"data.boundary_width", [](RunConfig& c, const std::string& v) { c.data.boundary_width = std::stoi(v); }},
        {"data.train_annotations", [](RunConfig& c, const std::string& v) { c.data.train_annotations = v; }},
        {"data.val_annotations", [](RunConfig& c, const std::string& v) { c.data.val_annotations = v; }},
        {"data.image_dir", [](RunConfig& c, const std::string& v) { c.data.image_dir = v; }},
    };
    return table;
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    if (optimizer.iterations < 1) throw ConfigError("optimizer.iterations must be >= 1");
    if (optimizer.batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
    if (optimizer.log_every < 1) throw ConfigError("optimizer.log_every must be >= 1");
    if (optimizer.lr <= 0.0) throw ConfigError("optimizer.lr must be positive");
    if (loss.point_count < 1) throw ConfigError("loss.point_count must be >= 1");
    if (data.kind != "synthetic" && data.kind != "annotations")
        throw ConfigError("data.kind must be 'synthetic' or 'annotations'");
    if (data.kind == "synthetic") {
        if (data.image_size % 32 != 0) throw ConfigError("data.image_size must be a multiple of 32");
        if (data.min_instances < 1 || data.max_instances < data.min_instances)
            throw ConfigError("data instance range is invalid");
    } else if (data.train_annotations.empty()) {
        throw ConfigError("data.train_annotations is required for annotation datasets");
    }
    if (out.empty()) throw ConfigError("out must not be empty");
}

std::string RunConfig::resolved() const {
    std::ostringstream os;
    os.precision(17);
    os << "seed = " << seed << "\n";
    os << "out = " << out << "\n";
    os << "model.embed_dim = " << model.embed_dim << "\n";
    os << "model.num_heads = " << model.num_heads << "\n";
    os << "model.num_queries = " << model.num_queries << "\n";
    os << "model.encoder_layers = " << model.encoder_layers << "\n";
    os << "model.encoder_points = " << model.encoder_points << "\n";
    os << "model.ffn_multiplier = " << model.ffn_multiplier << "\n";
    os << "model.backbone_channels = " << join_int_list(model.backbone_channels) << "\n";
    os << "model.scales = " << join_int_list(model.scales) << "\n";
    os << "model.mask_ca_layers = " << model.mask_ca_layers << "\n";
    os << "model.boundary_ca_layers = " << model.boundary_ca_layers << "\n";
    os << "model.update_strategy = " << model::to_string(model.update_strategy) << "\n";
    os << "model.init_mask = " << model::to_string(model.init_mask) << "\n";
    os << "model.init_boundary = " << model::to_string(model.init_boundary) << "\n";
    os << "model.salient_oversample = " << model.salient_oversample << "\n";
    os << "model.salient_importance = " << model.salient_importance << "\n";
    os << "model.score_threshold = " << model.score_threshold << "\n";
    os << "model.mask_threshold = " << model.mask_threshold << "\n";
    os << "optimizer.lr = " << optimizer.lr << "\n";
    os << "optimizer.iterations = " << optimizer.iterations << "\n";
    os << "optimizer.batch_size = " << optimizer.batch_size << "\n";
    os << "optimizer.log_every = " << optimizer.log_every << "\n";
    os << "optimizer.checkpoint_every = " << optimizer.checkpoint_every << "\n";
    os << "optimizer.weight_decay = " << optimizer.weight_decay << "\n";
    os << "optimizer.max_grad_norm = " << optimizer.max_grad_norm << "\n";
    os << "loss.lambda = " << loss.weights.lambda << "\n";
    os << "loss.lambda_loc = " << loss.weights.lambda_loc << "\n";
    os << "loss.alpha = " << loss.weights.alpha << "\n";
    os << "loss.beta = " << loss.weights.beta << "\n";
    os << "loss.point_count = " << loss.point_count << "\n";
    os << "loss.oversample = " << loss.oversample << "\n";
    os << "loss.importance_fraction = " << loss.importance_fraction << "\n";
    os << "data.kind = " << data.kind << "\n";
    os << "data.image_size = " << data.image_size << "\n";
    os << "data.train_images = " << data.train_images << "\n";
    os << "data.val_images = " << data.val_images << "\n";
    os << "data.min_instances = " << data.min_instances << "\n";
    os << "data.max_instances = " << data.max_instances << "\n";
    os << "data.contrast_bound = " << data.contrast_bound << "\n";
    os << "data.min_radius = " << data.min_radius << "\n";
    os << "data.max_radius = " << data.max_radius << "\n";
    os << "data.boundary_width = " << data.boundary_width << "\n";
    if (!data.train_annotations.empty()) os << "data.train_annotations = " << data.train_annotations << "\n";
    if (!data.val_annotations.empty()) os << "data.val_annotations = " << data.val_annotations << "\n";
    if (!data.image_dir.empty()) os << "data.image_dir = " << data.image_dir << "\n";
    return os.str();
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: " + key);
    try {
        it->second(cfg, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": '" + value + "'");
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::vector<std::string> bad_keys;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) {
            bad_keys.push_back(key);
            continue;
        }
        try {
            it->second(cfg, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": invalid value for " + key);
        }
    }
    if (!bad_keys.empty()) {
        std::string msg = origin + ": unknown config keys:";
        for (const auto& k : bad_keys) msg += " " + k;
        throw ConfigError(msg);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string resolve_run_dir(const std::string& out) {
    if (!out.empty() && out[0] == '/') return out;
    const char* root = std::getenv("CAMOSEG_RUN_ROOT");
    if (root && *root) return std::string(root) + "/" + out;
    return out;
}

}  // namespace camoseg::harness
