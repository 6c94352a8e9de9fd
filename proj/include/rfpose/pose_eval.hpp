#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfpose/config.hpp"
#include "rfpose/error.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

inline constexpr std::size_t kNumJoints = 14;

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "head",       "neck",      "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist", "left_hip", "right_hip",     "left_knee",      "right_knee", "left_ankle",  "right_ankle",
};

inline std::optional<std::size_t> joint_index(std::string_view name) {
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        if (kJointNames[i] == name) return i;
    }
    return std::nullopt;
}

struct Joint {
    double x = 0;  // heatmap pixels (column)
    double y = 0;  // heatmap pixels (row)
    bool visible = false;
};

struct KeypointSet {
    std::array<Joint, kNumJoints> joints{};
    double area = 0;  // person box area, pixel^2

    std::size_t visible_count() const {
        return static_cast<std::size_t>(std::count_if(joints.begin(), joints.end(), [](const Joint& j) { return j.visible; }));
    }

    void validate() const {
        if (visible_count() > 0 && !(area > 0)) throw ContractError("keypoints: area must be > 0 when a joint is visible");
        for (const auto& j : joints) {
            if (!std::isfinite(j.x) || !std::isfinite(j.y)) throw ContractError("keypoints: non-finite coordinate");
        }
    }
};

/// Per-joint OKS normalization factors.
struct OksParams {
    std::array<double, kNumJoints> sigmas{};

    /// COCO keypoint constants mapped onto the 14-joint skeleton (head from
    /// nose, neck from the shoulder value) and doubled, so that the plain
    /// exp(-d^2 / (2 S^2 sigma^2)) form reproduces COCO's OKS.
    static OksParams defaults() {
        constexpr double head = 0.026, shoulder = 0.079, elbow = 0.072, wrist = 0.062, hip = 0.107,
                         knee = 0.087, ankle = 0.089;
        OksParams p;
        p.sigmas = {head, shoulder, shoulder, shoulder, elbow, elbow, wrist,
                    wrist, hip, hip, knee, knee, ankle, ankle};
        for (auto& s : p.sigmas) s *= 2.0;
        return p;
    }

    void validate() const {
        for (double s : sigmas) {
            if (!(s > 0) || !std::isfinite(s)) throw ConfigError("oks: every sigma must be > 0");
        }
    }

    /// Reads optional `sigma.<joint>` keys over the defaults.
    static OksParams from(const KeyValueConfig& kv) {
        OksParams p = defaults();
        for (const auto& [key, _] : kv.entries()) {
            if (key.rfind("sigma.", 0) != 0 || !joint_index(key.substr(6))) {
                throw ConfigError(kv.origin() + ": unknown key `" + key + "`");
            }
        }
        for (std::size_t i = 0; i < kNumJoints; ++i) {
            p.sigmas[i] = kv.get_double("sigma." + std::string(kJointNames[i]), p.sigmas[i]);
        }
        p.validate();
        return p;
    }
};

/// Values in [0, 1] indexed (joint, row, col).
struct JointHeatmaps {
    RealTensor values;

    std::size_t width() const { return values.extent(2); }
    std::size_t height() const { return values.extent(1); }
};

struct HeatmapSpec {
    std::size_t width = 64;
    std::size_t height = 64;
    double sigma_px = 2.0;
};

/// Gaussian bump per visible joint, centred on the pixel nearest the joint so
/// that the peak is exactly 1. Pixel (row i, col j) has its centre at (x = j, y = i).
inline JointHeatmaps gaussian_heatmap(const KeypointSet& kp, const HeatmapSpec& spec = {}) {
    if (!(spec.sigma_px > 0)) throw ConfigError("heatmap sigma must be > 0");
    JointHeatmaps out{RealTensor({kNumJoints, spec.height, spec.width})};
    const double denom = 2.0 * spec.sigma_px * spec.sigma_px;
    for (std::size_t c = 0; c < kNumJoints; ++c) {
        const Joint& j = kp.joints[c];
        if (!j.visible) continue;
        if (!(j.x >= 0 && j.x < static_cast<double>(spec.width) && j.y >= 0 &&
              j.y < static_cast<double>(spec.height))) {
            throw ContractError("gaussian_heatmap: visible joint " + std::string(kJointNames[c]) +
                                " lies outside the heatmap");
        }
        const double cx = std::min(std::round(j.x), static_cast<double>(spec.width - 1));
        const double cy = std::min(std::round(j.y), static_cast<double>(spec.height - 1));
        for (std::size_t i = 0; i < spec.height; ++i)
            for (std::size_t k = 0; k < spec.width; ++k) {
                const double dx = static_cast<double>(k) - cx, dy = static_cast<double>(i) - cy;
                out.values(c, i, k) = std::exp(-(dx * dx + dy * dy) / denom);
            }
    }
    return out;
}

inline constexpr double kBceEpsilon = 1e-7;

/// -sum G log(H) + (1 - G) log(1 - H), with H clamped to [eps, 1 - eps].
inline double bce_loss(const RealTensor& prediction, const RealTensor& target, double eps = kBceEpsilon) {
    require_same_shape(prediction.shape(), target.shape(), "bce_loss");
    double loss = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double h = std::clamp(prediction[i], eps, 1.0 - eps);
        const double g = target[i];
        loss -= g * std::log(h) + (1.0 - g) * std::log1p(-h);
    }
    return loss;
}

inline double bce_loss(const JointHeatmaps& prediction, const JointHeatmaps& target) {
    return bce_loss(prediction.values, target.values);
}

/// Two-term objective: loss on the refined heatmaps plus loss on the initial ones.
inline double pose_objective(const JointHeatmaps& refined, const JointHeatmaps& initial, const JointHeatmaps& target) {
    return bce_loss(refined, target) + bce_loss(initial, target);
}

/// Object keypoint similarity over ground-truth-visible joints, scale S = sqrt(area).
inline double oks(const KeypointSet& pred, const KeypointSet& gt, const OksParams& params = OksParams::defaults()) {
    gt.validate();
    double num = 0;
    std::size_t visible = 0;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        if (!gt.joints[i].visible) continue;
        ++visible;
        const double dx = pred.joints[i].x - gt.joints[i].x;
        const double dy = pred.joints[i].y - gt.joints[i].y;
        const double s = params.sigmas[i];
        num += std::exp(-(dx * dx + dy * dy) / (2.0 * gt.area * s * s));
    }
    if (visible == 0) throw ContractError("undefined OKS: ground truth has no visible joints");
    return num / static_cast<double>(visible);
}

inline constexpr std::size_t kOksThresholdCount = 10;

/// 0.50, 0.55, ..., 0.95.
inline double oks_threshold(std::size_t k) { return static_cast<double>(50 + 5 * k) / 100.0; }

struct ApSummary {
    double ap = 0;
    double ap50 = 0;
    double ap75 = 0;
    std::array<double, kOksThresholdCount> per_threshold{};
};

/// One person per frame, each frame one detection: AP at threshold t is the
/// fraction of frames with OKS >= t.
inline ApSummary ap_summary(std::span<const double> oks_values) {
    if (oks_values.empty()) throw ContractError("ap_summary: no OKS values");
    ApSummary s;
    double total = 0;
    for (std::size_t k = 0; k < kOksThresholdCount; ++k) {
        const double t = oks_threshold(k);
        const auto pass = std::count_if(oks_values.begin(), oks_values.end(), [t](double v) { return v >= t; });
        s.per_threshold[k] = static_cast<double>(pass) / static_cast<double>(oks_values.size());
        total += s.per_threshold[k];
    }
    s.ap = total / static_cast<double>(kOksThresholdCount);
    s.ap50 = s.per_threshold[0];
    s.ap75 = s.per_threshold[5];
    return s;
}

}  // namespace rfpose
