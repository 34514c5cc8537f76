#pragma once

#include <string>
#include <vector>

#include "qvision/image.hpp"

namespace qvision {

/// One labeled image. label is +1 (defect) or -1 (no defect).
struct LabeledSample {
    RawImage image;
    int label = -1;
    std::string series_id;
    std::string image_id;

    bool operator==(const LabeledSample&) const = default;
};

struct Dataset {
    std::vector<LabeledSample> samples;

    std::size_t size() const { return samples.size(); }

    std::size_t count_label(int label) const {
        std::size_t n = 0;
        for (const auto& s : samples)
            if (s.label == label) ++n;
        return n;
    }

    std::vector<int> labels() const {
        std::vector<int> y;
        y.reserve(samples.size());
        for (const auto& s : samples) y.push_back(s.label);
        return y;
    }

    bool operator==(const Dataset&) const = default;
};

} // namespace qvision
