#pragma once

#include <string>

#include "waffle/nn/model.hpp"
#include "waffle/watermark/watermark.hpp"

namespace waffle {

struct VerificationResult {
    double watermark_accuracy = 0.0;
    double threshold = 0.0;  // T_acc
    bool verdict = false;    // watermark_accuracy >= threshold (exact count compare)
    std::string epsilon;
    int n = 0;        // watermark size
    int m = 0;        // class count
    int correct = 0;  // matched trigger labels
    int k_star = 0;   // minimum count to pass
};

// Ownership check: accuracy of the suspect model on the trigger set against
// the chance-match threshold. Default budget 2^-64.
VerificationResult verify(const Classifier& model, const WatermarkSet& wm,
                          const std::string& epsilon = "2^-64");

std::string to_json(const VerificationResult& r);

}  // namespace waffle
