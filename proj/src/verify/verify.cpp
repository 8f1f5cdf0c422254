#include "waffle/verify/verify.hpp"

#include "json.hpp"
#include "waffle/core/error.hpp"
#include "waffle/nn/train.hpp"
#include "waffle/verify/threshold.hpp"

namespace waffle {

VerificationResult verify(const Classifier& model, const WatermarkSet& wm,
                          const std::string& epsilon) {
    if (wm.size() == 0) throw ConfigError("verify: empty watermark set");
    SampleSet s = wm.view();
    double acc = accuracy(model, s);
    int correct = static_cast<int>(std::lround(acc * wm.size()));
    ThresholdResult t = compute_t_acc(wm.size(), model.num_classes(), epsilon);
    VerificationResult r;
    r.watermark_accuracy = acc;
    r.threshold = t.value;
    r.verdict = correct >= t.k_star;
    r.epsilon = epsilon;
    r.n = wm.size();
    r.m = model.num_classes();
    r.correct = correct;
    r.k_star = t.k_star;
    return r;
}

std::string to_json(const VerificationResult& r) {
    nlohmann::json j;
    j["watermark_accuracy"] = r.watermark_accuracy;
    j["threshold"] = r.threshold;
    j["verdict"] = r.verdict;
    j["epsilon"] = r.epsilon;
    j["n"] = r.n;
    j["m"] = r.m;
    j["correct"] = r.correct;
    j["k_star"] = r.k_star;
    return j.dump();
}

}  // namespace waffle
